"""Before/after comparison of two posteriors with the same parameter structure."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hpdi import DEFAULT_MASS, Hpdi, hpdi
from .posterior import Posterior


class StructureMismatch(ValueError):
    def __init__(self, only_before, only_after):
        self.only_before = list(only_before)
        self.only_after = list(only_after)
        super().__init__(f"posteriors differ in structure; only before: {self.only_before}; "
                         f"only after: {self.only_after}")


@dataclass
class ParameterShift:
    name: str
    mean_before: float
    mean_after: float
    shift: float
    hpdi_before: Hpdi
    hpdi_after: Hpdi
    overlap: bool


@dataclass
class ComparisonReport:
    mass: float
    parameters: dict[str, ParameterShift]
    global_names: list[str]
    gap: dict

    def changed(self) -> list[str]:
        """Parameters whose before/after HPDIs do not overlap."""
        return [n for n, p in self.parameters.items() if not p.overlap]


def _mean(x) -> float:
    return math.fsum(x) / len(x)


def _gap(post: Posterior, mass: float) -> dict | None:
    if "a_bar" not in post.names or "d_bar" not in post.names:
        return None
    diff = post.samples("a_bar") - post.samples("d_bar")
    h = hpdi(diff, mass)
    return {"mean_a_minus_d": _mean(diff), "abs_gap": abs(_mean(diff)), "hpdi": (h.lower, h.upper)}


def compare(before: Posterior, after: Posterior, mass: float = DEFAULT_MASS) -> ComparisonReport:
    nb, na = before.names, after.names
    if nb != na:
        raise StructureMismatch([n for n in nb if n not in set(na)], [n for n in na if n not in set(nb)])
    params = {}
    for name in nb:
        xb, xa = before.samples(name), after.samples(name)
        hb, ha = hpdi(xb, mass), hpdi(xa, mass)
        mb, ma = _mean(xb), _mean(xa)
        params[name] = ParameterShift(name, mb, ma, ma - mb, hb, ha, hb.overlaps(ha))
    gap = {"before": _gap(before, mass), "after": _gap(after, mass)}
    if gap["before"] and gap["after"]:
        gap["change"] = gap["after"]["abs_gap"] - gap["before"]["abs_gap"]
        gap["shrinks"] = bool(gap["change"] < 0)
    return ComparisonReport(mass, params, before.global_names, gap)
