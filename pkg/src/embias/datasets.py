"""Word lists and the long-format (protected, attribute, category, distance) table."""
from __future__ import annotations

import csv
import enum
import io
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence, Union

import numpy as np

from .embedding_io import Embedding
from .geometry import cosine_matrix

BUILTIN = ("religion", "gender", "race", "weat1", "weat7")


class DatasetError(ValueError):
    pass


class Category(str, enum.Enum):
    ASSOCIATED = "associated"
    DIFFERENT = "different"
    HUMAN = "human"
    NEUTRAL = "neutral"

    def __str__(self) -> str:
        return self.value


CATEGORIES = tuple(Category)


@dataclass(frozen=True)
class AttributeSet:
    set_id: str
    class_id: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class BiasDataset:
    protected: tuple[tuple[str, str], ...]
    attribute_sets: tuple[AttributeSet, ...]
    neutral: tuple[str, ...]
    human: tuple[str, ...]
    name: str = ""

    def __post_init__(self):
        classes = {c for _, c in self.protected}
        problems = []
        tokens = [t for t, _ in self.protected]
        dup = {t for t in tokens if tokens.count(t) > 1}
        if dup:
            problems.append(f"protected tokens listed twice: {sorted(dup)}")
        owner: dict[str, str] = {}
        for aset in self.attribute_sets:
            if aset.class_id not in classes:
                problems.append(f"attribute set {aset.set_id!r} references unknown class {aset.class_id!r}")
            if not aset.tokens:
                problems.append(f"attribute set {aset.set_id!r} is empty")
            for t in aset.tokens:
                if t in owner:
                    problems.append(f"token {t!r} appears in attribute sets {owner[t]!r} and {aset.set_id!r}")
                owner[t] = aset.set_id
        for list_name in ("neutral", "human"):
            lst = getattr(self, list_name)
            clash = sorted(set(lst) & set(owner))
            if clash:
                problems.append(f"{list_name} list overlaps attribute sets: {clash}")
            if len(set(lst)) != len(lst):
                problems.append(f"{list_name} list has duplicate tokens")
        both = sorted(set(self.neutral) & set(self.human))
        if both:
            problems.append(f"tokens in both neutral and human lists: {both}")
        if not self.protected:
            problems.append("no protected words")
        if problems:
            raise DatasetError("; ".join(problems))

    @property
    def classes(self) -> list[str]:
        out: list[str] = []
        for _, c in self.protected:
            if c not in out:
                out.append(c)
        return out

    def protected_of(self, class_id: str) -> list[str]:
        return [t for t, c in self.protected if c == class_id]

    def attributes_of(self, class_id: str) -> list[str]:
        return [t for s in self.attribute_sets if s.class_id == class_id for t in s.tokens]

    def to_json(self) -> dict:
        return {
            "protected_classes": {c: self.protected_of(c) for c in self.classes},
            "attribute_sets": {s.set_id: {"class": s.class_id, "tokens": list(s.tokens)}
                               for s in self.attribute_sets},
            "neutral": list(self.neutral),
            "human": list(self.human),
        }


def _str_list(value, where: str, problems: list) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(t, str) and t for t in value):
        problems.append(f"{where} must be a list of non-empty strings")
        return []
    return value


def dataset_from_json(doc, name: str = "") -> BiasDataset:
    problems: list[str] = []
    if not isinstance(doc, dict):
        raise DatasetError("dataset document must be a JSON object")
    required = {"protected_classes", "attribute_sets", "neutral", "human"}
    missing = required - doc.keys()
    if missing:
        problems.append(f"missing keys: {sorted(missing)}")
    extra = doc.keys() - required
    if extra:
        problems.append(f"unknown keys: {sorted(extra)}")
    if problems:
        raise DatasetError("; ".join(problems))

    protected = []
    pc = doc["protected_classes"]
    if not isinstance(pc, dict) or not pc:
        problems.append("protected_classes must be a non-empty object")
    else:
        for cls, toks in pc.items():
            protected += [(t, cls) for t in _str_list(toks, f"protected_classes[{cls!r}]", problems)]
    sets = []
    asets = doc["attribute_sets"]
    if not isinstance(asets, dict) or not asets:
        problems.append("attribute_sets must be a non-empty object")
    else:
        for sid, body in asets.items():
            if not isinstance(body, dict) or set(body) != {"class", "tokens"} \
                    or not isinstance(body.get("class"), str):
                problems.append(f"attribute_sets[{sid!r}] must be {{'class': str, 'tokens': [...]}}")
                continue
            toks = _str_list(body["tokens"], f"attribute_sets[{sid!r}].tokens", problems)
            sets.append(AttributeSet(sid, body["class"], tuple(toks)))
    neutral = _str_list(doc["neutral"], "neutral", problems)
    human = _str_list(doc["human"], "human", problems)
    if problems:
        raise DatasetError("; ".join(problems))
    return BiasDataset(tuple(protected), tuple(sets), tuple(neutral), tuple(human), name)


def load_dataset(path: Union[str, os.PathLike]) -> BiasDataset:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}: invalid JSON: {exc}") from None
    return dataset_from_json(doc, name=os.path.splitext(os.path.basename(path))[0])


def builtin_dataset(name: str) -> BiasDataset:
    if name not in BUILTIN:
        raise DatasetError(f"unknown dataset {name!r}; builtins are {', '.join(BUILTIN)}")
    text = resources.files("embias").joinpath("data", f"{name}.json").read_text("utf-8")
    return dataset_from_json(json.loads(text), name=name)


# -- long table -----------------------------------------------------------

@dataclass(frozen=True)
class LongTable:
    """One row per (protected token, attribute token) with its cosine distance."""

    protected: tuple[str, ...]
    attribute: tuple[str, ...]
    category: tuple[Category, ...]
    distance: np.ndarray
    skipped: tuple[str, ...] = ()

    def __post_init__(self):
        d = np.array(self.distance, dtype=np.float64, copy=True)
        n = len(self.protected)
        if not (len(self.attribute) == len(self.category) == d.size == n):
            raise ValueError("LongTable columns differ in length")
        if not np.isfinite(d).all():
            raise ValueError("LongTable distances must be finite")
        pairs = set(zip(self.protected, self.attribute))
        if len(pairs) != n:
            raise ValueError("(protected, attribute) pairs must be unique")
        d.setflags(write=False)
        object.__setattr__(self, "distance", d)
        object.__setattr__(self, "category", tuple(Category(c) for c in self.category))

    def __len__(self) -> int:
        return self.distance.size

    @property
    def words(self) -> list[str]:
        """Protected tokens in first-appearance order."""
        return list(dict.fromkeys(self.protected))

    @property
    def categories(self) -> list[Category]:
        present = set(self.category)
        return [c for c in CATEGORIES if c in present]

    def select(self, mask) -> "LongTable":
        idx = np.flatnonzero(mask)
        return LongTable(tuple(self.protected[i] for i in idx), tuple(self.attribute[i] for i in idx),
                         tuple(self.category[i] for i in idx), self.distance[idx], self.skipped)

    def of_category(self, cat) -> "LongTable":
        cat = Category(cat)
        return self.select([c == cat for c in self.category])

    def concat(self, other: "LongTable") -> "LongTable":
        return LongTable(self.protected + other.protected, self.attribute + other.attribute,
                         self.category + other.category,
                         np.concatenate([self.distance, other.distance]),
                         self.skipped + other.skipped)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["protected", "attribute", "category", "distance"])
        for p, a, c, d in zip(self.protected, self.attribute, self.category, self.distance):
            w.writerow([p, a, c.value, f"{d:.9f}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "LongTable":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(tuple(r["protected"] for r in rows), tuple(r["attribute"] for r in rows),
                   tuple(Category(r["category"]) for r in rows),
                   np.array([float(r["distance"]) for r in rows]))

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, str, str, float]]) -> "LongTable":
        rows = list(rows)
        return cls(tuple(r[0] for r in rows), tuple(r[1] for r in rows),
                   tuple(Category(r[2]) for r in rows), np.array([r[3] for r in rows], dtype=float))


def categorize(ds: BiasDataset) -> dict[tuple[str, str], Category]:
    """Category of every (protected, attribute) pair, before any embedding lookup."""
    out = {}
    for token, cls in ds.protected:
        for aset in ds.attribute_sets:
            cat = Category.ASSOCIATED if aset.class_id == cls else Category.DIFFERENT
            for a in aset.tokens:
                out[(token, a)] = cat
        for a in ds.neutral:
            out[(token, a)] = Category.NEUTRAL
        for a in ds.human:
            out[(token, a)] = Category.HUMAN
    return out


def build_long_table(ds: BiasDataset, emb: Embedding, skip_missing: bool = False) -> LongTable:
    protected = [t for t, _ in ds.protected]
    attrs = [a for s in ds.attribute_sets for a in s.tokens] + list(ds.neutral) + list(ds.human)
    missing = [t for t in dict.fromkeys(protected + attrs) if t not in emb]
    if missing and not skip_missing:
        from .metrics import MissingTokenError
        raise MissingTokenError(missing)
    gone = set(missing)
    protected = [t for t in protected if t not in gone]
    attrs = [a for a in attrs if a not in gone]
    if not protected:
        raise DatasetError("no protected words left after skipping missing tokens")

    cats = categorize(ds)
    dist = 1.0 - cosine_matrix(emb.vectors(protected), emb.vectors(attrs))
    rows = [(p, a, cats[(p, a)], dist[i, j])
            for i, p in enumerate(protected) for j, a in enumerate(attrs)]
    present = {c for _, _, c, _ in rows}
    for cat in CATEGORIES:
        if cat not in present and _expected(ds, cat):
            raise DatasetError(f"category {cat.value!r} is empty after skipping missing tokens")
    order = {c: k for k, c in enumerate(CATEGORIES)}
    rows.sort(key=lambda r: (r[0], order[r[2]], r[1]))
    return LongTable(tuple(r[0] for r in rows), tuple(r[1] for r in rows),
                     tuple(r[2] for r in rows), np.array([r[3] for r in rows]), tuple(missing))


def _expected(ds: BiasDataset, cat: Category) -> bool:
    if cat is Category.NEUTRAL:
        return bool(ds.neutral)
    if cat is Category.HUMAN:
        return bool(ds.human)
    if cat is Category.ASSOCIATED:
        return True
    return len({s.class_id for s in ds.attribute_sets}) > 1 or len(ds.classes) > 1


def stereotype_sets(ds: BiasDataset) -> dict[str, list[str]]:
    return {s.set_id: list(s.tokens) for s in ds.attribute_sets}


def weat_roles(ds: BiasDataset, x_class: str | None = None,
               y_class: str | None = None) -> tuple[list[str], list[str], list[str], list[str]]:
    """(X, Y, A, B) for a two-class comparison; A/B are the classes' stereotype attributes."""
    classes = ds.classes
    if x_class is None and y_class is None:
        if len(classes) != 2:
            raise DatasetError(f"dataset has {len(classes)} classes {classes}; choose two for WEAT")
        x_class, y_class = classes
    for c in (x_class, y_class):
        if c not in classes:
            raise DatasetError(f"unknown class {c!r}; dataset classes are {classes}")
    return (ds.protected_of(x_class), ds.protected_of(y_class),
            ds.attributes_of(x_class), ds.attributes_of(y_class))


def gender_pairs(ds: BiasDataset, first: str | None = None,
                 second: str | None = None) -> list[tuple[str, str]]:
    """Positional pairing of two protected classes (e.g. he/she, his/hers)."""
    classes = ds.classes
    if first is None and second is None:
        if len(classes) != 2:
            raise DatasetError(f"need exactly two classes to form pairs, found {classes}")
        first, second = classes
    a, b = ds.protected_of(first), ds.protected_of(second)
    if len(a) != len(b):
        raise DatasetError(f"classes {first!r} and {second!r} differ in size ({len(a)} vs {len(b)})")
    return list(zip(a, b))
