"""Report serialisation: JSON/CSV formatting, manifests and atomic output."""
from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__

SIG_DIGITS = 9


def round_sig(x: float) -> float | None:
    if not math.isfinite(x):
        return None
    return float(f"{x:.{SIG_DIGITS}g}")


def to_jsonable(obj):
    """Recursively convert numpy/dataclass/enum values; floats keep 9 significant digits."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(float(obj))
    if isinstance(obj, str) or obj is None:
        return obj
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else "|".join(map(str, k)): to_jsonable(v)
                for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [to_jsonable(v) for v in obj]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False) + "\n"


def fmt(x: float) -> str:
    return "" if not math.isfinite(x) else f"{x:.{SIG_DIGITS}g}"


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def load_schema() -> dict:
    return json.loads(resources.files("embias").joinpath("data", "report.schema.json").read_text("utf-8"))


def schema_for(filename: str) -> dict:
    """Schema matching one written JSON file: manifest, fit diagnostics or a report."""
    schema = load_schema()
    part = {"manifest.json": "manifest", "diagnostics.json": "diagnostics"}.get(Path(filename).name)
    if part is None:
        return schema
    return {"$schema": schema["$schema"], "$ref": f"#/$defs/{part}", "$defs": schema["$defs"]}


@dataclass
class Results:
    """Everything one subcommand produced, ready to be written."""

    subcommand: str
    report: dict
    csv: dict[str, str] = field(default_factory=dict)
    svg: dict[str, str] = field(default_factory=dict)
    # additional JSON documents that are always written (e.g. fit diagnostics)
    extra_json: dict[str, dict] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    exit_code: int = 0


def output_dir(results: Results, cfg) -> Path:
    """``<out>/<subcommand>-<dataset>-<digest>``; digest of the input files (or config for nullsim)."""
    dataset = cfg.dataset or (Path(cfg.dataset_file).stem if cfg.dataset_file else "none")
    if results.inputs:
        key = "".join(results.inputs[k] for k in sorted(results.inputs))
    else:
        key = json.dumps(cfg.resolved(), sort_keys=True)
    digest = hashlib.sha256(key.encode()).hexdigest()[:12]
    return Path(cfg.out_dir) / f"{results.subcommand}-{dataset}-{digest}"


def emit_report(results: Results, cfg) -> list[Path]:
    """Write JSON (always), CSV/SVG per ``cfg.emit`` and a manifest; returns written paths."""
    out = output_dir(results, cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written = []

    def put(name, text):
        path = out / name
        try:
            atomic_write(path, text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        written.append(path)

    put(f"{results.subcommand}.json", dumps(results.report))
    for name, doc in results.extra_json.items():
        put(name, dumps(doc))
    if "csv" in cfg.emit:
        for name, text in results.csv.items():
            put(name, text)
    if "svg" in cfg.emit:
        for name, text in results.svg.items():
            put(name, text)
    manifest = {
        "tool": "embias",
        "version": __version__,
        "config": cfg.resolved(),
        "inputs": results.inputs,
        "skipped_tokens": results.skipped,
        "timings_seconds": results.timings,
        "files": sorted(p.name for p in written),
    }
    put("manifest.json", dumps(manifest))
    return written
