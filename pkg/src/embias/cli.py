"""Command-line entry point: ``embias <subcommand> [options]``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import bayes, datasets, metrics, nullsim, svg
from .embedding_io import FORMATS, load_embedding
from .geometry import direct_bias, principal_direction
from .report import Results, emit_report, file_digest, fmt

SUBCOMMANDS = ("weat", "mac", "nullsim", "fit", "ppc", "compare", "dump-table", "directbias")
EMIT_CHOICES = ("json", "csv", "svg")
NEEDS_EMBEDDING = set(SUBCOMMANDS) - {"nullsim"}

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class RunConfig:
    subcommand: str
    embeddings: list[str] = field(default_factory=list)
    format: str = "word2vec-bin"
    dataset: str | None = None
    dataset_file: str | None = None
    skip_missing: bool = False
    seed: int = 0
    chains: int = 4
    warmup: int = 1000
    draws: int = 2000
    shared_sigma: bool = False
    allow_nonconverged: bool = False
    mass: float = 0.89
    out_dir: str = "embias-out"
    emit: tuple[str, ...] = ("json", "csv")
    # weat
    x_class: str | None = None
    y_class: str | None = None
    p_mode: str | None = None
    n_samples: int = 10_000
    conservative_p: bool = False
    # nullsim
    n_per_group: int = 8
    n_attrs_per_set: int = 8
    mu: float = 0.0
    sigma: float = 0.08
    n_sims: int = 10_000
    p_values: bool = False
    # directbias
    c: float = 1.0
    # ppc
    posterior: str | None = None

    def resolved(self) -> dict:
        d = asdict(self)
        d["emit"] = list(self.emit)
        return d


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError([message])


def _build_parser() -> _Parser:
    p = _Parser(prog="embias", description="Bias measurement for static word embeddings.")
    p.add_argument("subcommand", nargs="?")
    p.add_argument("--embedding", action="append", default=[], metavar="PATH",
                   help="embedding file (give twice for compare: before, after)")
    p.add_argument("--format", default="word2vec-bin")
    p.add_argument("--dataset", help=f"builtin word lists: {', '.join(datasets.BUILTIN)}")
    p.add_argument("--dataset-file", help="dataset JSON document")
    p.add_argument("--skip-missing", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--warmup", type=int, default=1000)
    p.add_argument("--draws", type=int, default=2000)
    p.add_argument("--shared-sigma", action="store_true")
    p.add_argument("--allow-nonconverged", action="store_true")
    p.add_argument("--mass", type=float, default=0.89)
    p.add_argument("--out", dest="out_dir", default="embias-out")
    p.add_argument("--emit", default="json,csv", help="comma list of json,csv,svg")
    p.add_argument("--x-class")
    p.add_argument("--y-class")
    p.add_argument("--p-mode", choices=["exact", "sampled"])
    p.add_argument("--n-samples", type=int, default=10_000)
    p.add_argument("--conservative-p", action="store_true")
    p.add_argument("--n-per-group", type=int, default=8)
    p.add_argument("--n-attrs-per-set", type=int, default=8)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=0.08)
    p.add_argument("--n-sims", type=int, default=10_000)
    p.add_argument("--p-values", action="store_true", help="nullsim: also compute exact permutation p-values")
    p.add_argument("--c", type=float, default=1.0, help="directbias strictness exponent")
    p.add_argument("--posterior", help="ppc: directory holding posterior_draws.csv + diagnostics.json")
    return p


def parse_config(argv) -> RunConfig:
    """Parse and validate; raises ConfigError listing every violation found."""
    ns, unknown = _build_parser().parse_known_args(list(argv))
    problems = [f"unknown argument {u!r}" for u in unknown]
    sub = ns.subcommand
    if sub is None:
        problems.append(f"missing subcommand (one of {', '.join(SUBCOMMANDS)})")
    elif sub not in SUBCOMMANDS:
        problems.append(f"unknown subcommand {sub!r} (one of {', '.join(SUBCOMMANDS)})")
    if ns.format not in FORMATS:
        problems.append(f"--format must be one of {', '.join(FORMATS)}")
    emit = tuple(e.strip() for e in ns.emit.split(",") if e.strip())
    bad = [e for e in emit if e not in EMIT_CHOICES]
    if bad:
        problems.append(f"--emit accepts {', '.join(EMIT_CHOICES)}; got {bad}")
    if ns.dataset and ns.dataset_file:
        problems.append("--dataset and --dataset-file are mutually exclusive")
    if ns.dataset and ns.dataset not in datasets.BUILTIN:
        problems.append(f"unknown dataset {ns.dataset!r} (builtins: {', '.join(datasets.BUILTIN)})")
    if sub in NEEDS_EMBEDDING:
        if not (ns.dataset or ns.dataset_file):
            problems.append(f"{sub} requires --dataset or --dataset-file")
        want = 2 if sub == "compare" else 1
        if len(ns.embedding) != want:
            problems.append(f"{sub} requires exactly {want} --embedding argument(s), got {len(ns.embedding)}")
        for path in ns.embedding:
            if not Path(path).is_file():
                problems.append(f"embedding file not found: {path}")
    if ns.dataset_file and not Path(ns.dataset_file).is_file():
        problems.append(f"dataset file not found: {ns.dataset_file}")
    if ns.chains < 2:
        problems.append("--chains must be >= 2")
    if ns.draws < 1 or ns.warmup < 0:
        problems.append("--draws must be >= 1 and --warmup >= 0")
    if not 0 < ns.mass < 1:
        problems.append("--mass must lie in (0, 1)")
    if sub == "nullsim":
        if ns.n_per_group < 2:
            problems.append("--n-per-group must be >= 2")
        if ns.sigma <= 0:
            problems.append("--sigma must be positive")
        if ns.n_sims < 1:
            problems.append("--n-sims must be >= 1")
    if ns.c <= 0:
        problems.append("--c must be positive")
    out = Path(ns.out_dir)
    probe = out if out.exists() else next((p for p in out.parents if p.exists()), Path("."))
    if not probe.is_dir() or not _writable(probe):
        problems.append(f"output directory {ns.out_dir} is not writable")
    if problems:
        raise ConfigError(problems)
    kw = {k: v for k, v in vars(ns).items() if k not in ("embedding", "emit")}
    return RunConfig(embeddings=list(ns.embedding), emit=emit, **kw)


def _writable(path: Path) -> bool:
    return os.access(path, os.W_OK)


# -- subcommand runners -------------------------------------------------------

def _dataset(cfg: RunConfig) -> datasets.BiasDataset:
    if cfg.dataset:
        return datasets.builtin_dataset(cfg.dataset)
    return datasets.load_dataset(cfg.dataset_file)


def _load(cfg: RunConfig, path: str, res: Results):
    t = time.perf_counter()
    emb = load_embedding(path, cfg.format)
    res.inputs[path] = file_digest(path)
    res.timings[f"load:{Path(path).name}"] = time.perf_counter() - t
    return emb


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def run_weat(cfg: RunConfig) -> Results:
    res = Results("weat", {})
    ds = _dataset(cfg)
    emb = _load(cfg, cfg.embeddings[0], res)
    X, Y, A, B = datasets.weat_roles(ds, cfg.x_class, cfg.y_class)
    t = time.perf_counter()
    inp = metrics.WeatInput(X, Y, A, B, emb, skip_missing=cfg.skip_missing)
    rep = metrics.weat(inp, cfg.p_mode, cfg.n_samples, cfg.seed, cfg.conservative_p)
    res.timings["weat"] = time.perf_counter() - t
    res.skipped = rep.skipped
    res.report = {"kind": "weat", "dataset": ds.name, "X": inp.X, "Y": inp.Y,
                  "A": inp.A, "B": inp.B, **asdict(rep)}
    res.csv["weat_words.csv"] = _csv(["token", "group", "s"],
                                     [(w, "X" if w in set(inp.X) else "Y", s)
                                      for w, s in rep.s_per_word.items()])
    res.svg["weat_s_values.svg"] = svg.interval_plot(
        [(w, v, min(0.0, v), max(0.0, v)) for w, v in rep.s_per_word.items()],
        f"s(w, A, B) per protected word; effect size {rep.effect_size:.3f}",
        "s value", groups=[0] * len(inp.X) + [1] * len(inp.Y), group_labels=["X", "Y"])
    return res


def _band_fractions(table: datasets.LongTable, band: float) -> dict[str, float] | None:
    # MAC >= 1 leaves no band to measure
    if not band > 0:
        return None
    return {c.value: metrics.band_fraction(1.0 - table.of_category(c).distance, band)
            for c in table.categories}


def run_mac(cfg: RunConfig) -> Results:
    res = Results("mac", {})
    ds = _dataset(cfg)
    emb = _load(cfg, cfg.embeddings[0], res)
    t = time.perf_counter()
    rep = metrics.mac([tok for tok, _ in ds.protected], datasets.stereotype_sets(ds), emb,
                      skip_missing=cfg.skip_missing)
    table = datasets.build_long_table(ds, emb, cfg.skip_missing)
    rep.band = 1.0 - rep.mac
    rep.band_fractions = _band_fractions(table, rep.band)
    res.timings["mac"] = time.perf_counter() - t
    res.skipped = sorted(set(rep.skipped) | set(table.skipped))
    res.report = {"kind": "mac", "dataset": ds.name, "mac": rep.mac, "band": rep.band,
                  "band_fractions": rep.band_fractions,
                  "s_per_pair": [{"token": k[0], "attribute_set": k[1], "s": v}
                                 for k, v in rep.s_per_pair.items()],
                  "skipped": res.skipped}
    res.csv["mac_pairs.csv"] = _csv(["token", "attribute_set", "mean_distance"],
                                    [(k[0], k[1], v) for k, v in rep.s_per_pair.items()])
    res.svg["mac_density.svg"] = svg.density_plot(
        {c.value: 1.0 - table.of_category(c).distance for c in table.categories},
        f"Cosine similarity by category ({ds.name}); MAC {rep.mac:.3f}", "cosine similarity",
        vlines=[(-rep.band, f"-{rep.band:.3f}"), (rep.band, f"+{rep.band:.3f}")] if rep.band > 0 else ())
    return res


def run_dump_table(cfg: RunConfig) -> Results:
    res = Results("dump-table", {})
    ds = _dataset(cfg)
    emb = _load(cfg, cfg.embeddings[0], res)
    table = datasets.build_long_table(ds, emb, cfg.skip_missing)
    res.skipped = list(table.skipped)
    counts = {c.value: int(sum(1 for x in table.category if x == c)) for c in table.categories}
    res.report = {"kind": "dump-table", "dataset": ds.name, "rows": len(table),
                  "protected": table.words, "category_counts": counts, "skipped": res.skipped}
    res.csv["table.csv"] = table.to_csv()
    return res


def run_directbias(cfg: RunConfig) -> Results:
    res = Results("directbias", {})
    ds = _dataset(cfg)
    emb = _load(cfg, cfg.embeddings[0], res)
    pairs = datasets.gender_pairs(ds, cfg.x_class, cfg.y_class)
    kept = [(a, b) for a, b in pairs if a in emb and b in emb]
    dropped = [t for p in pairs for t in p if t not in emb]
    if dropped and not cfg.skip_missing:
        raise metrics.MissingTokenError(dropped)
    neutral, miss = metrics.resolve(list(ds.neutral), emb, cfg.skip_missing, "neutral list")
    if not kept:
        raise ValueError("no complete pairs left after skipping missing tokens")
    direction = principal_direction([(emb.vectors([a])[0], emb.vectors([b])[0]) for a, b in kept])
    value = direct_bias(emb.vectors(neutral), direction, cfg.c)
    res.skipped = dropped + miss
    res.report = {"kind": "directbias", "dataset": ds.name, "c": cfg.c, "direct_bias": value,
                  "pairs": [list(p) for p in kept], "n_neutral": len(neutral),
                  "degenerate_direction": direction.degenerate,
                  "eigenvalue": direction.eigenvalue, "skipped": res.skipped}
    return res


def run_nullsim(cfg: RunConfig) -> Results:
    res = Results("nullsim", {})
    ncfg = nullsim.NullConfig(cfg.n_per_group, cfg.n_attrs_per_set, cfg.mu, cfg.sigma,
                              cfg.n_sims, cfg.seed)
    t = time.perf_counter()
    summ = nullsim.run_null_study(ncfg, with_p_values=cfg.p_values)
    res.timings["simulate"] = time.perf_counter() - t
    eff, sst = summ.effect_sizes, summ.s_statistics
    tails = {f"{thr:g}": {"one": nullsim.tail_fraction(eff, thr, "one"),
                          "two": nullsim.tail_fraction(eff, thr, "two")}
             for thr in (0.5, 1.0, 1.27, 1.5, 2.0)}
    example = nullsim.draw_null_sample(ncfg, 0)
    boot_s, boot_e = nullsim.bootstrap_partitions(example)
    tt = nullsim.raw_t_tests(example)
    res.report = {
        "kind": "nullsim",
        "config": asdict(ncfg),
        "effect_size": {"mean": float(eff.mean()), "sd": float(eff.std())},
        "s_statistic": {"mean": float(sst.mean()), "sd": float(sst.std())},
        "effect_size_tail_fractions": tails,
        "example_sample": {
            "stream_index": 0,
            "s_statistic": float(sst[0]), "effect_size": float(eff[0]),
            "bootstrap_p_value": float(np.mean(boot_s > sst[0])),
            "n_partitions": int(boot_s.size),
            "t_tests": {k: asdict(v) for k, v in tt.items()},
        },
    }
    if summ.p_values is not None:
        from scipy import stats
        pv = summ.p_values
        res.report["p_values"] = {"ks_distance_from_uniform": float(stats.kstest(pv, "uniform").statistic),
                                  "fraction_below_0.05": float(np.mean(pv < 0.05))}
    header = ["stream", "effect_size", "s_statistic"] + (["p_value"] if summ.p_values is not None else [])
    rows = []
    for i in range(eff.size):
        r = [i, float(eff[i]), float(sst[i])]
        if summ.p_values is not None:
            r.append(float(summ.p_values[i]))
        rows.append(r)
    res.csv["nullsim_sims.csv"] = _csv(header, rows)
    res.svg["nullsim_bootstrap.svg"] = svg.histogram(
        boot_e, "Effect sizes over all equal splits of one null sample", "effect size",
        marks=[(float(eff[0]), "observed")])
    res.svg["nullsim_effect_sizes.svg"] = svg.histogram(
        eff, f"Observed effect sizes across {ncfg.n_sims} null samples", "effect size",
        marks=[(-1.27, "-1.27"), (1.27, "1.27")])
    return res


def _fit(cfg: RunConfig, table):
    spec = bayes.ModelSpec(shared_sigma=cfg.shared_sigma)
    mcmc = bayes.McmcConfig(cfg.chains, cfg.warmup, cfg.draws, cfg.seed)
    return bayes.fit(table, spec, mcmc)


def _summary_rows(post, mass):
    summ = bayes.summarize(post, mass)
    return summ, [(n, s["mean"], s["hpdi"][0], s["hpdi"][1], s["rhat"], s["ess"])
                  for n, s in summ.items()]


def _interval_svg(post, summ, title):
    rows, groups = [], []
    cats = [bayes.model.SHORT[c] for c in post.categories]
    names = [f"{s}_bar" for s in cats] + [f"{s}[{w}]" for w in post.words for s in cats]
    for n in names:
        s = summ[n]
        rows.append((n, s["mean"], s["hpdi"][0], s["hpdi"][1]))
        groups.append(cats.index(n[0]))
    return svg.interval_plot(rows, title, "cosine distance", groups,
                             [c.value for c in post.categories])


def run_fit(cfg: RunConfig) -> Results:
    res = Results("fit", {})
    ds = _dataset(cfg)
    emb = _load(cfg, cfg.embeddings[0], res)
    table = datasets.build_long_table(ds, emb, cfg.skip_missing)
    res.skipped = list(table.skipped)
    t = time.perf_counter()
    post = _fit(cfg, table)
    res.timings["mcmc"] = time.perf_counter() - t
    summ, rows = _summary_rows(post, cfg.mass)
    res.report = {"kind": "fit", "dataset": ds.name, "mass": cfg.mass,
                  "converged": post.converged, "flagged": post.flagged(),
                  "n_rows": len(table), "words": list(post.words),
                  "categories": [c.value for c in post.categories],
                  "summary": summ}
    res.extra_json["diagnostics.json"] = post.diagnostics_json()
    res.csv["posterior_draws.csv"] = post.to_csv()
    res.csv["summary.csv"] = _csv(["parameter", "mean", "hpdi_lower", "hpdi_upper", "rhat", "ess"], rows)
    res.svg["interval_plot.svg"] = _interval_svg(
        post, summ, f"Posterior means with {cfg.mass:.0%} HPDI ({ds.name})")
    if not post.converged and not cfg.allow_nonconverged:
        res.exit_code = EXIT_NONCONVERGED
    return res


def run_ppc(cfg: RunConfig) -> Results:
    res = Results("ppc", {})
    ds = _dataset(cfg)
    emb = _load(cfg, cfg.embeddings[0], res)
    table = datasets.build_long_table(ds, emb, cfg.skip_missing)
    res.skipped = list(table.skipped)
    if cfg.posterior:
        d = Path(cfg.posterior)
        post = bayes.Posterior.from_files((d / "posterior_draws.csv").read_text(),
                                          json.loads((d / "diagnostics.json").read_text()))
    else:
        post = _fit(cfg, table)
    t = time.perf_counter()
    ppc = bayes.posterior_predictive_check(post, table, seed=cfg.seed)
    res.timings["ppc"] = time.perf_counter() - t
    res.report = {"kind": "ppc", "dataset": ds.name, "n_rows": len(table), **ppc.as_dict()}
    res.csv["ppc_rows.csv"] = _csv(
        ["protected", "attribute", "category", "distance", "predicted_mean",
         "hpdi89_lower", "hpdi89_upper", "hpdi50_lower", "hpdi50_upper"],
        [(p, a, c.value, float(d), float(m), float(l8), float(u8), float(l5), float(u5))
         for p, a, c, d, m, l8, u8, l5, u5 in zip(
            table.protected, table.attribute, table.category, table.distance, ppc.predicted_mean,
            ppc.lower89, ppc.upper89, ppc.lower50, ppc.upper50)])
    order = np.argsort(table.distance, kind="stable")
    res.svg["ppc_density.svg"] = svg.density_plot(
        {"observed": table.distance, "predicted mean": ppc.predicted_mean[order]},
        f"Observed vs predicted distances ({ds.name}); 89% coverage {ppc.coverage89:.2f}",
        "cosine distance")
    return res


def run_compare(cfg: RunConfig) -> Results:
    res = Results("compare", {})
    ds = _dataset(cfg)
    posts = []
    for path in cfg.embeddings:
        emb = _load(cfg, path, res)
        table = datasets.build_long_table(ds, emb, cfg.skip_missing)
        res.skipped += [t for t in table.skipped if t not in res.skipped]
        posts.append(_fit(cfg, table))
    before, after = posts
    rep = bayes.compare(before, after, cfg.mass)
    params = {n: {"mean_before": p.mean_before, "mean_after": p.mean_after, "shift": p.shift,
                  "hpdi_before": [p.hpdi_before.lower, p.hpdi_before.upper],
                  "hpdi_after": [p.hpdi_after.lower, p.hpdi_after.upper], "overlap": p.overlap}
              for n, p in rep.parameters.items()}
    res.report = {"kind": "compare", "dataset": ds.name, "mass": cfg.mass,
                  "converged": {"before": before.converged, "after": after.converged},
                  "global": {n: params[n] for n in rep.global_names},
                  "gap": rep.gap, "changed": rep.changed(), "parameters": params}
    res.csv["compare_params.csv"] = _csv(
        ["parameter", "mean_before", "mean_after", "shift", "hpdi_before_lower", "hpdi_before_upper",
         "hpdi_after_lower", "hpdi_after_upper", "overlap"],
        [(n, p["mean_before"], p["mean_after"], p["shift"], *p["hpdi_before"], *p["hpdi_after"],
          str(p["overlap"]).lower()) for n, p in params.items()])
    rows, groups = [], []
    for n, p in rep.parameters.items():
        if n.endswith("_sd") or n.startswith("sigma"):
            continue
        rows.append((f"{n} before", p.mean_before, p.hpdi_before.lower, p.hpdi_before.upper))
        rows.append((f"{n} after", p.mean_after, p.hpdi_after.lower, p.hpdi_after.upper))
        groups += [0, 1]
    res.svg["compare_intervals.svg"] = svg.interval_plot(
        rows, f"Before/after with {cfg.mass:.0%} HPDI ({ds.name})", "cosine distance",
        groups, ["before", "after"])
    if not (before.converged and after.converged) and not cfg.allow_nonconverged:
        res.exit_code = EXIT_NONCONVERGED
    return res


RUNNERS = {"weat": run_weat, "mac": run_mac, "nullsim": run_nullsim, "fit": run_fit,
           "ppc": run_ppc, "compare": run_compare, "dump-table": run_dump_table,
           "directbias": run_directbias}


def run(cfg: RunConfig) -> tuple[Results, list[Path]]:
    res = RUNNERS[cfg.subcommand](cfg)
    return res, emit_report(res, cfg)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print("usage: embias <subcommand> [options]", file=sys.stderr)
        for v in exc.violations:
            print(f"  error: {v}", file=sys.stderr)
        return EXIT_USAGE
    try:
        res, written = run(cfg)
    except (OSError, ValueError, KeyError, OverflowError, RuntimeError) as exc:
        print(f"embias {cfg.subcommand}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out = written[0].parent if written else cfg.out_dir
    print(f"embias {cfg.subcommand}: wrote {len(written)} files to {out}")
    if res.exit_code == EXIT_NONCONVERGED:
        print("embias: sampler did not meet convergence thresholds "
              "(use --allow-nonconverged to accept)", file=sys.stderr)
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
