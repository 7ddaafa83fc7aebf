import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from embias import report, svg
from embias.cli import (EXIT_ERROR, EXIT_NONCONVERGED, EXIT_OK, EXIT_USAGE, ConfigError, main,
                        parse_config)

QUICK_FIT = ["--chains", "2", "--warmup", "200", "--draws", "200"]


def run_cli(args, out):
    code = main([*args, "--out", str(out)])
    dirs = [d for d in Path(out).iterdir() if d.is_dir()] if Path(out).exists() else []
    return code, dirs


def validate_dir(d: Path):
    for f in d.glob("*.json"):
        jsonschema.validate(json.loads(f.read_text()), report.schema_for(f.name))


# -- parse_config ------------------------------------------------------------

def test_valid_weat_config(emb_files):
    cfg = parse_config(["weat", "--embedding", emb_files[0], "--format", "word2vec-bin",
                        "--dataset", "weat1"])
    assert cfg.subcommand == "weat" and cfg.embeddings == [emb_files[0]]
    assert cfg.dataset == "weat1" and cfg.emit == ("json", "csv")


def test_compare_needs_two_embeddings(emb_files):
    with pytest.raises(ConfigError, match="exactly 2 --embedding"):
        parse_config(["compare", "--embedding", emb_files[0], "--dataset", "religion"])


def test_dataset_conflict(emb_files, tmp_path):
    x = tmp_path / "x.json"
    x.write_text("{}")
    with pytest.raises(ConfigError, match="mutually exclusive"):
        parse_config(["mac", "--embedding", emb_files[0], "--dataset", "religion",
                      "--dataset-file", str(x)])


def test_every_violation_listed():
    with pytest.raises(ConfigError) as exc:
        parse_config(["fit", "--bogus", "--chains", "1", "--mass", "1.5", "--emit", "pdf"])
    v = " | ".join(exc.value.violations)
    for part in ("unknown argument '--bogus'", "--chains", "--mass", "--emit", "requires --dataset",
                 "exactly 1 --embedding"):
        assert part in v
    with pytest.raises(ConfigError, match="missing subcommand"):
        parse_config([])
    with pytest.raises(ConfigError, match="unknown subcommand"):
        parse_config(["plot"])


def test_usage_exit_code(capsys):
    assert main(["compare"]) == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


# -- file inventories and determinism ----------------------------------------

def test_mac_inventory_and_rerun(emb_files, tmp_path):
    args = ["mac", "--embedding", emb_files[0], "--dataset", "religion", "--emit", "json,csv,svg"]
    code, dirs = run_cli(args, tmp_path / "a")
    assert code == EXIT_OK and len(dirs) == 1
    d = dirs[0]
    assert d.name.startswith("mac-religion-")
    assert sorted(p.name for p in d.iterdir()) == ["mac.json", "mac_density.svg", "mac_pairs.csv",
                                                   "manifest.json"]
    validate_dir(d)
    code, dirs2 = run_cli(args, tmp_path / "b")
    assert dirs2[0].name == d.name
    for name in ("mac.json", "mac_pairs.csv", "mac_density.svg"):
        assert (d / name).read_bytes() == (dirs2[0] / name).read_bytes()
    man = json.loads((d / "manifest.json").read_text())
    assert man["config"]["dataset"] == "religion"
    assert set(man["inputs"]) == {emb_files[0]}
    assert "load:before.bin" in man["timings_seconds"]


def test_emit_flags_control_outputs(emb_files, tmp_path):
    code, dirs = run_cli(["mac", "--embedding", emb_files[0], "--dataset", "religion",
                          "--emit", "json"], tmp_path)
    assert code == 0
    assert sorted(p.name for p in dirs[0].iterdir()) == ["mac.json", "manifest.json"]


def test_fit_inventory_and_rerun(emb_files, tmp_path):
    args = ["fit", "--embedding", emb_files[0], "--dataset", "religion", "--emit", "json,csv,svg",
            "--allow-nonconverged", *QUICK_FIT]
    code, dirs = run_cli(args, tmp_path / "a")
    assert code == EXIT_OK
    d = dirs[0]
    names = {p.name for p in d.iterdir()}
    assert {"posterior_draws.csv", "diagnostics.json", "interval_plot.svg", "fit.json",
            "summary.csv", "manifest.json"} <= names
    validate_dir(d)
    _, dirs2 = run_cli(args, tmp_path / "b")
    for name in ("fit.json", "diagnostics.json", "posterior_draws.csv", "summary.csv"):
        assert (d / name).read_bytes() == (dirs2[0] / name).read_bytes()

    # ppc from the saved posterior
    code, pdirs = run_cli(["ppc", "--embedding", emb_files[0], "--dataset", "religion",
                           "--posterior", str(d)], tmp_path / "ppc")
    assert code == EXIT_OK
    doc = json.loads((pdirs[0] / "ppc.json").read_text())
    assert 0 <= doc["coverage89"] <= 1
    validate_dir(pdirs[0])


def test_fit_nonconverged_exit_code(emb_files, tmp_path):
    args = ["fit", "--embedding", emb_files[0], "--dataset", "religion",
            "--chains", "2", "--warmup", "0", "--draws", "5"]
    code, dirs = run_cli(args, tmp_path / "a")
    assert code == EXIT_NONCONVERGED
    assert json.loads((dirs[0] / "fit.json").read_text())["converged"] is False
    code, _ = run_cli([*args, "--allow-nonconverged"], tmp_path / "b")
    assert code == EXIT_OK


def test_weat_and_dump_table(emb_files, tmp_path):
    code, dirs = run_cli(["weat", "--embedding", emb_files[0], "--dataset", "weat7",
                          "--emit", "json,csv,svg"], tmp_path / "w")
    assert code == EXIT_OK
    doc = json.loads((dirs[0] / "weat.json").read_text())
    assert doc["p_mode"] == "exact" and doc["n_partitions_evaluated"] == 12870
    validate_dir(dirs[0])
    code, dirs = run_cli(["dump-table", "--embedding", emb_files[0], "--dataset", "gender"],
                         tmp_path / "t")
    assert code == EXIT_OK
    head = (dirs[0] / "table.csv").read_text().splitlines()[0]
    assert head == "protected,attribute,category,distance"
    validate_dir(dirs[0])


def test_directbias(emb_files, tmp_path):
    code, dirs = run_cli(["directbias", "--embedding", emb_files[0], "--dataset", "gender",
                          "--c", "0.8"], tmp_path)
    assert code == EXIT_OK
    doc = json.loads((dirs[0] / "directbias.json").read_text())
    assert 0 <= doc["direct_bias"] <= 1
    validate_dir(dirs[0])


def test_nullsim_cli(tmp_path):
    args = ["nullsim", "--n-sims", "200", "--seed", "3", "--emit", "json,csv,svg"]
    code, dirs = run_cli(args, tmp_path / "a")
    assert code == EXIT_OK
    d = dirs[0]
    assert {"nullsim.json", "nullsim_sims.csv", "nullsim_bootstrap.svg",
            "nullsim_effect_sizes.svg", "manifest.json"} == {p.name for p in d.iterdir()}
    validate_dir(d)
    _, dirs2 = run_cli(args, tmp_path / "b")
    assert (d / "nullsim.json").read_bytes() == (dirs2[0] / "nullsim.json").read_bytes()


def test_compare_cli(emb_files, tmp_path):
    code, dirs = run_cli(["compare", "--embedding", emb_files[0], "--embedding", emb_files[1],
                          "--dataset", "religion", "--allow-nonconverged", "--emit", "json,csv,svg",
                          *QUICK_FIT], tmp_path)
    assert code == EXIT_OK
    doc = json.loads((dirs[0] / "compare.json").read_text())
    assert set(doc["global"]) <= set(doc["parameters"])
    validate_dir(dirs[0])


def test_runtime_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "broken.bin"
    bad.write_bytes(b"not an embedding")
    code, _ = run_cli(["mac", "--embedding", str(bad), "--dataset", "religion"], tmp_path / "o")
    assert code == EXIT_ERROR
    assert "embias mac:" in capsys.readouterr().err


def test_missing_tokens_fail_without_skip(tmp_path, capsys):
    from embias.embedding_io import Embedding, write_word2vec_binary
    small = tmp_path / "small.bin"
    write_word2vec_binary(Embedding(("jew", "christian"), np.eye(2, dtype=np.float32)), small)
    code, _ = run_cli(["mac", "--embedding", str(small), "--dataset", "religion"], tmp_path / "o")
    assert code == EXIT_ERROR


# -- report helpers ------------------------------------------------------------

def test_nine_significant_digits():
    assert json.loads(report.dumps({"x": 1 / 3}))["x"] == 0.333333333
    assert json.loads(report.dumps({"x": float("nan")}))["x"] is None
    assert report.fmt(2 / 3) == "0.666666667"


def test_atomic_write_leaves_no_temp(tmp_path):
    p = tmp_path / "a.json"
    report.atomic_write(p, "{}")
    report.atomic_write(p, '{"b": 1}')
    assert p.read_text() == '{"b": 1}'
    assert [x.name for x in tmp_path.iterdir()] == ["a.json"]


def test_svg_deterministic_and_wellformed():
    import xml.etree.ElementTree as ET
    x = np.random.default_rng(0).normal(size=300)
    a = svg.density_plot({"x": x}, "density")
    assert a == svg.density_plot({"x": x}, "density")
    root = ET.fromstring(a)
    assert root.tag.endswith("svg")
    b = svg.interval_plot([("p", 0.5, 0.4, 0.6)], "intervals", "d")
    ET.fromstring(b)


def test_schema_rejects_unknown_kind():
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"kind": "poetry"}, report.load_schema())
