import csv
import json
import os
from pathlib import Path

import numpy as np
import pytest
import yaml

from evoqml import cli
from evoqml.evolution import GenerationRecord
from evoqml.experiment import (
    ConfigError,
    aggregate_rows,
    compare_models,
    load_config,
    parse_config,
    run_experiment,
    run_seeds,
    write_atomic,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def small(raw_overrides=None, **top):
    raw = {
        "name": "tiny",
        "seed": 3,
        "repetitions": 2,
        "output_dir": "unused",
        "dataset": {"kind": "adhoc", "n_dim": 2, "gap": 0.3, "per_class": 6, "grid": 40, "scale": False},
        "feature_map": "ZZ_FULL",
        "encoding": {"kind": "binary", "mask": "ZZ"},
        "loss": "MSE",
        "trainer": {"kind": "eqc", "mu": 2, "max_generations": 15},
    }
    raw.update(top)
    for key, value in (raw_overrides or {}).items():
        raw[key] = {**raw[key], **value}
    return raw


def write_yaml(path, raw):
    path.write_text(yaml.safe_dump(raw))
    return path


def test_shipped_configs_parse():
    names = sorted(p.stem for p in CONFIGS.glob("*.yaml"))
    assert {"adhoc2_eqc", "adhoc2_vqc", "iris_eqc", "iris_vqc"} <= set(names)
    for p in CONFIGS.glob("*.yaml"):
        load_config(p)


def test_unknown_key_reports_path():
    with pytest.raises(ConfigError, match="trainer.mew"):
        parse_config(small({"trainer": {"mew": 3}}))


def test_binary_encoding_on_three_classes_rejected(tmp_path):
    raw = small(dataset={"kind": "iris"}, output_dir=str(tmp_path / "out"))
    with pytest.raises(ConfigError, match="encoding.kind"):
        run_experiment(parse_config(raw))
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("override, where", [
    ({"loss": "CROSS_ENTROPY"}, "loss"),
    ({"repetitions": 0}, "repetitions"),
    ({"feature_map": "ZZ"}, "feature_map"),
])
def test_field_validation(override, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(small(**override))


def test_mask_length_checked():
    with pytest.raises(ConfigError, match="encoding.mask"):
        parse_config(small({"encoding": {"mask": "ZZZ"}}))


def test_run_seeds_distinct_and_stable():
    a = run_seeds(0, 0)
    assert a == run_seeds(0, 0)
    assert len({run_seeds(0, r) for r in range(10)}) == 10
    assert run_seeds(1, 0) != a


def test_run_writes_outputs_and_is_byte_identical(tmp_path):
    cfg = parse_config(small())
    s1 = run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == ["aggregate.csv", "run_00_genome.txt", "run_00_history.csv", "run_01_genome.txt",
                     "run_01_history.csv", "summary.csv", "summary.json"]
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    with open(tmp_path / "a" / "run_00_history.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0].keys() >= {"generation", "best_loss", "train_acc", "test_acc", "depth"}
    doc = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert doc["summary"]["repetitions"] == 2
    assert len(s1.test_accuracies) == 2


def test_vqc_run_writes_theta(tmp_path):
    raw = small({"trainer": {"kind": "vqc", "layers": 1, "learning_rate": 0.1, "epochs": 3}})
    del raw["trainer"]["mu"], raw["trainer"]["max_generations"]
    summary = run_experiment(parse_config(raw), tmp_path)
    assert summary.evals_per_iteration == 2 * 4 + 1
    theta = (tmp_path / "run_01_theta.csv").read_text().splitlines()
    assert theta[0] == "index,theta" and len(theta) == 5


def test_aggregate_uses_unbiased_std():
    h1 = [GenerationRecord(0, 1.0, 0.5, 0.5, 1), GenerationRecord(1, 0.5, 1, 1, 1)]
    h2 = [GenerationRecord(0, 3.0, 0.5, 0.5, 1)]
    rows = aggregate_rows([h1, h2])
    assert rows[0][1] == 2.0 and rows[0][2] == pytest.approx(np.sqrt(2.0))
    # the shorter run carries its last record forward
    assert rows[1][1] == pytest.approx(1.75)


def test_write_atomic_leaves_no_temp(tmp_path):
    target = tmp_path / "sub" / "x.csv"
    write_atomic(target, "a,b\n")
    write_atomic(target, "c,d\n")
    assert target.read_text() == "c,d\n"
    assert os.listdir(target.parent) == ["x.csv"]


def test_compare_models(tmp_path):
    eqc = parse_config(small(name="m_eqc"))
    vqc_raw = small({"trainer": {"kind": "vqc", "layers": 1, "epochs": 3}}, name="m_vqc")
    del vqc_raw["trainer"]["mu"], vqc_raw["trainer"]["max_generations"]
    rows = compare_models([eqc, parse_config(vqc_raw)], tmp_path, external={"svc": 0.9})
    assert [r["model"] for r in rows] == ["m_eqc", "m_vqc", "svc"]
    lines = (tmp_path / "comparison.csv").read_text().splitlines()
    assert len(lines) == 4


def test_compare_rejects_mismatched_datasets(tmp_path):
    a = parse_config(small(name="a"))
    b = parse_config(small({"dataset": {"gap": 0.4}}, name="b"))
    with pytest.raises(ConfigError, match="dataset"):
        compare_models([a, b], tmp_path)
    assert not any(tmp_path.iterdir())


def test_cli_run_and_exit_codes(tmp_path, capsys):
    good = write_yaml(tmp_path / "good.yaml", small())
    assert cli.main(["run", str(good), "--output-dir", str(tmp_path / "out")]) == cli.EXIT_OK
    assert (tmp_path / "out" / "summary.csv").exists()
    bad = write_yaml(tmp_path / "bad.yaml", small({"trainer": {"mu": 0}}))
    assert cli.main(["run", str(bad)]) == cli.EXIT_CONFIG
    assert "trainer.mu" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.yaml")]) == cli.EXIT_CONFIG
    with pytest.raises(SystemExit) as exc:
        cli.main(["run"])
    assert exc.value.code == cli.EXIT_USAGE


def test_cli_data_error(tmp_path, capsys):
    raw = small({"dataset": {"gap": 0.999, "grid": 10}})
    path = write_yaml(tmp_path / "c.yaml", raw)
    assert cli.main(["run", str(path), "--output-dir", str(tmp_path / "o")]) == cli.EXIT_DATA
    assert not (tmp_path / "o").exists()


def test_cli_probe_plateau(tmp_path, capsys):
    out = tmp_path / "plateau.csv"
    code = cli.main(["probe-plateau", "--n-list", "2,3", "--layers", "1", "--samples", "30", "--output", str(out)])
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert [r["n_qubits"] for r in rows] == ["2", "3"]
    assert all(float(r["gradient_variance"]) > 0 for r in rows)
    assert "slope" in capsys.readouterr().err


def test_cli_gen_adhoc(tmp_path):
    out = tmp_path / "adhoc.csv"
    assert cli.main(["gen-adhoc", "--per-class", "5", "--grid", "30", "--output", str(out)]) == cli.EXIT_OK
    assert len(out.read_text().splitlines()) == 11
    meta = json.loads(out.with_suffix(".meta.json").read_text())
    assert meta["per_class"] == 5


def test_csv_dataset_config(tmp_path):
    out = tmp_path / "adhoc.csv"
    cli.main(["gen-adhoc", "--per-class", "6", "--grid", "30", "--output", str(out)])
    raw = small(dataset={"kind": "csv", "path": "adhoc.csv", "scale": False})
    cfg = parse_config(raw, tmp_path)
    summary = run_experiment(cfg, tmp_path / "run")
    assert len(summary.runs) == 2
