import json
from pathlib import Path

import numpy as np
import pytest

from eloss.cli import main
from eloss.data import ActivationDump, write_dump, write_points

FIXTURE = Path(__file__).parent / "fixtures" / "normal_1d_2000.txt"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_estimate_fixture(capsys):
    code, out, _ = run(capsys, "estimate", FIXTURE)
    rep = json.loads(out)
    assert code == 0 and rep["n"] == 2000 and rep["d"] == 1
    assert abs(rep["entropy_nats"] - 1.41894) <= 0.05


def test_estimate_single_row_is_invalid_argument(tmp_path, capsys):
    (tmp_path / "one.txt").write_text("1 2\n")
    code, _, err = run(capsys, "estimate", tmp_path / "one.txt")
    assert code == 2 and "invalid argument" in err


def test_estimate_duplicates(tmp_path, capsys):
    write_points(tmp_path / "dup.txt", np.array([[0.0], [1.0], [1.0], [3.0]]))
    code, _, err = run(capsys, "estimate", tmp_path / "dup.txt")
    assert code == 3 and "degenerate" in err
    code, out, _ = run(capsys, "estimate", tmp_path / "dup.txt", "--duplicates", "jitter")
    assert code == 0 and np.isfinite(json.loads(out)["entropy_nats"])


def test_estimate_malformed_file(tmp_path, capsys):
    (tmp_path / "bad.txt").write_text("1\n2\nthree\n")
    code, _, err = run(capsys, "estimate", tmp_path / "bad.txt")
    assert code == 3 and "bad.txt:3:" in err


def test_bad_k_exit_code(capsys):
    code, _, _ = run(capsys, "estimate", FIXTURE, "--k", "0")
    assert code == 2


def test_gen_data_and_estimate(tmp_path, capsys):
    code, out, _ = run(capsys, "gen-data", "--n-train", "50", "--n-val", "20", "--out-dir", tmp_path)
    assert code == 0 and json.loads(out)["n_train"] == 50
    assert (tmp_path / "train.txt").read_text().count("\n") == 50 + 3


def test_profile_writes_report_and_trajectory(tmp_path, capsys):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(30, 3))
    write_dump(tmp_path / "d.txt", ActivationDump([("h0", x), ("h1", 0.5 * x)], {"epoch": 7}))
    code, out, _ = run(capsys, "profile", tmp_path / "d.txt", "--pca", "--out-dir", tmp_path)
    rep = json.loads(out)
    assert code == 0 and rep["layers"] == ["h0", "h1"] and rep["meta"] == {"epoch": "7"}
    assert (tmp_path / "profile.json").exists()
    assert (tmp_path / "trajectory.csv").read_text().startswith("layer,kind,pc0,pc1")


def test_train_config_rerun_is_byte_identical(tmp_path, capsys):
    cfg = {"dataset": {"n_train": 48, "n_val": 24}, "epochs": 2, "batch_size": 16}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    for name in ("a", "b"):
        code, _, _ = run(capsys, "train", "--config", tmp_path / "cfg.json", "--seed", "5", "--out-dir", tmp_path / name)
        assert code == 0
    assert (tmp_path / "a/record.json").read_bytes() == (tmp_path / "b/record.json").read_bytes()
    assert json.loads((tmp_path / "a/record.json").read_text())["seed"] == 5


def test_train_then_compare(tmp_path, capsys):
    common = ["--n-train", "48", "--n-val", "24", "--epochs", "3", "--batch-size", "16"]
    assert run(capsys, "train", *common, "--out-dir", tmp_path / "e")[0] == 0
    assert run(capsys, "train", *common, "--no-entropy", "--out-dir", tmp_path / "b")[0] == 0
    code, out, _ = run(
        capsys, "compare", tmp_path / "b/record.json", tmp_path / "e/record.json", "--label-a", "baseline", "--label-b", "entropy"
    )
    rep = json.loads(out)
    assert code == 0 and set(rep["runs"]) == {"baseline", "entropy"}
    assert set(rep["delta"]) == {"mean_accuracy", "r_squared", "final_l1"}


def test_train_bad_config(tmp_path, capsys):
    (tmp_path / "cfg.json").write_text("{not json")
    assert run(capsys, "train", "--config", tmp_path / "cfg.json")[0] == 3
    (tmp_path / "cfg2.json").write_text(json.dumps({"epochs": 0}))
    assert run(capsys, "train", "--config", tmp_path / "cfg2.json")[0] == 2


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
