import csv
import json
import math
import os

import pytest

from decaywatch import reduction
from decaywatch.cli import RunConfig, UsageError, cmd_analytic, main


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


def test_analytic_two_atom_at_zero(tmp_path):
    assert main(["analytic", "--atoms", "2", "--k", "1", "--grid", "0", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "analytic.csv").read_text().splitlines()
    assert lines[0] == "t,P_0,P_1,P_2,J_0,J_1,J_2"
    assert lines[1] == "0,1,0,0,-2,2,0"


def test_analytic_half_life(tmp_path):
    config = RunConfig({"n_atoms": 1, "k": 1.0}, output_dir=str(tmp_path))
    cmd_analytic(config, [math.log(2)])
    row = read_rows(tmp_path / "analytic.csv")[1]
    assert [float(x) for x in row[1:3]] == pytest.approx([0.5, 0.5], abs=1e-15)


def test_analytic_grid_normalization(tmp_path):
    code = main(["analytic", "--rates", "2,1", "--time", "5", "--points", "100",
                 "--out", str(tmp_path), "--format", "csv"])
    assert code == 0
    rows = read_rows(tmp_path / "analytic.csv")[1:]
    assert len(rows) == 100
    for row in rows:
        probs = [float(x) for x in row[1:4]]
        net = [float(x) for x in row[4:7]]
        assert abs(math.fsum(probs) - 1) <= 1e-9
        assert abs(math.fsum(net)) <= 1e-9
    assert not (tmp_path / "analytic.json").exists()


def test_analytic_csv_bytes(tmp_path):
    main(["analytic", "--rates", "2,1", "--grid", "0.5", "--out", str(tmp_path)])
    raw = (tmp_path / "analytic.csv").read_bytes()
    assert b"\r" not in raw
    value = float(raw.splitlines()[1].split(b",")[1])
    assert value == math.exp(-1.0)


def test_analytic_rejects_bad_grid(tmp_path):
    with pytest.raises(UsageError):
        cmd_analytic(RunConfig({"rates": [1.0]}, output_dir=str(tmp_path)), [1.0, 0.5])
    with pytest.raises(SystemExit) as exc:
        main(["analytic", "--grid", "-1", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_simulate_and_replay(tmp_path):
    first = tmp_path / "first"
    code = main(["simulate", "--atoms", "2", "--k", "1", "--time", "1", "--trials", "100000",
                 "--seed", "42", "--out", str(first)])
    assert code == 0
    rows = read_rows(first / "histogram.csv")
    assert rows[0] == ["count", "occurrences", "frequency", "expected"]
    freq = [float(r[2]) for r in rows[1:]]
    assert freq == pytest.approx([0.13534, 0.46508, 0.39958], abs=0.005)
    assert sum(int(r[1]) for r in rows[1:]) == 100000

    manifest = json.loads((first / "manifest.json").read_text())
    assert manifest["config"]["master_seed"] == 42
    assert "created_at" in manifest

    replay = tmp_path / "replay"
    assert main(["simulate", "--manifest", str(first / "manifest.json"), "--trials", "5",
                 "--out", str(replay)]) == 0
    for name in ("histogram.csv", "histogram.json", "ensemble.json"):
        assert (first / name).read_bytes() == (replay / name).read_bytes()


def test_simulate_zero_trials_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--trials", "0", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_conflicting_chain_sources(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--rates", "1,2", "--atoms", "2", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "chain_source": {"rates": [3.0, 1.0]},
        "query_time": 0.5, "trials": 2000, "master_seed": 1,
        "output_dir": str(tmp_path / "from_file"), "format": "csv",
    }))
    out = tmp_path / "flags"
    assert main(["simulate", "--config", str(cfg), "--seed", "2", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["master_seed"] == 2
    assert manifest["config"]["chain_source"] == {"rates": [3.0, 1.0]}
    assert manifest["config"]["trials"] == 2000
    assert (out / "histogram.csv").exists()
    assert not (out / "histogram.json").exists()


def test_verify_default_passes(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"] is True
    assert "PASS reduction_vs_born_p" in capsys.readouterr().out


def test_verify_zero_time_is_insufficient(tmp_path):
    assert main(["verify", "--time", "0", "--out", str(tmp_path)]) == 3


def test_verify_flags_corrupted_engine(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(reduction, "successor", lambda i: i + 2)
    assert main(["verify", "--atoms", "4", "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "reduction_vs_born_p" in err


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_output(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    with pytest.raises(SystemExit) as exc:
        main(["analytic", "--out", str(locked / "sub")])
    assert exc.value.code == 2


def test_output_path_is_a_file(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(SystemExit) as exc:
        main(["analytic", "--out", str(blocker / "sub")])
    assert exc.value.code == 2
