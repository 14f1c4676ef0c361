import csv
import json

import pytest

from caisim.cli import main
from caisim.config import ExperimentConfig, dump


def write_config(tmp_path, name="config.json", **overrides):
    path = tmp_path / name
    dump(ExperimentConfig(**overrides), path)
    return path


class TestRunCommand:
    def test_writes_csvs(self, tmp_path, capsys):
        cfg = write_config(tmp_path, seed=42)
        out = tmp_path / "out"
        assert main(["run", "-c", str(cfg), "-o", str(out)]) == 0
        assert (out / "iterations.csv").exists()
        assert (out / "metrics.csv").exists()
        assert (out / "segments.csv").exists()
        assert "run finished" in capsys.readouterr().out

    def test_unreadable_config_exit_1(self, tmp_path, capsys):
        assert main(["run", "-c", str(tmp_path / "missing.json"),
                     "-o", str(tmp_path / "out")]) == 1
        assert "error" in capsys.readouterr().err

    def test_invalid_config_exit_1(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"m": 0}))
        assert main(["run", "-c", str(path), "-o", str(tmp_path / "out")]) == 1

    def test_bad_flags_exit_2(self):
        with pytest.raises(SystemExit) as err:
            main(["run", "--nope"])
        assert err.value.code == 2

    def test_out_dir_env_override(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, seed=1, budget_per_cycle=40,
                           auto_schedule=False)
        monkeypatch.setenv("CAISIM_OUT_DIR", str(tmp_path / "root"))
        assert main(["run", "-c", str(cfg), "-o", "sub"]) == 0
        assert (tmp_path / "root" / "sub" / "iterations.csv").exists()


class TestReplicateCommand:
    def test_batch_layout(self, tmp_path):
        cfg = write_config(tmp_path, seed=42)
        out = tmp_path / "batch"
        assert main(["replicate", "-c", str(cfg), "-n", "2", "-o", str(out)]) == 0
        assert (out / "rep_000" / "iterations.csv").exists()
        assert (out / "rep_001" / "iterations.csv").exists()
        assert (out / "comparison.csv").exists()

    def test_zero_count_usage_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        assert main(["replicate", "-c", str(cfg), "-n", "0",
                     "-o", str(tmp_path / "x")]) == 2


class TestReportCommand:
    def test_four_policy_table(self, tmp_path):
        batch = tmp_path / "all"
        for policy in ("internal", "one-agent", "two-agent", "rl-agent"):
            cfg = write_config(tmp_path, name=f"{policy}.json", seed=42,
                               policy=policy)
            assert main(["run", "-c", str(cfg),
                         "-o", str(batch / policy)]) == 0
        out = tmp_path / "report.csv"
        assert main(["report", "-i", str(batch), "-o", str(out)]) == 0
        with open(out, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
        assert {r["policy"] for r in rows} == {"internal", "one-agent",
                                               "two-agent", "rl-agent"}
        for metric in ("duration_ratio", "fluctuation_ratio", "co2_mean",
                       "human_dependency"):
            assert all(metric in r for r in rows)
            svg = tmp_path / f"report_{metric}.svg"
            assert svg.exists()
            assert svg.read_text().startswith("<svg")

    def test_empty_input_exit_1(self, tmp_path, capsys):
        (tmp_path / "empty").mkdir()
        assert main(["report", "-i", str(tmp_path / "empty"),
                     "-o", str(tmp_path / "r.csv")]) == 1


def test_missing_subcommand_exit_2():
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2
