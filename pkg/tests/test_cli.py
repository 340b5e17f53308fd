import csv
import json
import subprocess
import sys

import pytest

from nsbandits.cli import main
from nsbandits.instance import Instance


class TestForge:
    def test_ucb_with_sidecar(self, tmp_path, capsys):
        out = tmp_path / "inst.json"
        assert main(["forge", "--kind", "ucb", "--T", "1000", "--K", "2", "-o", str(out)]) == 0
        side = json.loads((tmp_path / "inst.params.json").read_text())
        assert side["c"] == 96 and abs(side["delta"] - 0.37936) < 1e-4
        inst = Instance.load(out)
        assert inst.segments[1].start == 193
        assert "c=96" in capsys.readouterr().out

    def test_stdout(self, capsys):
        assert main(["forge", "--kind", "etc", "--T", "100", "--K", "2", "--m", "10"]) == 0
        assert Instance.from_json(capsys.readouterr().out).T == 100

    def test_composite(self, tmp_path):
        out = tmp_path / "c.json"
        args = ["forge", "--kind", "ucb", "--T", "4000", "--K", "2", "--d", "4", "--gamma", "2", "-o", str(out)]
        assert main(args) == 0
        assert len(Instance.load(out).segments) == 4

    def test_precondition_exit_2(self):
        assert main(["forge", "--kind", "ucb", "--T", "100", "--K", "10"]) == 2

    def test_missing_args_exit_1(self):
        assert main(["forge", "--kind", "etc", "--T", "100", "--K", "2"]) == 1
        assert main(["forge", "--T", "100"]) == 1


class TestSimulateEvaluate:
    def test_simulate_trace(self, tmp_path):
        out = tmp_path / "t.csv"
        args = ["simulate", "--kind", "ucb", "--T", "1000", "--K", "2", "--policy", "ucb-known",
                "--tie", "2", "--trace", "-o", str(out)]
        assert main(args) == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 1000 and float(rows[-1]["cum_regret"]) == pytest.approx(501.4797198642, abs=1e-6)

    def test_simulate_instance_file(self, tmp_path, capsys):
        inst = tmp_path / "i.json"
        main(["forge", "--kind", "etc", "--T", "100", "--K", "2", "--m", "10", "-o", str(inst)])
        capsys.readouterr()
        assert main(["simulate", "-i", str(inst), "--policy", "etc:m=10"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[-1].split(",")[-1] == "90.0"

    def test_evaluate(self, capsys):
        args = ["evaluate", "--kind", "eg-mid", "--T", "400", "--K", "2", "--policy", "eps-greedy:eps=0.1",
                "--reps", "50", "--seed", "3"]
        assert main(args) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["report"]["reps"] == 50 and out["report"]["seed"] == 3
        assert Instance.from_dict(out["instance"]).T == 400

    def test_seed_default_is_fixed(self, capsys):
        args = ["evaluate", "--kind", "eg-mid", "--T", "100", "--K", "2", "--policy", "eps-greedy:eps=0.1",
                "--reps", "20"]
        main(args)
        a = capsys.readouterr().out
        main(args)
        assert capsys.readouterr().out == a

    def test_bad_policy_exit_1(self):
        assert main(["evaluate", "--kind", "eg-mid", "--T", "100", "--K", "2", "--policy", "greedy"]) == 1

    def test_invalid_instance_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"K": 2, "T": 10, "init_rounds": 0, "segments": [
            {"start": 1, "end": 4, "arms": [{"kind": "det", "value": 0}, {"kind": "det", "value": 1}]}]}))
        assert main(["simulate", "-i", str(bad), "--policy", "ucb-known"]) == 2

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["simulate", "-i", str(tmp_path / "none.json"), "--policy", "ucb-known"]) == 2


class TestCertify:
    def test_etc(self, capsys):
        assert main(["certify", "--theorem", "etc", "--T", "1000", "--K", "2", "--m", "20"]) == 0
        cert = json.loads(capsys.readouterr().out)
        assert cert["exact"] == 980 and cert["pass"] is True

    def test_ucb_precondition(self):
        assert main(["certify", "--theorem", "ucb", "--T", "100", "--K", "10"]) == 2

    def test_eps_list(self, capsys):
        args = ["certify", "--theorem", "eg", "--T", "200", "--K", "2", "--eps", "0.1,0.5", "--reps", "50"]
        assert main(args) in (0, 3)
        assert len(json.loads(capsys.readouterr().out)) == 2

    def test_restart_change(self, tmp_path):
        out = tmp_path / "c.json"
        args = ["certify", "--theorem", "restart-change", "--a", "0.035", "--T", "4000", "--d", "4",
                "--gamma", "2", "--K", "2", "-o", str(out)]
        assert main(args) == 0
        assert json.loads(out.read_text())["bound"] == pytest.approx(74.4721359549996)

    def test_unknown_theorem(self):
        assert main(["certify", "--theorem", "thm9", "--T", "10", "--K", "2"]) == 1


class TestFigure:
    def test_fig1(self, tmp_path):
        out = tmp_path / "f1.csv"
        assert main(["figure", "--id", "1", "-o", str(out)]) == 0
        rows = list(csv.DictReader(out.open()))
        assert all(float(r["index_2"]) > float(r["index_1"]) for r in rows[193:])

    def test_fig2(self, tmp_path):
        out = tmp_path / "f2.csv"
        assert main(["figure", "--id", "2", "-o", str(out)]) == 0
        rows = list(csv.DictReader(out.open()))
        assert {r["arm"] for r in rows[20:]} == {"2"}

    def test_fig3(self, tmp_path):
        out = tmp_path / "f3.csv"
        assert main(["figure", "--id", "3", "-o", str(out)]) == 0
        rows = list(csv.DictReader(out.open()))
        assert {r["mean_1"] for r in rows[1:]} == {"0.5"}

    def test_bad_id(self):
        assert main(["figure", "--id", "4"]) == 1


def test_no_subcommand():
    assert main([]) == 1
    assert main(["bogus"]) == 1


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "nsbandits", "forge", "--kind", "ucb", "--T", "100", "--K", "10"],
                       capture_output=True, text=True)
    assert r.returncode == 2 and "4K ln T" in r.stderr
