import csv
import json
from fractions import Fraction

import pytest

from codedmr import cli
from codedmr.model import parse_rational

WORKED_CONFIG = {
    "K": 4,
    "m": ["1/5", "1/3", "1/3", "1/2"],
    "w": ["1/8", "1/4", "1/6", "11/24"],
    "strategy": "custom",
}


@pytest.fixture
def config_path(tmp_path):
    def write(data, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)
    return write


def run_json(capsys, argv):
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


class TestPlan:
    def test_worked_example(self, capsys, config_path):
        code, data = run_json(capsys, ["plan", "--config", config_path(WORKED_CONFIG)])
        assert code == 0
        assert data["plan"]["l"] == ["1/5", "4/15", "4/15", "4/15"]
        assert data["plan"]["P"] == ["0", "1/11", "1/11", "7/22"]
        assert data["plan"]["r"] == 1
        assert data["minimal_files"] == 39930
        assert data["minimal_functions"]["custom"] == 24
        cell = next(e for e in data["plan"]["subbatch"]
                    if e["owner"] == 1 and e["subset"] == [2, 3])
        assert cell["fraction"] == "3/2662"

    def test_k3_minimal_files(self, capsys, config_path):
        cfg = {"m": ["3/5", "2/3", "11/15"]}
        code, data = run_json(capsys, ["plan", "--config", config_path(cfg)])
        assert code == 0
        assert data["minimal_files"] == 150
        assert data["minimal_functions"]["computation"] == 30
        assert data["minimal_functions"]["shuffle"] == 19

    def test_malformed_json_exit_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert cli.main(["plan", "--config", str(bad)]) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_config_exit_2(self, capsys):
        assert cli.main(["plan"]) == 2

    def test_round_trip(self, capsys, config_path):
        code, data = run_json(capsys, ["plan", "--config", config_path(WORKED_CONFIG)])
        assert code == 0
        again = config_path(data["profile"], name="again.json")
        code, data2 = run_json(capsys, ["plan", "--config", again])
        assert code == 0
        assert data2["plan"] == data["plan"]
        assert data2["minimal_files"] == data["minimal_files"]


class TestLoad:
    def test_worked_example(self, capsys, config_path):
        code, data = run_json(capsys, ["load", "--config", config_path(WORKED_CONFIG)])
        assert code == 0
        assert data["report"]["achievable"]["exact"] == "4171/7260"
        assert data["report"]["lowcl_load"]["exact"] == "1/10"
        assert data["report"]["highcl_load"]["exact"] == "689/1452"

    def test_table1_shuffle_rendering(self, capsys, config_path):
        cfg = {"m": ["1/6"] * 6 + ["1/2"] * 6}
        code, data = run_json(capsys, [
            "load", "--config", config_path(cfg),
            "--strategy", "shuffle", "--precision", "3"])
        assert code == 0
        assert data["report"]["achievable"]["decimal"] == "0.175"

    def test_shuffle_without_redundancy_exit_1(self, capsys, config_path):
        cfg = {"m": ["1/2", "1/2"]}
        assert cli.main(["load", "--config", config_path(cfg),
                         "--strategy", "shuffle"]) == 1
        assert "error" in capsys.readouterr().err

    def test_strategy_required(self, capsys, config_path):
        cfg = {"m": ["1/2", "1/2"]}
        assert cli.main(["load", "--config", config_path(cfg)]) == 2


class TestSimulate:
    def test_two_node(self, capsys, config_path):
        cfg = {"m": ["1/2", "1/2"], "strategy": "even"}
        code, data = run_json(capsys, [
            "simulate", "--config", config_path(cfg), "--iv-bits", "16"])
        assert code == 0
        assert data["report"]["measured_load"]["exact"] == "1/2"
        assert data["analytic_load"]["exact"] == "1/2"
        assert all(data["report"]["decode_success"].values())

    def test_indivisible_exit_1(self, capsys, config_path):
        code = cli.main(["simulate", "--config", config_path(WORKED_CONFIG),
                         "--functions", "23"])
        assert code == 1
        assert "24" in capsys.readouterr().err

    def test_transcript(self, capsys, config_path, tmp_path):
        cfg = {"m": ["1/2", "1/2"], "strategy": "even"}
        transcript = tmp_path / "messages.jsonl"
        code, _ = run_json(capsys, [
            "simulate", "--config", config_path(cfg),
            "--transcript", str(transcript)])
        assert code == 0
        records = [json.loads(line) for line in transcript.read_text().splitlines()]
        assert len(records) == 2
        assert all(rec["kind"] == "unicast" for rec in records)

    def test_internal_consistency_exit_3(self, capsys, config_path, monkeypatch):
        from codedmr import simulator

        real = simulator.simulate

        def broken(*args, **kwargs):
            instance, plan, report = real(*args, **kwargs)
            report.measured_load += 1
            return instance, plan, report

        monkeypatch.setattr(cli.simulator, "simulate", broken)
        cfg = {"m": ["1/2", "1/2"], "strategy": "even"}
        assert cli.main(["simulate", "--config", config_path(cfg)]) == 3
        assert "internal error" in capsys.readouterr().err


class TestSweep:
    def test_k3_boundary_row(self, capsys):
        code = cli.main(["sweep", "--preset", "fig2-k3", "--step", "1/3",
                         "--mbar-max", "2/3"])
        assert code == 0
        rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
        first = rows[0]
        # sum(m) is exactly 1 here: shuffle column blank, others populated
        assert first["mbar"].startswith("0.333333")
        assert first["L_even"] and first["L_computation"] and first["L_hom_optimal"]
        assert first["L_shuffle"] == ""
        assert "shuffle-aware undefined" in first["note"]
        second = rows[1]
        assert second["L_shuffle"] != ""

    def test_k12_infeasible_rows_skipped(self, capsys):
        code = cli.main(["sweep", "--preset", "fig2-k12", "--step", "0.01",
                         "--mbar-min", "0.86", "--mbar-max", "0.88"])
        assert code == 0
        rows = {row["mbar"][:4]: row for row in
                csv.DictReader(capsys.readouterr().out.splitlines())}
        assert rows["0.86"]["L_shuffle"] != ""
        assert rows["0.87"]["note"].startswith("skipped")
        assert rows["0.87"]["L_even"] == ""

    def test_crossover_point(self, capsys):
        code = cli.main(["sweep", "--preset", "fig2-k12", "--step", "0.01",
                         "--mbar-min", "0.8", "--mbar-max", "0.8"])
        assert code == 0
        row = next(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert parse_rational(row["L_shuffle"]) < parse_rational(row["L_hom_optimal"])

    def test_out_file(self, capsys, tmp_path):
        out = tmp_path / "sweep.csv"
        code = cli.main(["sweep", "--preset", "fig2-k3", "--step", "0.1",
                         "--out", str(out)])
        assert code == 0
        assert out.read_text().startswith("mbar,")

    def test_requires_exactly_one_source(self, capsys):
        assert cli.main(["sweep"]) == 2
        assert cli.main(["sweep", "--preset", "fig2-k3",
                         "--coeffs", "1,1"]) == 2

    def test_custom_coeffs(self, capsys):
        code = cli.main(["sweep", "--coeffs", "0.9,1,1.1", "--step", "0.05",
                         "--mbar-min", "0.4", "--mbar-max", "0.5"])
        assert code == 0
        rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert len(rows) == 3


class TestBoundGap:
    def test_bound_witness(self, capsys, config_path):
        cfg = {"m": ["1/2", "1/2"], "w": ["1/2", "1/2"], "strategy": "custom"}
        code, data = run_json(capsys, ["bound", "--config", config_path(cfg)])
        assert code == 0
        assert data["lower_bound"]["exact"] == "1/4"
        assert data["witness"] in ([1], [2])

    def test_gap(self, capsys, config_path):
        cfg = {"m": ["1/6"] * 6 + ["1/3"] * 6}
        code, data = run_json(capsys, ["gap", "--config", config_path(cfg)])
        assert code == 0
        assert data["regime"] == "computation"
        assert data["within_bound"] is True
        ratio = Fraction(data["gap_to_homogeneous"]["exact"])
        assert Fraction(14, 10) < ratio < Fraction(16, 10)


class TestTable:
    def test_table1_json(self, capsys):
        code, data = run_json(capsys, ["table", "--preset", "table1", "--json"])
        assert code == 0
        computed = {row["scheme"]: row for row in data["rows"]
                    if row["status"] == "computed"}
        assert computed["Even FA"]["m1"] == "0.448"
        assert computed["Computation-aware FA"]["m1"] == "0.371"
        assert computed["Shuffle-aware FA"]["m1"] == "0.315"
        assert computed["Even FA"]["m2"] == "0.397"
        assert computed["Computation-aware FA"]["m2"] == "0.255"
        assert computed["Shuffle-aware FA"]["m2"] == "0.175"
        reported = [row for row in data["rows"] if row["status"] != "computed"]
        assert all(row["status"] == "reported, not reproduced" for row in reported)

    def test_table2_json(self, capsys):
        code, data = run_json(capsys, ["table", "--preset", "table2", "--json"])
        assert code == 0
        sections = {s["section"]: s["rows"] for s in data["sections"]}
        k3 = {row["scheme"]: row for row in sections["K=3"]}
        assert k3["Computation-aware FA"]["files"] == "150"
        assert k3["Computation-aware FA"]["functions"] == "30"
        assert k3["Shuffle-aware FA"]["functions"] == "19"
        k12 = {row["scheme"]: row for row in sections["K=12 profile-1"]}
        assert k12["Computation-aware FA"]["files"] == "2^2 * 3 * 11^11"
        assert k12["Computation-aware FA"]["functions"] == "18"
        k12b = {row["scheme"]: row for row in sections["K=12 profile-2"]}
        assert k12b["Computation-aware FA"]["functions"] == "24"

    def test_table_text(self, capsys):
        assert cli.main(["table", "--preset", "table1"]) == 0
        out = capsys.readouterr().out
        assert "Even FA" in out and "0.448" in out
        assert "reported, not reproduced" in out


class TestDeterminism:
    def test_identical_invocations(self, capsys, config_path):
        path = config_path(WORKED_CONFIG)
        cli.main(["load", "--config", path])
        first = capsys.readouterr().out
        cli.main(["load", "--config", path])
        assert capsys.readouterr().out == first
