"""CLI pipeline tests: exit codes, document schemas, idempotence."""

import csv
import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from aeroreach.cli import main


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory):
    """Run the whole CLI chain once; tests assert on its artifacts."""
    root = tmp_path_factory.mktemp("cli")
    runner = CliRunner()
    r = {}

    def run(args, expect=0):
        res = runner.invoke(main, args, catch_exceptions=False)
        assert res.exit_code == expect, f"{args}: {res.output}"
        return res

    cwd = os.getcwd()
    os.chdir(root)
    try:
        run(["gen-sweeps", "--output", "sweeps.csv"])
        run(["fit-tables", "--input", "sweeps.csv", "--output", "aerodb.json",
             "--report", "fit-report.txt"])
        run(["init-scenario", "--output", "scenario.json", "--aerodb", "aerodb.json"])
        run(["optimize", "--config", "scenario.json", "--objective", "min-fuel",
             "--out", "traj.json", "--report", "report.json", "--threads", "4", "--quiet"])
        run(["reach", "--config", "scenario.json", "--init", "traj.json",
             "--iters", "5", "--out", "reach.json", "--archive-dir", "archive",
             "--checkpoint-every", "2", "--checkpoint", "ck.json",
             "--threads", "4", "--quiet"])
        run(["emit-plots", "--in", "traj.json", "--out", "plots_traj"])
        run(["emit-plots", "--in", "reach.json", "--out", "plots_reach"])
    finally:
        os.chdir(cwd)
    r["root"] = root
    r["runner"] = runner
    return r


def _read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _read_csv(path):
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], rows[1:]


class TestDocuments:
    def test_trajectory_document(self, pipeline):
        doc = _read_json(pipeline["root"] / "traj.json")
        assert doc["traj_version"] == 1
        assert doc["converged"] is True
        assert len(doc["states"]) == 41
        assert len(doc["controls"]) == 41
        assert doc["config_hash"]
        assert doc["tool_version"]
        assert "channels" in doc and "limits" in doc

    def test_report_rows_schema(self, pipeline):
        doc = _read_json(pipeline["root"] / "report.json")
        assert doc["status"] == "converged"
        row = doc["rows"][0]
        for key in ("iter", "cost", "defect_l1", "terminal_l1", "ctcs_l1",
                    "prox_weight", "rho", "accepted", "wall_ms"):
            assert key in row

    def test_reach_document(self, pipeline):
        doc = _read_json(pipeline["root"] / "reach.json")
        assert doc["reach_version"] == 1
        assert doc["iterations"] == 5
        assert len(doc["volume_history_m3"]) == 6
        assert doc["seed"] == 20260809
        stats = doc["rejection_stats"]
        assert sum(stats.values()) == 5
        # every vertex has an archived trajectory document
        for v in doc["vertices"]:
            key = v["archive_key"]
            assert os.path.exists(pipeline["root"] / "archive" / f"traj-{key:06d}.json")

    def test_config_hash_consistent_across_outputs(self, pipeline):
        t = _read_json(pipeline["root"] / "traj.json")
        r = _read_json(pipeline["root"] / "reach.json")
        p = _read_json(pipeline["root"] / "report.json")
        assert t["config_hash"] == r["config_hash"] == p["config_hash"]


class TestExitCodes:
    def test_bogus_objective_usage_error(self, pipeline):
        res = pipeline["runner"].invoke(
            main,
            ["optimize", "--config", str(pipeline["root"] / "scenario.json"),
             "--objective", "bogus", "--out", "x.json"],
        )
        assert res.exit_code == 2

    def test_missing_input_file(self, pipeline):
        res = pipeline["runner"].invoke(
            main, ["fit-tables", "--input", "/nonexistent/sweeps.csv", "--output", "x.json"]
        )
        assert res.exit_code == 2
        assert "/nonexistent/sweeps.csv" in res.output

    def test_missing_config(self, pipeline):
        res = pipeline["runner"].invoke(
            main,
            ["optimize", "--config", "/nonexistent/scenario.json",
             "--objective", "min-fuel", "--out", "x.json"],
        )
        assert res.exit_code == 2

    def test_emit_plots_bad_document(self, pipeline, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"mystery": 1}\n')
        res = pipeline["runner"].invoke(
            main, ["emit-plots", "--in", str(bad), "--out", str(tmp_path / "o")]
        )
        assert res.exit_code == 2


class TestIdempotence:
    def test_optimize_idempotent(self, pipeline):
        root = pipeline["root"]
        res = pipeline["runner"].invoke(
            main,
            ["optimize", "--config", str(root / "scenario.json"), "--objective",
             "min-fuel", "--out", str(root / "traj2.json"), "--threads", "4", "--quiet"],
            catch_exceptions=False,
        )
        assert res.exit_code == 0
        a = _read_json(root / "traj.json")
        b = _read_json(root / "traj2.json")
        assert a["states"] == b["states"]
        assert a["controls"] == b["controls"]
        assert a["tau_a_s"] == b["tau_a_s"]

    def test_reach_zero_iters_is_singleton(self, pipeline):
        root = pipeline["root"]
        res = pipeline["runner"].invoke(
            main,
            ["reach", "--config", str(root / "scenario.json"), "--init",
             str(root / "traj.json"), "--iters", "0", "--out", str(root / "reach0.json"),
             "--quiet"],
            catch_exceptions=False,
        )
        assert res.exit_code == 0
        doc = _read_json(root / "reach0.json")
        assert doc["iterations"] == 0
        assert doc["volume_m3"] == 0.0
        assert len(doc["vertices"]) == 1

    def test_reach_resume_matches_uninterrupted(self, pipeline):
        root = pipeline["root"]
        args = ["--config", str(root / "scenario.json"), "--init", str(root / "traj.json"),
                "--threads", "4", "--quiet"]
        pipeline["runner"].invoke(
            main, ["reach", *args, "--iters", "3", "--out", str(root / "r3.json"),
                   "--checkpoint-every", "3", "--checkpoint", str(root / "ck3.json")],
            catch_exceptions=False,
        )
        pipeline["runner"].invoke(
            main, ["reach", *args, "--iters", "5", "--out", str(root / "r5b.json"),
                   "--resume", str(root / "ck3.json")],
            catch_exceptions=False,
        )
        a = _read_json(root / "reach.json")
        b = _read_json(root / "r5b.json")
        assert [v["point"] for v in a["vertices"]] == [v["point"] for v in b["vertices"]]
        assert a["volume_history_m3"] == b["volume_history_m3"]


class TestEmittedSeries:
    def test_trajectory_files_present(self, pipeline):
        d = pipeline["root"] / "plots_traj"
        for name in ("states.csv", "controls.csv", "constraints.csv", "limits.json"):
            assert (d / name).exists()

    def test_volume_history_row_count(self, pipeline):
        header, rows = _read_csv(pipeline["root"] / "plots_reach" / "volume_history.csv")
        assert header == ["iteration", "volume_m3"]
        assert len(rows) == 6  # iterations + 1

    def test_extremal_trajectories_all_six(self, pipeline):
        d = pipeline["root"] / "plots_reach"
        names = [f"extremal_{n}.csv" for n in
                 ("plus_n", "minus_n", "plus_e", "minus_e", "plus_up", "minus_up")]
        for n in names:
            assert (d / n).exists()
        # extremal selection matches an argmax over the vertex list
        doc = _read_json(pipeline["root"] / "reach.json")
        pts = np.array([v["point"] for v in doc["vertices"]])
        keys = [v["archive_key"] for v in doc["vertices"]]
        want = keys[int(np.argmax(pts[:, 0]))]
        header, rows = _read_csv(d / "extremal_plus_n.csv")
        arch = _read_json(
            pipeline["root"] / "archive" / f"traj-{want:06d}.json"
        )
        mid = (len(arch["states"]) - 1) // 2
        assert float(rows[mid][2]) == pytest.approx(arch["states"][mid][1], rel=1e-12)

    def test_limit_lines_match_config(self, pipeline):
        lim = _read_json(pipeline["root"] / "plots_traj" / "limits.json")
        scen = _read_json(pipeline["root"] / "scenario.json")
        assert lim["q_max_pa"] == scen["constraints"]["q_max_pa"]
        assert lim["alpha_max_deg"] == scen["constraints"]["alpha_max_deg"]
        assert lim["u_min_n"] == scen["vehicle"]["u_min_n"]
        header, rows = _read_csv(pipeline["root"] / "plots_traj" / "constraints.csv")
        i = header.index("q_max_pa")
        assert all(float(r[i]) == scen["constraints"]["q_max_pa"] for r in rows)

    def test_states_csv_time_column_monotone(self, pipeline):
        header, rows = _read_csv(pipeline["root"] / "plots_traj" / "states.csv")
        ts = [float(r[header.index("t_s")]) for r in rows]
        assert all(b > a for a, b in zip(ts, ts[1:]))
