from __future__ import annotations

import json

import pytest

from delib.cli import main
from delib.store import canonical_json


SCENARIO = {
    "scenario": "cluster-recovery",
    "deliberation": "clidemo",
    "seed": 7,
    "population": {
        "participants": 12,
        "dimensions": 1,
        "blocs": [{"size": 6, "center": [1.0]}, {"size": 6, "center": [-1.0]}],
        "clarity_noise": 0.08,
    },
    "params": {"proposals": 8, "agree_within": 0.9, "agree_across": 0.1, "threshold": 0.4},
}


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(SCENARIO), encoding="utf-8")
    return path


def simulate(tmp_path, scenario_file, name="run1"):
    out = tmp_path / f"{name}.json"
    data = tmp_path / f"data-{name}"
    code = main(
        [
            "simulate",
            "--config",
            str(scenario_file),
            "--out",
            str(out),
            "--data-dir",
            str(data),
        ]
    )
    return code, out, data / "clidemo" / "events.log"


class TestSimulate:
    def test_reports_are_byte_identical_across_runs(self, tmp_path, scenario_file):
        code1, out1, _ = simulate(tmp_path, scenario_file, "a")
        code2, out2, _ = simulate(tmp_path, scenario_file, "b")
        assert code1 == code2 == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 2

    def test_invalid_config_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        assert main(["simulate", "--config", str(bad)]) == 2
        bad.write_text(json.dumps({"scenario": "wat"}), encoding="utf-8")
        assert main(["simulate", "--config", str(bad)]) == 2

    def test_seed_override_changes_output(self, tmp_path, scenario_file):
        out1 = tmp_path / "s1.json"
        out2 = tmp_path / "s2.json"
        main(["simulate", "--config", str(scenario_file), "--out", str(out1), "--seed", "1"])
        main(["simulate", "--config", str(scenario_file), "--out", str(out2), "--seed", "2"])
        assert out1.read_bytes() != out2.read_bytes()

    def test_front_shrink_report_carries_front_sizes(self, tmp_path):
        config = tmp_path / "fs.json"
        config.write_text(
            json.dumps(
                {
                    "scenario": "front-shrink",
                    "deliberation": "fs",
                    "seed": 1,
                    "population": {"participants": 6},
                    "params": {},
                }
            ),
            encoding="utf-8",
        )
        out = tmp_path / "fs-report.json"
        assert main(["simulate", "--config", str(config), "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert "front_sizes" in report["metrics"]


class TestAnalyze:
    def test_matches_simulation_report(self, tmp_path, scenario_file):
        _, out, log = simulate(tmp_path, scenario_file)
        analysis_path = tmp_path / "analysis.json"
        assert main(["analyze", "--log", str(log), "--out", str(analysis_path)]) == 0
        report = json.loads(out.read_text())
        assert (
            canonical_json(report["analysis"]) + b"\n" == analysis_path.read_bytes()
        )

    def test_threshold_above_one_gives_singletons(self, tmp_path, scenario_file):
        _, _, log = simulate(tmp_path, scenario_file)
        out = tmp_path / "an.json"
        main(["analyze", "--log", str(log), "--threshold", "1.01", "--out", str(out)])
        analysis = json.loads(out.read_text())
        clusters = analysis["clusters"]["clusters"]
        assert all(len(m) == 1 for m in clusters.values())

    def test_top_k_one(self, tmp_path, scenario_file):
        _, _, log = simulate(tmp_path, scenario_file)
        out = tmp_path / "an.json"
        main(["analyze", "--log", str(log), "--top-k", "1", "--out", str(out)])
        analysis = json.loads(out.read_text())
        assert all(len(entry["proposals"]) == 1 for entry in analysis["digest"])

    def test_corrupt_log_exits_3(self, tmp_path, scenario_file):
        _, _, log = simulate(tmp_path, scenario_file)
        data = log.read_bytes()
        log.write_bytes(data[:-10])
        assert main(["analyze", "--log", str(log)]) == 3

    def test_missing_log_exits_3(self, tmp_path):
        assert main(["analyze", "--log", str(tmp_path / "none.log")]) == 3


class TestServe:
    def test_served_front_matches_analyze(self, tmp_path, scenario_file):
        # Same data directory read through the HTTP surface and through the
        # offline analyzer must agree.
        from fastapi.testclient import TestClient

        from delib.service import DeliberationService, create_app
        from delib.store import DeliberationStore

        _, _, log = simulate(tmp_path, scenario_file)
        analysis_path = tmp_path / "an.json"
        main(["analyze", "--log", str(log), "--out", str(analysis_path)])
        analysis = json.loads(analysis_path.read_text())

        service = DeliberationService(DeliberationStore(log.parent.parent))
        client = TestClient(create_app(service))
        served = client.get("/deliberations/clidemo/front").json()
        assert served["front"] == analysis["front"]
        served_clusters = client.get("/deliberations/clidemo/clusters").json()
        assert served_clusters["clusters"] == analysis["clusters"]["clusters"]

    def test_busy_port_exits_4(self, tmp_path):
        import socket
        import subprocess
        import sys

        with socket.socket() as blocker:
            blocker.bind(("127.0.0.1", 0))
            blocker.listen(1)
            port = blocker.getsockname()[1]
            proc = subprocess.run(
                [
                    sys.executable, "-m", "delib", "serve",
                    "--data-dir", str(tmp_path / "data"),
                    "--host", "127.0.0.1", "--port", str(port),
                ],
                capture_output=True,
                timeout=60,
            )
        assert proc.returncode == 4


class TestReplayCheck:
    def test_pristine_log_passes(self, tmp_path, scenario_file):
        _, _, log = simulate(tmp_path, scenario_file)
        assert main(["replay-check", "--log", str(log)]) == 0

    def test_cut_record_exits_3(self, tmp_path, scenario_file):
        _, _, log = simulate(tmp_path, scenario_file)
        log.write_bytes(log.read_bytes()[:-10])
        assert main(["replay-check", "--log", str(log)]) == 3

    def test_dropped_tail_against_snapshot_exits_5(self, tmp_path, scenario_file):
        _, _, log = simulate(tmp_path, scenario_file)
        lines = log.read_bytes().splitlines(keepends=True)
        log.write_bytes(b"".join(lines[:-4]))
        assert main(["replay-check", "--log", str(log)]) == 5

    def test_explicit_snapshot_comparison(self, tmp_path, scenario_file):
        _, _, log = simulate(tmp_path, scenario_file)
        snaps = sorted((log.parent / "snapshots").glob("*.snap"))
        assert main(["replay-check", "--log", str(log), "--snapshot", str(snaps[-1])]) == 0
