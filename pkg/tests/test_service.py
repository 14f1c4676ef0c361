import json
import time

import pytest
from fastapi.testclient import TestClient

from caisim.config import ExperimentConfig
from caisim.runner import render_iterations_csv, run_experiment
from caisim.service import create_app


@pytest.fixture()
def client():
    return TestClient(create_app())


def fast_config(**overrides):
    doc = ExperimentConfig(**overrides).to_dict()
    doc["pace_hz"] = 0.0
    return doc


def wait_status(client, run_id, wanted=("finished", "failed"), timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        status = client.get(f"/runs/{run_id}").json()["status"]
        if status in wanted:
            return status
        time.sleep(0.02)
    raise TimeoutError(f"run {run_id} never reached {wanted}")


def collect_events(client, run_id, from_iteration=0):
    events = []
    with client.stream("GET", f"/runs/{run_id}/events",
                       params={"from": from_iteration}) as response:
        assert response.status_code == 200
        buffer = ""
        for chunk in response.iter_text():
            buffer += chunk
        for frame in buffer.split("\n\n"):
            if frame.startswith("data: "):
                events.append(json.loads(frame[len("data: "):]))
    return events


class TestCreateRun:
    def test_valid_config_starts_run(self, client):
        response = client.post("/runs", json=fast_config(seed=1))
        assert response.status_code == 201
        body = response.json()
        assert body["run_id"]
        assert wait_status(client, body["run_id"]) == "finished"

    def test_invalid_field_named_in_400(self, client):
        doc = fast_config()
        doc["m"] = 0
        response = client.post("/runs", json=doc)
        assert response.status_code == 400
        assert response.json()["errors"][0]["field"] == "m"

    def test_distinct_run_ids(self, client):
        a = client.post("/runs", json=fast_config(seed=1)).json()["run_id"]
        b = client.post("/runs", json=fast_config(seed=1)).json()["run_id"]
        assert a != b

    def test_unknown_run_404(self, client):
        assert client.get("/runs/nope").status_code == 404
        assert client.get("/runs/nope/metrics").status_code == 404
        assert client.post("/runs/nope/control",
                           json={"command": "pause"}).status_code == 404


class TestEventStream:
    def test_full_replay_of_finished_run(self, client):
        run_id = client.post("/runs", json=fast_config(seed=2)).json()["run_id"]
        wait_status(client, run_id)
        events = collect_events(client, run_id)
        iters = [e for e in events if e["type"] == "iteration"]
        offline = run_experiment(ExperimentConfig(seed=2))
        assert len(iters) == len(offline.records)
        assert [e["iteration"] for e in iters] == list(range(len(iters)))
        assert events[-1]["type"] == "status"
        assert events[-1]["status"] == "finished"
        seqs = [e["seq"] for e in events]
        assert seqs == sorted(seqs)

    def test_subscribe_from_midpoint_has_no_gaps(self, client):
        run_id = client.post("/runs", json=fast_config(seed=3)).json()["run_id"]
        wait_status(client, run_id)
        events = collect_events(client, run_id, from_iteration=50)
        iters = [e["iteration"] for e in events if e["type"] == "iteration"]
        assert iters[0] == 50
        assert iters == list(range(50, 50 + len(iters)))

    def test_two_subscribers_identical(self, client):
        run_id = client.post("/runs", json=fast_config(seed=4)).json()["run_id"]
        wait_status(client, run_id)
        assert collect_events(client, run_id) == collect_events(client, run_id)

    def test_state_change_events_cover_segments(self, client):
        run_id = client.post("/runs", json=fast_config(seed=5)).json()["run_id"]
        wait_status(client, run_id)
        events = collect_events(client, run_id)
        changes = [e for e in events if e["type"] == "state_change"]
        offline = run_experiment(ExperimentConfig(seed=5))
        assert len(changes) == len(offline.segments)
        for change, segment in zip(changes, offline.segments):
            assert change["state"] == segment.state.label
            assert change["cycle"] == segment.cycle
            assert change["iteration"] == segment.start


class TestControls:
    def test_pause_and_resume(self, client):
        doc = fast_config(seed=6)
        doc["pace_hz"] = 200.0
        run_id = client.post("/runs", json=doc).json()["run_id"]
        ack = client.post(f"/runs/{run_id}/control", json={"command": "pause"})
        assert ack.status_code == 200
        assert client.get(f"/runs/{run_id}").json()["status"] == "paused"
        cursor = client.get(f"/runs/{run_id}").json()["cursor"]
        time.sleep(0.1)
        assert client.get(f"/runs/{run_id}").json()["cursor"] == cursor
        assert client.post(f"/runs/{run_id}/control",
                           json={"command": "pause"}).status_code == 409
        assert client.post(f"/runs/{run_id}/control",
                           json={"command": "resume"}).status_code == 200
        wait_status(client, run_id)

    def test_fix_without_disruption_409(self, client):
        doc = fast_config(seed=7, auto_schedule=False, budget_per_cycle=100000)
        doc["pace_hz"] = 500.0
        run_id = client.post("/runs", json=doc).json()["run_id"]
        client.post(f"/runs/{run_id}/control", json={"command": "pause"})
        response = client.post(f"/runs/{run_id}/control",
                               json={"command": "fix_disruption"})
        assert response.status_code == 409

    def test_inject_then_fix_reflects_in_modes(self, client):
        doc = fast_config(seed=8, auto_schedule=False, budget_per_cycle=400)
        doc["pace_hz"] = 1000.0
        run_id = client.post("/runs", json=doc).json()["run_id"]
        client.post(f"/runs/{run_id}/control", json={"command": "pause"})
        ack = client.post(f"/runs/{run_id}/control", json={
            "command": "inject_disruption",
            "disruptor": {"kind": "darkness", "factor": 0.2}}).json()
        start = ack["acknowledged_iteration"]
        client.post(f"/runs/{run_id}/control", json={"command": "resume"})
        time.sleep(0.1)
        client.post(f"/runs/{run_id}/control", json={"command": "pause"})
        fix_ack = client.post(f"/runs/{run_id}/control",
                              json={"command": "fix_disruption"}).json()
        fix_at = fix_ack["acknowledged_iteration"]
        client.post(f"/runs/{run_id}/control", json={"command": "resume"})
        wait_status(client, run_id)
        events = collect_events(client, run_id)
        modes = {e["iteration"]: e["mode"] for e in events
                 if e["type"] == "iteration"}
        assert fix_at > start
        assert all(modes[i] == "normal" for i in range(start))
        assert all(modes[i] == "disrupted" for i in range(start, fix_at))
        assert modes[fix_at] == "normal"

    def test_switch_policy_acknowledged(self, client):
        doc = fast_config(seed=9)
        doc["pace_hz"] = 200.0
        run_id = client.post("/runs", json=doc).json()["run_id"]
        client.post(f"/runs/{run_id}/control", json={"command": "pause"})
        ack = client.post(f"/runs/{run_id}/control", json={
            "command": "switch_policy", "policy": "rl-agent"})
        assert ack.status_code == 200
        client.post(f"/runs/{run_id}/control", json={"command": "resume"})
        wait_status(client, run_id)
        assert client.get(f"/runs/{run_id}").json()["policy"] == "rl-agent"

    def test_unknown_command_400(self, client):
        doc = fast_config(seed=10)
        doc["pace_hz"] = 100.0
        run_id = client.post("/runs", json=doc).json()["run_id"]
        response = client.post(f"/runs/{run_id}/control",
                               json={"command": "dance"})
        assert response.status_code == 400

    def test_control_after_finish_409(self, client):
        run_id = client.post("/runs", json=fast_config(seed=11)).json()["run_id"]
        wait_status(client, run_id)
        response = client.post(f"/runs/{run_id}/control",
                               json={"command": "pause"})
        assert response.status_code == 409


class TestMetricsAndExport:
    def test_metrics_match_offline_run(self, client):
        run_id = client.post("/runs", json=fast_config(seed=12)).json()["run_id"]
        wait_status(client, run_id)
        body = client.get(f"/runs/{run_id}/metrics").json()
        offline = run_experiment(ExperimentConfig(seed=12))
        assert body["acr_threshold"] == pytest.approx(offline.acr_threshold)
        assert len(body["reports"]) == len(offline.metrics)
        for got, want in zip(body["reports"], offline.metrics):
            assert got["cycle"] == want.cycle
            assert got["duration_ratio"] == pytest.approx(want.duration_ratio)
            assert got["co2_mean"] == pytest.approx(want.co2_mean)

    def test_metrics_before_disruption_empty(self, client):
        doc = fast_config(seed=13, auto_schedule=False, budget_per_cycle=40)
        run_id = client.post("/runs", json=doc).json()["run_id"]
        wait_status(client, run_id)
        body = client.get(f"/runs/{run_id}/metrics").json()
        assert body["reports"] == []

    def test_export_identical_to_offline_csv(self, client):
        run_id = client.post("/runs", json=fast_config(seed=14)).json()["run_id"]
        wait_status(client, run_id)
        response = client.get(f"/runs/{run_id}/export.csv")
        assert response.status_code == 200
        offline = run_experiment(ExperimentConfig(seed=14))
        assert response.text == render_iterations_csv(offline.records)

    def test_export_unknown_file_400(self, client):
        run_id = client.post("/runs", json=fast_config(seed=15)).json()["run_id"]
        wait_status(client, run_id)
        assert client.get(f"/runs/{run_id}/export.csv",
                          params={"file": "nope"}).status_code == 400
