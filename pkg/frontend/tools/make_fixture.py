"""Regenerate the dashboard test fixtures from a real backend run.

Usage: python frontend/tools/make_fixture.py
Writes run_events.json (the full event stream of a finished seed-42 run) and
segments.csv (the matching export) under frontend/tests/fixtures/.
"""

import json
import time
from pathlib import Path

from fastapi.testclient import TestClient

from caisim.config import ExperimentConfig
from caisim.service import create_app

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def main():
    client = TestClient(create_app())
    doc = ExperimentConfig(seed=42, policy="internal").to_dict()
    doc["pace_hz"] = 0.0
    run_id = client.post("/runs", json=doc).json()["run_id"]
    while client.get(f"/runs/{run_id}").json()["status"] != "finished":
        time.sleep(0.01)

    events = []
    with client.stream("GET", f"/runs/{run_id}/events",
                       params={"from": 0}) as response:
        buffer = "".join(response.iter_text())
    for frame in buffer.split("\n\n"):
        if frame.startswith("data: "):
            events.append(json.loads(frame[len("data: "):]))

    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "run_events.json").write_text(json.dumps(events, indent=1) + "\n")
    segments = client.get(f"/runs/{run_id}/export.csv",
                          params={"file": "segments"}).text
    (OUT / "segments.csv").write_text(segments, newline="")
    print(f"wrote {len(events)} events and segments.csv to {OUT}")


if __name__ == "__main__":
    main()
