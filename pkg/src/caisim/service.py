"""HTTP control plane for live runs: create and pace a run, stream its
events, steer it (policy switch, disruption injection, pause/resume), and
fetch metrics or CSV exports.

Each run owns one worker thread that applies queued control commands at
iteration boundaries, so commands never take effect mid-iteration. Event
history is kept per run; subscribers replay from any iteration and then
follow live over a server-push text stream with one JSON event per frame.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .config import ConfigError, ExperimentConfig, from_dict
from .resilience import SystemState
from .runner import (ExperimentRun, render_iterations_csv, render_metrics_csv,
                     render_segments_csv)

_EXPORTS = {
    "iterations": lambda result: render_iterations_csv(result.records),
    "metrics": lambda result: render_metrics_csv(result.metrics),
    "segments": lambda result: render_segments_csv(result.segments),
}


class RunSession:
    """One live experiment plus its event history and worker thread."""

    def __init__(self, run_id: str, config: ExperimentConfig):
        self.run_id = run_id
        self.config = config
        self.run = ExperimentRun(config)
        self.status = "configured"
        self.events: list[dict] = []
        self.error: str | None = None
        self._lock = threading.Lock()
        self._wake = threading.Condition(self._lock)
        self._commands: list[dict] = []
        self._last_state: SystemState | None = None
        self._last_cycle = -1
        self._metrics_count = 0
        self._thread = threading.Thread(target=self._loop, daemon=True)

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        with self._lock:
            self.status = "running"
            self._emit({"type": "status", "status": "running"})
        self._thread.start()

    def _loop(self) -> None:
        pace = self.config.pace_hz
        delay = 0.0 if pace <= 0 else 1.0 / pace
        try:
            while True:
                with self._lock:
                    while self.status == "paused":
                        self._wake.wait()
                    if self.status != "running":
                        return
                    self._apply_commands()
                    record = self.run.step()
                    if record is None:
                        self.status = "finished"
                        self._emit({"type": "status", "status": "finished"})
                        self._wake.notify_all()
                        return
                    self._emit_iteration(record)
                    self._wake.notify_all()
                if delay:
                    time.sleep(delay)
        except Exception as exc:  # surface run crashes to subscribers
            with self._lock:
                self.status = "failed"
                self.error = str(exc)
                self._emit({"type": "status", "status": "failed",
                            "error": str(exc)})
                self._wake.notify_all()

    def _apply_commands(self) -> None:
        commands, self._commands = self._commands, []
        for cmd in commands:
            kind = cmd["command"]
            if kind == "switch_policy":
                self.run.set_policy(cmd["policy"])
            elif kind == "inject_disruption":
                self.run.inject_disruption(cmd.get("disruptor"))
            elif kind == "fix_disruption":
                self.run.fix_disruption()

    def _emit(self, event: dict) -> None:
        event["seq"] = len(self.events)
        event.setdefault("iteration", self.run.next_iteration)
        self.events.append(event)

    def _emit_iteration(self, record) -> None:
        state = self.run.tracker.current
        cycle = self.run.tracker.cycle
        payload = {f: getattr(record, f) for f in record.FIELDS}
        self._emit({"type": "iteration", **payload})
        if state is not self._last_state or cycle != self._last_cycle:
            threshold = self.run.tracker.acr_threshold
            self._emit({"type": "state_change", "iteration": record.iteration,
                        "state": state.label, "cycle": cycle,
                        "acr_threshold": threshold if threshold > 0 else None})
            self._last_state = state
            self._last_cycle = cycle
            reports = self.run.result().metrics
            if len(reports) != self._metrics_count:
                self._metrics_count = len(reports)
                self._emit({"type": "metrics", "iteration": record.iteration,
                            "reports": [vars(m) for m in reports]})

    # -- control -----------------------------------------------------------

    def submit(self, command: dict) -> int:
        with self._lock:
            if self.status not in ("running", "paused"):
                raise InvalidRunState(f"run is {self.status}")
            kind = command.get("command")
            if kind == "pause":
                if self.status != "running":
                    raise InvalidRunState("run is not running")
                self.status = "paused"
                self._emit({"type": "status", "status": "paused"})
                return self.run.next_iteration
            if kind == "resume":
                if self.status != "paused":
                    raise InvalidRunState("run is not paused")
                self.status = "running"
                self._emit({"type": "status", "status": "running"})
                self._wake.notify_all()
                return self.run.next_iteration
            if kind == "switch_policy":
                if command.get("policy") not in ("internal", "one-agent",
                                                 "two-agent", "rl-agent"):
                    raise ValueError("unknown policy")
            elif kind == "inject_disruption":
                if self.run.disrupted:
                    raise InvalidRunState("a disruption is already active")
            elif kind == "fix_disruption":
                if not self.run.disrupted:
                    raise InvalidRunState("no active disruption")
            else:
                raise ValueError(f"unknown command {kind!r}")
            self._commands.append(command)
            return self.run.next_iteration

    # -- reads -------------------------------------------------------------

    def handle(self) -> dict:
        with self._lock:
            return {
                "run_id": self.run_id,
                "status": self.status,
                "cursor": self.run.next_iteration - 1,
                "policy": self.run.policy_name,
                "disrupted": self.run.disrupted,
                "error": self.error,
                "config": self.config.to_dict(),
            }

    def snapshot_result(self):
        with self._lock:
            return self.run.result()

    def subscribe(self, from_iteration: int):
        """Yield events in order from the given iteration, then follow live."""
        cursor = 0
        while True:
            with self._lock:
                while cursor >= len(self.events):
                    if self.status in ("finished", "failed"):
                        return
                    self._wake.wait(timeout=1.0)
                batch = self.events[cursor:]
                cursor = len(self.events)
            for event in batch:
                if event.get("iteration", 0) >= from_iteration:
                    yield event


class InvalidRunState(RuntimeError):
    pass


class RunManager:
    def __init__(self):
        self._sessions: dict[str, RunSession] = {}
        self._lock = threading.Lock()

    def create(self, config: ExperimentConfig) -> RunSession:
        run_id = uuid.uuid4().hex[:12]
        session = RunSession(run_id, config)
        with self._lock:
            self._sessions[run_id] = session
        session.start()
        return session

    def get(self, run_id: str) -> RunSession:
        with self._lock:
            session = self._sessions.get(run_id)
        if session is None:
            raise KeyError(run_id)
        return session


def create_app(manager: RunManager | None = None, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="caisim control plane")
    mgr = manager or RunManager()
    app.state.manager = mgr

    def _session(run_id: str) -> RunSession:
        try:
            return mgr.get(run_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")

    @app.post("/runs", status_code=201)
    async def create_run(request: Request):
        doc = await request.json()
        try:
            config = from_dict(doc)
        except ConfigError as exc:
            return JSONResponse(status_code=400, content={
                "errors": [{"field": exc.field, "message": str(exc)}]})
        except (TypeError, ValueError) as exc:
            return JSONResponse(status_code=400, content={
                "errors": [{"field": "", "message": str(exc)}]})
        session = mgr.create(config)
        return {"run_id": session.run_id, "status": session.status}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        return _session(run_id).handle()

    @app.post("/runs/{run_id}/control")
    async def control_run(run_id: str, request: Request):
        session = _session(run_id)
        command = await request.json()
        try:
            iteration = session.submit(command)
        except InvalidRunState as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"acknowledged_iteration": iteration}

    @app.get("/runs/{run_id}/events")
    def stream_events(run_id: str, request: Request):
        session = _session(run_id)
        try:
            from_iteration = int(request.query_params.get("from", 0))
        except ValueError:
            raise HTTPException(status_code=400, detail="from must be an integer")

        def frames():
            for event in session.subscribe(from_iteration):
                yield f"data: {json.dumps(event)}\n\n"

        return StreamingResponse(frames(), media_type="text/event-stream")

    @app.get("/runs/{run_id}/metrics")
    def get_metrics(run_id: str):
        session = _session(run_id)
        result = session.snapshot_result()
        return {
            "acr_threshold": result.acr_threshold,
            "reports": [vars(m) for m in result.metrics],
            "recovered": {str(k): v for k, v in result.recovered.items()},
        }

    @app.get("/runs/{run_id}/export.csv")
    def export_csv(run_id: str, file: str = "iterations"):
        if file not in _EXPORTS:
            raise HTTPException(status_code=400,
                                detail=f"file must be one of {sorted(_EXPORTS)}")
        session = _session(run_id)
        result = session.snapshot_result()
        text = _EXPORTS[file](result)
        return PlainTextResponse(text, media_type="text/csv", headers={
            "Content-Disposition": f'attachment; filename="{file}.csv"'})

    ui = ui_dir or os.environ.get("CAISIM_UI_DIR")
    if ui and Path(ui).is_dir():
        app.mount("/ui", StaticFiles(directory=ui, html=True), name="ui")

    return app
