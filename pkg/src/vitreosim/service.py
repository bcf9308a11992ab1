"""Live-session streaming service.

One WebSocket connection drives one task session.  The client streams
timestamped input frames; the server ticks the engine, pushes events,
throttled state snapshots (30 Hz in input time), and a final metrics
report.  Every live session is simultaneously appended to a
``*.session.jsonl`` log, so offline replay of the auto-saved log
reproduces the live metrics bit for bit.

Protocol (JSON text frames, tag field ``type``, version ``v``: 1):

    client -> server:  hello, create_session, input_frame, end_session
    server -> client:  session_created, state_snapshot, event, completed, error
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import errors as err
from .config import TaskConfig
from .geometry import CalibrationOffset, Hand, InstrumentKind, map_controller_pose
from .sessionlog import SessionHeader, SessionLog, frame_from_dict, frame_to_dict, _dumps
from .tasks import (
    TaskKind,
    finalize_metrics,
    init_task,
    layout_dict,
    layout_hash,
    make_eye,
    make_rig,
    snapshot_dict,
    tick,
)

PROTOCOL_VERSION = 1
SNAPSHOT_INTERVAL_MS = 33  # ~30 Hz in input-timestamp time


@dataclass
class ServiceConfig:
    task_config: TaskConfig = field(default_factory=TaskConfig)
    log_dir: str = "sessions"
    snapshot_interval_ms: int = SNAPSHOT_INTERVAL_MS


class LiveSession:
    """Engine state plus write-through logging for one connection."""

    def __init__(self, cfg: ServiceConfig, module: TaskKind, seed: int, meta: dict):
        self.cfg = cfg
        self.module = module
        self.session_id = uuid.uuid4().hex[:12]
        self.state = init_task(module, cfg.task_config, seed)
        self.eye = make_eye(cfg.task_config)
        self.rig = make_rig(cfg.task_config, self.eye)
        self.cal = CalibrationOffset.identity()
        self.header = SessionHeader(
            module=module,
            seed=seed,
            config=cfg.task_config,
            participant_id=str(meta.get("participant_id", "anon")),
            group=str(meta.get("group", "novice")),
            age=float(meta.get("age", 0.0)),
            sex=str(meta.get("sex", "f")),
            run_index=int(meta.get("run_index", 1)),
            layout_hash=layout_hash(self.state),
        )
        os.makedirs(cfg.log_dir, exist_ok=True)
        self.log_path = os.path.join(
            cfg.log_dir,
            f"{self.header.participant_id}-run{self.header.run_index}"
            f"-{module.value}-{self.session_id}.session.jsonl",
        )
        self._fh = open(self.log_path, "w", encoding="utf-8", newline="\n")
        self._fh.write(_dumps(self.header.to_dict()) + "\n")
        self._last_snapshot_t: int | None = None

    def feed(self, frame) -> tuple[list, bool, dict | None]:
        """Tick one frame; returns (events, snapshot_due, completed_metrics)."""
        events = tick(self.state, frame, self.rig, self.eye, cal=self.cal)
        self._fh.write(_dumps(frame_to_dict(frame)) + "\n")
        snapshot_due = (
            self._last_snapshot_t is None
            or frame.t_ms - self._last_snapshot_t >= self.cfg.snapshot_interval_ms
        )
        if snapshot_due:
            self._last_snapshot_t = frame.t_ms
        completed = None
        if self.state.completed:
            completed = finalize_metrics(self.state).to_dict()
            self.close()
        return events, snapshot_due, completed

    def snapshot(self, frame) -> dict:
        right_kind = (InstrumentKind.LASER_PROBE if self.module == TaskKind.LASER
                      else InstrumentKind.VITRECTOR)
        right = map_controller_pose(frame.right_pose, self.rig, self.cal,
                                    Hand.RIGHT, self.eye, kind=right_kind)
        left = map_controller_pose(frame.left_pose, self.rig, self.cal,
                                   Hand.LEFT, self.eye)
        return snapshot_dict(self.state, right=right, left=left)

    def finalize_incomplete(self) -> dict:
        metrics = finalize_metrics(self.state, force=True).to_dict()
        self.close()
        return metrics

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()


class SessionRegistry:
    """Append-only record of sessions served by this process."""

    def __init__(self):
        self._lock = threading.Lock()
        self._entries: list[dict] = []

    def add(self, entry: dict) -> None:
        with self._lock:
            self._entries.append(entry)

    def list(self) -> list[dict]:
        with self._lock:
            return list(self._entries)


def _error_msg(code: str, message: str) -> str:
    return json.dumps({"type": "error", "v": PROTOCOL_VERSION,
                       "code": code, "message": message})


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    cfg = config or ServiceConfig()
    app = FastAPI(title="vitreosim")
    registry = SessionRegistry()
    app.state.registry = registry
    app.state.config = cfg

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "v": PROTOCOL_VERSION}

    @app.get("/sessions")
    def sessions():
        return {"sessions": registry.list()}

    @app.get("/sessions/{session_id}/heatmap")
    def session_heatmap(session_id: str):
        """Per-break laser heatmap grids for a finished session (UI panel)."""
        from .analytics import heatmap
        from .sessionlog import read_log, replay

        entry = next((e for e in registry.list()
                      if e["session_id"] == session_id), None)
        if entry is None:
            return {"error": "unknown session"}
        log = read_log(entry["log"])
        if log.header.module != TaskKind.LASER:
            return {"error": "heatmaps exist for laser sessions only"}
        report = replay(log)
        spots = report.module_specific["spot_coordinates"]
        grids = heatmap(spots, log.header.config.laser_break_count,
                        log.header.config.laser_r_out_mm,
                        group=log.header.group)
        peak = max((max(max(row) for row in g.counts) for g in grids), default=0)
        return {
            "session_id": session_id,
            "laser_spots": report.module_specific["laser_spots"],
            "extent_mm": grids[0].extent_mm if grids else 0.0,
            "grids": [
                {
                    "break": g.break_index,
                    "counts": g.counts,
                    "total": g.total,
                    "dropped": g.dropped,
                    "normalized": [[(c / peak if peak else 0.0) for c in row]
                                   for row in g.counts],
                }
                for g in grids
            ],
        }

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session: LiveSession | None = None

        async def send(obj: dict):
            await ws.send_text(json.dumps(obj, separators=(",", ":")))

        async def abort(code: str, message: str):
            await ws.send_text(_error_msg(code, message))
            if session is not None:
                session.close()
                registry.add({"session_id": session.session_id,
                              "log": session.log_path, "outcome": code})
            await ws.close()

        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await abort("BadMessage", "message is not valid JSON")
                    return
                mtype = msg.get("type")

                if mtype == "hello":
                    if msg.get("v") != PROTOCOL_VERSION:
                        await abort("VersionMismatch",
                                    f"protocol v{PROTOCOL_VERSION} required")
                        return

                elif mtype == "create_session":
                    if session is not None:
                        await abort("ProtocolViolation", "session already created")
                        return
                    try:
                        module = TaskKind(msg["module"])
                        session = LiveSession(cfg, module, int(msg["seed"]),
                                              msg.get("participant_meta", {}))
                    except (KeyError, ValueError, err.VitreoSimError) as exc:
                        await abort("InvalidConfig", str(exc))
                        return
                    await send({"type": "session_created", "v": PROTOCOL_VERSION,
                                "session_id": session.session_id,
                                "layout": layout_dict(session.state)})

                elif mtype == "input_frame":
                    if session is None:
                        await abort("ProtocolViolation", "no session created")
                        return
                    try:
                        frame = frame_from_dict(msg["frame"])
                        events, snap_due, completed = session.feed(frame)
                    except err.NonMonotonicTimestamp as exc:
                        await abort("NonMonotonicTimestamp", str(exc))
                        return
                    except err.TaskAlreadyComplete as exc:
                        await abort("TaskAlreadyComplete", str(exc))
                        return
                    except (KeyError, ValueError, err.VitreoSimError) as exc:
                        await abort("BadFrame", str(exc))
                        return
                    for e in events:
                        await send({"type": "event", "v": PROTOCOL_VERSION,
                                    "event": e.to_dict()})
                    if completed is not None:
                        await send({"type": "completed", "v": PROTOCOL_VERSION,
                                    "metrics": completed, "log": session.log_path})
                        registry.add({"session_id": session.session_id,
                                      "log": session.log_path, "outcome": "completed"})
                        await ws.close()
                        return
                    if snap_due:
                        await send({"type": "state_snapshot", "v": PROTOCOL_VERSION,
                                    "snapshot": session.snapshot(frame)})

                elif mtype == "end_session":
                    if session is None:
                        await abort("ProtocolViolation", "no session created")
                        return
                    metrics = session.finalize_incomplete()
                    await send({"type": "completed", "v": PROTOCOL_VERSION,
                                "metrics": metrics, "log": session.log_path})
                    registry.add({"session_id": session.session_id,
                                  "log": session.log_path, "outcome": "ended"})
                    await ws.close()
                    return

                else:
                    await abort("ProtocolViolation", f"unknown message type {mtype!r}")
                    return
        except WebSocketDisconnect:
            if session is not None:
                session.close()
                registry.add({"session_id": session.session_id,
                              "log": session.log_path, "outcome": "disconnected"})

    return app


def serve(host: str, port: int, config: ServiceConfig | None = None):
    """Run the service until interrupted; raises BindFailure if the port is taken."""
    import uvicorn

    app = create_app(config)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise err.BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
