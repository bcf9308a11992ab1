"""Session logging, bit-exact replay, and long-format metrics export.

Log format: line-delimited JSON.  The first line is the header, every
following line is one controller frame (events may be appended; they are
regenerable and ignored on replay).  Floats are written with Python's
shortest round-trip repr, so read(write(x)) == x including float bits.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

from .config import TaskConfig
from .errors import (
    CorruptLog,
    DuplicateSession,
    IncompleteSession,
    SeedMismatch,
    VersionMismatch,
)
from .events import TaskEvent
from .geometry import CalibrationOffset, Pose
from .tasks import (
    MetricsReport,
    TaskKind,
    TickInput,
    finalize_metrics,
    init_task,
    layout_hash,
    make_eye,
    make_rig,
    tick,
)

FORMAT_VERSION = 1

FrameRecord = TickInput  # session frames are exactly the engine tick input

METRIC_NAMES: dict[TaskKind, list[str]] = {
    TaskKind.NAVIGATION: ["efficiency_s", "safety_touches", "sphere_exits"],
    TaskKind.TREMOR: ["efficiency_s", "safety_touches", "sphere_exits",
                      "mean_dev_mm", "max_dev_mm"],
    TaskKind.PEELING: ["efficiency_s", "safety_touches", "grasps"],
    TaskKind.LASER: ["efficiency_s", "safety_touches", "laser_spots"],
}


@dataclass
class SessionHeader:
    module: TaskKind
    seed: int
    config: TaskConfig
    participant_id: str
    group: str                 # "novice" | "expert"
    age: float
    sex: str                   # "f" | "m"
    run_index: int
    layout_hash: str = ""
    calibration: CalibrationOffset = field(default_factory=CalibrationOffset.identity)

    def to_dict(self) -> dict:
        return {
            "type": "header",
            "v": FORMAT_VERSION,
            "module": self.module.value,
            "seed": self.seed,
            "config": self.config.to_dict(),
            "participant_id": self.participant_id,
            "group": self.group,
            "age": self.age,
            "sex": self.sex,
            "run_index": self.run_index,
            "layout_hash": self.layout_hash,
            "calibration": {
                "left": _pose_to_list(self.calibration.pose_offset_left),
                "right": _pose_to_list(self.calibration.pose_offset_right),
            },
        }

    @staticmethod
    def from_dict(d: dict) -> "SessionHeader":
        cal = d.get("calibration")
        calibration = (
            CalibrationOffset(
                pose_offset_left=_pose_from_list(cal["left"]),
                pose_offset_right=_pose_from_list(cal["right"]),
            )
            if cal
            else CalibrationOffset.identity()
        )
        return SessionHeader(
            module=TaskKind(d["module"]),
            seed=int(d["seed"]),
            config=TaskConfig.from_dict(d["config"]),
            participant_id=str(d["participant_id"]),
            group=str(d["group"]),
            age=float(d["age"]),
            sex=str(d["sex"]),
            run_index=int(d["run_index"]),
            layout_hash=str(d.get("layout_hash", "")),
            calibration=calibration,
        )


@dataclass
class SessionLog:
    header: SessionHeader
    frames: list[TickInput] = field(default_factory=list)
    events: list[TaskEvent] = field(default_factory=list)

    @property
    def session_id(self) -> str:
        h = self.header
        return f"{h.participant_id}/run{h.run_index}/{h.module.value}"


def _pose_to_list(p: Pose) -> list[float]:
    return [*p.position, *p.orientation]


def _pose_from_list(v: list) -> Pose:
    if len(v) != 7:
        raise CorruptLog(f"pose must have 7 floats, got {len(v)}")
    return Pose(position=(float(v[0]), float(v[1]), float(v[2])),
                orientation=(float(v[3]), float(v[4]), float(v[5]), float(v[6])))


def frame_to_dict(f: TickInput) -> dict:
    return {
        "type": "frame",
        "t_ms": f.t_ms,
        "left": _pose_to_list(f.left_pose),
        "right": _pose_to_list(f.right_pose),
        "grip": f.grip_right,
        "x": f.button_x_left,
        "js": [f.joystick_right[0], f.joystick_right[1]],
    }


def frame_from_dict(d: dict) -> TickInput:
    return TickInput(
        t_ms=int(d["t_ms"]),
        left_pose=_pose_from_list(d["left"]),
        right_pose=_pose_from_list(d["right"]),
        grip_right=bool(d["grip"]),
        button_x_left=bool(d["x"]),
        joystick_right=(float(d["js"][0]), float(d["js"][1])),
    )


def _dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True)


def write_log(log: SessionLog, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dumps(log.header.to_dict()) + "\n")
        for f in log.frames:
            fh.write(_dumps(frame_to_dict(f)) + "\n")
        for e in log.events:
            fh.write(_dumps({"type": "event", "event": e.to_dict()}) + "\n")


def read_log(path: str) -> SessionLog:
    with open(path, "r", encoding="utf-8") as fh:
        header = None
        frames: list[TickInput] = []
        events: list[TaskEvent] = []
        last_t = None
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptLog(f"invalid JSON: {exc}", line_number=lineno) from exc
            kind = d.get("type")
            if lineno == 1:
                if kind != "header":
                    raise CorruptLog("first line must be the session header", line_number=1)
                if d.get("v") != FORMAT_VERSION:
                    raise VersionMismatch(f"log version {d.get('v')!r}, expected {FORMAT_VERSION}")
                try:
                    header = SessionHeader.from_dict(d)
                except (KeyError, ValueError) as exc:
                    raise CorruptLog(f"bad header: {exc}", line_number=1) from exc
                continue
            if kind == "frame":
                try:
                    f = frame_from_dict(d)
                except (KeyError, ValueError, TypeError) as exc:
                    raise CorruptLog(f"bad frame: {exc}", line_number=lineno) from exc
                if last_t is not None and f.t_ms <= last_t:
                    raise CorruptLog(
                        f"t_ms {f.t_ms} not after {last_t}", line_number=lineno)
                last_t = f.t_ms
                frames.append(f)
            elif kind == "event":
                try:
                    events.append(TaskEvent.from_dict(d["event"]))
                except (KeyError, TypeError) as exc:
                    raise CorruptLog(f"bad event: {exc}", line_number=lineno) from exc
            else:
                raise CorruptLog(f"unknown record type {kind!r}", line_number=lineno)
        if header is None:
            raise CorruptLog("empty log", line_number=1)
        return SessionLog(header=header, frames=frames, events=events)


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------

def replay(log: SessionLog, collect_events: bool = False):
    """Re-run a recorded session; returns MetricsReport (and events if asked).

    Identical to live execution of the same inputs.  Frames after task
    completion are ignored.  Incomplete sessions are force-finalized and
    flagged via ``completed=False``.
    """
    header = log.header
    state = init_task(header.module, header.config, header.seed)
    if header.layout_hash and layout_hash(state) != header.layout_hash:
        raise SeedMismatch(
            f"layout hash for seed {header.seed} does not match the header")
    eye = make_eye(header.config)
    rig = make_rig(header.config, eye)
    events: list[TaskEvent] = []
    for f in log.frames:
        if state.completed:
            break
        out = tick(state, f, rig, eye, cal=header.calibration)
        if collect_events:
            events.extend(out)
    report = finalize_metrics(state, force=not state.completed)
    return (report, events) if collect_events else report


def replay_file(path: str):
    return replay(read_log(path))


# ---------------------------------------------------------------------------
# metrics table
# ---------------------------------------------------------------------------

_TABLE_FIELDS = ["participant_id", "group", "age", "sex", "run_index",
                 "module", "metric_name", "value"]


@dataclass
class MetricsTable:
    """Long-format metrics: one row per (session, metric)."""

    rows: list[dict] = field(default_factory=list)

    def values(self, module: str, metric: str, group: str | None = None,
               run_index: int | None = None) -> list[float]:
        out = []
        for r in self.rows:
            if r["module"] != module or r["metric_name"] != metric:
                continue
            if group is not None and r["group"] != group:
                continue
            if run_index is not None and r["run_index"] != run_index:
                continue
            out.append(r["value"])
        return out

    def to_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=_TABLE_FIELDS)
            w.writeheader()
            w.writerows(self.rows)

    @staticmethod
    def from_csv(path: str) -> "MetricsTable":
        rows = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for r in csv.DictReader(fh):
                rows.append({
                    "participant_id": r["participant_id"],
                    "group": r["group"],
                    "age": float(r["age"]),
                    "sex": r["sex"],
                    "run_index": int(r["run_index"]),
                    "module": r["module"],
                    "metric_name": r["metric_name"],
                    "value": float(r["value"]),
                })
        return MetricsTable(rows=rows)

    def to_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"rows": self.rows}, fh, separators=(",", ":"), sort_keys=True)


def session_metric_rows(header: SessionHeader, report: MetricsReport) -> list[dict]:
    names = METRIC_NAMES[header.module]
    values = {
        "efficiency_s": report.completion_time_s,
        "safety_touches": float(report.retinal_touches),
    }
    for k, v in report.module_specific.items():
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            values[k] = float(v)
    return [
        {
            "participant_id": header.participant_id,
            "group": header.group,
            "age": header.age,
            "sex": header.sex,
            "run_index": header.run_index,
            "module": header.module.value,
            "metric_name": name,
            "value": values[name],
        }
        for name in names
    ]


def export_metrics(logs: list[SessionLog]) -> MetricsTable:
    """Replay completed sessions into a long-format metrics table."""
    incomplete = []
    reports: list[tuple[SessionHeader, MetricsReport]] = []
    seen: set[tuple[str, int, str]] = set()
    for log in logs:
        key = (log.header.participant_id, log.header.run_index, log.header.module.value)
        if key in seen:
            raise DuplicateSession(f"duplicate session {log.session_id}")
        seen.add(key)
        report = replay(log)
        if not report.completed:
            incomplete.append(log.session_id)
            continue
        reports.append((log.header, report))
    if incomplete:
        raise IncompleteSession(incomplete)
    rows: list[dict] = []
    for header, report in reports:
        rows.extend(session_metric_rows(header, report))
    rows.sort(key=lambda r: (r["participant_id"], r["run_index"], r["module"],
                             METRIC_NAMES[TaskKind(r["module"])].index(r["metric_name"])))
    return MetricsTable(rows=rows)


def write_metrics_json(report: MetricsReport, path: str, header: SessionHeader | None = None) -> None:
    doc = report.to_dict()
    if header is not None:
        doc["session"] = {
            "participant_id": header.participant_id,
            "group": header.group,
            "age": header.age,
            "sex": header.sex,
            "run_index": header.run_index,
            "seed": header.seed,
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"), sort_keys=True)
