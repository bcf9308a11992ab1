import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vitreosim.config import TaskConfig
from vitreosim.errors import (
    CorruptLog,
    DuplicateSession,
    IncompleteSession,
    SeedMismatch,
    VersionMismatch,
)
from vitreosim.geometry import Pose
from vitreosim.sessionlog import (
    METRIC_NAMES,
    MetricsTable,
    SessionHeader,
    SessionLog,
    export_metrics,
    frame_from_dict,
    frame_to_dict,
    read_log,
    replay,
    session_metric_rows,
    write_log,
    write_metrics_json,
)
from vitreosim.synth import EXPERT, NOVICE, generate_session
from vitreosim.tasks import MetricsReport, TaskKind, TickInput

wire_float = st.floats(allow_nan=False, allow_infinity=False, width=64)


def _header(module=TaskKind.NAVIGATION, seed=1, **kw):
    defaults = dict(participant_id="p1", group="novice", age=28.0, sex="f", run_index=1)
    defaults.update(kw)
    return SessionHeader(module=module, seed=seed, config=TaskConfig(), **defaults)


@given(st.lists(st.tuples(wire_float, wire_float, wire_float,
                          wire_float, wire_float), min_size=1, max_size=40))
@settings(max_examples=60)
def test_frame_roundtrip_bit_exact_floats(tmp_path_factory, raws):
    frames = []
    for i, (a, b, c, d, e) in enumerate(raws):
        frames.append(TickInput(
            t_ms=i * 7 + 1,
            left_pose=Pose(position=(a, b, c)),
            right_pose=Pose(position=(d, e, a)),
            grip_right=bool(i % 2),
            button_x_left=bool(i % 3 == 0),
            joystick_right=(max(-1.0, min(1.0, b)), 0.0),
        ))
    log = SessionLog(header=_header(), frames=frames)
    path = str(tmp_path_factory.mktemp("logs") / "t.session.jsonl")
    write_log(log, path)
    back = read_log(path)
    assert back.frames == frames
    # write -> read -> write is byte identical
    path2 = path + ".2"
    write_log(back, path2)
    assert open(path, "rb").read() == open(path2, "rb").read()


def test_empty_frames_log_roundtrip_and_incomplete_replay(tmp_path):
    log = SessionLog(header=_header())
    p = str(tmp_path / "empty.session.jsonl")
    write_log(log, p)
    back = read_log(p)
    assert back.frames == [] and back.events == []
    report = replay(back)
    assert not report.completed
    assert report.completion_time_s == 0.0


def test_decreasing_timestamp_reports_line_number(tmp_path):
    log = SessionLog(header=_header(), frames=[
        TickInput(t_ms=10, left_pose=Pose(), right_pose=Pose()),
        TickInput(t_ms=30, left_pose=Pose(), right_pose=Pose()),
    ])
    p = str(tmp_path / "bad.session.jsonl")
    write_log(log, p)
    lines = open(p).read().splitlines()
    doc = json.loads(lines[2])
    doc["t_ms"] = 5
    lines[2] = json.dumps(doc, separators=(",", ":"), sort_keys=True)
    open(p, "w").write("\n".join(lines) + "\n")
    with pytest.raises(CorruptLog) as exc:
        read_log(p)
    assert exc.value.line_number == 3


def test_bad_json_and_unknown_type_rejected(tmp_path):
    p = str(tmp_path / "x.session.jsonl")
    write_log(SessionLog(header=_header()), p)
    open(p, "a").write("{nope\n")
    with pytest.raises(CorruptLog):
        read_log(p)
    write_log(SessionLog(header=_header()), p)
    open(p, "a").write('{"type":"mystery"}\n')
    with pytest.raises(CorruptLog):
        read_log(p)


def test_version_mismatch(tmp_path):
    p = str(tmp_path / "v.session.jsonl")
    write_log(SessionLog(header=_header()), p)
    lines = open(p).read().splitlines()
    doc = json.loads(lines[0])
    doc["v"] = 99
    lines[0] = json.dumps(doc, separators=(",", ":"), sort_keys=True)
    open(p, "w").write("\n".join(lines) + "\n")
    with pytest.raises(VersionMismatch):
        read_log(p)


def test_replay_deterministic_and_matches_live(tmp_path):
    log = generate_session(TaskKind.NAVIGATION, EXPERT, seed=21, run_index=2)
    p = str(tmp_path / "s.session.jsonl")
    write_log(log, p)
    back = read_log(p)
    r1 = replay(back)
    r2 = replay(back)
    assert r1 == r2
    assert r1.completed
    # events regenerate identically to the live stream stored in the log
    _, events = replay(back, collect_events=True)
    assert events == log.events


def test_replay_seed_tamper_raises(tmp_path):
    # navigation layouts are seed-dependent, so the stored hash catches tampering
    log = generate_session(TaskKind.NAVIGATION, EXPERT, seed=5, run_index=1)
    log.header.seed = 6
    with pytest.raises(SeedMismatch):
        replay(log)


def test_export_metrics_row_schema():
    log = generate_session(TaskKind.NAVIGATION, EXPERT, seed=31, run_index=1)
    table = export_metrics([log])
    assert len(table.rows) == 3
    assert [r["metric_name"] for r in table.rows] == [
        "efficiency_s", "safety_touches", "sphere_exits"]
    assert all(math.isfinite(r["value"]) for r in table.rows)


def test_export_metrics_counts_per_module():
    # schema count oracle: nav 3 + tremor 5 + peeling 3 + laser 3 = 14 per run
    per_module = {k: len(v) for k, v in METRIC_NAMES.items()}
    assert sum(per_module.values()) == 14


def test_export_metrics_duplicate_rejected():
    log = generate_session(TaskKind.TREMOR, EXPERT, seed=5, run_index=1)
    with pytest.raises(DuplicateSession):
        export_metrics([log, log])


def test_export_metrics_incomplete_listed():
    log = generate_session(TaskKind.TREMOR, EXPERT, seed=5, run_index=1)
    partial = SessionLog(header=log.header, frames=log.frames[: len(log.frames) // 4])
    with pytest.raises(IncompleteSession) as exc:
        export_metrics([partial])
    assert partial.session_id in exc.value.session_ids


def test_metrics_table_csv_roundtrip(tmp_path):
    logs = [generate_session(TaskKind.NAVIGATION, NOVICE, seed=61, run_index=r)
            for r in (1, 2)]
    table = export_metrics(logs)
    p = str(tmp_path / "m.csv")
    table.to_csv(p)
    back = MetricsTable.from_csv(p)
    assert back.rows == table.rows


def test_metrics_json_roundtrip(tmp_path):
    log = generate_session(TaskKind.LASER, EXPERT, seed=3, run_index=1)
    report = replay(log)
    p = str(tmp_path / "m.json")
    write_metrics_json(report, p, header=log.header)
    doc = json.load(open(p))
    assert MetricsReport.from_dict(doc) == report
    assert doc["session"]["participant_id"] == log.header.participant_id


def test_calibration_offsets_roundtrip_in_header(tmp_path):
    from vitreosim.geometry import CalibrationOffset, q_normalize

    rest = Pose((1.0, -2.0, 0.5), q_normalize((0.9, 0.1, 0.2, 0.1)))
    cal = CalibrationOffset.from_rest_poses(rest, rest)
    header = _header()
    header.calibration = cal
    p = str(tmp_path / "c.session.jsonl")
    write_log(SessionLog(header=header), p)
    back = read_log(p)
    assert back.header.calibration == cal
