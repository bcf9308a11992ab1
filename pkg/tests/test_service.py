import json

import pytest
from starlette.testclient import TestClient

from vitreosim.service import ServiceConfig, create_app
from vitreosim.sessionlog import frame_to_dict, read_log, replay
from vitreosim.synth import EXPERT, generate_session
from vitreosim.tasks import TaskKind, init_task, layout_dict


@pytest.fixture
def client(tmp_path):
    app = create_app(ServiceConfig(log_dir=str(tmp_path / "sessions")))
    with TestClient(app) as c:
        yield c


def _create(ws, module="navigation", seed=42, meta=None):
    ws.send_text(json.dumps({"type": "hello", "v": 1}))
    ws.send_text(json.dumps({
        "type": "create_session", "module": module, "seed": seed,
        "participant_meta": meta or {"participant_id": "t", "group": "expert",
                                     "age": 40, "sex": "m", "run_index": 1},
    }))
    return json.loads(ws.receive_text())


def _stream_to_completion(ws, frames):
    for f in frames:
        ws.send_text(json.dumps({"type": "input_frame", "frame": frame_to_dict(f)}))
    events, snapshots, completed = [], 0, None
    while completed is None:
        m = json.loads(ws.receive_text())
        if m["type"] == "event":
            events.append(m["event"])
        elif m["type"] == "state_snapshot":
            snapshots += 1
        elif m["type"] == "completed":
            completed = m
        else:
            raise AssertionError(m)
    return events, snapshots, completed


def test_created_layout_matches_init_task(client, config):
    with client.websocket_connect("/ws") as ws:
        created = _create(ws, module="navigation", seed=42)
        assert created["type"] == "session_created"
        want = layout_dict(init_task(TaskKind.NAVIGATION, config, 42))
        assert created["layout"] == json.loads(json.dumps(want))


def test_streamed_session_equals_offline_replay(client):
    log = generate_session(TaskKind.NAVIGATION, EXPERT, seed=11, run_index=1)
    with client.websocket_connect("/ws") as ws:
        _create(ws, module="navigation", seed=11)
        events, snapshots, completed = _stream_to_completion(ws, log.frames)
    assert snapshots > 0
    offline = replay(read_log(completed["log"]))
    assert completed["metrics"] == offline.to_dict()
    # the live event stream equals the generator's recorded stream
    assert events == [e.to_dict() for e in log.events]


def test_non_monotonic_frame_aborts(client):
    log = generate_session(TaskKind.TREMOR, EXPERT, seed=2, run_index=1)
    f0 = frame_to_dict(log.frames[0])
    with client.websocket_connect("/ws") as ws:
        _create(ws, module="tremor", seed=2)
        ws.send_text(json.dumps({"type": "input_frame", "frame": f0}))
        ws.send_text(json.dumps({"type": "input_frame", "frame": f0}))
        msgs = []
        while True:
            try:
                msgs.append(json.loads(ws.receive_text()))
            except Exception:
                break
        assert any(m["type"] == "error" and m["code"] == "NonMonotonicTimestamp"
                   for m in msgs)


def test_end_session_force_finalizes(client):
    log = generate_session(TaskKind.TREMOR, EXPERT, seed=2, run_index=1)
    with client.websocket_connect("/ws") as ws:
        _create(ws, module="tremor", seed=2)
        for f in log.frames[:20]:
            ws.send_text(json.dumps({"type": "input_frame", "frame": frame_to_dict(f)}))
        ws.send_text(json.dumps({"type": "end_session"}))
        completed = None
        while completed is None:
            m = json.loads(ws.receive_text())
            if m["type"] == "completed":
                completed = m
    assert completed["metrics"]["completed"] is False


def test_frame_before_create_rejected(client):
    log = generate_session(TaskKind.TREMOR, EXPERT, seed=2, run_index=1)
    with client.websocket_connect("/ws") as ws:
        ws.send_text(json.dumps({"type": "input_frame",
                                 "frame": frame_to_dict(log.frames[0])}))
        m = json.loads(ws.receive_text())
        assert m["type"] == "error" and m["code"] == "ProtocolViolation"


def test_bad_module_rejected(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_text(json.dumps({"type": "create_session", "module": "nope", "seed": 1}))
        m = json.loads(ws.receive_text())
        assert m["type"] == "error" and m["code"] == "InvalidConfig"


def test_concurrent_sessions_are_isolated(client):
    log = generate_session(TaskKind.TREMOR, EXPERT, seed=6, run_index=1)
    with client.websocket_connect("/ws") as a, client.websocket_connect("/ws") as b:
        _create(a, module="tremor", seed=6)
        _create(b, module="tremor", seed=6)
        # interleave the same inputs into both sessions
        for f in log.frames:
            fd = json.dumps({"type": "input_frame", "frame": frame_to_dict(f)})
            a.send_text(fd)
            b.send_text(fd)
        _, _, done_a = _stream_to_completion(a, [])
        _, _, done_b = _stream_to_completion(b, [])
    assert done_a["metrics"] == done_b["metrics"]
    assert done_a["log"] != done_b["log"]


def test_heatmap_endpoint_totals_match_metrics(client):
    log = generate_session(TaskKind.LASER, EXPERT, seed=9, run_index=1)
    with client.websocket_connect("/ws") as ws:
        _create(ws, module="laser", seed=9)
        _, _, completed = _stream_to_completion(ws, log.frames)
    sid = client.get("/sessions").json()["sessions"][0]["session_id"]
    doc = client.get(f"/sessions/{sid}/heatmap").json()
    assert doc["laser_spots"] == completed["metrics"]["module_specific"]["laser_spots"]
    binned = sum(g["total"] for g in doc["grids"])
    dropped = sum(g["dropped"] for g in doc["grids"])
    assert binned + dropped == doc["laser_spots"]
    assert client.get("/sessions/nope/heatmap").json() == {"error": "unknown session"}


def test_health_and_registry(client):
    assert client.get("/healthz").json()["ok"] is True
    log = generate_session(TaskKind.TREMOR, EXPERT, seed=2, run_index=1)
    with client.websocket_connect("/ws") as ws:
        _create(ws, module="tremor", seed=2)
        _stream_to_completion(ws, log.frames)
    sessions = client.get("/sessions").json()["sessions"]
    assert len(sessions) == 1 and sessions[0]["outcome"] == "completed"
