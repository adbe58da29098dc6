"""Live session server: frame stream, instruction intake, broadcast semantics."""

import json
import socket
import threading
import time

import pytest
import torch
import uvicorn
from websockets.sync.client import connect as ws_connect

from icco.checkpoint import save_checkpoint
from icco.config import TrainConfig
from icco.models import Models
from icco.serve import LiveSession, build_app

TICK_HZ = 50.0


@pytest.fixture(scope="module")
def checkpoint_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "ckpt.pt"
    cfg = TrainConfig(variant="ICCO", seed=5, episodes=1)
    torch.manual_seed(5)
    models = Models(cfg)
    targets = Models(cfg)
    targets.sync_from(models)
    save_checkpoint(path, models, targets, None, {"updates": 0})
    return path


@pytest.fixture(scope="module")
def server(checkpoint_path):
    session = LiveSession(checkpoint_path, translator_kind="mock", tick_hz=TICK_HZ, seed=99)
    app = build_app(session)
    port = _free_port()
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    srv = uvicorn.Server(config)
    thread = threading.Thread(target=srv.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not srv.started:
        if time.time() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.02)
    yield f"ws://127.0.0.1:{port}/ws", session
    srv.should_exit = True
    thread.join(timeout=5)


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def recv_json(ws, timeout=5.0):
    return json.loads(ws.recv(timeout=timeout))


def recv_until(ws, predicate, timeout=5.0, max_messages=500):
    deadline = time.time() + timeout
    for _ in range(max_messages):
        remaining = deadline - time.time()
        if remaining <= 0:
            break
        msg = recv_json(ws, timeout=remaining)
        if predicate(msg):
            return msg
    raise AssertionError("expected message not received")


def test_hello_and_frames(server):
    url, _ = server
    with ws_connect(url) as ws:
        hello = recv_json(ws)
        assert hello["type"] == "hello"
        assert hello["v"] == 1
        assert hello["scenario"]["n_agents"] == 3
        f1 = recv_until(ws, lambda m: m["type"] == "frame")
        f2 = recv_until(ws, lambda m: m["type"] == "frame")
        assert f2["tick"] > f1["tick"]  # monotone ticks
        assert len(f1["agents"]) == 3
        assert len(f1["resources"]) == 6
        assert len(f1["waypoints"]) == 3
        assert f1["instruction"]["source"] == "random-walk"


def test_instruction_applied_within_refresh_interval(server):
    url, session = server
    with ws_connect(url) as ws:
        recv_json(ws)  # hello
        ws.send(json.dumps({"type": "instruct", "id": "t1", "text": "Gather Center"}))
        status = recv_until(ws, lambda m: m["type"] == "instruction_status" and m["id"] == "t1", timeout=10)
        assert status["status"] == "applied"
        frame = recv_until(ws, lambda m: m["type"] == "frame" and m["instruction"]["text"] == "Gather Center")
        # applied no later than one refresh interval after the status tick
        assert frame["tick"] - status["tick"] <= session.cfg.refresh_interval
        # mock rule: all waypoint sequences terminate at the origin
        for wps in frame["waypoints"]:
            assert wps[-1] == [0.0, 0.0]


def test_each_benchmark_instruction_applies(server):
    url, _ = server
    expectations = {
        "Go Right": lambda wps: all(abs(w[-1][0] - 2.75) < 1e-9 for w in wps),
        "Move Top": lambda wps: all(abs(w[-1][1] - 2.75) < 1e-9 for w in wps),
        "Spread Out": lambda wps: len({(round(w[-1][0], 3), round(w[-1][1], 3)) for w in wps}) == 3,
        "Gather Center": lambda wps: all(w[-1] == [0.0, 0.0] for w in wps),
    }
    with ws_connect(url) as ws:
        recv_json(ws)
        for i, (text, check) in enumerate(expectations.items()):
            ws.send(json.dumps({"type": "instruct", "id": f"e{i}", "text": text}))
            status = recv_until(
                ws, lambda m: m["type"] == "instruction_status" and m["id"] == f"e{i}", timeout=10
            )
            assert status["status"] == "applied"
            frame = recv_until(ws, lambda m: m["type"] == "frame" and m["instruction"]["text"] == text)
            assert check(frame["waypoints"]), text


def test_unknown_instruction_fails(server):
    url, _ = server
    with ws_connect(url) as ws:
        recv_json(ws)
        ws.send(json.dumps({"type": "instruct", "id": "bad", "text": "Do a backflip"}))
        status = recv_until(ws, lambda m: m["type"] == "instruction_status" and m["id"] == "bad", timeout=10)
        assert status["status"] == "failed"
        assert "UnknownInstruction" in status["detail"]


def test_empty_instruction_rejected_client_side(server):
    url, _ = server
    with ws_connect(url) as ws:
        recv_json(ws)
        ws.send(json.dumps({"type": "instruct", "id": "x", "text": "   "}))
        err = recv_until(ws, lambda m: m["type"] == "error")
        assert err["code"] == "empty_instruction"


def test_two_subscribers_see_identical_frames(server):
    url, _ = server
    with ws_connect(url) as a, ws_connect(url) as b:
        recv_json(a)
        recv_json(b)
        frames_a = {}
        frames_b = {}
        for _ in range(30):
            fa = recv_until(a, lambda m: m["type"] == "frame")
            frames_a[fa["tick"]] = fa
            fb = recv_until(b, lambda m: m["type"] == "frame")
            frames_b[fb["tick"]] = fb
        common = sorted(set(frames_a) & set(frames_b))
        assert len(common) >= 10
        for tick in common:
            assert frames_a[tick] == frames_b[tick]


def test_reconnect_resyncs_from_next_frame(server):
    url, _ = server
    with ws_connect(url) as ws:
        recv_json(ws)
        last = recv_until(ws, lambda m: m["type"] == "frame")
    with ws_connect(url) as ws:
        hello = recv_json(ws)
        assert hello["type"] == "hello"
        frame = recv_until(ws, lambda m: m["type"] == "frame")
        # a frame is self-contained: one message fully restores the view
        assert frame["tick"] > last["tick"]
        assert {"agents", "invader", "resources", "waypoints", "cumulative"} <= set(frame)


def test_set_translator_roundtrip(server):
    url, _ = server
    with ws_connect(url) as ws:
        recv_json(ws)
        ws.send(json.dumps({"type": "set_translator", "kind": "mock"}))
        msg = recv_until(ws, lambda m: m["type"] == "translator")
        assert msg["kind"] == "mock" and msg["error"] is None
        ws.send(json.dumps({"type": "set_translator", "kind": "replay"}))
        msg = recv_until(ws, lambda m: m["type"] == "translator")
        assert msg["error"] is not None  # replay needs a directory


def test_bad_json_and_unknown_type(server):
    url, _ = server
    with ws_connect(url) as ws:
        recv_json(ws)
        ws.send("not json")
        err = recv_until(ws, lambda m: m["type"] == "error" and m["code"] == "bad_message")
        assert err["v"] == 1
        ws.send(json.dumps({"type": "mystery"}))
        err = recv_until(ws, lambda m: m["type"] == "error" and m["code"] == "unknown_type")
        assert "mystery" in err["message"]
