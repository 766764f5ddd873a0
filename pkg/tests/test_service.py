"""Session-server protocol tests, including service/headless equivalence."""

import asyncio
import json

import pytest
from aiohttp.test_utils import TestClient, TestServer

import skitrain.service as service
from skitrain.calibration import profile_from_json
from skitrain.rng import derive_seed
from skitrain.service import ServiceConfig, build_app
from skitrain.sim import run_headless, runlog_to_jsonl, synthesize_skier_trace
from skitrain.subject import CALIBRATION_WINDOWS, calibration_session
from skitrain.terrain import difficulty_preset, generate_level, level_from_json, level_to_json


def service_level(level_id: int, seed: int):
    """The exact level a session simulates: float32-roundtripped terrain."""
    params = difficulty_preset(level_id, seed=derive_seed(seed, "level", level_id))
    return level_from_json(level_to_json(generate_level(params)))


def run_async(coro):
    return asyncio.run(coro)


class WsClient:
    """Tiny scripted client with sequence numbering."""

    def __init__(self, ws):
        self.ws = ws
        self.seq = 0

    async def send(self, mtype, payload=None):
        self.seq += 1
        await self.ws.send_json({"type": mtype, "seq": self.seq, "payload": payload or {}})

    async def recv(self, timeout=10.0):
        return json.loads((await asyncio.wait_for(self.ws.receive_str(), timeout)))


async def _client(config=None):
    client = TestClient(TestServer(build_app(config)))
    await client.start_server()
    return client


async def _calibrate(ws: WsClient, seed=7):
    """Drive the calibration wizard over the wire; returns the profile."""
    trace, _ = calibration_session(seed)
    for name, (a, b) in CALIBRATION_WINDOWS.items():
        await ws.send("CALIBRATE_WINDOW", {"window": name, "action": "start"})
        for s in trace:
            if a <= s.t <= b:
                await ws.send("HEAD_POSE", {"t": s.t, "pos": list(s.pos),
                                            "orient": list(s.orient)})
        await ws.send("CALIBRATE_WINDOW", {"window": name, "action": "end"})
    msg = await ws.recv()
    assert msg["type"] == "CALIBRATION_RESULT", msg
    return profile_from_json(msg["payload"]["profile"])


class TestHandshake:
    def test_hello_welcome(self):
        async def scenario():
            client = await _client()
            try:
                ws = WsClient(await client.ws_connect("/session"))
                await ws.send("HELLO")
                msg = await ws.recv()
                assert msg["type"] == "WELCOME"
                assert msg["payload"]["protocol"] == "1"
                assert msg["payload"]["levels"] == [1, 2, 3]
            finally:
                await client.close()
        run_async(scenario())

    def test_health_and_levels_endpoints(self):
        async def scenario():
            client = await _client()
            try:
                r = await client.get("/health")
                assert r.status == 200
                assert await r.text() == "ok"
                r = await client.get("/levels")
                assert r.status == 200
                body = await r.json()
                assert [e["level"] for e in body["levels"]] == [1, 2, 3]
            finally:
                await client.close()
        run_async(scenario())

    def test_level_endpoint_serves_simulated_terrain(self):
        async def scenario():
            client = await _client()
            try:
                r = await client.get("/level", params={"id": "1", "seed": "4"})
                assert r.status == 200
                obj = await r.json()
                assert level_from_json(obj) == service_level(1, 4)
                r = await client.get("/level", params={"id": "9"})
                assert r.status == 404
                r = await client.get("/level", params={"id": "x"})
                assert r.status == 400
            finally:
                await client.close()
        run_async(scenario())


class TestProtocolGuards:
    def test_start_level_before_calibration(self):
        async def scenario():
            client = await _client()
            try:
                ws = WsClient(await client.ws_connect("/session"))
                await ws.send("START_LEVEL", {"level": 1})
                msg = await ws.recv()
                assert msg["type"] == "ERROR"
                assert msg["payload"]["code"] == "NoProfile"
            finally:
                await client.close()
        run_async(scenario())

    def test_unknown_type_answered_with_error(self):
        async def scenario():
            client = await _client()
            try:
                ws = WsClient(await client.ws_connect("/session"))
                await ws.send("FLY_TO_THE_MOON")
                msg = await ws.recv()
                assert msg["type"] == "ERROR"
                assert msg["payload"]["code"] == "UnknownType"
            finally:
                await client.close()
        run_async(scenario())

    def test_non_increasing_seq_rejected(self):
        async def scenario():
            client = await _client()
            try:
                ws = WsClient(await client.ws_connect("/session"))
                await ws.ws.send_json({"type": "HELLO", "seq": 5, "payload": {}})
                assert (await ws.recv())["type"] == "WELCOME"
                await ws.ws.send_json({"type": "HELLO", "seq": 5, "payload": {}})
                msg = await ws.recv()
                assert msg["type"] == "ERROR"
                assert msg["payload"]["code"] == "BadSequence"
            finally:
                await client.close()
        run_async(scenario())

    def test_head_pose_in_idle_rejected(self):
        async def scenario():
            client = await _client()
            try:
                ws = WsClient(await client.ws_connect("/session"))
                await ws.send("HEAD_POSE", {"t": 0.0, "pos": [0, 1.6, 0]})
                msg = await ws.recv()
                assert msg["type"] == "ERROR"
                assert msg["payload"]["code"] == "PhaseViolation"
            finally:
                await client.close()
        run_async(scenario())

    def test_malformed_json_answered_with_error(self):
        async def scenario():
            client = await _client()
            try:
                raw = await client.ws_connect("/session")
                await raw.send_str("this is not json{")
                msg = json.loads(await raw.receive_str())
                assert msg["type"] == "ERROR"
                assert msg["payload"]["code"] == "BadJson"
            finally:
                await client.close()
        run_async(scenario())


class TestCalibrationOverWire:
    def test_wizard_produces_profile(self):
        async def scenario():
            client = await _client()
            try:
                ws = WsClient(await client.ws_connect("/session"))
                profile = await _calibrate(ws, seed=11)
                assert profile.x_left > 0.15
                assert profile.y_upright > 1.5
            finally:
                await client.close()
        run_async(scenario())

    def test_sparse_window_surfaces_error(self):
        async def scenario():
            client = await _client()
            try:
                ws = WsClient(await client.ws_connect("/session"))
                for i, name in enumerate(CALIBRATION_WINDOWS):
                    await ws.send("CALIBRATE_WINDOW", {"window": name, "action": "start"})
                    for k in range(3):  # far below the 10-sample minimum
                        await ws.send("HEAD_POSE",
                                      {"t": 10.0 * i + 0.02 * k, "pos": [0.0, 1.6, 0.0]})
                    await ws.send("CALIBRATE_WINDOW", {"window": name, "action": "end"})
                msg = await ws.recv()
                assert msg["type"] == "ERROR"
                assert msg["payload"]["code"] == "InsufficientCalibrationData"
            finally:
                await client.close()
        run_async(scenario())


class TestLockstepEquivalence:
    def test_scripted_client_matches_run_headless(self, tmp_path):
        async def scenario():
            config = ServiceConfig(log_dir=str(tmp_path))
            client = await _client(config)
            try:
                ws = WsClient(await client.ws_connect("/session"))
                profile = await _calibrate(ws, seed=7)

                level_seed = 4
                level = service_level(1, level_seed)
                trace = synthesize_skier_trace(level.track, profile, 0.7,
                                               level=level, seed=21)

                await ws.send("START_LEVEL", {"level": 1, "seed": level_seed,
                                              "lockstep": True})
                first = await ws.recv()
                assert first["type"] == "STATE"

                got_complete = {}

                async def pump():
                    while True:
                        msg = await ws.recv()
                        if msg["type"] == "RUN_COMPLETE":
                            got_complete.update(msg["payload"])
                            return

                async def feed():
                    for s in trace:
                        await ws.send("HEAD_POSE", {"t": s.t, "pos": list(s.pos),
                                                    "orient": list(s.orient)})

                await asyncio.gather(pump(), feed())
                assert got_complete["finished"] is True
                assert got_complete["score"] == len(level.props.cubes)

                service_bytes = (tmp_path / got_complete["runlog"]).read_bytes()
                headless = run_headless(level, profile, trace)
                assert service_bytes == runlog_to_jsonl(headless)
                assert got_complete["headPathLength"] == headless.outcome.head_path_length
            finally:
                await client.close()
        run_async(scenario())


class TestSessionIsolation:
    def test_two_concurrent_sessions_do_not_interact(self):
        async def scenario():
            client = await _client()
            try:
                ws1 = WsClient(await client.ws_connect("/session"))
                ws2 = WsClient(await client.ws_connect("/session"))
                p1 = await _calibrate(ws1, seed=1)
                p2 = await _calibrate(ws2, seed=2)
                assert p1 != p2  # different subjects stay separate

                await ws1.send("START_LEVEL", {"level": 1, "seed": 1, "lockstep": True})
                s1 = await ws1.recv()
                assert s1["payload"]["phase"] == "running"
                # session 2 is still idle: poses must be rejected there
                await ws2.send("HEAD_POSE", {"t": 0.0, "pos": [0, 1.6, 0]})
                msg = await ws2.recv()
                assert msg["payload"]["code"] == "PhaseViolation"

                # stepping session 1 leaves session 2 untouched
                for k in range(10):
                    await ws1.send("HEAD_POSE",
                                   {"t": 0.02 * k,
                                    "pos": [p1.x_upright, p1.y_upright - 1.2 * p1.stance_offset,
                                            p1.z_upright]})
                await ws1.send("PAUSE", {"on": True})
                while True:
                    msg = await ws1.recv()
                    if msg["type"] == "STATE" and msg["payload"]["phase"] == "paused":
                        break
                await ws2.send("HELLO")
                assert (await ws2.recv())["type"] == "WELCOME"
            finally:
                await client.close()
        run_async(scenario())


class TestRealtimeMode:
    def test_tick_task_emits_state(self):
        async def scenario():
            client = await _client(ServiceConfig(tick_hz=100.0))
            try:
                ws = WsClient(await client.ws_connect("/session"))
                profile = await _calibrate(ws, seed=7)
                await ws.send("START_LEVEL", {"level": 1, "seed": 0})
                assert (await ws.recv())["type"] == "STATE"
                await ws.send("HEAD_POSE", {
                    "t": 0.0,
                    "pos": [profile.x_upright,
                            profile.y_upright - 1.2 * profile.stance_offset,
                            profile.z_upright - 0.8 * profile.z_front]})
                msg = await ws.recv(timeout=5.0)
                assert msg["type"] in ("STATE", "EVENT")
            finally:
                await client.close()
        run_async(scenario())

    def test_client_silence_auto_pauses(self, monkeypatch):
        monkeypatch.setattr(service, "IDLE_PAUSE_SECONDS", 0.05)

        async def scenario():
            client = await _client(ServiceConfig(tick_hz=100.0))
            try:
                ws = WsClient(await client.ws_connect("/session"))
                await _calibrate(ws, seed=7)
                await ws.send("START_LEVEL", {"level": 1, "seed": 0})
                assert (await ws.recv())["type"] == "STATE"
                while True:
                    msg = await ws.recv(timeout=5.0)
                    if msg["type"] == "STATE" and msg["payload"]["phase"] == "paused":
                        return
            finally:
                await client.close()
        run_async(scenario())
