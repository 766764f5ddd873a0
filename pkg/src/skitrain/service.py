"""Realtime session server: WebSocket protocol around the simulation.

Each connection owns one session. The protocol is a JSON envelope
{"type", "seq", "payload"} in both directions, with strictly increasing
sequence numbers per direction. A session walks idle -> calibrating ->
idle -> running -> (paused <-> running) -> finished; HEAD_POSE frames are
accepted only while calibrating or running.

Two stepping modes:
  realtime (default): a tick task advances the sim at the configured rate,
  consuming the latest received pose (zero-order hold) and decimating STATE
  snapshots to half the tick rate.
  lockstep (START_LEVEL payload {"lockstep": true}): the sim advances
  exactly one step per received HEAD_POSE, which makes a scripted client
  bit-reproducible against run_headless on the same pose sequence.
"""

from __future__ import annotations

import asyncio
import json
import os
import time
from dataclasses import dataclass, field
from typing import Optional

from aiohttp import WSMsgType, web

from . import __version__
from .calibration import (
    CalibrationProfile,
    PromptSchedule,
    normalize_input,
    profile_to_json,
    run_calibration,
)
from .errors import OutOfTerrain, SkiTrainError
from .motion import HeadPoseSample, path_length
from .rng import derive_seed
from .sim import (
    EVENT_GOAL,
    PlayerState,
    RunLog,
    RunOutcome,
    SimParams,
    SimWorld,
    runlog_to_jsonl,
)
from .terrain import Level, difficulty_preset, generate_level, level_from_json, level_to_json
from .util import atomic_write_bytes

PROTOCOL_VERSION = "1"
AVAILABLE_LEVELS = (1, 2, 3)
IDLE_PAUSE_SECONDS = 5.0
WINDOW_NAMES = ("upright", "left", "right", "front", "back")


@dataclass
class ServiceConfig:
    tick_hz: float = 50.0
    log_dir: Optional[str] = None
    sim_params: SimParams = field(default_factory=SimParams)
    state_decimation: int = 2  # STATE every n-th tick


class LevelCache:
    """Read-only cache shared across sessions.

    Levels are round-tripped through the level-file JSON so the terrain the
    server simulates is bit-identical to what any consumer of the exported
    file (or of GET /level) sees: heights live as little-endian float32.
    """

    def __init__(self):
        self._cache: dict[tuple[int, int], tuple[Level, dict]] = {}

    def _entry(self, level_id: int, seed: int) -> tuple[Level, dict]:
        key = (level_id, seed)
        if key not in self._cache:
            params = difficulty_preset(level_id, seed=derive_seed(seed, "level", level_id))
            obj = level_to_json(generate_level(params))
            self._cache[key] = (level_from_json(obj), obj)
        return self._cache[key]

    def get(self, level_id: int, seed: int) -> Level:
        return self._entry(level_id, seed)[0]

    def get_json(self, level_id: int, seed: int) -> dict:
        return self._entry(level_id, seed)[1]


class SessionError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class Session:
    """Synchronous protocol state machine for one client."""

    def __init__(self, config: ServiceConfig, cache: LevelCache, session_id: int):
        self.config = config
        self.cache = cache
        self.session_id = session_id
        self.phase = "idle"
        self.profile: Optional[CalibrationProfile] = None
        self.client_seq: Optional[int] = None
        self.out_seq = 0
        self.error_count = 0
        self.last_client_time = time.monotonic()

        self.windows: dict[str, list[HeadPoseSample]] = {}
        self.active_window: Optional[str] = None
        self.ended_windows: set[str] = set()

        self.level: Optional[Level] = None
        self.level_id = 0
        self.level_seed = 0
        self.avatar = False
        self.lockstep = False
        self.world: Optional[SimWorld] = None
        self.state: Optional[PlayerState] = None
        self.state0: Optional[PlayerState] = None
        self.inputs: list = []
        self.states: list = []
        self.events: list = []
        self.head_xyz: list[tuple[float, float, float]] = []
        self.latest_pose: Optional[HeadPoseSample] = None
        self.tick_count = 0
        self.runlog_path: Optional[str] = None

    # -- outgoing ---------------------------------------------------------

    def _msg(self, mtype: str, payload: dict) -> dict:
        self.out_seq += 1
        return {"type": mtype, "seq": self.out_seq, "payload": payload}

    def _error(self, code: str, message: str) -> dict:
        self.error_count += 1
        return self._msg("ERROR", {"code": code, "message": message})

    def _state_msg(self) -> dict:
        s = self.state
        return self._msg("STATE", {
            "t": s.t, "x": s.x, "z": s.z, "heading": s.heading, "speed": s.speed,
            "yawRate": s.yaw_rate, "score": s.score,
            "progress": self.world.progress if self.world else 0.0,
            "phase": self.phase,
        })

    # -- incoming ---------------------------------------------------------

    def handle(self, obj) -> list[dict]:
        if not isinstance(obj, dict) or "type" not in obj or "seq" not in obj:
            return [self._error("BadEnvelope", "messages need type and seq")]
        seq = obj["seq"]
        if not isinstance(seq, int) or (self.client_seq is not None and seq <= self.client_seq):
            return [self._error("BadSequence",
                                f"seq {seq!r} not above {self.client_seq!r}")]
        self.client_seq = seq
        self.last_client_time = time.monotonic()
        payload = obj.get("payload") or {}
        handler = getattr(self, f"_on_{str(obj['type']).lower()}", None)
        if handler is None:
            return [self._error("UnknownType", f"unknown message type {obj['type']!r}")]
        try:
            return handler(payload)
        except SessionError as e:
            return [self._error(e.code, str(e))]
        except SkiTrainError as e:
            return [self._error(type(e).__name__, str(e))]

    def _on_hello(self, payload: dict) -> list[dict]:
        return [self._msg("WELCOME", {
            "protocol": PROTOCOL_VERSION,
            "version": __version__,
            "levels": list(AVAILABLE_LEVELS),
            "tickHz": self.config.tick_hz,
        })]

    def _on_calibrate_window(self, payload: dict) -> list[dict]:
        window = payload.get("window")
        action = payload.get("action")
        if window not in WINDOW_NAMES or action not in ("start", "end"):
            raise SessionError("BadCalibrateWindow",
                               f"window must be one of {WINDOW_NAMES}, action start/end")
        if self.phase not in ("idle", "calibrating"):
            raise SessionError("PhaseViolation", f"cannot calibrate while {self.phase}")
        if action == "start":
            self.phase = "calibrating"
            self.active_window = window
            self.windows.setdefault(window, [])
            return []
        if self.active_window != window:
            raise SessionError("BadCalibrateWindow", f"window {window} is not active")
        self.active_window = None
        self.ended_windows.add(window)
        if set(WINDOW_NAMES) <= self.ended_windows:
            return self._finish_calibration()
        return []

    def _finish_calibration(self) -> list[dict]:
        stream = sorted((s for ws in self.windows.values() for s in ws), key=lambda s: s.t)
        spans = {}
        for name in WINDOW_NAMES:
            samples = self.windows.get(name, [])
            if len(samples) < 2:
                self.phase = "idle"
                self.windows.clear()
                self.ended_windows.clear()
                return [self._error("InsufficientCalibrationData",
                                    f"window {name!r} has {len(samples)} samples")]
            spans[name] = (samples[0].t, samples[-1].t)
        try:
            profile = run_calibration(stream, PromptSchedule(windows=spans))
        except SkiTrainError as e:
            self.phase = "idle"
            self.windows.clear()
            self.ended_windows.clear()
            return [self._error(type(e).__name__, str(e))]
        self.profile = profile
        self.phase = "idle"
        self.windows.clear()
        self.ended_windows.clear()
        return [self._msg("CALIBRATION_RESULT", {"profile": profile_to_json(profile)})]

    def _on_head_pose(self, payload: dict) -> list[dict]:
        if self.phase not in ("calibrating", "running"):
            raise SessionError("PhaseViolation", f"HEAD_POSE not accepted while {self.phase}")
        try:
            pose = HeadPoseSample(
                t=float(payload["t"]),
                pos=tuple(float(v) for v in payload["pos"]),
                orient=tuple(float(v) for v in payload.get("orient", (0.0, 0.0, 0.0))))
        except (KeyError, TypeError, ValueError) as e:
            raise SessionError("BadPose", f"malformed head pose: {e}") from None
        if self.phase == "calibrating":
            if self.active_window is not None:
                self.windows[self.active_window].append(pose)
            return []
        if self.lockstep:
            return self._advance(pose)
        self.latest_pose = pose
        return []

    def _on_start_level(self, payload: dict) -> list[dict]:
        if self.profile is None:
            raise SessionError("NoProfile", "calibrate before starting a level")
        if self.phase not in ("idle", "finished"):
            raise SessionError("PhaseViolation", f"cannot start a level while {self.phase}")
        level_id = payload.get("level")
        if level_id not in AVAILABLE_LEVELS:
            raise SessionError("UnknownLevel", f"level must be one of {AVAILABLE_LEVELS}")
        self.level_id = int(level_id)
        self.level_seed = int(payload.get("seed", 0))
        self.avatar = bool(payload.get("avatar", False))
        self.lockstep = bool(payload.get("lockstep", False))
        self.level = self.cache.get(self.level_id, self.level_seed)
        self.world = SimWorld(self.level, self.config.sim_params)
        self.state = self.world.initial_state()
        self.state0 = self.state
        self.inputs = []
        self.states = []
        self.events = []
        self.head_xyz = []
        self.latest_pose = None
        self.tick_count = 0
        self.runlog_path = None
        self.phase = "running"
        return [self._state_msg()]

    def _on_pause(self, payload: dict) -> list[dict]:
        on = bool(payload.get("on", True))
        if on and self.phase == "running":
            self.phase = "paused"
        elif not on and self.phase == "paused":
            self.phase = "running"
        else:
            raise SessionError("PhaseViolation", f"cannot set pause={on} while {self.phase}")
        return [self._state_msg()]

    # -- stepping ---------------------------------------------------------

    def _advance(self, pose: Optional[HeadPoseSample]) -> list[dict]:
        """One simulation step; shared by lockstep and the realtime tick."""
        if self.phase != "running":
            return []
        if pose is None:
            pose = self.latest_pose  # zero-order hold
        if pose is None:
            return []  # nothing received yet; time starts with the first pose
        out: list[dict] = []
        inp = normalize_input(pose, self.profile)
        try:
            self.state, events = self.world.step(self.state, inp)
        except OutOfTerrain as e:
            self.phase = "finished"
            out.append(self._error("OutOfTerrain", str(e)))
            out.extend(self._complete(finished=False, reason="out_of_terrain"))
            return out
        self.inputs.append(inp)
        self.states.append(self.state)
        self.events.extend(events)
        self.head_xyz.append(pose.pos)
        self.tick_count += 1
        for ev in events:
            out.append(self._msg("EVENT", {"t": ev.t, "kind": ev.kind, "data": ev.data}))
        if any(ev.kind == EVENT_GOAL for ev in events):
            self.phase = "finished"
            out.append(self._state_msg())
            out.extend(self._complete(finished=True, reason="goal"))
            return out
        if self.tick_count % self.config.state_decimation == 0:
            out.append(self._state_msg())
        return out

    def _complete(self, finished: bool, reason: str) -> list[dict]:
        head_path = path_length(self.head_xyz) if self.head_xyz else 0.0
        log = RunLog(
            level_seed=self.level.params.seed, avatar=self.avatar,
            params=self.config.sim_params, profile=self.profile,
            state0=self.state0, inputs=tuple(self.inputs), states=tuple(self.states),
            events=tuple(self.events),
            outcome=RunOutcome(finished=finished,
                               finish_time=self.state.t if finished else None,
                               reason=reason, head_path_length=head_path))
        payload = {
            "finished": finished,
            "reason": reason,
            "finishTime": log.outcome.finish_time,
            "score": self.state.score,
            "cubeCount": len(self.level.props.cubes),
            "headPathLength": head_path,
        }
        if self.config.log_dir:
            os.makedirs(self.config.log_dir, exist_ok=True)
            name = f"run_s{self.session_id:04d}_l{self.level_id}_seed{self.level_seed}.jsonl"
            self.runlog_path = os.path.join(self.config.log_dir, name)
            atomic_write_bytes(self.runlog_path, runlog_to_jsonl(log))
            payload["runlog"] = name
        return [self._msg("RUN_COMPLETE", payload)]

    def realtime_tick(self) -> list[dict]:
        """Advance one tick in realtime mode (zero-order hold input)."""
        if self.lockstep or self.phase != "running":
            return []
        if time.monotonic() - self.last_client_time > IDLE_PAUSE_SECONDS:
            self.phase = "paused"
            return [self._state_msg()]
        return self._advance(None)


# ---------------------------------------------------------------------------
# aiohttp wiring


CONFIG_KEY = web.AppKey("config", ServiceConfig)
LEVELS_KEY = web.AppKey("levels", LevelCache)
SESSION_IDS_KEY: web.AppKey = web.AppKey("session_ids", object)


async def _session_handler(request: web.Request) -> web.WebSocketResponse:
    ws = web.WebSocketResponse(heartbeat=30.0)
    await ws.prepare(request)
    app = request.app
    session = Session(app[CONFIG_KEY], app[LEVELS_KEY], next(app[SESSION_IDS_KEY]))

    async def pump_ticks():
        interval = 1.0 / app[CONFIG_KEY].tick_hz
        try:
            while True:
                await asyncio.sleep(interval)
                for msg in session.realtime_tick():
                    await ws.send_json(msg)
        except (asyncio.CancelledError, ConnectionError):
            pass

    tick_task = asyncio.create_task(pump_ticks())
    try:
        async for msg in ws:
            if msg.type != WSMsgType.TEXT:
                continue
            try:
                obj = json.loads(msg.data)
            except json.JSONDecodeError:
                await ws.send_json(session._error("BadJson", "payload is not valid JSON"))
                continue
            for reply in session.handle(obj):
                await ws.send_json(reply)
    finally:
        tick_task.cancel()
    return ws


async def _health(request: web.Request) -> web.Response:
    return web.Response(text="ok")


async def _levels(request: web.Request) -> web.Response:
    out = []
    for lvl in AVAILABLE_LEVELS:
        p = difficulty_preset(lvl)
        out.append({
            "level": lvl,
            "curveRadiusRange": list(p.curve_radius_range),
            "numCurves": p.num_curves,
            "baseSlopeRad": p.base_slope,
            "noiseAmplitude": p.noise_amplitude,
            "trackLength": p.track_length,
        })
    return web.json_response({"version": __version__, "levels": out})


async def _level(request: web.Request) -> web.Response:
    """Full level JSON for a (level id, seed): what a session will simulate."""
    try:
        level_id = int(request.query.get("id", ""))
        seed = int(request.query.get("seed", "0"))
    except ValueError:
        raise web.HTTPBadRequest(text="id and seed must be integers")
    if level_id not in AVAILABLE_LEVELS:
        raise web.HTTPNotFound(text=f"no level {level_id}")
    return web.json_response(request.app[LEVELS_KEY].get_json(level_id, seed))


def build_app(config: Optional[ServiceConfig] = None) -> web.Application:
    import itertools

    app = web.Application()
    app[CONFIG_KEY] = config or ServiceConfig()
    app[LEVELS_KEY] = LevelCache()
    app[SESSION_IDS_KEY] = itertools.count(1)
    app.router.add_get("/health", _health)
    app.router.add_get("/levels", _levels)
    app.router.add_get("/level", _level)
    app.router.add_get("/session", _session_handler)
    return app


def serve(host: str, port: int, tick_hz: float = 50.0,
          log_dir: Optional[str] = None) -> None:
    """Run the server until interrupted."""
    config = ServiceConfig(tick_hz=tick_hz, log_dir=log_dir)
    web.run_app(build_app(config), host=host, port=port)
