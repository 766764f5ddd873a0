"""Deterministic fixed-timestep skiing physics and replayable run logs.

Integration is semi-implicit Euler at a fixed step: lateral input drives a
damped yaw acceleration (steering momentum), fore/aft input multiplies the
speed gravity produces, and standing upright damps both. Runs are pure
functions of (level, profile, head trace, parameters) and replay
bit-identically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .calibration import (
    CalibrationProfile,
    ControlInput,
    denormalize_fore,
    denormalize_lat,
    normalize_input,
    profile_from_json,
    profile_to_json,
)
from .errors import EmptySeries, InvalidInput, OutOfTerrain
from .motion import HeadPoseSample, grid_times, path_length, resample_head_trace, wrap_pi
from .rng import SplitMix64
from .terrain import Level, Track, heading_right
from .util import atomic_write_bytes


@dataclass(frozen=True)
class SimParams:
    dt: float = 0.02
    gravity: float = 9.81
    yaw_gain: float = 2.5       # rad/s^2 per unit lateral input
    yaw_damping: float = 1.5    # 1/s
    speed_gain: float = 0.5     # per unit fore input
    friction_coeff: float = 0.25
    upright_penalty: float = 0.3
    max_speed: float = 12.0
    cube_radius: float = 1.0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise InvalidInput("dt must be positive")
        if not (0.0 < self.upright_penalty <= 1.0):
            raise InvalidInput("upright penalty must be in (0, 1]")
        if self.max_speed <= 0.0:
            raise InvalidInput("max speed must be positive")

    @property
    def rate(self) -> float:
        return 1.0 / self.dt


@dataclass(frozen=True)
class PlayerState:
    x: float
    z: float
    heading: float   # rad, 0 = downhill, wrapped to (-pi, pi]
    speed: float     # m/s, clamped to [0, max_speed]
    yaw_rate: float  # rad/s
    score: int
    t: float


EVENT_CUBE = "CUBE_COLLECTED"
EVENT_BOUNDARY = "BOUNDARY_HIT"
EVENT_GOAL = "GOAL_REACHED"


@dataclass(frozen=True)
class SimEvent:
    t: float
    kind: str
    data: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunOutcome:
    finished: bool
    finish_time: Optional[float]
    reason: str
    head_path_length: float


@dataclass(frozen=True)
class RunLog:
    level_seed: int
    avatar: bool
    params: SimParams
    profile: CalibrationProfile
    state0: PlayerState
    inputs: tuple[ControlInput, ...]
    states: tuple[PlayerState, ...]
    events: tuple[SimEvent, ...]
    outcome: RunOutcome

    def __post_init__(self):
        if len(self.inputs) != len(self.states):
            raise InvalidInput("inputs and states must have equal length")
        ts = [e.t for e in self.events]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise InvalidInput("events must be time-ordered")


class SimWorld:
    """One run's mutable context: cube flags and centerline progress."""

    def __init__(self, level: Level, params: SimParams):
        self.level = level
        self.params = params
        self.collected = [False] * len(level.props.cubes)
        self.progress = 0.0
        self.last_lateral = 0.0
        self.goal_emitted = False

    def initial_state(self) -> PlayerState:
        x, z = self.level.track.start
        return PlayerState(x=float(x), z=float(z), heading=0.0, speed=0.0,
                           yaw_rate=0.0, score=0, t=0.0)

    def local_slope(self, x: float, z: float) -> tuple[float, float]:
        """(slope angle, downhill heading) of the terrain under (x, z)."""
        gx, gz = self.level.heightmap.gradient(x, z)
        mag = math.hypot(gx, gz)
        slope = math.atan(mag)
        if mag < 1e-12:
            return 0.0, 0.0
        # steepest descent direction -grad expressed as a heading
        return slope, math.atan2(-gx, gz)

    def step(self, state: PlayerState, inp: ControlInput) -> tuple[PlayerState, list[SimEvent]]:
        """Advance one fixed timestep; returns the new state and any events."""
        pr = self.params
        p = pr.upright_penalty if inp.upright else 1.0

        yaw_rate = state.yaw_rate + (pr.yaw_gain * inp.u_lat * p
                                     - pr.yaw_damping * state.yaw_rate) * pr.dt
        heading = wrap_pi(state.heading + yaw_rate * pr.dt)

        slope, downhill = self.local_slope(state.x, state.z)
        accel = (pr.gravity * math.sin(slope) * math.cos(heading - downhill)
                 - pr.friction_coeff * pr.gravity * state.speed / pr.max_speed)
        speed = (state.speed + accel * pr.dt) * (1.0 + pr.speed_gain * inp.u_fore * p * pr.dt)
        if inp.upright:
            speed *= 1.0 - (1.0 - pr.upright_penalty) * pr.dt
        speed = min(max(speed, 0.0), pr.max_speed)

        x = state.x + math.sin(heading) * speed * pr.dt
        z = state.z - math.cos(heading) * speed * pr.dt
        t = state.t + pr.dt
        events: list[SimEvent] = []

        track = self.level.track
        s, lat, c_heading, c_pt = track.project(x, z, hint=self.progress)
        half_w = self.level.params.corridor_half_width
        if abs(lat) > half_w:
            lat_c = math.copysign(half_w, lat)
            edge = c_pt + lat_c * heading_right(c_heading)
            x, z = float(edge[0]), float(edge[1])
            speed *= 0.5
            events.append(SimEvent(t=t, kind=EVENT_BOUNDARY, data={"s": s, "side": 1 if lat > 0 else -1}))
            lat = lat_c
        self.progress = s
        self.last_lateral = lat

        score = state.score
        r2 = pr.cube_radius * pr.cube_radius
        for idx, cube in enumerate(self.level.props.cubes):
            if self.collected[idx]:
                continue
            dx = x - cube.pos[0]
            dz = z - cube.pos[2]
            if dx * dx + dz * dz <= r2:
                self.collected[idx] = True
                score += 1
                events.append(SimEvent(t=t, kind=EVENT_CUBE, data={"cube": idx}))

        if not self.goal_emitted and s >= track.goal_arc_length - 1e-9:
            self.goal_emitted = True
            events.append(SimEvent(t=t, kind=EVENT_GOAL, data={"s": s}))

        new_state = PlayerState(x=x, z=z, heading=heading, speed=speed,
                                yaw_rate=yaw_rate, score=score, t=t)
        return new_state, events


def run_headless(level: Level, profile: CalibrationProfile,
                 head_trace: Sequence[HeadPoseSample],
                 params: SimParams = SimParams(),
                 avatar: bool = False) -> RunLog:
    """Replay a head trace through the simulation to goal or exhaustion."""
    if len(head_trace) == 0:
        raise EmptySeries("empty head trace")
    series = resample_head_trace(head_trace, params.rate)
    vals = series.values
    times = series.times
    world = SimWorld(level, params)
    state = world.initial_state()
    state0 = state
    inputs: list[ControlInput] = []
    states: list[PlayerState] = []
    events: list[SimEvent] = []
    finished = False
    finish_time = None
    reason = "trace_exhausted"
    consumed = 0

    for k in range(len(vals)):
        pose = HeadPoseSample(t=float(times[k]),
                              pos=(float(vals[k, 0]), float(vals[k, 1]), float(vals[k, 2])))
        inp = normalize_input(pose, profile)
        try:
            state, evs = world.step(state, inp)
        except OutOfTerrain:
            reason = "out_of_terrain"
            consumed = k
            break
        inputs.append(inp)
        states.append(state)
        events.extend(evs)
        consumed = k + 1
        if any(e.kind == EVENT_GOAL for e in evs):
            finished = True
            finish_time = state.t
            reason = "goal"
            break

    head_path = path_length(vals[:max(consumed, 1), :3])
    return RunLog(
        level_seed=level.params.seed, avatar=avatar, params=params, profile=profile,
        state0=state0, inputs=tuple(inputs), states=tuple(states), events=tuple(events),
        outcome=RunOutcome(finished=finished, finish_time=finish_time, reason=reason,
                           head_path_length=head_path),
    )


# ---------------------------------------------------------------------------
# Synthetic skier traces

CROUCH_DEPTH_FACTOR = 1.2  # head height = y_upright - factor * stance_offset


def _trace_orientation(dx: float, dz: float, u_lat: float) -> tuple[float, float, float]:
    # Plausible head orientation coupled to the lean; roll about the backward
    # axis follows lateral lean, pitch follows fore/aft lean, yaw looks into
    # the turn. Magnitudes are heuristic; analysis only correlates them.
    trunk = 0.67
    roll = -0.8 * math.asin(max(-0.99, min(0.99, dx / trunk)))
    pitch = 0.7 * math.asin(max(-0.99, min(0.99, dz / trunk)))
    yaw = 0.4 * u_lat
    return (pitch, yaw, roll)


def synthesize_skier_trace(track: Track, profile: CalibrationProfile,
                           aggressiveness: float,
                           level: Optional[Level] = None,
                           sim_params: SimParams = SimParams(),
                           seed: int = 0,
                           rate: float = 50.0) -> list[HeadPoseSample]:
    """Head-pose trace of a synthetic skier for the given track.

    Without a level this is the open-loop construction: lateral lean
    proportional to the signed curvature of the upcoming centerline
    segment, constant fore lean, crouched head height, seeded jitter.
    Given the full level, the skier is instead rehearsed through the
    simulation with a pursuit controller so the recorded trace, replayed
    through run_headless, reproduces the rehearsal run exactly.
    """
    if not (0.0 <= aggressiveness <= 1.0):
        raise InvalidInput("aggressiveness must be in [0, 1]")
    if level is None:
        return _open_loop_trace(track, profile, aggressiveness, sim_params, seed, rate)
    return _rehearsed_trace(level, profile, aggressiveness, sim_params, seed)


def _crouch_height(profile: CalibrationProfile, jitter: float) -> float:
    y = profile.y_upright - CROUCH_DEPTH_FACTOR * profile.stance_offset + jitter
    return min(y, profile.crouch_threshold - 1e-4)


def _open_loop_trace(track: Track, profile: CalibrationProfile, aggressiveness: float,
                     sim_params: SimParams, seed: int, rate: float) -> list[HeadPoseSample]:
    rng = SplitMix64(seed, "trace-jitter")
    kappa_max = max(abs(a.curvature) for a in track.arcs)
    v_nom = max(1.5, 0.45 * sim_params.max_speed * max(aggressiveness, 0.2))
    look = 3.0
    duration = track.total_length / v_nom + 5.0
    n = int(math.floor(duration * rate)) + 1
    times = grid_times(0.0, rate, n)
    jit = 0.004 * aggressiveness

    out = []
    for k in range(n):
        s_est = min(v_nom * float(times[k]) + look, track.total_length)
        u_lat = aggressiveness * max(-1.0, min(1.0, track.curvature_at(s_est) / kappa_max))
        dx = denormalize_lat(u_lat, profile) + jit * rng.normal()
        dz = denormalize_fore(0.6, profile) + jit * rng.normal()
        y = _crouch_height(profile, 0.05 * profile.stance_offset * rng.normal() * aggressiveness)
        out.append(HeadPoseSample(
            t=float(times[k]),
            pos=(profile.x_upright + dx, y, profile.z_upright - dz),
            orient=_trace_orientation(dx, dz, u_lat),
        ))
    return out


def _rehearsed_trace(level: Level, profile: CalibrationProfile, aggressiveness: float,
                     sim_params: SimParams, seed: int,
                     t_max: float = 240.0) -> list[HeadPoseSample]:
    rng = SplitMix64(seed, "trace-jitter")
    track = level.track
    world = SimWorld(level, sim_params)
    state = world.initial_state()
    total = track.total_length
    omega_max = 0.95 * sim_params.yaw_gain / sim_params.yaw_damping
    tau = 0.25
    jit = 0.002 * (0.5 + aggressiveness)
    n_max = int(t_max / sim_params.dt)
    times = grid_times(0.0, sim_params.rate, n_max)

    out: list[HeadPoseSample] = []
    for k in range(n_max):
        s = world.progress
        lat = world.last_lateral
        # smoothed curvature feedforward (ramps through arc junctions so the
        # lean command scales with the cornering demand instead of spiking),
        # plus heading alignment and cross-track correction toward the line
        w0 = s + 0.2 * state.speed
        w1 = w0 + max(2.0, 0.5 * state.speed)
        kappa_ff = 0.0
        n_k = 0
        ss = w0
        while ss <= w1:
            kappa_ff += track.curvature_at(min(ss, total))
            n_k += 1
            ss += 1.0
        kappa_ff /= max(n_k, 1)
        tangent = track.heading_at(min(s + 1.0, total))
        chi = math.atan2(1.4 * lat, state.speed + 2.0)
        err = wrap_pi(tangent - chi - state.heading)
        omega_star = kappa_ff * state.speed + 2.0 * err
        omega_star = max(-omega_max, min(omega_max, omega_star))
        u_lat = (sim_params.yaw_damping * state.yaw_rate
                 + (omega_star - state.yaw_rate) / tau) / sim_params.yaw_gain
        u_lat = max(-1.0, min(1.0, u_lat))

        ahead = max(8.0, state.speed * 1.2)
        kmax = 0.0
        ss = s
        while ss <= min(s + ahead, total):
            kmax = max(kmax, abs(track.curvature_at(ss)))
            ss += 2.0
        v_curve = 0.85 * omega_max / max(kmax, 1e-6)
        v_star = max(1.0, aggressiveness * min(sim_params.max_speed, v_curve))
        u_fore = max(-1.0, min(1.0, (v_star - state.speed) / (0.4 * sim_params.max_speed)))

        dx = denormalize_lat(u_lat, profile) + jit * rng.normal()
        dz = denormalize_fore(u_fore, profile) + jit * rng.normal()
        y = _crouch_height(profile, 0.03 * profile.stance_offset * rng.normal())
        pose = HeadPoseSample(
            t=float(times[k]),
            pos=(profile.x_upright + dx, y, profile.z_upright - dz),
            orient=_trace_orientation(dx, dz, u_lat),
        )
        out.append(pose)

        inp = normalize_input(pose, profile)
        state, evs = world.step(state, inp)
        if any(e.kind == EVENT_GOAL for e in evs):
            break
    return out


# ---------------------------------------------------------------------------
# RunLog JSONL format


def _input_to_json(inp: ControlInput) -> dict:
    return {"uLat": inp.u_lat, "uFore": inp.u_fore, "upright": inp.upright}


def _input_from_json(obj: dict) -> ControlInput:
    return ControlInput(u_lat=float(obj["uLat"]), u_fore=float(obj["uFore"]),
                        upright=bool(obj["upright"]))


def _state_to_json(s: PlayerState) -> dict:
    return {"x": s.x, "z": s.z, "heading": s.heading, "speed": s.speed,
            "yawRate": s.yaw_rate, "score": s.score, "t": s.t}


def _state_from_json(obj: dict) -> PlayerState:
    return PlayerState(x=float(obj["x"]), z=float(obj["z"]), heading=float(obj["heading"]),
                       speed=float(obj["speed"]), yaw_rate=float(obj["yawRate"]),
                       score=int(obj["score"]), t=float(obj["t"]))


def _params_to_json(p: SimParams) -> dict:
    return {"dt": p.dt, "gravity": p.gravity, "yawGain": p.yaw_gain,
            "yawDamping": p.yaw_damping, "speedGain": p.speed_gain,
            "frictionCoeff": p.friction_coeff, "uprightPenalty": p.upright_penalty,
            "maxSpeed": p.max_speed, "cubeRadius": p.cube_radius}


def _params_from_json(obj: dict) -> SimParams:
    return SimParams(dt=float(obj["dt"]), gravity=float(obj["gravity"]),
                     yaw_gain=float(obj["yawGain"]), yaw_damping=float(obj["yawDamping"]),
                     speed_gain=float(obj["speedGain"]), friction_coeff=float(obj["frictionCoeff"]),
                     upright_penalty=float(obj["uprightPenalty"]), max_speed=float(obj["maxSpeed"]),
                     cube_radius=float(obj["cubeRadius"]))


def runlog_to_jsonl(log: RunLog) -> bytes:
    lines = [json.dumps({
        "v": 1,
        "generator": f"skitrain {__version__}",
        "levelSeed": log.level_seed,
        "avatar": log.avatar,
        "params": _params_to_json(log.params),
        "profile": profile_to_json(log.profile),
        "state0": _state_to_json(log.state0),
    })]
    for inp, st in zip(log.inputs, log.states):
        lines.append(json.dumps({"t": st.t, "input": _input_to_json(inp),
                                 "state": _state_to_json(st)}))
    for ev in log.events:
        lines.append(json.dumps({"event": {"t": ev.t, "kind": ev.kind, "data": ev.data}}))
    lines.append(json.dumps({"outcome": {
        "finished": log.outcome.finished,
        "finishTime": log.outcome.finish_time,
        "reason": log.outcome.reason,
        "headPathLength": log.outcome.head_path_length,
    }}))
    return ("\n".join(lines) + "\n").encode("utf-8")


def runlog_from_jsonl(data: bytes) -> RunLog:
    lines = [json.loads(l) for l in data.decode("utf-8").splitlines() if l.strip()]
    head = lines[0]
    if head.get("v") != 1:
        raise InvalidInput("unsupported run log version")
    inputs = []
    states = []
    events = []
    outcome = None
    for obj in lines[1:]:
        if "input" in obj:
            inputs.append(_input_from_json(obj["input"]))
            states.append(_state_from_json(obj["state"]))
        elif "event" in obj:
            e = obj["event"]
            events.append(SimEvent(t=float(e["t"]), kind=str(e["kind"]), data=dict(e["data"])))
        elif "outcome" in obj:
            o = obj["outcome"]
            outcome = RunOutcome(finished=bool(o["finished"]),
                                 finish_time=None if o["finishTime"] is None else float(o["finishTime"]),
                                 reason=str(o["reason"]),
                                 head_path_length=float(o["headPathLength"]))
    if outcome is None:
        raise InvalidInput("run log has no outcome line")
    return RunLog(level_seed=int(head["levelSeed"]), avatar=bool(head["avatar"]),
                  params=_params_from_json(head["params"]),
                  profile=profile_from_json(head["profile"]),
                  state0=_state_from_json(head["state0"]),
                  inputs=tuple(inputs), states=tuple(states), events=tuple(events),
                  outcome=outcome)


def save_runlog(path, log: RunLog) -> None:
    atomic_write_bytes(path, runlog_to_jsonl(log))


def load_runlog(path) -> RunLog:
    with open(path, "rb") as fh:
        return runlog_from_jsonl(fh.read())
