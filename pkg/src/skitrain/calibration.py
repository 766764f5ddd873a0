"""Startup calibration: lean prompts to movement ranges, pose to control input.

Calibration records the user's comfortable lean extents on each side and
the upright head height; during a run the raw head pose is linearly scaled
through those extents into a dimensionless control input, so two users with
very different mobility produce the same in-game command at the same
relative effort.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateRange, InsufficientCalibrationData, InvalidInput
from .motion import HeadPoseSample
from .util import atomic_write_text

MIN_WINDOW_SAMPLES = 10
MIN_RANGE_M = 0.01
DEFAULT_STANCE_FRACTION = 0.25

WINDOW_NAMES = ("upright", "left", "right", "front", "back")


@dataclass(frozen=True)
class PromptSchedule:
    """Time windows (start, end), seconds, for the five calibration prompts."""

    windows: dict[str, tuple[float, float]]

    def __post_init__(self):
        missing = [w for w in WINDOW_NAMES if w not in self.windows]
        if missing:
            raise InvalidInput(f"schedule missing windows: {missing}")
        spans = []
        for name in WINDOW_NAMES:
            a, b = self.windows[name]
            if not (a < b):
                raise InvalidInput(f"window {name} is empty: ({a}, {b})")
            spans.append((a, b, name))
        spans.sort()
        for (a0, b0, n0), (a1, b1, n1) in zip(spans, spans[1:]):
            if a1 < b0:
                raise InvalidInput(f"windows {n0} and {n1} overlap")

    def samples_in(self, name: str, trace: Sequence[HeadPoseSample]) -> list[HeadPoseSample]:
        a, b = self.windows[name]
        return [s for s in trace if a <= s.t <= b]


@dataclass(frozen=True)
class CalibrationProfile:
    """Signed per-axis movement ranges plus the upright stance reference.

    x_left/x_right/z_front/z_back are the maximum comfortable deviations
    (all stored positive, meters). x_upright/z_upright hold the neutral
    head position the deviations are measured from; y_upright is the
    standing head height and stance_offset the crouch depth required for
    the skiing stance.
    """

    x_left: float
    x_right: float
    z_front: float
    z_back: float
    y_upright: float
    stance_offset: float
    x_upright: float = 0.0
    z_upright: float = 0.0

    def __post_init__(self):
        for name in ("x_left", "x_right", "z_front", "z_back", "y_upright", "stance_offset"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise DegenerateRange(f"calibration {name} must be finite and > 0, got {v}")

    @property
    def crouch_threshold(self) -> float:
        return self.y_upright - self.stance_offset


@dataclass(frozen=True)
class ControlInput:
    """Normalized control command: lateral and fore/aft in [-1, 1]."""

    u_lat: float
    u_fore: float
    upright: bool


def run_calibration(head_stream: Sequence[HeadPoseSample], schedule: PromptSchedule,
                    stance_fraction: float = DEFAULT_STANCE_FRACTION) -> CalibrationProfile:
    """Extract movement ranges from a guided lean recording.

    Deviations are measured against the mean head position of the upright
    window (not the first sample) to reject startup jitter. Each range is
    the maximum absolute deviation along its axis inside its prompt window.
    """
    windows = {}
    for name in WINDOW_NAMES:
        samples = schedule.samples_in(name, head_stream)
        if len(samples) < MIN_WINDOW_SAMPLES:
            raise InsufficientCalibrationData(
                f"window {name!r} has {len(samples)} samples, needs {MIN_WINDOW_SAMPLES}")
        windows[name] = samples

    upright = windows["upright"]
    x0 = sum(s.pos[0] for s in upright) / len(upright)
    y0 = sum(s.pos[1] for s in upright) / len(upright)
    z0 = sum(s.pos[2] for s in upright) / len(upright)

    def axis_range(name: str, axis: int, center: float) -> float:
        r = max(abs(s.pos[axis] - center) for s in windows[name])
        if r < MIN_RANGE_M:
            raise DegenerateRange(f"{name} range {r * 100:.2f} cm is below 1 cm")
        return r

    x_left = axis_range("left", 0, x0)
    x_right = axis_range("right", 0, x0)
    z_front = axis_range("front", 2, z0)
    z_back = axis_range("back", 2, z0)

    return CalibrationProfile(
        x_left=x_left, x_right=x_right, z_front=z_front, z_back=z_back,
        y_upright=y0, stance_offset=stance_fraction * 0.5 * (z_front + z_back),
        x_upright=x0, z_upright=z0,
    )


def normalize_input(pose: HeadPoseSample, profile: CalibrationProfile) -> ControlInput:
    """Map a raw head pose to a normalized control input.

    Piecewise-linear with a breakpoint at the neutral position: each side
    of each axis is scaled by its own calibrated range, then clamped to
    [-1, 1]. Forward lean (head toward -z) is positive u_fore.
    """
    dx = pose.pos[0] - profile.x_upright
    if dx >= 0.0:
        u_lat = min(dx / profile.x_right, 1.0)
    else:
        u_lat = max(dx / profile.x_left, -1.0)
    dz = profile.z_upright - pose.pos[2]
    if dz >= 0.0:
        u_fore = min(dz / profile.z_front, 1.0)
    else:
        u_fore = max(dz / profile.z_back, -1.0)
    return ControlInput(u_lat=u_lat, u_fore=u_fore,
                        upright=pose.pos[1] > profile.crouch_threshold)


def denormalize_lat(u_lat: float, profile: CalibrationProfile) -> float:
    """Lateral head deviation (m) that normalizes to u_lat."""
    return u_lat * (profile.x_right if u_lat >= 0.0 else profile.x_left)


def denormalize_fore(u_fore: float, profile: CalibrationProfile) -> float:
    """Fore/aft head deviation dz = z_upright - z (m) that maps to u_fore."""
    return u_fore * (profile.z_front if u_fore >= 0.0 else profile.z_back)


# ---------------------------------------------------------------------------
# File formats

_PROFILE_KEYS = {
    "xLeft": "x_left", "xRight": "x_right", "zFront": "z_front", "zBack": "z_back",
    "yUpright": "y_upright", "stanceOffset": "stance_offset",
}
_OPTIONAL_KEYS = {"xUpright": "x_upright", "zUpright": "z_upright"}


def profile_to_json(profile: CalibrationProfile) -> dict:
    obj = {k: getattr(profile, f) for k, f in _PROFILE_KEYS.items()}
    obj.update({k: getattr(profile, f) for k, f in _OPTIONAL_KEYS.items()})
    return obj


def profile_from_json(obj: dict) -> CalibrationProfile:
    try:
        kwargs = {f: float(obj[k]) for k, f in _PROFILE_KEYS.items()}
    except KeyError as e:
        raise InvalidInput(f"profile JSON missing key {e}") from None
    for k, f in _OPTIONAL_KEYS.items():
        if k in obj:
            kwargs[f] = float(obj[k])
    return CalibrationProfile(**kwargs)


def save_profile(path, profile: CalibrationProfile) -> None:
    atomic_write_text(path, json.dumps(profile_to_json(profile)) + "\n")


def load_profile(path) -> CalibrationProfile:
    with open(path) as fh:
        return profile_from_json(json.load(fh))


def schedule_from_json(obj: dict) -> PromptSchedule:
    return PromptSchedule(windows={
        name: (float(span[0]), float(span[1])) for name, span in obj.items()
    })


def load_schedule(path) -> PromptSchedule:
    with open(path) as fh:
        return schedule_from_json(json.load(fh))


def save_schedule(path, schedule: PromptSchedule) -> None:
    atomic_write_text(path, json.dumps({
        name: list(span) for name, span in schedule.windows.items()
    }) + "\n")
