"""Pose and skeleton primitives shared by every other module.

World frame convention (used everywhere in this package): x points to the
user's right, y points up, z points backward, so the downhill/forward
direction is -z. Head orientation is stored as intrinsic X->Y->Z Euler
angles in radians.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .errors import (
    CalibrationPoseInvalid,
    EmptySeries,
    InvalidInput,
    UnorderedInput,
)

if TYPE_CHECKING:  # pragma: no cover
    from .angles import AngleSet

TWO_PI = 2.0 * math.pi


def wrap_pi(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = angle - TWO_PI * math.floor((angle + math.pi) / TWO_PI)
    if a <= -math.pi:
        a = math.pi
    return a


class Confidence(IntEnum):
    NONE = 0
    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @classmethod
    def from_token(cls, token: str) -> "Confidence":
        try:
            return cls[token.upper()]
        except KeyError:
            raise InvalidInput(f"unknown confidence token {token!r}") from None

    @property
    def token(self) -> str:
        return self.name.lower()


class JointName(Enum):
    """The 32 joints of the tracking skeleton."""

    PELVIS = "PELVIS"
    SPINE_NAVEL = "SPINE_NAVEL"
    SPINE_CHEST = "SPINE_CHEST"
    NECK = "NECK"
    CLAVICLE_L = "CLAVICLE_L"
    CLAVICLE_R = "CLAVICLE_R"
    SHOULDER_L = "SHOULDER_L"
    SHOULDER_R = "SHOULDER_R"
    ELBOW_L = "ELBOW_L"
    ELBOW_R = "ELBOW_R"
    WRIST_L = "WRIST_L"
    WRIST_R = "WRIST_R"
    HAND_L = "HAND_L"
    HAND_R = "HAND_R"
    HANDTIP_L = "HANDTIP_L"
    HANDTIP_R = "HANDTIP_R"
    THUMB_L = "THUMB_L"
    THUMB_R = "THUMB_R"
    HIP_L = "HIP_L"
    HIP_R = "HIP_R"
    KNEE_L = "KNEE_L"
    KNEE_R = "KNEE_R"
    ANKLE_L = "ANKLE_L"
    ANKLE_R = "ANKLE_R"
    FOOT_L = "FOOT_L"
    FOOT_R = "FOOT_R"
    HEAD = "HEAD"
    NOSE = "NOSE"
    EYE_L = "EYE_L"
    EYE_R = "EYE_R"
    EAR_L = "EAR_L"
    EAR_R = "EAR_R"


ALL_JOINTS: tuple[JointName, ...] = tuple(JointName)
assert len(ALL_JOINTS) == 32

Vec3 = tuple[float, float, float]


def _check_vec3(v: Sequence[float], what: str) -> Vec3:
    if len(v) != 3 or not all(math.isfinite(c) for c in v):
        raise InvalidInput(f"{what} must be a finite 3-vector, got {v!r}")
    return (float(v[0]), float(v[1]), float(v[2]))


@dataclass(frozen=True)
class HeadPoseSample:
    """One timestamped 6-DoF head pose (seconds, meters, radians)."""

    t: float
    pos: Vec3
    orient: Vec3 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not math.isfinite(self.t) or self.t < 0.0:
            raise InvalidInput(f"timestamp must be finite and >= 0, got {self.t}")
        object.__setattr__(self, "pos", _check_vec3(self.pos, "head position"))
        orient = _check_vec3(self.orient, "head orientation")
        for a in orient:
            if not (-math.pi < a <= math.pi):
                raise InvalidInput(f"Euler angle {a} outside (-pi, pi]")
        object.__setattr__(self, "orient", orient)


@dataclass(frozen=True)
class JointSample:
    pos: Vec3
    conf: Confidence

    def __post_init__(self):
        if self.conf != Confidence.NONE:
            object.__setattr__(self, "pos", _check_vec3(self.pos, "joint position"))


@dataclass(frozen=True)
class SkeletonFrame:
    """All 32 joint positions at one instant, from one tracking camera."""

    t: float
    camera: int
    joints: dict[JointName, JointSample]

    def __post_init__(self):
        missing = [j for j in ALL_JOINTS if j not in self.joints]
        if missing:
            # Absent joints are representable, but only as explicit NONEs.
            joints = dict(self.joints)
            for j in missing:
                joints[j] = JointSample((0.0, 0.0, 0.0), Confidence.NONE)
            object.__setattr__(self, "joints", joints)

    def position(self, joint: JointName) -> np.ndarray:
        return np.asarray(self.joints[joint].pos, dtype=float)

    def confident(self, joint: JointName, min_conf: Confidence = Confidence.MEDIUM) -> bool:
        return self.joints[joint].conf >= min_conf


@dataclass(frozen=True)
class ReferenceFrame:
    """Upright stance frame: origin at the pelvis, orthonormal body axes.

    The sagittal plane has normal `lateral`, the frontal plane has normal
    `forward`. `reference_angles` stores the nine raw angle values of the
    mean upright pose so downstream angle deltas are zero at reference.
    """

    origin: Vec3
    up: Vec3
    forward: Vec3
    lateral: Vec3
    reference_angles: "AngleSet"

    def __post_init__(self):
        u, f, l = (np.asarray(v, float) for v in (self.up, self.forward, self.lateral))
        for name, v in (("up", u), ("forward", f), ("lateral", l)):
            if abs(np.linalg.norm(v) - 1.0) > 1e-9:
                raise InvalidInput(f"{name} axis is not unit length")
        if abs(u @ f) > 1e-9 or abs(u @ l) > 1e-9 or abs(f @ l) > 1e-9:
            raise InvalidInput("reference axes are not orthogonal")
        if np.linalg.norm(np.cross(f, u) - l) > 1e-9:
            raise InvalidInput("axes are not a right-handed (forward, up, lateral) triad")


@dataclass(frozen=True)
class UniformSeries:
    """Samples on a uniform clock; values is (n,) or (n, k)."""

    rate: float
    start: float
    values: np.ndarray

    def __post_init__(self):
        if self.rate <= 0.0:
            raise InvalidInput("rate must be positive")
        if len(self.values) < 1:
            raise EmptySeries("uniform series needs at least one sample")

    @property
    def times(self) -> np.ndarray:
        return self.start + np.arange(len(self.values)) / self.rate

    def __len__(self) -> int:
        return len(self.values)


def grid_times(start: float, rate: float, n: int) -> np.ndarray:
    """The canonical uniform clock: start + k/rate.

    Every producer and consumer of uniform series in this package builds
    timestamps with this exact formula so grids from different code paths
    are bit-identical.
    """
    return start + np.arange(n) / rate


def resample_uniform(times: Sequence[float], values, rate: float) -> UniformSeries:
    """Linearly interpolate a timestamped series onto a uniform clock.

    The grid starts at the first timestamp and steps by 1/rate through the
    last one; grid points that coincide with input timestamps reproduce the
    input values exactly.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise EmptySeries("resampling needs at least two samples")
    if rate <= 0.0:
        raise InvalidInput("rate must be positive")
    if np.any(np.diff(t) <= 0.0):
        raise UnorderedInput("timestamps must be strictly increasing")
    n = int(math.floor((float(t[-1]) - float(t[0])) * rate + 1e-9)) + 1
    grid = grid_times(float(t[0]), rate, n)
    if v.ndim == 1:
        out = np.interp(grid, t, v)
    else:
        out = np.column_stack([np.interp(grid, t, v[:, k]) for k in range(v.shape[1])])
    return UniformSeries(rate=rate, start=float(t[0]), values=out)


def resample_head_trace(trace: Sequence[HeadPoseSample], rate: float) -> UniformSeries:
    """Resample a head-pose trace to six columns (x, y, z, rx, ry, rz)."""
    times = [s.t for s in trace]
    vals = [(*s.pos, *s.orient) for s in trace]
    return resample_uniform(times, vals, rate)


MIN_UPRIGHT_FRAMES = 10
_FRAME_JOINTS = (JointName.PELVIS, JointName.NECK, JointName.HIP_L, JointName.HIP_R)


def mean_skeleton(frames: Sequence[SkeletonFrame],
                  min_conf: Confidence = Confidence.MEDIUM) -> SkeletonFrame:
    """Per-joint mean over frames where that joint meets min_conf.

    Joints confident in fewer than half the frames come back as NONE.
    """
    n = len(frames)
    joints: dict[JointName, JointSample] = {}
    for j in ALL_JOINTS:
        pts = [f.position(j) for f in frames if f.confident(j, min_conf)]
        if len(pts) * 2 > n:
            p = np.mean(pts, axis=0)
            joints[j] = JointSample((float(p[0]), float(p[1]), float(p[2])), Confidence.MEDIUM)
        else:
            joints[j] = JointSample((0.0, 0.0, 0.0), Confidence.NONE)
    return SkeletonFrame(t=float(frames[0].t), camera=frames[0].camera, joints=joints)


def estimate_reference_frame(upright_frames: Sequence[SkeletonFrame]) -> ReferenceFrame:
    """Estimate the upright stance frame from frames of a standing user.

    up is the mean pelvis->neck direction, lateral the horizontal component
    of the mean left->right hip axis re-orthogonalized against up, and
    forward completes the right-handed triad (forward = up x lateral).
    """
    if len(upright_frames) < MIN_UPRIGHT_FRAMES:
        raise CalibrationPoseInvalid(
            f"need >= {MIN_UPRIGHT_FRAMES} upright frames, got {len(upright_frames)}")
    n = len(upright_frames)
    for j in _FRAME_JOINTS:
        ok = sum(1 for f in upright_frames if f.confident(j))
        if ok * 2 <= n:
            raise CalibrationPoseInvalid(
                f"{j.value} confident in only {ok}/{n} upright frames")

    mean = mean_skeleton(upright_frames)
    pelvis = mean.position(JointName.PELVIS)
    neck = mean.position(JointName.NECK)
    hip_l = mean.position(JointName.HIP_L)
    hip_r = mean.position(JointName.HIP_R)

    up = neck - pelvis
    norm = np.linalg.norm(up)
    if norm < 1e-9:
        raise CalibrationPoseInvalid("degenerate body axis in upright frames")
    up /= norm

    hip_axis = hip_r - hip_l
    hip_axis[1] = 0.0  # world-horizontal component
    lat = hip_axis - up * (hip_axis @ up)
    norm = np.linalg.norm(lat)
    if norm < 1e-9:
        raise CalibrationPoseInvalid("degenerate hip axis in upright frames")
    lat /= norm
    fwd = np.cross(up, lat)

    from .angles import raw_angle_set  # local import: angles builds on this module

    ref_angles = raw_angle_set(mean, up, fwd, lat)
    return ReferenceFrame(
        origin=(float(pelvis[0]), float(pelvis[1]), float(pelvis[2])),
        up=(float(up[0]), float(up[1]), float(up[2])),
        forward=(float(fwd[0]), float(fwd[1]), float(fwd[2])),
        lateral=(float(lat[0]), float(lat[1]), float(lat[2])),
        reference_angles=ref_angles,
    )


def path_length(positions) -> float:
    """Sum of Euclidean distances between consecutive positions (meters)."""
    pts = np.asarray(positions, dtype=float)
    if pts.size == 0:
        raise EmptySeries("path length needs at least one position")
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if len(pts) == 1:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


# ---------------------------------------------------------------------------
# File formats

HEAD_CSV_HEADER = ["t", "x", "y", "z", "rx", "ry", "rz"]


def save_head_csv(path, trace: Iterable[HeadPoseSample]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEAD_CSV_HEADER)
        for s in trace:
            w.writerow([repr(float(v)) for v in (s.t, *s.pos, *s.orient)])


def load_head_csv(path) -> list[HeadPoseSample]:
    out: list[HeadPoseSample] = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip() for h in header] != HEAD_CSV_HEADER:
            raise InvalidInput(f"bad head-pose CSV header in {path}")
        for row in r:
            if not row:
                continue
            t, x, y, z, rx, ry, rz = (float(c) for c in row)
            out.append(HeadPoseSample(t=t, pos=(x, y, z), orient=(rx, ry, rz)))
    return out


def save_skeleton_jsonl(path, frames: Iterable[SkeletonFrame]) -> None:
    with open(path, "w") as fh:
        for f in frames:
            obj = {
                "t": f.t,
                "camera": f.camera,
                "joints": {
                    j.value: {"p": list(s.pos), "c": s.conf.token}
                    for j, s in ((j, f.joints[j]) for j in ALL_JOINTS)
                },
            }
            fh.write(json.dumps(obj) + "\n")


def load_skeleton_jsonl(path) -> list[SkeletonFrame]:
    frames: list[SkeletonFrame] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            joints = {}
            for name, rec in obj["joints"].items():
                joints[JointName(name)] = JointSample(
                    pos=tuple(float(v) for v in rec["p"]),
                    conf=Confidence.from_token(rec["c"]),
                )
            frames.append(SkeletonFrame(t=float(obj["t"]), camera=int(obj["camera"]), joints=joints))
    return frames
