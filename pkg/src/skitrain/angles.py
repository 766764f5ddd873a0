"""Nine body-model angles computed from skeleton frames.

All angles are reported as change from the upright reference pose, in
radians. Angles whose joints are missing or tracked below the confidence
floor propagate as gaps (None / NaN), never as zeros.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields, replace
from typing import Optional, Sequence

import numpy as np

from .errors import EmptySeries, InvalidInput
from .motion import (
    ALL_JOINTS,
    Confidence,
    JointName,
    JointSample,
    ReferenceFrame,
    SkeletonFrame,
    grid_times,
    wrap_pi,
)

J = JointName


@dataclass(frozen=True)
class AngleSet:
    """One value per tracked body angle; None marks an absent angle."""

    sagittal_plane: Optional[float] = None
    frontal_plane: Optional[float] = None
    knee_r: Optional[float] = None
    knee_l: Optional[float] = None
    hip_r: Optional[float] = None
    hip_l: Optional[float] = None
    upper_body_twist: Optional[float] = None
    head_tilt: Optional[float] = None
    head_rotation: Optional[float] = None

    def as_dict(self) -> dict[str, Optional[float]]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


ANGLE_FIELDS: tuple[str, ...] = tuple(f.name for f in fields(AngleSet))

# CSV column tokens, in export order, mapped to AngleSet fields.
ANGLE_COLUMNS: tuple[tuple[str, str], ...] = (
    ("sagittal", "sagittal_plane"),
    ("frontal", "frontal_plane"),
    ("kneeR", "knee_r"),
    ("kneeL", "knee_l"),
    ("hipR", "hip_r"),
    ("hipL", "hip_l"),
    ("twist", "upper_body_twist"),
    ("headTilt", "head_tilt"),
    ("headRot", "head_rotation"),
)

# Joints each angle needs at or above the confidence floor.
REQUIRED_JOINTS: dict[str, tuple[JointName, ...]] = {
    "sagittal_plane": (J.PELVIS, J.NECK),
    "frontal_plane": (J.PELVIS, J.NECK),
    "knee_r": (J.HIP_R, J.KNEE_R, J.ANKLE_R),
    "knee_l": (J.HIP_L, J.KNEE_L, J.ANKLE_L),
    "hip_r": (J.PELVIS, J.SPINE_CHEST, J.HIP_R, J.KNEE_R),
    "hip_l": (J.PELVIS, J.SPINE_CHEST, J.HIP_L, J.KNEE_L),
    "upper_body_twist": (J.SHOULDER_L, J.SHOULDER_R, J.HIP_L, J.HIP_R),
    "head_tilt": (J.PELVIS, J.NECK, J.HEAD),
    "head_rotation": (J.EAR_L, J.EAR_R, J.SHOULDER_L, J.SHOULDER_R),
}

ANGLE_JOINTS: tuple[JointName, ...] = tuple(
    sorted({j for js in REQUIRED_JOINTS.values() for j in js}, key=lambda j: j.value))


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    n = np.where(n > 0.0, n, 1.0)
    return v / n


def _angle_between(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # atan2 form stays well-conditioned near collinearity, where acos of the
    # dot product loses half the significant digits
    un = _unit(u)
    vn = _unit(v)
    cross = np.linalg.norm(np.cross(un, vn), axis=-1)
    dot = np.sum(un * vn, axis=-1)
    return np.arctan2(cross, dot)


def _signed_about(axis: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Signed angle from a to b around axis, using their projections."""
    a_h = a - np.sum(a * axis, axis=-1, keepdims=True) * axis
    b_h = b - np.sum(b * axis, axis=-1, keepdims=True) * axis
    cross = np.cross(a_h, b_h)
    return np.arctan2(np.sum(cross * axis, axis=-1), np.sum(a_h * b_h, axis=-1))


def _raw_angle_arrays(pos: dict[JointName, np.ndarray],
                      valid: dict[JointName, np.ndarray],
                      up: np.ndarray, fwd: np.ndarray, lat: np.ndarray,
                      ) -> dict[str, np.ndarray]:
    """Vectorized raw (un-referenced) angles; NaN where joints are missing.

    pos maps joints to (n, 3) arrays, valid to (n,) bool masks. Only joints
    in ANGLE_JOINTS are consulted.
    """

    def need(*joints: JointName) -> np.ndarray:
        m = valid[joints[0]].copy()
        for j in joints[1:]:
            m &= valid[j]
        return m

    n = len(next(iter(pos.values())))
    out: dict[str, np.ndarray] = {}

    body = _unit(pos[J.NECK] - pos[J.PELVIS])
    m = need(J.PELVIS, J.NECK)
    out["sagittal_plane"] = np.where(m, np.arcsin(np.clip(body @ lat, -1.0, 1.0)), np.nan)
    out["frontal_plane"] = np.where(m, np.arcsin(np.clip(body @ fwd, -1.0, 1.0)), np.nan)

    for field, hip, knee, ankle in (
        ("knee_r", J.HIP_R, J.KNEE_R, J.ANKLE_R),
        ("knee_l", J.HIP_L, J.KNEE_L, J.ANKLE_L),
    ):
        m = need(hip, knee, ankle)
        ang = _angle_between(pos[knee] - pos[hip], pos[ankle] - pos[knee])
        out[field] = np.where(m, math.pi - ang, np.nan)

    trunk = pos[J.SPINE_CHEST] - pos[J.PELVIS]
    for field, hip, knee in (("hip_r", J.HIP_R, J.KNEE_R), ("hip_l", J.HIP_L, J.KNEE_L)):
        m = need(J.PELVIS, J.SPINE_CHEST, hip, knee)
        out[field] = np.where(m, _angle_between(trunk, pos[knee] - pos[hip]), np.nan)

    shoulder_axis = pos[J.SHOULDER_R] - pos[J.SHOULDER_L]
    hip_axis = pos[J.HIP_R] - pos[J.HIP_L]
    m = need(J.SHOULDER_L, J.SHOULDER_R, J.HIP_L, J.HIP_R)
    out["upper_body_twist"] = np.where(m, _signed_about(up, hip_axis, shoulder_axis), np.nan)

    m = need(J.PELVIS, J.NECK, J.HEAD)
    out["head_tilt"] = np.where(m, _angle_between(pos[J.HEAD] - pos[J.NECK], body), np.nan)

    ear_axis = pos[J.EAR_R] - pos[J.EAR_L]
    m = need(J.EAR_L, J.EAR_R, J.SHOULDER_L, J.SHOULDER_R)
    out["head_rotation"] = np.where(m, _signed_about(up, shoulder_axis, ear_axis), np.nan)

    for k, v in out.items():
        if v.shape != (n,):
            raise AssertionError(f"angle column {k} has shape {v.shape}")
    return out


def _frame_arrays(frame: SkeletonFrame, min_conf: Confidence):
    pos = {}
    valid = {}
    for j in ANGLE_JOINTS:
        s = frame.joints[j]
        pos[j] = np.asarray(s.pos, float).reshape(1, 3)
        valid[j] = np.array([s.conf >= min_conf])
    return pos, valid


def raw_angle_set(frame: SkeletonFrame, up, fwd, lat,
                  min_conf: Confidence = Confidence.MEDIUM) -> AngleSet:
    """Raw (un-referenced) angles of a single frame against the given axes."""
    up, fwd, lat = (np.asarray(v, float) for v in (up, fwd, lat))
    pos, valid = _frame_arrays(frame, min_conf)
    cols = _raw_angle_arrays(pos, valid, up, fwd, lat)
    return AngleSet(**{k: (float(v[0]) if np.isfinite(v[0]) else None) for k, v in cols.items()})


_SIGNED_FIELDS = ("upper_body_twist", "head_rotation")


def _delta(field: str, raw: Optional[float], ref: Optional[float]) -> Optional[float]:
    if raw is None or ref is None:
        return None
    d = raw - ref
    if field in _SIGNED_FIELDS:
        d = wrap_pi(d)
    return d


def compute_angles(frame: SkeletonFrame, ref: ReferenceFrame,
                   min_conf: Confidence = Confidence.MEDIUM) -> AngleSet:
    """Nine angle deltas of one frame relative to the upright reference."""
    raw = raw_angle_set(frame, ref.up, ref.forward, ref.lateral, min_conf)
    ref_angles = ref.reference_angles
    return AngleSet(**{
        f: _delta(f, getattr(raw, f), getattr(ref_angles, f)) for f in ANGLE_FIELDS
    })


@dataclass(frozen=True)
class CameraAssignment:
    """Chosen tracking camera per joint; untracked joints are flagged."""

    camera_for: dict[JointName, int]
    untrackable: frozenset[JointName]

    def __post_init__(self):
        missing = [j for j in ANGLE_JOINTS if j not in self.camera_for]
        if missing:
            raise InvalidInput(f"assignment missing joints: {missing}")


def select_cameras(streams: dict[int, Sequence[SkeletonFrame]]) -> CameraAssignment:
    """Pick, per joint, the camera with the best confident-frame fraction.

    Ties break toward the lower camera id. Joints with no confident frame
    on any camera keep the lowest id but are flagged untrackable.
    """
    if not streams or any(len(fs) == 0 for fs in streams.values()):
        raise EmptySeries("need at least one non-empty camera stream")
    cam_ids = sorted(streams)
    camera_for: dict[JointName, int] = {}
    untrackable: set[JointName] = set()
    for j in ALL_JOINTS:
        best_cam = cam_ids[0]
        best_frac = -1.0
        for cam in cam_ids:
            frames = streams[cam]
            frac = sum(1 for f in frames if f.confident(j)) / len(frames)
            if frac > best_frac:
                best_cam, best_frac = cam, frac
        camera_for[j] = best_cam
        if best_frac == 0.0:
            untrackable.add(j)
    return CameraAssignment(camera_for=camera_for, untrackable=frozenset(untrackable))


def filter_confidence(frames: Sequence[SkeletonFrame],
                      min_conf: Confidence = Confidence.MEDIUM) -> list[SkeletonFrame]:
    """Demote joints below min_conf to NONE (positions kept, ignored later)."""
    out = []
    for f in frames:
        joints = {}
        changed = False
        for j, s in f.joints.items():
            if s.conf != Confidence.NONE and s.conf < min_conf:
                joints[j] = JointSample(pos=s.pos, conf=Confidence.NONE)
                changed = True
            else:
                joints[j] = s
        out.append(replace(f, joints=joints) if changed else f)
    return out


@dataclass(frozen=True)
class AngleSeries:
    """Angle deltas on a uniform clock; gaps are NaN."""

    rate: float
    start: float
    columns: dict[str, np.ndarray]  # AngleSet field -> (n,) array

    @property
    def times(self) -> np.ndarray:
        return grid_times(self.start, self.rate, len(self))

    def __len__(self) -> int:
        return len(next(iter(self.columns.values())))

    def row(self, i: int) -> AngleSet:
        return AngleSet(**{
            f: (float(v[i]) if np.isfinite(v[i]) else None) for f, v in self.columns.items()
        })


def _joint_series(frames: Sequence[SkeletonFrame], joint: JointName,
                  grid: np.ndarray, min_conf: Confidence, max_gap: float):
    """Interpolate one joint onto the grid; invalid outside confident spans."""
    knots_t = np.array([f.t for f in frames if f.confident(joint, min_conf)])
    if len(knots_t) < 2:
        return np.zeros((len(grid), 3)), np.zeros(len(grid), dtype=bool)
    knots_p = np.array([f.position(joint) for f in frames if f.confident(joint, min_conf)])
    pos = np.column_stack([np.interp(grid, knots_t, knots_p[:, k]) for k in range(3)])
    idx = np.searchsorted(knots_t, grid, side="right")
    inside = (grid >= knots_t[0]) & (grid <= knots_t[-1])
    lo = np.clip(idx - 1, 0, len(knots_t) - 1)
    hi = np.clip(idx, 0, len(knots_t) - 1)
    gap = knots_t[hi] - knots_t[lo]
    valid = inside & (gap <= max_gap)
    return pos, valid


def angles_from_arrays(pos: dict[JointName, np.ndarray],
                       valid: dict[JointName, np.ndarray],
                       ref: ReferenceFrame, rate: float, start: float) -> AngleSeries:
    """Angle-delta series straight from joint position arrays."""
    up, fwd, lat = (np.asarray(v, float) for v in (ref.up, ref.forward, ref.lateral))
    raw = _raw_angle_arrays(pos, valid, up, fwd, lat)
    cols = {}
    for f in ANGLE_FIELDS:
        r = getattr(ref.reference_angles, f)
        if r is None:
            cols[f] = np.full(len(raw[f]), np.nan)
        elif f in _SIGNED_FIELDS:
            d = raw[f] - r
            cols[f] = np.arctan2(np.sin(d), np.cos(d))
        else:
            cols[f] = raw[f] - r
    return AngleSeries(rate=rate, start=start, columns=cols)


def angle_series(streams: dict[int, Sequence[SkeletonFrame]], ref: ReferenceFrame,
                 assignment: CameraAssignment | None = None,
                 min_conf: Confidence = Confidence.MEDIUM,
                 rate: float = 25.0, max_gap: float = 0.25) -> AngleSeries:
    """Merge per-camera streams into one angle-delta series.

    Each joint is taken from its assigned camera, interpolated onto a common
    clock, and masked out wherever the source has no confident bracketing
    samples within max_gap seconds.
    """
    if assignment is None:
        assignment = select_cameras(streams)
    spans = [(fs[0].t, fs[-1].t) for fs in streams.values() if len(fs)]
    if not spans:
        raise EmptySeries("no skeleton frames")
    t0 = min(s for s, _ in spans)
    t1 = max(e for _, e in spans)
    n = int(math.floor((t1 - t0) * rate + 1e-9)) + 1
    grid = grid_times(t0, rate, n)

    pos: dict[JointName, np.ndarray] = {}
    valid: dict[JointName, np.ndarray] = {}
    for j in ANGLE_JOINTS:
        cam = assignment.camera_for[j]
        pos[j], valid[j] = _joint_series(streams[cam], j, grid, min_conf, max_gap)
    return angles_from_arrays(pos, valid, ref, rate, t0)


ANGLE_CSV_HEADER = ["t"] + [col for col, _ in ANGLE_COLUMNS]


def save_angle_csv(path, series: AngleSeries) -> None:
    times = series.times
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ANGLE_CSV_HEADER)
        for i in range(len(series)):
            row = [repr(float(times[i]))]
            for _, field in ANGLE_COLUMNS:
                v = series.columns[field][i]
                row.append(repr(float(v)) if np.isfinite(v) else "")
            w.writerow(row)


def load_angle_csv(path) -> AngleSeries:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip() for h in header] != ANGLE_CSV_HEADER:
            raise InvalidInput(f"bad angle CSV header in {path}")
        times = []
        rows = []
        for row in r:
            if not row:
                continue
            times.append(float(row[0]))
            rows.append([float(c) if c != "" else np.nan for c in row[1:]])
    if len(times) < 1:
        raise EmptySeries(f"no angle rows in {path}")
    arr = np.asarray(rows, float)
    if len(times) > 1:
        rate = (len(times) - 1) / (times[-1] - times[0])
    else:
        rate = 25.0
    cols = {field: arr[:, i] for i, (_, field) in enumerate(ANGLE_COLUMNS)}
    return AngleSeries(rate=rate, start=times[0], columns=cols)
