"""Kinematic-chain synthetic subjects.

Stands in for human participants at desk scale: a parametric 32-joint body
whose trunk tilts rigidly to place the head at a recorded head position,
with knees flexing to absorb crouch. Lateral head deviation therefore
drives the body axis directly, which is what makes head-position channels
informative about body angles in the first place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .calibration import CalibrationProfile, PromptSchedule, run_calibration
from .motion import (
    ALL_JOINTS,
    Confidence,
    HeadPoseSample,
    JointName,
    JointSample,
    SkeletonFrame,
    grid_times,
)
from .rng import SplitMix64

J = JointName

# Joint template for a 1.60 m head height, meters; x lateral, y up, z backward.
_TEMPLATE: dict[JointName, tuple[float, float, float]] = {
    J.PELVIS: (0.0, 0.95, 0.0),
    J.SPINE_NAVEL: (0.0, 1.12, 0.0),
    J.SPINE_CHEST: (0.0, 1.30, 0.0),
    J.NECK: (0.0, 1.48, 0.0),
    J.HEAD: (0.0, 1.60, 0.0),
    J.NOSE: (0.0, 1.63, -0.10),
    J.EYE_L: (-0.035, 1.64, -0.08),
    J.EYE_R: (0.035, 1.64, -0.08),
    J.EAR_L: (-0.07, 1.62, -0.01),
    J.EAR_R: (0.07, 1.62, -0.01),
    J.CLAVICLE_L: (-0.05, 1.44, 0.0),
    J.CLAVICLE_R: (0.05, 1.44, 0.0),
    J.SHOULDER_L: (-0.19, 1.44, 0.0),
    J.SHOULDER_R: (0.19, 1.44, 0.0),
    J.ELBOW_L: (-0.22, 1.16, 0.02),
    J.ELBOW_R: (0.22, 1.16, 0.02),
    J.WRIST_L: (-0.24, 0.92, -0.02),
    J.WRIST_R: (0.24, 0.92, -0.02),
    J.HAND_L: (-0.245, 0.85, -0.04),
    J.HAND_R: (0.245, 0.85, -0.04),
    J.HANDTIP_L: (-0.25, 0.77, -0.06),
    J.HANDTIP_R: (0.25, 0.77, -0.06),
    J.THUMB_L: (-0.22, 0.87, -0.07),
    J.THUMB_R: (0.22, 0.87, -0.07),
    J.HIP_L: (-0.10, 0.90, 0.0),
    J.HIP_R: (0.10, 0.90, 0.0),
    J.KNEE_L: (-0.11, 0.48, 0.01),
    J.KNEE_R: (0.11, 0.48, 0.01),
    J.ANKLE_L: (-0.12, 0.08, 0.02),
    J.ANKLE_R: (0.12, 0.08, 0.02),
    J.FOOT_L: (-0.12, 0.02, -0.10),
    J.FOOT_R: (0.12, 0.02, -0.10),
}

_TRUNK_SET = (J.SPINE_NAVEL, J.SPINE_CHEST, J.NECK)
_HEAD_SET = (J.HEAD, J.NOSE, J.EYE_L, J.EYE_R, J.EAR_L, J.EAR_R)
_GIRDLE_SET = (J.CLAVICLE_L, J.CLAVICLE_R, J.SHOULDER_L, J.SHOULDER_R,
               J.ELBOW_L, J.ELBOW_R, J.WRIST_L, J.WRIST_R,
               J.HAND_L, J.HAND_R, J.HANDTIP_L, J.HANDTIP_R, J.THUMB_L, J.THUMB_R)
_PELVIS_SET = (J.PELVIS, J.HIP_L, J.HIP_R)
_FIXED_SET = (J.ANKLE_L, J.ANKLE_R, J.FOOT_L, J.FOOT_R)


@dataclass(frozen=True)
class BodyModel:
    template_head_height: float = 1.60
    head_yaw_per_m: float = 1.2    # rad of head yaw per meter of lateral lean
    shoulder_twist_per_m: float = -0.6

    def scale_for(self, head_height: float) -> float:
        return head_height / self.template_head_height


def upright_joints(model: BodyModel, profile: CalibrationProfile) -> dict[JointName, np.ndarray]:
    """Template scaled to the subject's head height, anchored at the profile."""
    s = model.scale_for(profile.y_upright)
    anchor = np.array([profile.x_upright, 0.0, profile.z_upright])
    return {j: anchor + s * np.asarray(_TEMPLATE[j], float) for j in ALL_JOINTS}


def frame_from_positions(positions: dict[JointName, np.ndarray], t: float = 0.0,
                         camera: int = 1,
                         conf: Confidence = Confidence.HIGH) -> SkeletonFrame:
    return SkeletonFrame(t=t, camera=camera, joints={
        j: JointSample(pos=(float(p[0]), float(p[1]), float(p[2])), conf=conf)
        for j, p in positions.items()
    })


def upright_frames(model: BodyModel, profile: CalibrationProfile,
                   n: int = 12, rate: float = 25.0) -> list[SkeletonFrame]:
    """Standing reference frames for estimate_reference_frame."""
    joints = upright_joints(model, profile)
    times = grid_times(0.0, rate, n)
    return [frame_from_positions(joints, t=float(times[i])) for i in range(n)]


def _rotate_about_y(offsets: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Rotate (n,3) offsets about +y by per-row angles."""
    c = np.cos(angles)
    s = np.sin(angles)
    x, y, z = offsets[:, 0], offsets[:, 1], offsets[:, 2]
    return np.stack([x * c + z * s, y, -x * s + z * c], axis=1)


def _rodrigues_from_y(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply to (n,3) offsets v the rotations taking e_y to unit rows u."""
    ey = np.array([0.0, 1.0, 0.0])
    axis = np.cross(np.broadcast_to(ey, u.shape), u)
    sin = np.linalg.norm(axis, axis=1)
    cos = u[:, 1]
    safe = sin > 1e-12
    ax = np.where(safe[:, None], axis / np.where(safe, sin, 1.0)[:, None], 0.0)
    crossed = np.cross(ax, v)
    dotted = np.sum(ax * v, axis=1, keepdims=True)
    out = (v * cos[:, None] + crossed * sin[:, None] + ax * dotted * (1.0 - cos[:, None]))
    return np.where(safe[:, None], out, v)


def skeleton_arrays(head_xyz: np.ndarray, model: BodyModel, profile: CalibrationProfile,
                    head_yaw: Optional[np.ndarray] = None,
                    shoulder_twist: Optional[np.ndarray] = None,
                    ) -> tuple[dict[JointName, np.ndarray], dict[JointName, np.ndarray]]:
    """Chain the skeleton under each head position; returns (pos, valid) arrays.

    head_xyz is (n, 3) absolute head positions. The trunk pivots about the
    pelvis to reach the lateral/fore head deviation; residual vertical drop
    lowers the pelvis and flexes the knees (feet stay planted).
    """
    head_xyz = np.asarray(head_xyz, float)
    n = len(head_xyz)
    s = model.scale_for(profile.y_upright)
    tmpl = {j: s * np.asarray(_TEMPLATE[j], float) for j in ALL_JOINTS}
    anchor = np.array([profile.x_upright, 0.0, profile.z_upright])

    dx = head_xyz[:, 0] - profile.x_upright
    dz = head_xyz[:, 2] - profile.z_upright
    trunk_len = tmpl[J.HEAD][1] - tmpl[J.PELVIS][1]
    # keep the tilt inside the reachable cone
    lat_mag = np.hypot(dx, dz)
    cap = 0.85 * trunk_len
    scale = np.where(lat_mag > cap, cap / np.where(lat_mag > 0, lat_mag, 1.0), 1.0)
    dxe = dx * scale
    dze = dz * scale
    uy = np.sqrt(np.maximum(trunk_len ** 2 - dxe ** 2 - dze ** 2, 1e-12))
    u = np.stack([dxe, uy, dze], axis=1) / trunk_len

    pelvis_y0 = tmpl[J.PELVIS][1]
    ankle_y = tmpl[J.ANKLE_L][1]
    pelvis_y = head_xyz[:, 1] - trunk_len * u[:, 1]
    pelvis_y = np.minimum(pelvis_y, pelvis_y0)
    pelvis_y = np.maximum(pelvis_y, ankle_y + 0.5 * (pelvis_y0 - ankle_y))
    pelvis_w = np.stack([np.full(n, anchor[0]), pelvis_y, np.full(n, anchor[2])], axis=1)

    if head_yaw is None:
        head_yaw = model.head_yaw_per_m * dx
    if shoulder_twist is None:
        shoulder_twist = model.shoulder_twist_per_m * dx

    pos: dict[JointName, np.ndarray] = {}
    valid = {j: np.ones(n, dtype=bool) for j in ALL_JOINTS}
    p_pelvis = tmpl[J.PELVIS]

    for j in _PELVIS_SET:
        pos[j] = pelvis_w + (tmpl[j] - p_pelvis)
    for j in _FIXED_SET:
        pos[j] = np.broadcast_to(anchor + tmpl[j], (n, 3)).copy()

    for j in _TRUNK_SET:
        off = np.broadcast_to(tmpl[j] - p_pelvis, (n, 3))
        pos[j] = pelvis_w + _rodrigues_from_y(u, off)
    neck_off = tmpl[J.NECK] - p_pelvis
    for j in _HEAD_SET:
        local = np.broadcast_to(tmpl[j] - tmpl[J.NECK], (n, 3))
        off = neck_off + _rotate_about_y(local, head_yaw)
        pos[j] = pelvis_w + _rodrigues_from_y(u, off)
    chest_off = tmpl[J.SPINE_CHEST] - p_pelvis
    for j in _GIRDLE_SET:
        local = np.broadcast_to(tmpl[j] - tmpl[J.SPINE_CHEST], (n, 3))
        off = chest_off + _rotate_about_y(local, shoulder_twist)
        pos[j] = pelvis_w + _rodrigues_from_y(u, off)

    # Knee IK: two-link legs from planted ankles to the (possibly lowered) hips.
    fwd = np.array([0.0, 0.0, -1.0])
    for hip, knee, ankle in ((J.HIP_L, J.KNEE_L, J.ANKLE_L), (J.HIP_R, J.KNEE_R, J.ANKLE_R)):
        thigh = float(np.linalg.norm(tmpl[hip] - tmpl[knee]))
        shank = float(np.linalg.norm(tmpl[knee] - tmpl[ankle]))
        base = pos[hip] - pos[ankle]
        d = np.linalg.norm(base, axis=1)
        d = np.clip(d, abs(thigh - shank) + 1e-9, thigh + shank)
        bhat = base / d[:, None]
        perp = fwd - bhat * (bhat @ fwd)[:, None]
        pn = np.linalg.norm(perp, axis=1)
        perp = perp / np.where(pn > 1e-12, pn, 1.0)[:, None]
        cos_a = np.clip((shank ** 2 + d ** 2 - thigh ** 2) / (2.0 * shank * d), -1.0, 1.0)
        sin_a = np.sqrt(np.maximum(1.0 - cos_a ** 2, 0.0))
        pos[knee] = pos[ankle] + shank * (cos_a[:, None] * bhat + sin_a[:, None] * perp)

    return pos, valid


def skeleton_frames(head_trace: Sequence[HeadPoseSample], model: BodyModel,
                    profile: CalibrationProfile, camera: int = 1) -> list[SkeletonFrame]:
    """SkeletonFrame objects for a head trace (all joints HIGH confidence)."""
    head_xyz = np.array([s.pos for s in head_trace])
    pos, _ = skeleton_arrays(head_xyz, model, profile)
    frames = []
    for i, s in enumerate(head_trace):
        joints = {
            j: JointSample(pos=(float(pos[j][i, 0]), float(pos[j][i, 1]), float(pos[j][i, 2])),
                           conf=Confidence.HIGH)
            for j in ALL_JOINTS
        }
        frames.append(SkeletonFrame(t=s.t, camera=camera, joints=joints))
    return frames


# ---------------------------------------------------------------------------
# Synthetic cohort inputs

CALIBRATION_WINDOWS = {
    "upright": (0.0, 2.0),
    "left": (3.0, 5.0),
    "right": (6.0, 8.0),
    "front": (9.0, 11.0),
    "back": (12.0, 14.0),
}


def calibration_session(seed: int, rate: float = 50.0) -> tuple[list[HeadPoseSample], PromptSchedule]:
    """Guided-lean recording for one synthetic subject.

    Subject anthropometrics and comfortable ranges are drawn from the seed;
    each lean window is a half-sine reaching its extremum exactly at the
    window center, so the recovered ranges equal the drawn ones.
    """
    rng = SplitMix64(seed, "calibration")
    x0 = rng.uniform(-0.05, 0.05)
    z0 = rng.uniform(-0.05, 0.05)
    y_up = rng.uniform(1.55, 1.75)
    x_left = rng.uniform(0.20, 0.30)
    x_right = rng.uniform(0.18, 0.28)
    z_front = rng.uniform(0.16, 0.26)
    z_back = rng.uniform(0.12, 0.22)

    schedule = PromptSchedule(windows=dict(CALIBRATION_WINDOWS))
    end = max(b for _, b in CALIBRATION_WINDOWS.values())
    n = int(math.floor(end * rate + 1e-9)) + 1
    times = grid_times(0.0, rate, n)

    def lean(t: float, window: str) -> float:
        a, b = CALIBRATION_WINDOWS[window]
        if not (a <= t <= b):
            return 0.0
        return math.sin(math.pi * (t - a) / (b - a))

    out = []
    for t in times:
        t = float(t)
        x = x0 - x_left * lean(t, "left") + x_right * lean(t, "right")
        z = z0 - z_front * lean(t, "front") + z_back * lean(t, "back")
        out.append(HeadPoseSample(t=t, pos=(x, y_up, z)))
    return out, schedule


def make_profile(seed: int) -> CalibrationProfile:
    """Convenience: run the real calibration on a synthetic session."""
    trace, schedule = calibration_session(seed)
    return run_calibration(trace, schedule)


def exercise_head_trace(profile: CalibrationProfile, seed: int,
                        duration: float = 60.0, rate: float = 25.0) -> list[HeadPoseSample]:
    """Free-form exercise motion exciting all head channels.

    Three slow incommensurate sines with seeded phases drive the lateral,
    fore/aft and crouch axes; each axis mixes a little of the other two so
    every pose channel shares variance with every body angle (the way one
    human's channels do), while its own base signal stays dominant.
    """
    rng = SplitMix64(seed, "exercise")
    phases = [rng.uniform(0.0, 2.0 * math.pi) for _ in range(3)]
    freqs = (0.23, 0.147, 0.091)
    ax = 0.55 * min(profile.x_left, profile.x_right)
    az = 0.55 * min(profile.z_front, profile.z_back)
    crouch = 2.2 * profile.stance_offset

    n = int(math.floor(duration * rate + 1e-9)) + 1
    times = grid_times(0.0, rate, n)
    out = []
    for t in times:
        t = float(t)
        s1, s2, s3 = (math.sin(2.0 * math.pi * f * t + ph)
                      for f, ph in zip(freqs, phases))
        x = profile.x_upright + ax * (s1 + 0.30 * s2 + 0.22 * s3)
        z = profile.z_upright + az * (s2 + 0.28 * s1 + 0.20 * s3)
        # crouch shallows with the shared mix so every deviation axis
        # correlates positively with the others and no drive paths cancel
        ym = (s3 + 0.35 * s1 + 0.30 * s2) / 1.65
        y = profile.y_upright - crouch * (0.55 - 0.42 * ym)
        dx = x - profile.x_upright
        dz = z - profile.z_upright
        trunk = 0.67
        roll = -0.8 * math.asin(max(-0.99, min(0.99, dx / trunk)))
        pitch = 0.7 * math.asin(max(-0.99, min(0.99, -dz / trunk)))
        yaw = 0.6 * dx
        out.append(HeadPoseSample(t=t, pos=(x, y, z), orient=(pitch, yaw, roll)))
    return out
