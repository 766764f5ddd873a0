"""Exactly-aligned synthetic skeleton and known-rotation builders.

The upright pose here is constructed so that every body angle has a closed
form under single-axis rotations: trunk/legs are exactly vertical, the
shoulder/hip/ear axes exactly lateral. Tests rotate joint groups about
known axes and compare computed angles against the analytic values.
"""

from __future__ import annotations

import math

import numpy as np

from skitrain.motion import ALL_JOINTS, Confidence, JointName, JointSample, SkeletonFrame

J = JointName

UPRIGHT: dict[JointName, tuple[float, float, float]] = {
    J.PELVIS: (0.0, 1.00, 0.0),
    J.SPINE_NAVEL: (0.0, 1.15, 0.0),
    J.SPINE_CHEST: (0.0, 1.30, 0.0),
    J.NECK: (0.0, 1.50, 0.0),
    J.HEAD: (0.0, 1.65, 0.0),
    J.NOSE: (0.0, 1.66, -0.10),
    J.EYE_L: (-0.03, 1.67, -0.08),
    J.EYE_R: (0.03, 1.67, -0.08),
    J.EAR_L: (-0.08, 1.64, 0.0),
    J.EAR_R: (0.08, 1.64, 0.0),
    J.CLAVICLE_L: (-0.05, 1.45, 0.0),
    J.CLAVICLE_R: (0.05, 1.45, 0.0),
    J.SHOULDER_L: (-0.20, 1.45, 0.0),
    J.SHOULDER_R: (0.20, 1.45, 0.0),
    J.ELBOW_L: (-0.23, 1.18, 0.0),
    J.ELBOW_R: (0.23, 1.18, 0.0),
    J.WRIST_L: (-0.25, 0.95, 0.0),
    J.WRIST_R: (0.25, 0.95, 0.0),
    J.HAND_L: (-0.255, 0.88, 0.0),
    J.HAND_R: (0.255, 0.88, 0.0),
    J.HANDTIP_L: (-0.26, 0.80, 0.0),
    J.HANDTIP_R: (0.26, 0.80, 0.0),
    J.THUMB_L: (-0.23, 0.90, -0.03),
    J.THUMB_R: (0.23, 0.90, -0.03),
    J.HIP_L: (-0.10, 0.95, 0.0),
    J.HIP_R: (0.10, 0.95, 0.0),
    J.KNEE_L: (-0.10, 0.50, 0.0),
    J.KNEE_R: (0.10, 0.50, 0.0),
    J.ANKLE_L: (-0.10, 0.10, 0.0),
    J.ANKLE_R: (0.10, 0.10, 0.0),
    J.FOOT_L: (-0.10, 0.02, -0.15),
    J.FOOT_R: (0.10, 0.02, -0.15),
}

TRUNK_GROUP = (J.SPINE_NAVEL, J.SPINE_CHEST, J.NECK, J.HEAD, J.NOSE,
               J.EYE_L, J.EYE_R, J.EAR_L, J.EAR_R, J.CLAVICLE_L, J.CLAVICLE_R,
               J.SHOULDER_L, J.SHOULDER_R, J.ELBOW_L, J.ELBOW_R,
               J.WRIST_L, J.WRIST_R, J.HAND_L, J.HAND_R,
               J.HANDTIP_L, J.HANDTIP_R, J.THUMB_L, J.THUMB_R)
SHOULDER_GROUP = (J.CLAVICLE_L, J.CLAVICLE_R, J.SHOULDER_L, J.SHOULDER_R,
                  J.ELBOW_L, J.ELBOW_R, J.WRIST_L, J.WRIST_R,
                  J.HAND_L, J.HAND_R, J.HANDTIP_L, J.HANDTIP_R,
                  J.THUMB_L, J.THUMB_R)
HEAD_GROUP = (J.HEAD, J.NOSE, J.EYE_L, J.EYE_R, J.EAR_L, J.EAR_R)

_MIRROR_SWAP = {}
for j in ALL_JOINTS:
    name = j.value
    if name.endswith("_L"):
        _MIRROR_SWAP[j] = JointName(name[:-2] + "_R")
    elif name.endswith("_R"):
        _MIRROR_SWAP[j] = JointName(name[:-2] + "_L")
    else:
        _MIRROR_SWAP[j] = j


def rotation(axis, angle: float) -> np.ndarray:
    a = np.asarray(axis, float)
    a = a / np.linalg.norm(a)
    c, s = math.cos(angle), math.sin(angle)
    x, y, z = a
    return np.array([
        [c + x * x * (1 - c), x * y * (1 - c) - z * s, x * z * (1 - c) + y * s],
        [y * x * (1 - c) + z * s, c + y * y * (1 - c), y * z * (1 - c) - x * s],
        [z * x * (1 - c) - y * s, z * y * (1 - c) + x * s, c + z * z * (1 - c)],
    ])


def upright_positions() -> dict[JointName, np.ndarray]:
    return {j: np.asarray(UPRIGHT[j], float) for j in ALL_JOINTS}


def rotate_group(pos: dict, group, axis, angle: float, pivot) -> dict:
    """Rotate the listed joints about an axis through the pivot point."""
    rot = rotation(axis, angle)
    pivot = np.asarray(pivot, float)
    out = dict(pos)
    for j in group:
        out[j] = pivot + rot @ (pos[j] - pivot)
    return out


def to_frame(pos: dict, t: float = 0.0, camera: int = 1,
             conf: Confidence = Confidence.HIGH) -> SkeletonFrame:
    return SkeletonFrame(t=t, camera=camera, joints={
        j: JointSample(pos=(float(p[0]), float(p[1]), float(p[2])), conf=conf)
        for j, p in pos.items()
    })


def upright_frames(n: int = 12) -> list[SkeletonFrame]:
    pos = upright_positions()
    return [to_frame(pos, t=0.04 * i) for i in range(n)]


def mirror_positions(pos: dict) -> dict:
    """Reflect across the sagittal plane (x -> -x) and swap left/right."""
    out = {}
    for j, p in pos.items():
        out[_MIRROR_SWAP[j]] = np.array([-p[0], p[1], p[2]])
    return out


def lean_lateral(pos: dict, theta: float) -> dict:
    """Trunk lean toward +x; sagittal angle becomes exactly theta."""
    return rotate_group(pos, TRUNK_GROUP, (0.0, 0.0, -1.0), theta, pos[J.PELVIS])


def lean_forward(pos: dict, phi: float) -> dict:
    """Trunk lean toward -z; frontal angle becomes exactly phi."""
    return rotate_group(pos, TRUNK_GROUP, (1.0, 0.0, 0.0), -phi, pos[J.PELVIS])


def bend_knee(pos: dict, side: str, phi: float) -> dict:
    knee = J.KNEE_L if side == "L" else J.KNEE_R
    ankle = J.ANKLE_L if side == "L" else J.ANKLE_R
    foot = J.FOOT_L if side == "L" else J.FOOT_R
    return rotate_group(pos, (ankle, foot), (1.0, 0.0, 0.0), phi, pos[knee])


def flex_hip(pos: dict, side: str, phi: float) -> dict:
    hip = J.HIP_L if side == "L" else J.HIP_R
    group = ((J.KNEE_L, J.ANKLE_L, J.FOOT_L) if side == "L"
             else (J.KNEE_R, J.ANKLE_R, J.FOOT_R))
    return rotate_group(pos, group, (1.0, 0.0, 0.0), phi, pos[hip])


def twist_shoulders(pos: dict, psi: float) -> dict:
    return rotate_group(pos, SHOULDER_GROUP, (0.0, 1.0, 0.0), psi, pos[J.SPINE_CHEST])


def yaw_head(pos: dict, psi: float) -> dict:
    return rotate_group(pos, HEAD_GROUP, (0.0, 1.0, 0.0), psi, pos[J.NECK])


def tilt_head(pos: dict, phi: float) -> dict:
    return rotate_group(pos, HEAD_GROUP, (1.0, 0.0, 0.0), phi, pos[J.NECK])
