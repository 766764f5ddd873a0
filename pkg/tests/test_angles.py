"""Tests for the nine body angles: analytic oracles, symmetry, filtering."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle_skeleton as osk
from skitrain.angles import (
    ANGLE_FIELDS,
    AngleSet,
    angle_series,
    compute_angles,
    filter_confidence,
    load_angle_csv,
    save_angle_csv,
    select_cameras,
)
from skitrain.motion import (
    ALL_JOINTS,
    Confidence,
    JointName,
    JointSample,
    ReferenceFrame,
    SkeletonFrame,
    estimate_reference_frame,
)

J = JointName


@pytest.fixture(scope="module")
def ref() -> ReferenceFrame:
    return estimate_reference_frame(osk.upright_frames())


def angles_of(pos, ref) -> AngleSet:
    return compute_angles(osk.to_frame(pos), ref)


class TestComputeAngles:
    def test_reference_pose_is_all_zero(self, ref):
        a = compute_angles(osk.to_frame(osk.upright_positions()), ref)
        for f in ANGLE_FIELDS:
            assert getattr(a, f) == 0.0

    def test_pure_lateral_lean_30_degrees(self, ref):
        theta = math.radians(30.0)
        a = angles_of(osk.lean_lateral(osk.upright_positions(), theta), ref)
        assert a.sagittal_plane == pytest.approx(theta, abs=1e-9)
        assert a.frontal_plane == pytest.approx(0.0, abs=1e-9)

    def test_pure_forward_lean(self, ref):
        phi = math.radians(20.0)
        a = angles_of(osk.lean_forward(osk.upright_positions(), phi), ref)
        assert a.frontal_plane == pytest.approx(phi, abs=1e-9)
        assert a.sagittal_plane == pytest.approx(0.0, abs=1e-9)

    def test_knee_bend_analytic(self, ref):
        phi = math.radians(40.0)
        a = angles_of(osk.bend_knee(osk.upright_positions(), "R", phi), ref)
        assert a.knee_r == pytest.approx(-abs(phi), abs=1e-9)
        assert a.knee_l == pytest.approx(0.0, abs=1e-9)
        assert a.hip_r == pytest.approx(0.0, abs=1e-9)

    def test_hip_flex_analytic(self, ref):
        phi = math.radians(25.0)
        a = angles_of(osk.flex_hip(osk.upright_positions(), "L", phi), ref)
        assert a.hip_l == pytest.approx(-abs(phi), abs=1e-9)
        assert a.knee_l == pytest.approx(0.0, abs=1e-9)
        assert a.hip_r == pytest.approx(0.0, abs=1e-9)

    def test_shoulder_twist_analytic(self, ref):
        psi = math.radians(15.0)
        a = angles_of(osk.twist_shoulders(osk.upright_positions(), psi), ref)
        assert a.upper_body_twist == pytest.approx(psi, abs=1e-9)
        # ears stay put, so head rotation relative to the shoulders flips
        assert a.head_rotation == pytest.approx(-psi, abs=1e-9)

    def test_head_yaw_analytic(self, ref):
        psi = math.radians(35.0)
        a = angles_of(osk.yaw_head(osk.upright_positions(), psi), ref)
        assert a.head_rotation == pytest.approx(psi, abs=1e-9)
        assert a.upper_body_twist == pytest.approx(0.0, abs=1e-9)

    def test_head_tilt_analytic(self, ref):
        phi = math.radians(18.0)
        a = angles_of(osk.tilt_head(osk.upright_positions(), phi), ref)
        assert a.head_tilt == pytest.approx(abs(phi), abs=1e-9)
        assert a.head_rotation == pytest.approx(0.0, abs=1e-9)

    def test_first_order_small_rotation(self, ref):
        theta = 1e-4
        a = angles_of(osk.lean_lateral(osk.upright_positions(), theta), ref)
        assert abs(a.sagittal_plane - theta) <= 1e-7
        b = angles_of(osk.lean_forward(osk.upright_positions(), theta), ref)
        assert abs(b.frontal_plane - theta) <= 1e-7

    def test_missing_joint_gives_absent_not_zero(self, ref):
        pos = osk.upright_positions()
        frame = osk.to_frame(osk.lean_lateral(pos, 0.3))
        joints = dict(frame.joints)
        joints[J.KNEE_R] = JointSample(pos=joints[J.KNEE_R].pos, conf=Confidence.NONE)
        frame = SkeletonFrame(t=0.0, camera=1, joints=joints)
        a = compute_angles(frame, ref)
        assert a.knee_r is None
        assert a.hip_r is None
        assert a.sagittal_plane is not None

    @given(st.floats(-0.5, 0.5), st.floats(0.0, 1.0), st.floats(-0.4, 0.4))
    @settings(max_examples=40, deadline=None)
    def test_rigid_motion_invariance(self, yaw, shift, roll):
        ref_local = estimate_reference_frame(osk.upright_frames())
        pos = osk.upright_positions()
        pos = osk.lean_lateral(pos, 0.25)
        pos = osk.bend_knee(pos, "L", 0.5)
        base = compute_angles(osk.to_frame(pos), ref_local)

        rot = osk.rotation((0, 1, 0), yaw) @ osk.rotation((0, 0, 1), roll)
        t = np.array([shift, 0.3 * shift, -shift])
        moved = {j: rot @ p + t for j, p in pos.items()}
        ref_moved = ReferenceFrame(
            origin=tuple(rot @ np.asarray(ref_local.origin) + t),
            up=tuple(rot @ np.asarray(ref_local.up)),
            forward=tuple(rot @ np.asarray(ref_local.forward)),
            lateral=tuple(rot @ np.asarray(ref_local.lateral)),
            reference_angles=ref_local.reference_angles,
        )
        moved_angles = compute_angles(osk.to_frame(moved), ref_moved)
        for f in ANGLE_FIELDS:
            assert getattr(moved_angles, f) == pytest.approx(getattr(base, f), abs=1e-9)

    def test_mirror_antisymmetry(self, ref):
        pos = osk.upright_positions()
        pos = osk.lean_lateral(pos, 0.3)
        pos = osk.bend_knee(pos, "R", 0.6)
        pos = osk.twist_shoulders(pos, 0.2)
        pos = osk.yaw_head(pos, 0.25)
        a = angles_of(pos, ref)
        b = angles_of(osk.mirror_positions(pos), ref)
        assert b.sagittal_plane == pytest.approx(-a.sagittal_plane, abs=1e-9)
        assert b.upper_body_twist == pytest.approx(-a.upper_body_twist, abs=1e-9)
        assert b.head_rotation == pytest.approx(-a.head_rotation, abs=1e-9)
        assert b.knee_l == pytest.approx(a.knee_r, abs=1e-9)
        assert b.knee_r == pytest.approx(a.knee_l, abs=1e-9)
        assert b.hip_l == pytest.approx(a.hip_r, abs=1e-9)
        assert b.hip_r == pytest.approx(a.hip_l, abs=1e-9)
        assert b.frontal_plane == pytest.approx(a.frontal_plane, abs=1e-9)
        assert b.head_tilt == pytest.approx(a.head_tilt, abs=1e-9)


def _stream(conf: Confidence, n=10, camera=1, t0=0.0):
    pos = osk.upright_positions()
    return [osk.to_frame(pos, t=t0 + 0.04 * i, camera=camera, conf=conf) for i in range(n)]


class TestSelectCameras:
    def test_dominant_camera_wins(self):
        assignment = select_cameras({1: _stream(Confidence.HIGH),
                                     2: _stream(Confidence.LOW, camera=2)})
        assert all(assignment.camera_for[j] == 1 for j in ALL_JOINTS)
        assert not assignment.untrackable

    def test_tie_breaks_to_lower_camera(self):
        assignment = select_cameras({2: _stream(Confidence.HIGH, camera=2),
                                     1: _stream(Confidence.HIGH)})
        assert all(assignment.camera_for[j] == 1 for j in ALL_JOINTS)

    def test_untrackable_joint_flagged(self):
        frames = []
        for f in _stream(Confidence.HIGH):
            joints = dict(f.joints)
            joints[J.KNEE_L] = JointSample(pos=(0, 0, 0), conf=Confidence.NONE)
            frames.append(SkeletonFrame(t=f.t, camera=1, joints=joints))
        assignment = select_cameras({1: frames})
        assert J.KNEE_L in assignment.untrackable


class TestFilterConfidence:
    def test_all_high_is_noop(self):
        frames = _stream(Confidence.HIGH)
        assert filter_confidence(frames, Confidence.MEDIUM) == frames

    def test_low_joint_demoted_and_position_kept(self):
        frames = _stream(Confidence.LOW, n=3)
        out = filter_confidence(frames, Confidence.MEDIUM)
        for f_in, f_out in zip(frames, out):
            for j in ALL_JOINTS:
                assert f_out.joints[j].conf == Confidence.NONE
                assert f_out.joints[j].pos == f_in.joints[j].pos

    def test_empty_input(self):
        assert filter_confidence([], Confidence.MEDIUM) == []


class TestAngleSeries:
    def test_series_matches_per_frame(self, ref):
        frames = []
        for i in range(50):
            pos = osk.lean_lateral(osk.upright_positions(), 0.3 * math.sin(0.2 * i))
            pos = osk.bend_knee(pos, "L", 0.2 + 0.1 * math.cos(0.3 * i))
            frames.append(osk.to_frame(pos, t=i / 25.0))
        series = angle_series({1: frames}, ref, rate=25.0)
        assert len(series) == 50
        for i in (0, 10, 33, 49):
            per_frame = compute_angles(frames[i], ref)
            row = series.row(i)
            for f in ANGLE_FIELDS:
                assert getattr(row, f) == pytest.approx(getattr(per_frame, f), abs=1e-9)

    def test_gap_propagates_as_nan(self, ref):
        frames = []
        for i in range(40):
            pos = osk.upright_positions()
            conf = Confidence.NONE if 10 <= i < 20 else Confidence.HIGH
            f = osk.to_frame(pos, t=i / 25.0)
            joints = dict(f.joints)
            joints[J.PELVIS] = JointSample(pos=joints[J.PELVIS].pos, conf=conf)
            frames.append(SkeletonFrame(t=f.t, camera=1, joints=joints))
        series = angle_series({1: frames}, ref, rate=25.0)
        sag = series.columns["sagittal_plane"]
        assert np.isnan(sag[14])
        assert np.isfinite(sag[2])
        assert np.isfinite(sag[35])
        # knees never need the pelvis, so they are unaffected
        assert np.all(np.isfinite(series.columns["knee_r"]))

    def test_csv_roundtrip(self, ref, tmp_path):
        frames = [osk.to_frame(osk.lean_lateral(osk.upright_positions(), 0.1 * i), t=i / 25.0)
                  for i in range(8)]
        series = angle_series({1: frames}, ref, rate=25.0)
        p = tmp_path / "angles.csv"
        save_angle_csv(p, series)
        loaded = load_angle_csv(p)
        assert len(loaded) == len(series)
        for f in ANGLE_FIELDS:
            np.testing.assert_allclose(loaded.columns[f], series.columns[f], atol=1e-15)
