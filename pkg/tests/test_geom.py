import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ribbonlab.errors import ContractError, InvalidPoseError
from ribbonlab.geom import (Pose, UnitQuat, Vec3, frame_of, quat_between_vectors,
                            rotation_between)

from conftest import random_unit_quat, rng


def make_pose(q: UnitQuat, pos: Vec3 = Vec3(0, 0, 0), t: float = 0.0) -> Pose:
    return Pose(position=pos, orientation=q, timestamp=t, trigger=True)


class TestVec3:
    def test_arithmetic(self):
        a = Vec3(1, 2, 3)
        b = Vec3(4, 5, 6)
        assert (a + b) == Vec3(5, 7, 9)
        assert (b - a) == Vec3(3, 3, 3)
        assert (a * 2) == Vec3(2, 4, 6)
        assert a.dot(b) == 32
        assert a.cross(b) == Vec3(-3, 6, -3)

    def test_normalize_zero_raises(self):
        with pytest.raises(ContractError):
            Vec3(0, 0, 0).normalized()


class TestFrameOf:
    def test_identity_orientation(self):
        f = frame_of(make_pose(UnitQuat.identity()))
        assert f.side == Vec3(1.0, 0.0, 0.0)
        assert f.up == Vec3(0.0, 1.0, 0.0)
        assert f.forward == Vec3(0.0, 0.0, 1.0)

    def test_quarter_turn_about_world_y(self):
        q = UnitQuat.from_axis_angle(Vec3(0, 1, 0), math.pi / 2)
        f = frame_of(make_pose(q))
        assert abs(f.side.x) < 1e-12 and abs(f.side.y) < 1e-12 and abs(f.side.z + 1) < 1e-12
        assert (f.up - Vec3(0, 1, 0)).norm() < 1e-12
        assert (f.forward - Vec3(1, 0, 0)).norm() < 1e-12

    def test_half_half_quat_matches_rotation_matrix_columns(self):
        # rotation matrix of (0.5, 0.5, 0.5, 0.5) is the cyclic permutation
        # [[0,0,1],[1,0,0],[0,1,0]]; frame axes are its columns
        f = frame_of(make_pose(UnitQuat(0.5, 0.5, 0.5, 0.5)))
        assert (f.side - Vec3(0, 1, 0)).norm() < 1e-12
        assert (f.up - Vec3(0, 0, 1)).norm() < 1e-12
        assert (f.forward - Vec3(1, 0, 0)).norm() < 1e-12

    def test_non_unit_rejected(self):
        with pytest.raises(InvalidPoseError):
            frame_of(make_pose(UnitQuat(1.0, 0.0, 0.0, 1e-4)))

    def test_orthonormal_right_handed_over_random_quats(self):
        r = rng(7)
        for _ in range(2000):
            f = frame_of(make_pose(random_unit_quat(r)))
            assert abs(f.side.dot(f.up)) < 1e-9
            assert abs(f.side.dot(f.forward)) < 1e-9
            assert abs(f.up.dot(f.forward)) < 1e-9
            assert (f.side.cross(f.up) - f.forward).norm() < 1e-9
            for axis in (f.side, f.up, f.forward):
                assert abs(axis.norm() - 1.0) < 1e-9

    def test_double_cover_same_frame(self):
        r = rng(8)
        for _ in range(200):
            q = random_unit_quat(r)
            neg = UnitQuat(-q.w, -q.x, -q.y, -q.z)
            fa, fb = frame_of(make_pose(q)), frame_of(make_pose(neg))
            assert (fa.side - fb.side).norm() < 1e-15
            assert (fa.up - fb.up).norm() < 1e-15
            assert (fa.forward - fb.forward).norm() < 1e-15


class TestRotationBetween:
    def test_identity_pair(self):
        r = rng(9)
        q = random_unit_quat(r)
        axis, angle = rotation_between(q, q)
        assert angle == 0.0
        assert abs(axis.norm() - 1.0) < 1e-12

    def test_constructed_quarter_turn(self):
        a = UnitQuat.identity()
        b = UnitQuat.from_axis_angle(Vec3(0, 0, 1), math.pi / 2).multiply(a)
        axis, angle = rotation_between(a, b)
        assert abs(angle - math.pi / 2) < 1e-12
        assert (axis - Vec3(0, 0, 1)).norm() < 1e-12

    def test_round_trip_random_pairs(self):
        r = rng(10)
        for _ in range(500):
            a, b = random_unit_quat(r), random_unit_quat(r)
            axis, angle = rotation_between(a, b)
            assert 0.0 <= angle <= math.pi + 1e-12
            recomposed = UnitQuat.from_axis_angle(axis, angle).multiply(a)
            # q and -q are the same rotation
            d = min((_qdist(recomposed, b)), _qdist(_qneg(recomposed), b))
            assert d < 1e-9


def _qdist(a: UnitQuat, b: UnitQuat) -> float:
    return math.sqrt((a.w - b.w) ** 2 + (a.x - b.x) ** 2
                     + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


def _qneg(q: UnitQuat) -> UnitQuat:
    return UnitQuat(-q.w, -q.x, -q.y, -q.z)


class TestQuatHelpers:
    @given(st.integers(min_value=0, max_value=10_000))
    def test_quat_between_vectors_maps_a_to_b(self, seed):
        r = rng(seed)
        a = Vec3(*(float(x) for x in r.normal(size=3)))
        b = Vec3(*(float(x) for x in r.normal(size=3)))
        if a.norm() < 1e-6 or b.norm() < 1e-6:
            return
        q = quat_between_vectors(a, b)
        assert (q.rotate(a.normalized()) - b.normalized()).norm() < 1e-9

    def test_antiparallel_vectors(self):
        q = quat_between_vectors(Vec3(0, 0, 1), Vec3(0, 0, -1))
        assert (q.rotate(Vec3(0, 0, 1)) - Vec3(0, 0, -1)).norm() < 1e-9

    def test_rotate_matches_matrix(self):
        r = rng(11)
        q = random_unit_quat(r)
        v = Vec3(0.3, -0.2, 0.9)
        rotated = q.rotate(v)
        # brute-force via quaternion sandwich product
        p = UnitQuat(0.0, v.x, v.y, v.z)
        s = q.multiply(p).multiply(q.conjugate())
        assert abs(rotated.x - s.x) < 1e-12
        assert abs(rotated.y - s.y) < 1e-12
        assert abs(rotated.z - s.z) < 1e-12
