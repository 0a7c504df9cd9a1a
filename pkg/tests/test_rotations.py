import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from stiefel_harmonics.rotations import (
    UnitQuaternion,
    quaternion_to_rotation,
    run_synthetic_experiment,
    sample_rotations,
)
from stiefel_harmonics.stiefel import squared_distance


def test_identity_quaternion():
    np.testing.assert_array_equal(quaternion_to_rotation(UnitQuaternion(1.0, 0.0, 0.0, 0.0)), np.eye(3))


@pytest.mark.parametrize("axis, angle, expected", [
    ((0, 0, 1), math.pi / 2, [[0, -1, 0], [1, 0, 0], [0, 0, 1]]),
    ((1, 0, 0), math.pi, [[1, 0, 0], [0, -1, 0], [0, 0, -1]]),
    ((0, 1, 0), math.pi / 2, [[0, 0, 1], [0, 1, 0], [-1, 0, 0]]),
])
def test_axis_angle_cases(axis, angle, expected):
    R = quaternion_to_rotation(UnitQuaternion.from_axis_angle(axis, angle))
    np.testing.assert_allclose(R, expected, atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.floats(-10, 10))
def test_rotation_matches_scipy_and_is_so3(axis, angle):
    u = np.asarray(axis)
    if np.linalg.norm(u) < 1e-3:
        u = np.array([0.0, 0.0, 1.0])
    q = UnitQuaternion.from_axis_angle(u, angle)
    R = quaternion_to_rotation(q)
    ref = Rotation.from_quat([q.b, q.c, q.d, q.a]).as_matrix()
    np.testing.assert_allclose(R, ref, atol=1e-12)
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)
    # q and -q describe the same rotation
    np.testing.assert_allclose(quaternion_to_rotation(-q), R, atol=1e-15)


def test_non_unit_quaternion_rejected():
    with pytest.raises(ValueError):
        UnitQuaternion(1.0, 1.0, 0.0, 0.0)


def test_sampling_is_deterministic_and_valid():
    a = sample_rotations(10, 0.3, "random", seed=5)
    b = sample_rotations(10, 0.3, "random", seed=5)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.matrix, y.matrix)
        assert np.linalg.norm(x.axis) == pytest.approx(1.0)
    fixed = sample_rotations(6, 0.3, "fixed", seed=5, axis=(0, 0, 2))
    for s in fixed:
        np.testing.assert_allclose(s.axis, [0, 0, 1])
        np.testing.assert_allclose(s.matrix @ [0, 0, 1], [0, 0, 1], atol=1e-14)


def test_sampling_errors():
    with pytest.raises(ValueError):
        sample_rotations(0, 0.1)
    with pytest.raises(ValueError):
        sample_rotations(3, -0.1)
    with pytest.raises(ValueError):
        sample_rotations(3, 0.1, "spiral")


def test_zero_spread_gives_identity():
    rep = run_synthetic_experiment(m=5, sigma=0.0, seed=0)
    np.testing.assert_allclose(rep.stiefel_mean, np.eye(3), atol=1e-15)
    assert rep.arithmetic_deviation < 1e-15


def test_concentration_improves_with_smaller_spread():
    wide = np.mean([run_synthetic_experiment(sigma=0.5, seed=s).stiefel_distance for s in range(5)])
    tight = np.mean([run_synthetic_experiment(sigma=0.05, seed=s).stiefel_distance for s in range(5)])
    assert tight < wide


def test_report_rows():
    rep = run_synthetic_experiment(m=20, sigma=math.pi / 15, seed=3)
    arith, stiefel = rep.rows()
    assert arith["method"] == "arithmetic" and stiefel["method"] == "stiefel"
    assert stiefel["distance"] <= arith["distance"] + 1e-9
    assert stiefel["deviation"] <= 1e-8
    assert rep.converged
    assert rep.trajectory[-1] <= rep.trajectory[0]
    assert rep.polar_distance == pytest.approx(arith["distance"])
    assert squared_distance(rep.stiefel_mean, np.eye(3)) == pytest.approx(rep.stiefel_distance)
