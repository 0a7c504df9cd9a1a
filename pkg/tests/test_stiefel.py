import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from stiefel_harmonics.stiefel import (
    NotOnManifoldError,
    NotTangentError,
    check_point,
    exp_map,
    expm_small,
    polar,
    project_to_tangent,
    random_point,
    squared_distance,
    tangency_residual,
    total_squared_distance,
    validate_on_manifold,
)


def random_tangent(X, rng, scale=1.0):
    return scale * project_to_tangent(X, rng.standard_normal(X.shape))


def test_validate_on_manifold(rng):
    X = random_point(6, 3, rng)
    check = validate_on_manifold(X)
    assert check.ok and check.deviation < 1e-12
    bad = validate_on_manifold(2 * X)
    assert not bad.ok and bad.deviation == pytest.approx(3.0)
    assert not validate_on_manifold(np.ones((2, 3))).ok
    with pytest.raises(NotOnManifoldError):
        check_point(2 * X)


def test_squared_distance_properties(rng):
    X, Y = random_point(7, 3, rng), random_point(7, 3, rng)
    assert squared_distance(X, X) == pytest.approx(0.0, abs=1e-12)
    assert squared_distance(X, Y) == pytest.approx(squared_distance(Y, X))
    # chordal identity: ||X - Y||_F^2 = 2 d^2
    assert np.linalg.norm(X - Y) ** 2 == pytest.approx(2 * squared_distance(X, Y))
    assert 0.0 <= squared_distance(X, Y) <= 2 * 3
    assert squared_distance(X, -X) == pytest.approx(6.0)
    assert total_squared_distance([X, Y], X) == pytest.approx(squared_distance(Y, X))
    with pytest.raises(ValueError):
        squared_distance(X, Y[:, :2])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(0, 7), st.integers(0, 2**32 - 1))
def test_projection_is_tangent_and_fixes_normal_directions(p, extra, seed):
    rng = np.random.default_rng(seed)
    X = random_point(p + extra, p, rng)
    G = rng.standard_normal(X.shape)
    D = project_to_tangent(X, G)
    assert tangency_residual(X, D) < 1e-12
    H = G - X @ (X.T @ G)
    np.testing.assert_allclose(project_to_tangent(X, H), H, atol=1e-12)


def test_polar_is_nearest_orthonormal(rng):
    M = rng.standard_normal((8, 3))
    P = polar(M)
    assert validate_on_manifold(P).ok
    # symmetric positive factor
    H = P.T @ M
    np.testing.assert_allclose(H, H.T, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(H) > 0)
    for _ in range(20):
        Q = random_point(8, 3, rng)
        assert np.linalg.norm(M - P) <= np.linalg.norm(M - Q) + 1e-12


def test_expm_closed_forms():
    np.testing.assert_allclose(expm_small(np.zeros((3, 3))), np.eye(3), atol=0)
    d = np.array([0.3, -2.0, 5.0])
    np.testing.assert_allclose(expm_small(np.diag(d)), np.diag(np.exp(d)), rtol=1e-13)
    for t in (0.1, 1.0, 3.0, 25.0):
        R = expm_small(np.array([[0.0, -t], [t, 0.0]]))
        np.testing.assert_allclose(R, [[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]], atol=1e-12)
    N = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    np.testing.assert_allclose(expm_small(N), np.eye(3) + N + N @ N / 2, atol=1e-15)
    assert expm_small(np.zeros((0, 0))).shape == (0, 0)
    with pytest.raises(ValueError):
        expm_small(np.ones((2, 3)))


@pytest.mark.parametrize("scale", [1e-6, 1e-2, 0.2, 1.0, 4.0, 40.0])
def test_expm_matches_scipy(rng, scale):
    for _ in range(5):
        M = scale * rng.standard_normal((6, 6))
        ref = scipy.linalg.expm(M)
        err = np.linalg.norm(expm_small(M) - ref) / np.linalg.norm(ref)
        assert err < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.floats(0.0, 10.0), st.integers(0, 2**32 - 1))
def test_expm_inverse_and_skew(n, scale, seed):
    rng = np.random.default_rng(seed)
    M = scale * rng.standard_normal((n, n))
    np.testing.assert_allclose(expm_small(M) @ expm_small(-M), np.eye(n), atol=1e-9 * max(1, np.exp(2 * np.abs(M).sum(0).max()) * 1e-12))
    S = M - M.T
    E = expm_small(S)
    np.testing.assert_allclose(E.T @ E, np.eye(n), atol=1e-11)


def test_circle_geodesics_closed_form():
    rng = np.random.default_rng(0)
    cases = 0
    for n in range(2, 12):
        for theta in np.linspace(0.0, 3.0, 10):
            x = random_point(n, 1, rng)
            u = project_to_tangent(x, rng.standard_normal((n, 1)))
            u /= np.linalg.norm(u)
            expected = np.cos(theta) * x + np.sin(theta) * u
            np.testing.assert_allclose(exp_map(x, theta * u), expected, atol=1e-10)
            cases += 1
    assert cases == 100


def test_exp_map_at_zero_is_identity(rng):
    X = random_point(9, 4, rng)
    np.testing.assert_allclose(exp_map(X, np.zeros_like(X)), X, atol=1e-15)


def test_exp_map_in_span_step(rng):
    # square case: the normal component vanishes and the step is X expm(A)
    X = random_point(4, 4, rng)
    A = rng.standard_normal((4, 4))
    A = A - A.T
    np.testing.assert_allclose(exp_map(X, X @ A), X @ scipy.linalg.expm(A), atol=1e-12)


def test_exp_map_geodesic_is_unit_speed_curve(rng):
    X = random_point(10, 3, rng)
    D = random_tangent(X, rng)
    # exp(X, (s+t)D) = exp(exp(X, sD), t * transported D); check the semigroup along the curve
    h = 1e-6
    Y = exp_map(X, h * D)
    np.testing.assert_allclose((Y - X) / h, D, atol=1e-5)


def test_exp_map_rejects_non_tangent(rng):
    X = random_point(6, 2, rng)
    with pytest.raises(NotTangentError):
        exp_map(X, X)
    with pytest.raises(ValueError):
        exp_map(X, np.full(X.shape, np.nan), check_tangent=False)


def test_exp_map_orthogonality_1000_trials():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 30))
        p = int(rng.integers(1, n + 1))
        X = random_point(n, p, rng)
        D = random_tangent(X, rng, scale=float(rng.uniform(0.0, 5.0)))
        ok, dev = validate_on_manifold(exp_map(X, D), 1e-8)
        assert ok
        worst = max(worst, dev)
    assert worst <= 1e-8
