import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stiefel_harmonics.graph import (
    AsymmetricGraphError,
    DisconnectedGraphError,
    GraphError,
    NegativeWeightError,
    SelfLoopError,
    build_laplacian,
    canonicalize_signs,
    check_adjacency,
    eigensystem,
    mean_curve,
    reconstruction_error_curve,
    shift_positive_definite,
    suggest_p,
)

from conftest import random_connected_graph


def path_graph(n):
    W = np.zeros((n, n))
    idx = np.arange(n - 1)
    W[idx, idx + 1] = W[idx + 1, idx] = 1.0
    return W


def test_laplacian_of_path():
    L = build_laplacian(path_graph(3))
    expected = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    np.testing.assert_array_equal(L.values, expected)
    np.testing.assert_array_equal(L.degrees, [1.0, 2.0, 1.0])
    assert L.n == 3


def test_path_spectrum_matches_closed_form():
    n = 12
    es = eigensystem(build_laplacian(path_graph(n)), n)
    closed = 2.0 - 2.0 * np.cos(np.pi * np.arange(n) / n)
    np.testing.assert_allclose(es.eigenvalues, closed, atol=1e-12)


@pytest.mark.parametrize("W, exc", [
    (np.array([[0.0, 1.0], [2.0, 0.0]]), AsymmetricGraphError),
    (np.array([[0.0, -1.0], [-1.0, 0.0]]), NegativeWeightError),
    (np.array([[1.0, 1.0], [1.0, 0.0]]), SelfLoopError),
    (np.zeros((3, 3)), DisconnectedGraphError),
    (np.ones((2, 3)), GraphError),
    (np.array([[0.0, np.nan], [np.nan, 0.0]]), GraphError),
])
def test_invalid_adjacency_rejected(W, exc):
    with pytest.raises(exc):
        build_laplacian(W)


def test_disconnected_allowed_when_not_required():
    W = check_adjacency(np.zeros((3, 3)), require_connected=False)
    assert W.shape == (3, 3)


def test_tiny_asymmetry_is_symmetrized():
    W = path_graph(4)
    W[0, 1] += 1e-14
    out = check_adjacency(W)
    np.testing.assert_array_equal(out, out.T)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 25), st.integers(0, 2**32 - 1))
def test_laplacian_invariants(n, seed):
    rng = np.random.default_rng(seed)
    L = build_laplacian(random_connected_graph(n, rng))
    np.testing.assert_allclose(L.values.sum(axis=1), 0.0, atol=1e-12)
    np.testing.assert_array_equal(L.values, L.values.T)
    es = eigensystem(L, n)
    assert es.eigenvalues[0] == pytest.approx(0.0, abs=1e-10)
    # connected graph: zero eigenvalue is simple
    assert es.eigenvalues[1] > 1e-10
    assert np.all(np.diff(es.eigenvalues) >= -1e-12)
    np.testing.assert_allclose(es.vectors.T @ es.vectors, np.eye(n), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**32 - 1))
def test_canonical_signs(n, seed):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((n, 4))
    C = canonicalize_signs(V)
    for h in range(4):
        i = int(np.argmax(np.abs(C[:, h])))
        assert C[i, h] > 0
    np.testing.assert_array_equal(canonicalize_signs(-V), C)
    np.testing.assert_array_equal(canonicalize_signs(C), C)


def test_canonical_sign_tie_goes_to_lowest_row():
    v = np.array([[0.0], [-0.5], [0.5 + 1e-14], [0.1]])
    out = canonicalize_signs(v)
    assert out[1, 0] == 0.5
    out1d = canonicalize_signs(v[:, 0])
    np.testing.assert_array_equal(out1d, out[:, 0])


def test_eigensystem_rejects_bad_p():
    L = build_laplacian(path_graph(4))
    for p in (0, 5):
        with pytest.raises(ValueError):
            eigensystem(L, p)


def test_shift_is_positive_definite(rng):
    L = build_laplacian(random_connected_graph(15, rng))
    S = shift_positive_definite(L)
    lam_max = np.linalg.eigvalsh(L.values)[-1]
    assert S.beta == pytest.approx(lam_max * (1 + 1e-6), rel=1e-14)
    assert np.linalg.eigvalsh(S.values)[0] > 0
    assert not S.degenerate


def test_shift_of_zero_laplacian_is_degenerate():
    S = shift_positive_definite(np.zeros((1, 1)))
    assert S.degenerate and S.beta == 0.0


def test_reconstruction_error_curve_matches_direct_computation(rng):
    L = build_laplacian(random_connected_graph(10, rng))
    curve = reconstruction_error_curve(L, 10)
    w, V = np.linalg.eigh(L.values)
    for p, err in curve:
        approx = V[:, :p] @ np.diag(w[:p]) @ V[:, :p].T
        direct = np.linalg.norm(L.values - approx) / np.linalg.norm(L.values)
        assert err == pytest.approx(direct, abs=1e-12)
    assert curve[-1][1] == pytest.approx(0.0, abs=1e-12)
    errs = [e for _, e in curve]
    assert all(a >= b - 1e-15 for a, b in zip(errs, errs[1:]))


def test_suggest_p():
    curve = [(1, 1.0), (2, 0.5), (3, 0.3), (4, 0.295), (5, 0.29)]
    assert suggest_p(curve, fraction=0.01) == 3
    assert suggest_p([(1, 1.0), (2, 0.5)], fraction=0.01) == 2
    with pytest.raises(ValueError):
        suggest_p([])


def test_mean_curve():
    a = [(1, 1.0), (2, 0.0)]
    b = [(1, 0.5), (2, 0.5)]
    assert mean_curve([a, b]) == [(1, 0.75), (2, 0.25)]
    with pytest.raises(ValueError):
        mean_curve([])
