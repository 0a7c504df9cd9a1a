"""Arithmetic on the Stiefel manifold V(n, p) of orthonormal n x p frames.

Distances use the ambient (chordal) form d^2(X, Y) = p - tr(X^T Y); there is
no closed-form endpoint geodesic on V(n, p). The exponential map follows the
canonical-metric geodesic built from a compact QR of the normal component and
a 2p x 2p block matrix exponential.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

DEFAULT_TOL = 1e-8
TANGENT_TOL = 1e-6
_NORMAL_EPS = 1e-12


class NotOnManifoldError(ValueError):
    pass


class NotTangentError(ValueError):
    pass


class ManifoldCheck(NamedTuple):
    ok: bool
    deviation: float


def validate_on_manifold(X, tol: float = DEFAULT_TOL) -> ManifoldCheck:
    """Check ||X^T X - I_p||_max <= tol."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] > X.shape[0] or not np.all(np.isfinite(X)):
        return ManifoldCheck(False, float("inf"))
    dev = float(np.abs(X.T @ X - np.eye(X.shape[1])).max(initial=0.0))
    return ManifoldCheck(dev <= tol, dev)


def check_point(X, tol: float = DEFAULT_TOL) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    ok, dev = validate_on_manifold(X, tol)
    if not ok:
        raise NotOnManifoldError(f"matrix is not orthonormal (deviation {dev:.3g} > {tol:g})")
    return X


def _same_shape(X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape != Y.shape:
        raise ValueError(f"dimension mismatch: {X.shape} vs {Y.shape}")


def squared_distance(X, Y) -> float:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    _same_shape(X, Y)
    return float(X.shape[1] - np.sum(X * Y))


def total_squared_distance(points, Y) -> float:
    return float(sum(squared_distance(P, Y) for P in points))


def project_to_tangent(X, G) -> np.ndarray:
    """Manifold gradient G - X G^T X of a Euclidean derivative G at X."""
    X = np.asarray(X, dtype=float)
    G = np.asarray(G, dtype=float)
    _same_shape(X, G)
    return G - X @ (G.T @ X)


def tangency_residual(X, D) -> float:
    """||X^T D + D^T X||_max; zero for tangent vectors."""
    A = X.T @ D
    return float(np.abs(A + A.T).max(initial=0.0))


def polar(M) -> np.ndarray:
    """Closest matrix with orthonormal columns (orthogonal polar factor)."""
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=float), full_matrices=False)
    return U @ Vt


# Pade coefficients and scaling thresholds for degrees 3, 5, 7, 9, 13
# (Higham, "The scaling and squaring method for the matrix exponential revisited", 2005).
_PADE = {
    3: (1.495585217958292e-2, (120.0, 60.0, 12.0, 1.0)),
    5: (2.539398330063230e-1, (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0)),
    7: (9.504178996162932e-1,
        (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0)),
    9: (2.097847961257068e0,
        (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
         2162160.0, 110880.0, 3960.0, 90.0, 1.0)),
    13: (5.371920351148152e0,
         (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
          1187353796428800.0, 129060195264000.0, 10559470521600.0,
          670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
          960960.0, 16380.0, 182.0, 1.0)),
}


def _pade_uv(A: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE[m][1]
    ident = np.eye(A.shape[0])
    A2 = A @ A
    if m < 13:
        powers = [ident, A2]
        for _ in range(2, m // 2 + 1):
            powers.append(powers[-1] @ A2)
        U = A @ sum(b[2 * k + 1] * powers[k] for k in range(m // 2 + 1))
        V = sum(b[2 * k] * powers[k] for k in range(m // 2 + 1))
        return U, V
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    return U, V


def expm_small(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a diagonal Pade approximant."""
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("expm input has non-finite entries")
    if A.size == 0:
        return A
    norm1 = float(np.abs(A).sum(axis=0).max())
    s = 0
    for m in (3, 5, 7, 9):
        if norm1 <= _PADE[m][0]:
            break
    else:
        m = 13
        theta = _PADE[13][0]
        if norm1 > theta:
            s = int(np.ceil(np.log2(norm1 / theta)))
        A = A / 2.0**s
    U, V = _pade_uv(A, m)
    E = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        E = E @ E
    return E


def exp_map(X, D, *, check_tangent: bool = True, tol: float = TANGENT_TOL) -> np.ndarray:
    """Move from X along the geodesic with initial velocity D.

    With K = (I - X X^T) D = Q R (compact QR) and A = X^T D, returns
    X B + Q C where [B; C] = expm([[A, -R^T], [R, 0]]) [I; 0]. When K vanishes
    the step stays in span(X) and reduces to X expm(A).
    """
    X = np.asarray(X, dtype=float)
    D = np.asarray(D, dtype=float)
    _same_shape(X, D)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(D))):
        raise ValueError("exp_map received non-finite entries")
    p = X.shape[1]
    if check_tangent:
        res = tangency_residual(X, D)
        if res > tol * max(1.0, float(np.linalg.norm(D))):
            raise NotTangentError(f"direction is not tangent at the base point (residual {res:.3g})")
    A = X.T @ D
    K = D - X @ A
    if np.linalg.norm(K) < _NORMAL_EPS:
        Y = X @ expm_small(A)
    else:
        Q, R = np.linalg.qr(K, mode="reduced")
        block = np.block([[A, -R.T], [R, np.zeros((p, p))]])
        BC = expm_small(block)[:, :p]
        Y = X @ BC[:p] + Q @ BC[p:]
    if not validate_on_manifold(Y, DEFAULT_TOL).ok:
        Y = polar(Y)
    return Y


def random_point(n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, p)))
    return Q * np.sign(np.diag(R))
