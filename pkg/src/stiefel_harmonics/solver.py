"""Learning common harmonic waves for a cohort of graph Laplacians.

The outer loop alternates two block updates of the cost

    C({Phi_s}, Psi) = sum_s tr(Phi_s^T L_s Phi_s) + lam * d^2(Phi_s, Psi)

1. each Phi_s is refined by generalized power iteration (GPI) on the shifted
   Laplacian with Psi held fixed;
2. Psi is moved toward the Frechet mean of the Phi_s by Weiszfeld-style
   gradient steps mapped back to the manifold with ``exp_map``.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import (
    Laplacian,
    canonicalize_signs,
    ShiftedLaplacian,
    build_laplacian,
    check_adjacency,
    eigensystem,
    shift_positive_definite,
)
from .stiefel import (
    check_point,
    exp_map,
    polar,
    project_to_tangent,
    squared_distance,
    total_squared_distance,
    validate_on_manifold,
)

log = logging.getLogger(__name__)

MAX_HALVINGS = 20
MAX_STEP_LENGTH = np.pi / 2


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    p: int = 60
    lam: float = 0.01
    gamma: float = 0.01
    eps1: float = 1e-8
    eps2: float = 1e-6
    eps_outer: float = 1e-6
    max_gpi_iter: int = 500
    max_weiszfeld_iter: int = 200
    max_outer_iter: int = 100
    strict_paper: bool = False
    threads: int = 1
    inner: str = "newton"

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.lam <= 0 or self.gamma <= 0:
            raise ValueError("lam and gamma must be positive")
        if min(self.eps1, self.eps2, self.eps_outer) <= 0:
            raise ValueError("tolerances must be positive")
        if min(self.max_gpi_iter, self.max_weiszfeld_iter, self.max_outer_iter) < 1:
            raise ValueError("iteration caps must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.inner not in ("newton", "gpi"):
            raise ValueError(f"inner must be 'newton' or 'gpi', got {self.inner!r}")


@dataclass
class GPIResult:
    point: np.ndarray
    iterations: int
    converged: bool
    objective: list[float] = field(default_factory=list)


@dataclass
class WeiszfeldResult:
    point: np.ndarray
    iterations: int
    converged: bool
    cost_trace: list[float] = field(default_factory=list)
    halvings: int = 0


@dataclass
class HarmonicModel:
    common: np.ndarray
    individuals: list[np.ndarray]
    cost_trace: list[float]
    converged: bool
    outer_iterations: int
    gpi_iterations: list[int] = field(default_factory=list)
    weiszfeld_iterations: list[int] = field(default_factory=list)
    initial_common: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.common.shape[0]

    @property
    def p(self) -> int:
        return self.common.shape[1]


def gpi_objective(L_shift: np.ndarray, Psi: np.ndarray, Phi: np.ndarray, lam: float) -> float:
    return float(np.sum(Phi * (L_shift @ Phi)) + lam * np.sum(Phi * Psi))


def gpi_refine(
    L_shift,
    Psi,
    Phi_init,
    lam: float,
    eps1: float = 1e-8,
    max_iter: int = 500,
    *,
    strict_paper: bool = False,
) -> GPIResult:
    """Maximize tr(Phi^T Ls Phi) + lam tr(Phi^T Psi) over orthonormal Phi.

    Each step sets Phi = U V^T from the compact SVD of Theta = Ls Phi + (lam/2) Psi,
    which makes the objective nondecreasing, then rotates Phi within its own
    span by the Procrustes factor polar(Phi^T Psi). The rotation leaves the
    quadratic term unchanged and maximizes the linear one; without it the
    in-span orientation converges at a rate of order lam / beta.
    ``strict_paper`` uses the literal Theta = Ls Phi + lam Psi and no rotation.
    """
    Ls = L_shift.values if isinstance(L_shift, ShiftedLaplacian) else np.asarray(L_shift, float)
    Psi = np.asarray(Psi, dtype=float)
    Phi = np.array(Phi_init, dtype=float)
    if Psi.shape != Phi.shape or Ls.shape != (Phi.shape[0],) * 2:
        raise ValueError("shape mismatch between shifted Laplacian, Psi and Phi")
    pull = (lam if strict_paper else 0.5 * lam) * Psi
    align = lam > 0 and not strict_paper
    LPhi = Ls @ Phi
    objective = [float(np.sum(Phi * LPhi) + lam * np.sum(Phi * Psi))]
    for k in range(1, max_iter + 1):
        theta = LPhi + pull
        if not np.all(np.isfinite(theta)):
            raise FloatingPointError("non-finite GPI iterate")
        if align:
            # polar(Theta) then Procrustes rotation equals Q polar(Q^T Psi) for any
            # orthonormal basis Q of range(Theta)
            Q, _ = np.linalg.qr(theta)
            new = Q @ polar(Q.T @ Psi)
        else:
            new = polar(theta)
        step = float(np.linalg.norm(new - Phi))
        Phi = new
        LPhi = Ls @ Phi
        objective.append(float(np.sum(Phi * LPhi) + lam * np.sum(Phi * Psi)))
        if step < eps1:
            return GPIResult(Phi, k, True, objective)
    return GPIResult(Phi, max_iter, False, objective)


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


def _truncated_cg(hess, g: np.ndarray, radius: float, rtol: float, max_iter: int,
                  precond=None) -> np.ndarray:
    """Approximately solve hess(xi) = g inside a trust region (Steihaug-Toint).

    ``precond`` applies an approximate inverse of ``hess``; the boundary test
    uses the Euclidean norm, and the caller's acceptance test guards the step.
    """
    M = precond if precond is not None else (lambda x: x)
    xi = np.zeros_like(g)
    r = g.copy()
    z = M(r)
    d = z.copy()
    rz = float(np.sum(r * z))
    gn = float(np.linalg.norm(g))
    if rz <= 0.0:
        return g * min(1.0, radius / gn)
    for j in range(max_iter):
        Hd = hess(d)
        curv = float(np.sum(d * Hd))
        if curv <= 0:
            return g * min(1.0, radius / gn) if j == 0 else xi
        alpha = rz / curv
        trial = xi + alpha * d
        if np.linalg.norm(trial) > radius:
            xd, dd, xx = float(np.sum(xi * d)), float(np.sum(d * d)), float(np.sum(xi * xi))
            tau = (-xd + np.sqrt(xd * xd + dd * (radius**2 - xx))) / dd
            return xi + tau * d
        xi = trial
        r = r - alpha * Hd
        if np.linalg.norm(r) <= rtol * gn:
            break
        z = M(r)
        rz_new = float(np.sum(r * z))
        if rz_new <= 0.0:
            break
        d = z + (rz_new / rz) * d
        rz = rz_new
    return xi


def newton_refine(
    eigenvalues,
    eigenvectors,
    beta: float,
    Psi,
    Phi_init,
    lam: float,
    eps1: float = 1e-8,
    max_iter: int = 500,
    *,
    radius: float = 1.0,
    max_cg: int = 10,
) -> GPIResult:
    """Same maximization as ``gpi_refine``, with a Newton step after each sweep.

    Works in the eigenbasis of L = V diag(w) V^T, where the shifted Laplacian is
    the diagonal beta - w. Each sweep takes the aligned GPI step, then tries a
    Riemannian Newton step from there (truncated CG within ``radius``, polar
    retraction) and keeps it only if the objective does not drop. The objective
    is therefore nondecreasing as in plain GPI, while the slow out-of-span
    modes that GPI resolves at rate (beta - w_j) / (beta - w_i) converge
    superlinearly near the optimum.
    """
    w = np.asarray(eigenvalues, dtype=float)
    V = np.asarray(eigenvectors, dtype=float)
    Psi = np.asarray(Psi, dtype=float)
    Phi0 = np.asarray(Phi_init, dtype=float)
    n, p = Phi0.shape
    if Psi.shape != Phi0.shape or V.shape != (n, n) or w.shape != (n,):
        raise ValueError("shape mismatch between eigensystem, Psi and Phi")
    a = (beta - w)[:, None]
    mu = 0.5 * lam
    Y = V.T @ Phi0
    C = V.T @ Psi
    eye = np.eye(p)

    def objective(Z: np.ndarray) -> float:
        return float(np.sum(a * Z * Z) + lam * np.sum(Z * C))

    trace = [objective(Y)]
    for k in range(1, max_iter + 1):
        theta = a * Y + mu * C
        if not np.all(np.isfinite(theta)):
            raise FloatingPointError("non-finite GPI iterate")
        if lam > 0:
            Q, _ = np.linalg.qr(theta)
            base = Q @ polar(Q.T @ C)
        else:
            base = polar(theta)
        f_base = objective(base)
        G = a * base + mu * C
        Lam = _sym(base.T @ G)
        grad = G - base @ Lam

        def neg_hess(x, base=base, Lam=Lam):
            Z = a * x - x @ Lam
            return -(Z - base @ _sym(base.T @ Z))

        # diagonal model of neg_hess in the eigenbasis of Lam, floored at mu
        m_k, R = np.linalg.eigh(Lam)
        scale = 1.0 / np.maximum(np.abs(m_k[None, :] - a), max(mu, 1e-12))

        def precond(x, base=base, R=R, scale=scale):
            z = ((x @ R) * scale) @ R.T
            return z - base @ _sym(base.T @ z)

        gn = float(np.linalg.norm(grad))
        new, f_new = base, f_base
        if gn > 0:
            xi = _truncated_cg(neg_hess, grad, radius, min(0.1, np.sqrt(gn)), max_cg, precond)
            xi = xi - base @ _sym(base.T @ xi)
            # polar retraction; (base + xi)^T (base + xi) = I + xi^T xi for tangent xi
            ev, U = np.linalg.eigh(eye + xi.T @ xi)
            trial = (base + xi) @ (U / np.sqrt(ev)) @ U.T
            if validate_on_manifold(trial, 1e-12).ok:
                f_trial = objective(trial)
                if f_trial >= f_base:
                    new, f_new = trial, f_trial
        step = float(np.linalg.norm(new - Y))
        Y = new
        trace.append(f_new)
        if step < eps1:
            return GPIResult(V @ Y, k, True, trace)
    return GPIResult(V @ Y, max_iter, False, trace)


def weiszfeld_direction(points: Sequence[np.ndarray], Psi: np.ndarray, lam: float,
                        *, strict_paper: bool = False) -> np.ndarray:
    """-lam * sum_s (Psi Phi_s^T Psi - Phi_s).

    In the default mode the same quantity is formed as the tangent projection
    of the Euclidean gradient of -lam * sum_s tr(Phi_s^T Psi).
    """
    total = np.sum(points, axis=0)
    if strict_paper:
        return -lam * sum(Psi @ P.T @ Psi - P for P in points)
    return -project_to_tangent(Psi, -lam * total)


def weiszfeld_mean(
    points: Sequence[np.ndarray],
    Psi_init,
    gamma: float = 0.01,
    lam: float = 0.01,
    eps2: float = 1e-6,
    max_iter: int = 200,
    *,
    strict_paper: bool = False,
    adaptive: bool | None = None,
) -> WeiszfeldResult:
    """Frechet mean of Stiefel points under the chordal squared distance.

    Iterates Psi <- exp_Psi(step * Delta) with Delta from
    ``weiszfeld_direction`` and stops once ||Delta||_F < eps2.

    In the default (adaptive) mode ``gamma`` is only the initial step: a step
    is accepted when it meets a sufficient-decrease test on the total squared
    distance, otherwise it is halved (at most 20 times); a step accepted on
    the first try is doubled for as long as doubling lowers the cost.
    ``strict_paper`` uses the fixed step ``gamma`` with no safeguard.
    """
    points = [np.asarray(P, dtype=float) for P in points]
    if not points:
        raise ValueError("weiszfeld_mean needs at least one point")
    Psi = np.array(Psi_init, dtype=float)
    if any(P.shape != Psi.shape for P in points):
        raise ValueError("all points must share the shape of the initial estimate")
    if adaptive is None:
        adaptive = not strict_paper
    M = np.sum(points, axis=0)
    cost = total_squared_distance(points, Psi)
    trace = [cost]
    halvings = 0
    step = gamma
    for k in range(1, max_iter + 1):
        D = weiszfeld_direction(points, Psi, lam, strict_paper=strict_paper)
        if np.linalg.norm(D) < eps2:
            return WeiszfeldResult(Psi, k - 1, True, trace, halvings)
        if not adaptive:
            Psi = exp_map(Psi, gamma * D, check_tangent=False)
            cost = total_squared_distance(points, Psi)
            trace.append(cost)
            continue
        # keep each move shorter than a quarter turn so long geodesics never wrap around
        step = min(step, MAX_STEP_LENGTH / float(np.linalg.norm(D)))
        # directional derivative of sum_s d^2 = m p - tr(M^T Psi) along D
        slope = -float(np.sum(M * D))
        slack = 1e-12 * max(1.0, cost)
        for tries in range(MAX_HALVINGS + 1):
            cand = exp_map(Psi, step * D)
            new_cost = total_squared_distance(points, cand)
            if new_cost <= cost + 1e-4 * step * slope + slack:
                break
            step *= 0.5
            halvings += 1
        else:
            raise ConvergenceError("Weiszfeld step failed to decrease the cost after backtracking")
        if tries == 0:
            # forward-track while a doubled step strictly improves
            for _ in range(MAX_HALVINGS):
                if 2.0 * step * float(np.linalg.norm(D)) > MAX_STEP_LENGTH:
                    break
                bigger = exp_map(Psi, 2.0 * step * D)
                bigger_cost = total_squared_distance(points, bigger)
                if bigger_cost >= new_cost - slack:
                    break
                step, cand, new_cost = 2.0 * step, bigger, bigger_cost
        Psi, cost = cand, new_cost
        trace.append(cost)
    D = weiszfeld_direction(points, Psi, lam, strict_paper=strict_paper)
    return WeiszfeldResult(Psi, max_iter, bool(np.linalg.norm(D) < eps2), trace, halvings)


def objective_cost(individuals, common, laplacians, lam: float) -> float:
    """sum_s tr(Phi_s^T L_s Phi_s) + lam * (p - tr(Phi_s^T Psi)) with unshifted L_s."""
    total = 0.0
    for Phi, L in zip(individuals, laplacians, strict=True):
        Lv = L.values if isinstance(L, Laplacian) else np.asarray(L, float)
        total += float(np.sum(Phi * (Lv @ Phi))) + lam * squared_distance(Phi, common)
    return total


def arithmetic_mean_harmonics(points) -> tuple[np.ndarray, float]:
    """Entrywise mean of the frames and its orthonormality deviation."""
    if len(points) == 0:
        raise ValueError("arithmetic mean of an empty list")
    mean = np.mean([np.asarray(P, dtype=float) for P in points], axis=0)
    return mean, validate_on_manifold(mean).deviation


def _stack_cohort(cohort) -> list[np.ndarray]:
    mats = [np.asarray(W, dtype=float) for W in cohort]
    if not mats:
        raise ValueError("cohort is empty")
    n = mats[0].shape
    for i, W in enumerate(mats):
        if W.shape != n:
            raise ValueError(f"subject {i} has shape {W.shape}, expected {n}")
    return mats


def pseudo_mean_harmonics(cohort, p: int) -> np.ndarray:
    """Eigenbasis of the Laplacian of the cohort-averaged adjacency matrix.

    Connectivity is required of the mean graph only.
    """
    mats = _stack_cohort(cohort)
    W_bar = check_adjacency(np.mean(mats, axis=0))
    return eigensystem(build_laplacian(W_bar), p).vectors


def learn_common_harmonics(cohort, config: SolverConfig, *, laplacians=None) -> HarmonicModel:
    """Alternate refinement of each subject with a Weiszfeld update of Psi.

    Subjects are refined with ``newton_refine`` (GPI steps plus trust-region
    Newton steps) unless ``config.inner == "gpi"`` or strict mode is on, in
    which case plain GPI is used.

    Psi starts at the pseudo mean and each Phi_s at the p lowest eigenvectors
    of its own Laplacian. The loop stops when the cost changes by less than
    ``eps_outer``; hitting ``max_outer_iter`` returns the last state with
    ``converged=False``.
    """
    mats = _stack_cohort(cohort)
    n = mats[0].shape[0]
    cfg = config
    if cfg.p > n:
        raise ValueError(f"p={cfg.p} exceeds node count n={n}")
    Ls = laplacians if laplacians is not None else [build_laplacian(W) for W in mats]
    shifted = [shift_positive_definite(L) for L in Ls]
    spectra = [np.linalg.eigh(L.values if isinstance(L, Laplacian) else np.asarray(L, float))
               for L in Ls]
    Psi = pseudo_mean_harmonics(mats, cfg.p)
    Psi0 = Psi.copy()
    Phis = [canonicalize_signs(V[:, :cfg.p]) for _, V in spectra]
    cost = objective_cost(Phis, Psi, Ls, cfg.lam)
    trace = [cost]
    gpi_iters: list[int] = []
    w_iters: list[int] = []
    converged = False
    outer = 0
    use_newton = cfg.inner == "newton" and not cfg.strict_paper

    def refine(s: int) -> GPIResult:
        if use_newton:
            w, V = spectra[s]
            return newton_refine(w, V, shifted[s].beta, Psi, Phis[s], cfg.lam, cfg.eps1,
                                 cfg.max_gpi_iter)
        return gpi_refine(shifted[s], Psi, Phis[s], cfg.lam, cfg.eps1, cfg.max_gpi_iter,
                          strict_paper=cfg.strict_paper)

    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        for outer in range(1, cfg.max_outer_iter + 1):
            results = list(pool.map(refine, range(len(Phis)))) if pool else [
                refine(s) for s in range(len(Phis))]
            Phis = [r.point for r in results]
            gpi_iters.append(max(r.iterations for r in results))
            start = Phis[0] if cfg.strict_paper else Psi
            w = weiszfeld_mean(Phis, start, cfg.gamma, cfg.lam, cfg.eps2, cfg.max_weiszfeld_iter,
                               strict_paper=cfg.strict_paper)
            Psi = w.point
            w_iters.append(w.iterations)
            new_cost = objective_cost(Phis, Psi, Ls, cfg.lam)
            trace.append(new_cost)
            log.debug("outer %d cost %.12g", outer, new_cost)
            if abs(new_cost - cost) < cfg.eps_outer:
                converged = True
                cost = new_cost
                break
            cost = new_cost
    finally:
        if pool is not None:
            pool.shutdown()
    if not converged:
        log.warning("outer loop hit the cap of %d iterations", cfg.max_outer_iter)
    for M in [Psi, *Phis]:
        check_point(M)
    return HarmonicModel(Psi, Phis, trace, converged, outer, gpi_iters, w_iters, Psi0)

