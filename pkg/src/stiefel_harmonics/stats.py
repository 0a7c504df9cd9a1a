"""t-tests and Fisher scores backed by a self-contained Student-t distribution."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

_TINY = 1e-300
_EPS = 1e-15


class TTestResult(NamedTuple):
    statistic: float
    pvalue: float
    df: float


def _betacf(a: float, b: float, x: float, max_iter: int = 10000) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = _TINY if abs(d) < _TINY else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc needs a, b > 0")
    if not 0.0 <= x <= 1.0:
        raise ValueError("betainc needs 0 <= x <= 1")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    t2 = t * t
    if t2 < df:
        # small |t|: evaluate the complement directly to avoid cancellation in 1 - x
        return 1.0 - betainc(0.5, 0.5 * df, t2 / (df + t2))
    return min(1.0, betainc(0.5 * df, 0.5, df / (df + t2)))


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * t_sf_two_sided(t, df)
    return 1.0 - tail if t >= 0 else tail


def _zero_variance(mean_diff: float) -> tuple[float, float]:
    if mean_diff == 0.0:
        return 0.0, 1.0
    return math.copysign(math.inf, mean_diff), 0.0


def welch_t_test(a, b) -> TTestResult:
    """Unequal-variance two-sample t-test with Welch-Satterthwaite df.

    Both variances zero: p = 1 for equal means and p = 0 otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise ValueError("each sample needs at least two observations")
    va, vb = a.var(ddof=1) / na, b.var(ddof=1) / nb
    diff = float(a.mean() - b.mean())
    se2 = va + vb
    if se2 == 0.0:
        t, p = _zero_variance(diff)
        return TTestResult(t, p, float(na + nb - 2))
    df = se2**2 / (va**2 / (na - 1) + vb**2 / (nb - 1))
    t = diff / math.sqrt(se2)
    return TTestResult(t, t_sf_two_sided(t, df), float(df))


def paired_t_test(diffs) -> TTestResult:
    """One-sample t-test of paired differences against zero."""
    d = np.asarray(diffs, dtype=float)
    if d.size < 2:
        raise ValueError("paired t-test needs at least two pairs")
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    df = float(d.size - 1)
    if sd == 0.0:
        t, p = _zero_variance(mean)
        return TTestResult(t, p, df)
    t = mean / (sd / math.sqrt(d.size))
    return TTestResult(t, t_sf_two_sided(t, df), df)


def fisher_score(a, b) -> float:
    """(mean_a - mean_b)^2 / (var_a + var_b) with sample variances."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two observations")
    denom = float(a.var(ddof=1) + b.var(ddof=1))
    if denom == 0.0:
        raise ZeroDivisionError("both samples have zero variance")
    return float((a.mean() - b.mean()) ** 2 / denom)
