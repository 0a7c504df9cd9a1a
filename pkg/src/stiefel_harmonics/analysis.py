"""Harmonic power and energy of node signals, and group-difference tests."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import canonicalize_signs
from .solver import SolverConfig, learn_common_harmonics, pseudo_mean_harmonics
from .stats import fisher_score, paired_t_test, welch_t_test


@dataclass(frozen=True)
class NodeSignal:
    subject: str
    values: np.ndarray
    group: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ValueError(f"signal for {self.subject!r} must be a finite vector")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class EnergySpectrum:
    powers: np.ndarray
    energies: np.ndarray
    total: float


def _signal_values(f) -> np.ndarray:
    return f.values if isinstance(f, NodeSignal) else np.asarray(f, dtype=float)


def energy_spectrum(f, Psi) -> EnergySpectrum:
    """alpha_h = <f, psi_h>, E_h = alpha_h^2 and their sum."""
    v = _signal_values(f)
    Psi = np.asarray(Psi, dtype=float)
    if v.shape != (Psi.shape[0],):
        raise ValueError(f"signal length {v.shape} does not match basis with n={Psi.shape[0]}")
    alpha = Psi.T @ v
    energies = alpha**2
    return EnergySpectrum(alpha, energies, float(energies.sum()))


def split_power(f, psi) -> tuple[float, float]:
    """Positive power <f, psi+> and negative power |<f, psi->|.

    psi+ keeps the strictly positive entries of psi, psi- the strictly
    negative ones; zero entries belong to neither.
    """
    v = _signal_values(f)
    psi = np.asarray(psi, dtype=float)
    if v.shape != psi.shape:
        raise ValueError("signal and harmonic have different lengths")
    pos = float(v @ np.where(psi > 0, psi, 0.0))
    neg = float(v @ np.where(psi < 0, psi, 0.0))
    return pos, abs(neg)


def _split_groups(signals: Sequence[NodeSignal], groups=None) -> tuple[tuple[str, str], list, list]:
    labels = sorted({s.group for s in signals}) if groups is None else list(groups)
    if len(labels) != 2:
        raise ValueError(f"need exactly two groups, found {labels}")
    a = [s for s in signals if s.group == labels[0]]
    b = [s for s in signals if s.group == labels[1]]
    for label, members in zip(labels, (a, b)):
        if len(members) < 2:
            raise ValueError(f"group {label!r} needs at least two subjects, has {len(members)}")
    return (labels[0], labels[1]), a, b


@dataclass
class GroupTestResult:
    groups: tuple[str, str]
    t: np.ndarray
    pvalues: np.ndarray
    fisher: np.ndarray
    mean_a: np.ndarray
    mean_b: np.ndarray
    std_a: np.ndarray
    std_b: np.ndarray
    alpha: float
    total_t: float
    total_p: float
    total_mean: tuple[float, float]
    total_std: tuple[float, float]

    @property
    def significant(self) -> np.ndarray:
        return self.pvalues < self.alpha

    @property
    def significant_harmonics(self) -> list[int]:
        """1-based indices of flagged harmonics."""
        return [int(h) + 1 for h in np.flatnonzero(self.significant)]

    def summary(self) -> dict:
        return {
            "groups": list(self.groups),
            "alpha": self.alpha,
            "significant_harmonics": self.significant_harmonics,
            "total_energy": {
                "t": self.total_t,
                "p": self.total_p,
                "mean": list(self.total_mean),
                "std": list(self.total_std),
            },
        }


def _fisher_or_nan(a, b) -> float:
    try:
        return fisher_score(a, b)
    except ZeroDivisionError:
        return math.nan


def group_energy_analysis(signals: Sequence[NodeSignal], Psi, alpha: float = 0.01,
                          groups=None) -> GroupTestResult:
    """Per-harmonic Welch tests and Fisher scores on E_h, plus a total-energy test."""
    labels, a, b = _split_groups(signals, groups)
    Ea = np.array([energy_spectrum(s, Psi).energies for s in a])
    Eb = np.array([energy_spectrum(s, Psi).energies for s in b])
    tests = [welch_t_test(Ea[:, h], Eb[:, h]) for h in range(Ea.shape[1])]
    Ta, Tb = Ea.sum(axis=1), Eb.sum(axis=1)
    total = welch_t_test(Ta, Tb)
    return GroupTestResult(
        groups=labels,
        t=np.array([r.statistic for r in tests]),
        pvalues=np.array([r.pvalue for r in tests]),
        fisher=np.array([_fisher_or_nan(Ea[:, h], Eb[:, h]) for h in range(Ea.shape[1])]),
        mean_a=Ea.mean(axis=0), mean_b=Eb.mean(axis=0),
        std_a=Ea.std(axis=0, ddof=1), std_b=Eb.std(axis=0, ddof=1),
        alpha=alpha,
        total_t=total.statistic, total_p=total.pvalue,
        total_mean=(float(Ta.mean()), float(Tb.mean())),
        total_std=(float(Ta.std(ddof=1)), float(Tb.std(ddof=1))),
    )


@dataclass
class ProtocolReport:
    power_significant: list[list[int]] = field(default_factory=list)
    pm_significant: list[list[int]] = field(default_factory=list)

    @property
    def replicates(self) -> int:
        return len(self.power_significant)

    def counts(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([len(x) for x in self.power_significant], dtype=float),
                np.array([len(x) for x in self.pm_significant], dtype=float))

    def summary(self) -> dict:
        if not self.replicates:
            return {"replicates": 0}
        power, pm = self.counts()
        return {
            "replicates": self.replicates,
            "power_significant_mean": float(power.mean()),
            "power_significant_std": float(power.std(ddof=1)) if power.size > 1 else 0.0,
            "pm_significant_mean": float(pm.mean()),
            "pm_significant_std": float(pm.std(ddof=1)) if pm.size > 1 else 0.0,
        }


def positive_negative_protocol(
    signals: Sequence[NodeSignal],
    Psi,
    train_fraction: float = 0.6,
    replicates: int = 50,
    seed: int = 0,
    *,
    alpha_power: float = 0.01,
    alpha_pm: float = 1e-3,
    groups=None,
) -> ProtocolReport:
    """Resampled two-stage test of harmonic power and +/- power imbalance.

    Per replicate each group is split at random. Harmonics whose power
    alpha_h differs between groups on the training split (p < alpha_power)
    are then tested on the held-out split for a group difference in
    |alpha_h+ - alpha_h-| (p < alpha_pm). Harmonic indices are 1-based.
    """
    report = ProtocolReport()
    if replicates <= 0:
        return report
    labels, a, b = _split_groups(signals, groups)
    Psi = np.asarray(Psi, dtype=float)
    n_train = [int(round(train_fraction * len(g))) for g in (a, b)]
    for g, k in zip((a, b), n_train):
        if k < 2 or len(g) - k < 2:
            raise ValueError("not enough subjects per group for the requested split")
    rng = np.random.default_rng(seed)
    for _ in range(replicates):
        splits = []
        for g, k in zip((a, b), n_train):
            order = rng.permutation(len(g))
            splits.append(([g[i] for i in order[:k]], [g[i] for i in order[k:]]))
        (tr_a, te_a), (tr_b, te_b) = splits
        pa = np.array([Psi.T @ s.values for s in tr_a])
        pb = np.array([Psi.T @ s.values for s in tr_b])
        power_hits = [h for h in range(Psi.shape[1])
                      if welch_t_test(pa[:, h], pb[:, h]).pvalue < alpha_power]
        pm_hits = []
        for h in power_hits:
            da = [abs(np.subtract(*split_power(s, Psi[:, h]))) for s in te_a]
            db = [abs(np.subtract(*split_power(s, Psi[:, h]))) for s in te_b]
            if welch_t_test(da, db).pvalue < alpha_pm:
                pm_hits.append(h + 1)
        report.power_significant.append([h + 1 for h in power_hits])
        report.pm_significant.append(pm_hits)
    return report


@dataclass
class ReplicabilityReport:
    manifold_failures: np.ndarray
    pseudo_failures: np.ndarray
    manifold_pvalues: np.ndarray
    pseudo_pvalues: np.ndarray
    replicates: int
    alpha: float

    @property
    def manifold_region_counts(self) -> np.ndarray:
        return self.manifold_failures.sum(axis=1)

    @property
    def pseudo_region_counts(self) -> np.ndarray:
        return self.pseudo_failures.sum(axis=1)

    def summary(self) -> dict:
        return {
            "replicates": self.replicates,
            "alpha": self.alpha,
            "manifold_failures": int(self.manifold_failures.sum()),
            "pseudo_failures": int(self.pseudo_failures.sum()),
        }


def replicability_split(m: int, base_fraction: float = 70 / 94,
                        extra_fraction: float = 5 / 94) -> tuple[int, int]:
    """Sizes of the shared base sample and of each disjoint addition."""
    base = int(round(base_fraction * m))
    extra = max(1, int(round(extra_fraction * m)))
    if base < 2 or base + 2 * extra > m:
        raise ValueError(f"cohort of {m} networks is too small for the resampling split")
    return base, extra


def elementwise_paired_failures(A: np.ndarray, B: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Paired t-test across replicates for every (region, harmonic) element.

    ``A`` and ``B`` have shape (replicates, n, p). Returns 0/1 failures and p-values.
    """
    diffs = A - B
    pvals = np.ones(A.shape[1:])
    for i in range(A.shape[1]):
        for h in range(A.shape[2]):
            pvals[i, h] = paired_t_test(diffs[:, i, h]).pvalue
    return (pvals < alpha).astype(int), pvals


def replicability_test(
    networks,
    config: SolverConfig,
    replicates: int = 50,
    seed: int = 0,
    *,
    base: int | None = None,
    extra: int | None = None,
    alpha: float = 0.01,
) -> ReplicabilityReport:
    """Test/retest resampling of the learned and the pseudo common harmonics.

    Each replicate draws a shared base sample plus two disjoint additions,
    learns both bases on the two paired cohorts and records them after sign
    canonicalization. Elements whose paired difference across replicates is
    significant (p < alpha) count as failures.
    """
    nets = [np.asarray(W, dtype=float) for W in networks]
    m = len(nets)
    if base is None or extra is None:
        base, extra = replicability_split(m)
    if base + 2 * extra > m:
        raise ValueError(f"cohort of {m} networks is too small for base={base}, extra={extra}")
    if replicates < 2:
        raise ValueError("need at least two replicates for the paired test")
    rng = np.random.default_rng(seed)
    man_a, man_b, ps_a, ps_b = [], [], [], []
    for _ in range(replicates):
        order = rng.permutation(m)
        shared = list(order[:base])
        cohorts = (shared + list(order[base:base + extra]),
                   shared + list(order[base + extra:base + 2 * extra]))
        for idx, man, ps in zip(cohorts, (man_a, man_b), (ps_a, ps_b)):
            sub = [nets[i] for i in idx]
            man.append(canonicalize_signs(learn_common_harmonics(sub, config).common))
            ps.append(canonicalize_signs(pseudo_mean_harmonics(sub, config.p)))
    mf, mp = elementwise_paired_failures(np.array(man_a), np.array(man_b), alpha)
    pf, pp = elementwise_paired_failures(np.array(ps_a), np.array(ps_b), alpha)
    return ReplicabilityReport(mf, pf, mp, pp, replicates, alpha)
