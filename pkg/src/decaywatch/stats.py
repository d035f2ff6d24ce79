"""Goodness-of-fit statistics used by the ensemble comparisons."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats as sps

MIN_EXPECTED = 5.0
KS_C_1PCT = 1.63


class InsufficientDataError(ValueError):
    """Too few populated bins to run a chi-square test."""


def pooling_groups(expected: np.ndarray, threshold: float = MIN_EXPECTED) -> list[list[int]]:
    """Group bin indices so each group holds one retained bin.

    Bins with expected count below ``threshold`` join the nearest retained
    bin (the lower one on a tie).
    """
    expected = np.asarray(expected, dtype=float)
    kept = [i for i, e in enumerate(expected) if e >= threshold]
    if not kept:
        raise InsufficientDataError("no bin reaches the expected-count threshold")
    groups: dict[int, list[int]] = {k: [] for k in kept}
    for i in range(len(expected)):
        nearest = min(kept, key=lambda k: (abs(k - i), k))
        groups[nearest].append(i)
    return [groups[k] for k in kept]


def pearson_chi_square(observed, probs, threshold: float = MIN_EXPECTED):
    """Pearson statistic of counts ``observed`` against probabilities ``probs``.

    Returns ``(chi2, dof, p_value)``; ``dof`` is the number of retained bins
    minus one, and ``p_value`` is ``nan`` when ``dof`` is 0.
    """
    observed = np.asarray(observed, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if observed.shape != probs.shape:
        raise ValueError(f"shape mismatch: {observed.shape} vs {probs.shape}")
    n = observed.sum()
    expected = n * probs
    groups = pooling_groups(expected, threshold)
    o = np.array([observed[g].sum() for g in groups])
    e = np.array([expected[g].sum() for g in groups])
    chi2 = float(np.sum((o - e) ** 2 / e))
    dof = len(groups) - 1
    p = float(sps.chi2.sf(chi2, dof)) if dof > 0 else math.nan
    return chi2, dof, p


def two_sample_chi_square(hist_a, hist_b, threshold: float = MIN_EXPECTED):
    """Chi-square homogeneity test of two count histograms over the same bins.

    Bins are pooled until both rows have expected counts >= ``threshold``.
    Returns ``(chi2, dof, p_value)``.
    """
    a = np.asarray(hist_a, dtype=float)
    b = np.asarray(hist_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    na, nb = a.sum(), b.sum()
    if na == 0 or nb == 0:
        raise InsufficientDataError("empty histogram")
    col = a + b
    smaller = min(na, nb) / (na + nb)
    groups = pooling_groups(col * smaller, threshold)
    if len(groups) < 2:
        raise InsufficientDataError("fewer than two populated bins")
    ga = np.array([a[g].sum() for g in groups])
    gb = np.array([b[g].sum() for g in groups])
    gc = ga + gb
    ea = gc * na / (na + nb)
    eb = gc * nb / (na + nb)
    chi2 = float(np.sum((ga - ea) ** 2 / ea) + np.sum((gb - eb) ** 2 / eb))
    dof = len(groups) - 1
    return chi2, dof, float(sps.chi2.sf(chi2, dof))


def ks_exponential(samples, rate: float) -> float:
    """One-sample Kolmogorov-Smirnov distance to Exp(rate)."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    if n == 0:
        raise InsufficientDataError("no samples")
    cdf = -np.expm1(-rate * x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def ks_critical(n: int) -> float:
    """Asymptotic 1% critical value of the KS distance."""
    return KS_C_1PCT / math.sqrt(n)


def survival_band(samples, rate: float, tau: float, sigmas: float = 3.0):
    """Empirical survivor at ``tau`` with its binomial band around exp(-rate tau).

    Returns ``(empirical, expected, half_width)``.
    """
    x = np.asarray(samples, dtype=float)
    expected = math.exp(-rate * tau)
    empirical = float(np.mean(x > tau))
    half = sigmas * math.sqrt(expected * (1 - expected) / len(x))
    return empirical, expected, half
