"""Unreduced square-modulus dynamics of a decay chain and its probability currents."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import ChainSpec, ComponentDistribution

MAX_RATE_RATIO = 1e6
DEGENERATE_RTOL = 1e-12
CLAMP_TOL = 1e-9
# nearly equal rates make the partial fractions cancel; beyond this the
# integrator is the more accurate route
MAX_CANCELLATION_ERROR = 1e-10


class NumericalIntegrityError(ArithmeticError):
    """Integration produced probabilities outside [0, 1] beyond rounding."""


@dataclass(frozen=True)
class CurrentVector:
    """Net currents ``net[i] = dP_i/dt`` and directed flows ``flows[j-1] = r_j P_{j-1}``."""

    time: float
    net: tuple[float, ...]
    flows: tuple[float, ...]


def _check_chain(chain: ChainSpec) -> None:
    if max(chain.rates) / min(chain.rates) > MAX_RATE_RATIO:
        raise ValueError(
            f"rate ratio {max(chain.rates) / min(chain.rates):.3g} exceeds "
            f"supported range {MAX_RATE_RATIO:g}"
        )


def has_repeated_rates(rates) -> bool:
    r = sorted(rates)
    return any(b - a <= DEGENERATE_RTOL * b for a, b in zip(r, r[1:]))


def generator_matrix(chain: ChainSpec) -> np.ndarray:
    """Transition-rate matrix Q with ``Q[i, j]`` the rate i -> j and rows summing to 0."""
    n = chain.num_components
    q = np.zeros((n, n))
    for i, r in enumerate(chain.rates):
        q[i, i + 1] = r
        q[i, i] = -r
    return q


def partial_fraction_condition(rates) -> float:
    """Largest sum of |partial-fraction terms| over components at t = 0.

    Rounding error of the closed form is about this number times machine
    epsilon, since the terms cancel down to a probability <= 1.
    """
    lam = list(rates) + [0.0]
    worst = 1.0
    prefactor = 1.0
    for j in range(1, len(lam)):
        prefactor *= rates[j - 1]
        total = 0.0
        for i in range(j + 1):
            denom = 1.0
            for l in range(j + 1):
                if l != i:
                    denom *= lam[l] - lam[i]
            total += 1.0 / abs(denom)
        worst = max(worst, prefactor * total)
    return worst


def _closed_form(rates: tuple[float, ...], t: float) -> np.ndarray:
    # decay constant of every component; the last one is absorbing
    lam = np.array(list(rates) + [0.0])
    m = len(rates)
    out = np.empty(m + 1)
    decay = np.exp(-lam * t)
    prefactor = 1.0
    for j in range(m + 1):
        if j > 0:
            prefactor *= rates[j - 1]
        total = 0.0
        for i in range(j + 1):
            denom = 1.0
            for l in range(j + 1):
                if l != i:
                    denom *= lam[l] - lam[i]
            total += decay[i] / denom
        out[j] = prefactor * total
    return out


def _rk4(chain: ChainSpec, t: float) -> np.ndarray:
    qt = generator_matrix(chain).T
    p = np.zeros(chain.num_components)
    p[0] = 1.0
    if t == 0:
        return p
    h = min(1.0 / (50.0 * max(chain.rates)), t / 100.0)
    steps = math.ceil(t / h)
    h = t / steps
    # for a linear system the classic RK4 step is exactly this matrix
    a = h * qt
    a2 = a @ a
    step = np.eye(len(p)) + a + a2 / 2.0 + (a2 @ a) / 6.0 + (a2 @ a2) / 24.0
    for _ in range(steps):
        p = _clamp(step @ p)
    return p


def _clamp(p: np.ndarray) -> np.ndarray:
    lo, hi = p.min(), p.max()
    if lo < -CLAMP_TOL or hi > 1.0 + CLAMP_TOL:
        raise NumericalIntegrityError(f"probabilities left [0, 1]: {p.tolist()}")
    if lo < 0.0 or hi > 1.0:
        return np.clip(p, 0.0, 1.0)
    return p


def born_distribution(chain: ChainSpec, t: float, method: str = "auto") -> ComponentDistribution:
    """Solve the chain's master equation from P(0) = (1, 0, ..., 0).

    ``method`` is ``"auto"`` (closed form unless two rates coincide or nearly
    coincide), ``"closed"`` or ``"rk4"``.
    """
    if not (math.isfinite(t) and t >= 0):
        raise ValueError(f"time must be >= 0, got {t!r}")
    _check_chain(chain)
    degenerate = has_repeated_rates(chain.rates)
    if method == "auto":
        ill_conditioned = (
            not degenerate
            and partial_fraction_condition(chain.rates) * np.finfo(float).eps > MAX_CANCELLATION_ERROR
        )
        method = "rk4" if degenerate or ill_conditioned else "closed"
    if method not in ("closed", "rk4"):
        raise ValueError(f"unknown method {method!r}")
    if t == 0:
        return ComponentDistribution(0.0, (1.0,) + (0.0,) * chain.last)
    if method == "closed":
        if degenerate:
            raise ValueError("closed form needs pairwise distinct rates")
        p = _clamp(_closed_form(chain.rates, t))
    else:
        p = _rk4(chain, t)
    return ComponentDistribution(t, tuple(p.tolist()))


def currents(chain: ChainSpec, dist: ComponentDistribution) -> CurrentVector:
    if len(dist.probs) != chain.num_components:
        raise ValueError(
            f"distribution has {len(dist.probs)} components, chain has {chain.num_components}"
        )
    p = dist.probs
    flows = tuple(r * p[j] for j, r in enumerate(chain.rates))
    padded = (0.0,) + flows + (0.0,)
    net = tuple(padded[i] - padded[i + 1] for i in range(chain.num_components))
    return CurrentVector(dist.time, net, flows)
