"""Decay-chain specifications and closed-form count distributions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

PROB_TOL = 1e-9


@dataclass(frozen=True)
class ChainSpec:
    """A birth chain S_0 -> S_1 -> ... -> S_m with constant adjacent rates.

    ``rates[j - 1]`` is the rate of the transition from component ``j - 1`` to
    component ``j``. Component ``m`` is absorbing.
    """

    rates: tuple[float, ...]
    labels: tuple[str, ...] | None = None
    source: str = field(default="rates", compare=False)

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        if len(rates) < 1:
            raise ValueError("a chain needs at least two components (one rate)")
        for r in rates:
            if not (math.isfinite(r) and r > 0):
                raise ValueError(f"rates must be positive and finite, got {r!r}")
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != len(rates) + 1:
                raise ValueError(
                    f"expected {len(rates) + 1} labels, got {len(labels)}"
                )
            object.__setattr__(self, "labels", labels)

    @property
    def num_components(self) -> int:
        return len(self.rates) + 1

    @property
    def last(self) -> int:
        """Index m of the absorbing component."""
        return len(self.rates)

    def rate(self, i: int, j: int) -> float:
        """Transition rate from component i to j; zero unless j == i + 1."""
        if j == i + 1 and 0 <= i < self.last:
            return self.rates[i]
        return 0.0

    def component_labels(self) -> tuple[str, ...]:
        if self.labels is not None:
            return self.labels
        return tuple(f"S{i}" for i in range(self.num_components))

    def to_dict(self) -> dict:
        return {"rates": list(self.rates), "labels": list(self.component_labels())}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: dict) -> ChainSpec:
        labels = data.get("labels")
        return cls(rates=tuple(data["rates"]), labels=tuple(labels) if labels else None)

    @classmethod
    def from_json(cls, text: str) -> ChainSpec:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ComponentDistribution:
    """Square moduli P_0..P_m of the chain components at ``time``."""

    time: float
    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if self.time < 0 or not math.isfinite(self.time):
            raise ValueError(f"time must be finite and >= 0, got {self.time!r}")
        for p in probs:
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"probability outside [0, 1]: {p!r}")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")

    def __len__(self) -> int:
        return len(self.probs)


def _check_k_t(k: float, t: float) -> None:
    if not (math.isfinite(k) and k > 0):
        raise ValueError(f"decay constant must be positive, got {k!r}")
    if not (math.isfinite(t) and t >= 0):
        raise ValueError(f"time must be >= 0, got {t!r}")


def make_n_atom_chain(k: float, n: int) -> ChainSpec:
    """Count chain for ``n`` independent atoms decaying at ``k``.

    With ``j - 1`` counts already registered, ``n - j + 1`` atoms are still
    undecayed, so the next count arrives at rate ``(n - j + 1) * k``.
    """
    if not (math.isfinite(k) and k > 0):
        raise ValueError(f"decay constant must be positive, got {k!r}")
    if int(n) != n or n < 1:
        raise ValueError(f"atom count must be a positive integer, got {n!r}")
    n = int(n)
    rates = tuple((n - j + 1) * k for j in range(1, n + 1))
    return ChainSpec(rates=rates, labels=tuple(f"D{j}" for j in range(n + 1)),
                     source=f"{n}-atom")


def two_atom_analytic(k: float, t: float) -> ComponentDistribution:
    """[AA, AA0 + A0A, A0A0] with A = exp(-k t), A0 = 1 - A."""
    _check_k_t(k, t)
    a = math.exp(-k * t)
    a0 = -math.expm1(-k * t)
    return ComponentDistribution(t, (a * a, 2.0 * a * a0, a0 * a0))


def n_atom_analytic(k: float, n: int, t: float) -> ComponentDistribution:
    """Binomial count law for ``n`` independent atoms."""
    _check_k_t(k, t)
    if int(n) != n or n < 1:
        raise ValueError(f"atom count must be a positive integer, got {n!r}")
    n = int(n)
    a = math.exp(-k * t)
    a0 = -math.expm1(-k * t)
    probs = [math.comb(n, j) * a ** (n - j) * a0**j for j in range(n + 1)]
    return ComponentDistribution(t, tuple(probs))
