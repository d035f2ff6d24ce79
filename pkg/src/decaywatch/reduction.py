"""Sequential reduction cycles.

Each observation cycle is a two-component system: the conscious component
and the single ready component next to it. Everything further down the chain
carries zero weight until the ready component is hit. A hit reduces the state
onto the ready component, which becomes the new conscious component, and the
cycle restarts with unit weight.

The hit-time density is the current flowing into the ready component of the
renormalized cycle, ``r exp(-r tau)``, so hits are certain and exponentially
timed. Randomness is supplied by the caller as uniforms in (0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .chain import ChainSpec


class TerminalStateError(RuntimeError):
    """The cycle sits on the absorbing component; nothing is left to hit."""


@dataclass(frozen=True)
class CycleState:
    conscious_index: int = 0
    cycle_clock: float = 0.0
    global_clock: float = 0.0
    p_conscious: float = 1.0
    last_index: int = 1

    def __post_init__(self):
        if not 0 <= self.conscious_index <= self.last_index:
            raise ValueError(f"conscious_index {self.conscious_index} out of range")
        if not 0.0 <= self.p_conscious <= 1.0:
            raise ValueError(f"p_conscious {self.p_conscious} outside [0, 1]")

    @property
    def ready_index(self) -> int | None:
        if self.terminal:
            return None
        return self.conscious_index + 1

    @property
    def terminal(self) -> bool:
        return self.conscious_index == self.last_index


@dataclass(frozen=True)
class HitSample:
    waiting_time: float
    cycle_index: int

    def __post_init__(self):
        if not (math.isfinite(self.waiting_time) and self.waiting_time > 0):
            raise ValueError(f"waiting time must be positive and finite: {self.waiting_time!r}")


def initial_cycle(chain: ChainSpec) -> CycleState:
    return CycleState(last_index=chain.last)


def successor(index: int) -> int:
    """Component reached by a hit from ``index``; only the adjacent one is reachable."""
    return index + 1


def cycle_rate(chain: ChainSpec, cycle: CycleState) -> float:
    """Rate at which the conscious component's weight flows into the ready one."""
    if cycle.terminal:
        raise TerminalStateError("no ready component on a terminal cycle")
    return chain.rates[cycle.conscious_index]


def hit_time_cdf(rate: float, tau: float) -> float:
    """Integrated current into the ready component after cycle time ``tau``."""
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate!r}")
    if not tau >= 0:
        raise ValueError(f"tau must be >= 0, got {tau!r}")
    return -math.expm1(-rate * tau)


def waiting_times(rate, u):
    """Inverse of :func:`hit_time_cdf`; vectorized over ``rate`` and ``u``."""
    return -np.log1p(-np.asarray(u)) / rate


def sample_hit(rate: float, u: float, cycle_index: int = 1) -> HitSample:
    if not 0.0 < u < 1.0:
        raise ValueError(f"uniform must lie in (0, 1), got {u!r}")
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate!r}")
    # same kernel as the vectorized path so scalar and batch runs agree bitwise
    return HitSample(float(waiting_times(rate, u)), cycle_index)


def advance_clock(chain: ChainSpec, cycle: CycleState, dt: float) -> CycleState:
    """Let the cycle run ``dt`` without a hit; the conscious weight decays."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if cycle.terminal:
        return replace(cycle, cycle_clock=cycle.cycle_clock + dt,
                       global_clock=cycle.global_clock + dt)
    clock = cycle.cycle_clock + dt
    return replace(
        cycle,
        cycle_clock=clock,
        global_clock=cycle.global_clock + dt,
        p_conscious=math.exp(-cycle_rate(chain, cycle) * clock),
    )


def reduce(chain: ChainSpec, cycle: CycleState, hit: HitSample) -> CycleState:
    """Reduce onto the ready component and start a fresh, renormalized cycle."""
    if cycle.terminal:
        raise TerminalStateError("cannot reduce a terminal cycle")
    if not math.isfinite(hit.waiting_time):
        raise ValueError("hit waiting time must be finite")
    nxt = min(successor(cycle.conscious_index), chain.last)
    return CycleState(
        conscious_index=nxt,
        cycle_clock=0.0,
        global_clock=cycle.global_clock - cycle.cycle_clock + hit.waiting_time,
        p_conscious=1.0,
        last_index=chain.last,
    )


def snapshot(chain: ChainSpec, cycle: CycleState) -> list[float]:
    """In-cycle weights of every component; zero outside the conscious/ready pair."""
    probs = [0.0] * chain.num_components
    if cycle.terminal:
        probs[cycle.conscious_index] = 1.0
        return probs
    probs[cycle.conscious_index] = cycle.p_conscious
    probs[cycle.ready_index] = 1.0 - cycle.p_conscious
    return probs


def cycle_sequence(chain: ChainSpec) -> list[int]:
    """Conscious components visited from the start, ending on the absorbing one."""
    seq = [0]
    while seq[-1] < chain.last:
        seq.append(min(successor(seq[-1]), chain.last))
    return seq
