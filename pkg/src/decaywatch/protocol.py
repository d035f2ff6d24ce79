"""Clock-zeroing observation protocol.

The observer starts a clock, zeroes it at every count, and keeps the readings
``t_1, t_2, ...``. The count reported at query time ``t`` is the ``n`` with
``t_1 + ... + t_n <= t < t_1 + ... + t_{n+1}``.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Iterator
from dataclasses import asdict, dataclass

import numpy as np

from . import reduction, streams
from .chain import ChainSpec


class StreamExhaustedError(RuntimeError):
    """The uniform stream ran dry before the trajectory finished."""


@dataclass(frozen=True)
class TrajectoryRecord:
    """One observer run.

    ``inter_arrival`` includes the reading of the cycle still running at the
    query time (the ``t_{n+1}`` of the stopping rule); ``hit_times`` only has
    the completed counts.
    """

    inter_arrival: tuple[float, ...]
    hit_times: tuple[float, ...]
    query_time: float
    count_at_query: int
    seed: int
    components: tuple[int, ...] = (0,)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["inter_arrival"] = list(self.inter_arrival)
        d["hit_times"] = list(self.hit_times)
        d["components"] = list(self.components)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv_row(self) -> str:
        gaps = ";".join(format(x, ".17g") for x in self.inter_arrival)
        return f"{self.seed},{self.query_time:.17g},{self.count_at_query},{gaps}"

    @classmethod
    def from_csv_row(cls, row: str) -> TrajectoryRecord:
        seed, query_time, count, gaps = row.rstrip("\n").split(",", 3)
        inter = tuple(float(x) for x in gaps.split(";")) if gaps else ()
        count = int(count)
        hits = tuple(np.cumsum(inter[:count]).tolist())
        return cls(inter, hits, float(query_time), count, int(seed))


def count_hits(hit_times: Iterable[float], query_time: float) -> int:
    """Stopping rule; a hit exactly at ``query_time`` counts."""
    return sum(1 for h in hit_times if h <= query_time)


def run_trajectory(
    chain: ChainSpec,
    query_time: float,
    uniforms: Iterator[float] | None = None,
    seed: int = 0,
) -> TrajectoryRecord:
    """Run reduction cycles until the query time is passed or the chain is exhausted.

    Without an explicit ``uniforms`` iterator the counter stream of ``seed`` is
    used, which makes the record a pure function of (chain, query_time, seed).
    """
    if not query_time >= 0:
        raise ValueError(f"query time must be >= 0, got {query_time!r}")
    if uniforms is None:
        uniforms = streams.uniform_stream(seed)
    uniforms = iter(uniforms)

    cycle = reduction.initial_cycle(chain)
    inter: list[float] = []
    hits: list[float] = []
    visited = [0]
    n = 0
    while not cycle.terminal:
        rate = reduction.cycle_rate(chain, cycle)
        try:
            u = next(uniforms)
        except StopIteration:
            raise StreamExhaustedError(
                f"uniform stream exhausted after {n} draws"
            ) from None
        n += 1
        hit = reduction.sample_hit(rate, u, cycle_index=n)
        inter.append(hit.waiting_time)
        if cycle.global_clock + hit.waiting_time > query_time:
            break
        cycle = reduction.reduce(chain, cycle, hit)
        hits.append(cycle.global_clock)
        visited.append(cycle.conscious_index)
    return TrajectoryRecord(
        inter_arrival=tuple(inter),
        hit_times=tuple(hits),
        query_time=float(query_time),
        count_at_query=cycle.conscious_index,
        seed=int(seed),
        components=tuple(visited),
    )


@dataclass
class BatchTrajectories:
    """Vectorized equivalent of many :func:`run_trajectory` calls.

    ``waiting[i, c]`` is trial i's reading for cycle c (1-based cycle c + 1);
    ``started[i, c]`` says whether that cycle began at or before the query
    time and is therefore part of the trial's record.
    """

    counts: np.ndarray
    hits: np.ndarray
    waiting: np.ndarray
    started: np.ndarray
    cycle_rates: tuple[float, ...]
    sequence: tuple[int, ...]


def run_batch(chain: ChainSpec, query_time: float, seeds: np.ndarray) -> BatchTrajectories:
    if not query_time >= 0:
        raise ValueError(f"query time must be >= 0, got {query_time!r}")
    seq = reduction.cycle_sequence(chain)
    ncycles = len(seq) - 1
    rates = tuple(chain.rates[c] for c in seq[:-1])
    n = len(seeds)
    waiting = np.empty((n, ncycles))
    for c, rate in enumerate(rates):
        waiting[:, c] = reduction.waiting_times(rate, streams.uniforms(seeds, c))
    clocks = np.cumsum(waiting, axis=1)
    hits = np.count_nonzero(clocks <= query_time, axis=1)
    # clocks are increasing, so the hits are exactly the leading cycles
    started = np.arange(ncycles)[None, :] <= hits[:, None]
    counts = np.asarray(seq)[hits]
    return BatchTrajectories(counts, hits, waiting, started, rates, tuple(seq))
