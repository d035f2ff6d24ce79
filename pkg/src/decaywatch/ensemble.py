"""Trajectory ensembles, the direct-jump oracle, and their comparison with the Born law.

Trial ``i`` of an ensemble always uses the counter substream keyed by
``trial_seed(master_seed, i)``. Trials are processed in fixed-size chunks that
may run on any number of threads; histograms merge by addition and waiting-time
reservoirs by bottom-k selection on a per-sample hash, so the result does not
depend on scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import protocol, streams
from .born import born_distribution, generator_matrix
from .chain import ChainSpec, ComponentDistribution
from .stats import (
    InsufficientDataError,
    ks_critical,
    ks_exponential,
    pearson_chi_square,
    two_sample_chi_square,
)

MAX_TRIALS = 10**9
RESERVOIR_CAP = 10**4
CHUNK = 1 << 16
KS_MIN_SAMPLES = 35


@dataclass
class _Reservoir:
    keys: np.ndarray
    values: np.ndarray

    @classmethod
    def empty(cls):
        return cls(np.empty(0, dtype=np.uint64), np.empty(0))

    def merge(self, other: _Reservoir, cap: int) -> _Reservoir:
        keys = np.concatenate([self.keys, other.keys])
        values = np.concatenate([self.values, other.values])
        # values break (astronomically unlikely) key ties deterministically
        order = np.lexsort((values, keys))[:cap]
        return _Reservoir(keys[order], values[order])


@dataclass
class _Partial:
    histogram: np.ndarray
    reservoirs: list[_Reservoir]
    advances: dict[int, int]

    def merge(self, other: _Partial, cap: int) -> _Partial:
        adv = dict(self.advances)
        for a, c in other.advances.items():
            adv[a] = adv.get(a, 0) + c
        return _Partial(
            self.histogram + other.histogram,
            [r.merge(o, cap) for r, o in zip(self.reservoirs, other.reservoirs)],
            adv,
        )


@dataclass
class EnsembleResult:
    chain: ChainSpec
    query_time: float
    trials: int
    count_histogram: list[int]
    cycle_waiting_samples: list[list[float]]
    cycle_rates: list[float]
    master_seed: int
    advance_histogram: dict[int, int] = field(default_factory=dict)
    method: str = "reduction"

    @property
    def observed_freq(self) -> list[float]:
        return [c / self.trials for c in self.count_histogram]

    def to_dict(self, include_samples: bool = True) -> dict:
        d = {
            "method": self.method,
            "chain": self.chain.to_dict(),
            "query_time": self.query_time,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "count_histogram": list(self.count_histogram),
            "cycle_rates": list(self.cycle_rates),
            "advance_histogram": {str(k): v for k, v in sorted(self.advance_histogram.items())},
        }
        if include_samples:
            d["cycle_waiting_samples"] = [list(s) for s in self.cycle_waiting_samples]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> EnsembleResult:
        return cls(
            chain=ChainSpec.from_dict(d["chain"]),
            query_time=d["query_time"],
            trials=d["trials"],
            count_histogram=list(d["count_histogram"]),
            cycle_waiting_samples=[list(s) for s in d.get("cycle_waiting_samples", [])],
            cycle_rates=list(d["cycle_rates"]),
            master_seed=d["master_seed"],
            advance_histogram={int(k): v for k, v in d.get("advance_histogram", {}).items()},
            method=d.get("method", "reduction"),
        )


def _check_args(query_time: float, trials: int) -> None:
    if not (math.isfinite(query_time) and query_time >= 0):
        raise ValueError(f"query time must be >= 0, got {query_time!r}")
    if int(trials) != trials or trials < 1:
        raise ValueError(f"trials must be a positive integer, got {trials!r}")
    if trials > MAX_TRIALS:
        raise ValueError(f"trials above {MAX_TRIALS} are not supported")


def _reservoir_from(seeds, cycle, values, mask, salt) -> _Reservoir:
    keys = streams.raw_bits(seeds[mask], cycle, salt)
    vals = values[mask]
    order = np.lexsort((vals, keys))[:RESERVOIR_CAP]
    return _Reservoir(keys[order], vals[order])


def _reduction_chunk(chain: ChainSpec, query_time: float, seeds: np.ndarray) -> _Partial:
    batch = protocol.run_batch(chain, query_time, seeds)
    hist = np.bincount(batch.counts, minlength=chain.num_components).astype(np.int64)
    reservoirs = [
        _reservoir_from(seeds, c, batch.waiting[:, c], batch.started[:, c], streams.RESERVOIR)
        for c in range(batch.waiting.shape[1])
    ]
    # pad cycles that a non-adjacent successor would never start
    reservoirs += [_Reservoir.empty() for _ in range(chain.last - len(reservoirs))]
    advances: dict[int, int] = {}
    for c in range(len(batch.sequence) - 1):
        step = batch.sequence[c + 1] - batch.sequence[c]
        advances[step] = advances.get(step, 0) + int(np.count_nonzero(batch.hits > c))
    return _Partial(hist, reservoirs, advances)


def _gillespie_chunk(chain: ChainSpec, query_time: float, seeds: np.ndarray) -> _Partial:
    # generic direct-method SSA on the full generator; nothing here assumes
    # the birth-chain structure
    q = generator_matrix(chain)
    props = np.where(np.eye(len(q), dtype=bool), 0.0, q)
    cum = np.cumsum(props, axis=1)
    total = cum[:, -1]
    n = len(seeds)
    state = np.zeros(n, dtype=np.int64)
    clock = np.zeros(n)
    active = total[state] > 0
    step = 0
    holding: list[tuple[np.ndarray, np.ndarray, np.ndarray, int]] = []
    advances: dict[int, int] = {}
    while active.any():
        idx = np.flatnonzero(active)
        a0 = total[state[idx]]
        u1 = streams.uniforms(seeds[idx], step, streams.GILLESPIE_TIME)
        u2 = streams.uniforms(seeds[idx], step, streams.GILLESPIE_PICK)
        tau = -np.log(u1) / a0
        holding.append((idx, state[idx].copy(), tau, step))
        clock[idx] += tau
        fired = clock[idx] <= query_time
        fidx = idx[fired]
        rows = cum[state[fidx]]
        target = np.argmax(rows > (u2[fired] * a0[fired])[:, None], axis=1)
        jumps = target - state[fidx]
        for a, c in zip(*np.unique(jumps, return_counts=True)):
            advances[int(a)] = advances.get(int(a), 0) + int(c)
        state[fidx] = target
        active[idx[~fired]] = False
        active[fidx] = total[target] > 0
        step += 1

    hist = np.bincount(state, minlength=chain.num_components).astype(np.int64)
    reservoirs = []
    for s in range(chain.last):
        vals, keys = [], []
        for idx, st, tau, step in holding:
            m = st == s
            if m.any():
                vals.append(tau[m])
                counter = step * chain.num_components + s
                keys.append(streams.raw_bits(seeds[idx[m]], counter, streams.RESERVOIR_ORACLE))
        if vals:
            v, k = np.concatenate(vals), np.concatenate(keys)
            order = np.lexsort((v, k))[:RESERVOIR_CAP]
            reservoirs.append(_Reservoir(k[order], v[order]))
        else:
            reservoirs.append(_Reservoir.empty())
    return _Partial(hist, reservoirs, advances)


def _run(kernel, chain, query_time, trials, master_seed, threads, method) -> EnsembleResult:
    _check_args(query_time, trials)
    trials = int(trials)
    threads = threads or os.cpu_count() or 1
    bounds = [(lo, min(lo + CHUNK, trials)) for lo in range(0, trials, CHUNK)]

    def work(b):
        seeds = streams.trial_seeds(master_seed, np.arange(b[0], b[1], dtype=np.uint64))
        return kernel(chain, query_time, seeds)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    total = parts[0]
    for p in parts[1:]:
        total = total.merge(p, RESERVOIR_CAP)

    return EnsembleResult(
        chain=chain,
        query_time=float(query_time),
        trials=trials,
        count_histogram=[int(c) for c in total.histogram],
        cycle_waiting_samples=[r.values.tolist() for r in total.reservoirs],
        cycle_rates=list(chain.rates),
        master_seed=int(master_seed),
        advance_histogram=dict(sorted(total.advances.items())),
        method=method,
    )


def run_ensemble(
    chain: ChainSpec,
    query_time: float,
    trials: int,
    master_seed: int,
    threads: int | None = None,
) -> EnsembleResult:
    """Count histogram of ``trials`` independent observer runs."""
    return _run(_reduction_chunk, chain, query_time, trials, master_seed, threads, "reduction")


def gillespie_oracle(
    chain: ChainSpec,
    query_time: float,
    trials: int,
    master_seed: int,
    threads: int | None = None,
) -> EnsembleResult:
    """Same ensemble drawn by direct jump simulation of the unreduced chain."""
    return _run(_gillespie_chunk, chain, query_time, trials, master_seed, threads, "gillespie")


@dataclass
class ComparisonReport:
    expected: ComponentDistribution
    observed_freq: list[float]
    chi_square: float
    dof: int
    p_value: float
    max_abs_deviation: float
    per_cycle_ks: list[float | None]
    ks_critical: list[float | None]
    ks_sizes: list[int]

    def to_dict(self) -> dict:
        return {
            "expected": list(self.expected.probs),
            "observed_freq": self.observed_freq,
            "chi_square": self.chi_square,
            "dof": self.dof,
            "p_value": None if math.isnan(self.p_value) else self.p_value,
            "max_abs_deviation": self.max_abs_deviation,
            "per_cycle_ks": self.per_cycle_ks,
            "ks_critical": self.ks_critical,
            "ks_sizes": self.ks_sizes,
        }


def compare(result: EnsembleResult, expected: ComponentDistribution) -> ComparisonReport:
    """Chi-square of the count histogram plus KS of each cycle's waiting times.

    Raises :class:`InsufficientDataError` when fewer than two bins reach the
    expected-count threshold, since no test is possible then.
    """
    if len(expected.probs) != len(result.count_histogram):
        raise ValueError(
            f"expected {len(expected.probs)} bins, histogram has {len(result.count_histogram)}"
        )
    chi2, dof, p = pearson_chi_square(result.count_histogram, expected.probs)
    if dof < 1:
        raise InsufficientDataError("all mass falls in a single bin")
    total = math.fsum(result.count_histogram)
    freq = [c / total for c in result.count_histogram]
    dev = max(abs(f - e) for f, e in zip(freq, expected.probs))
    ks, crit, sizes = [], [], []
    for samples, rate in zip(result.cycle_waiting_samples, result.cycle_rates):
        sizes.append(len(samples))
        if len(samples) < KS_MIN_SAMPLES:
            ks.append(None)
            crit.append(None)
        else:
            ks.append(ks_exponential(samples, rate))
            crit.append(ks_critical(len(samples)))
    return ComparisonReport(expected, freq, chi2, dof, p, dev, ks, crit, sizes)


GOF_ALPHA = 0.001
HOMOGENEITY_ALPHA = 0.01


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value,
                "threshold": self.threshold, "passed": self.passed}


@dataclass
class VerificationReport:
    reduction: ComparisonReport
    oracle: ComparisonReport
    homogeneity_chi_square: float
    homogeneity_dof: int
    homogeneity_p_value: float
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "reduction": self.reduction.to_dict(),
            "oracle": self.oracle.to_dict(),
            "homogeneity": {
                "chi_square": self.homogeneity_chi_square,
                "dof": self.homogeneity_dof,
                "p_value": self.homogeneity_p_value,
            },
            "checks": [c.to_dict() for c in self.checks],
        }


def verify(
    chain: ChainSpec,
    query_time: float,
    trials: int,
    master_seed: int,
    threads: int | None = None,
) -> VerificationReport:
    """Run both ensembles and test them against the Born distribution and each other."""
    expected = born_distribution(chain, query_time)
    ens = run_ensemble(chain, query_time, trials, master_seed, threads)
    ora = gillespie_oracle(chain, query_time, trials, master_seed, threads)
    rep_r = compare(ens, expected)
    rep_o = compare(ora, expected)
    chi2, dof, p = two_sample_chi_square(ens.count_histogram, ora.count_histogram)

    checks = [
        Check("reduction_vs_born_p", rep_r.p_value, GOF_ALPHA, rep_r.p_value >= GOF_ALPHA),
        Check("oracle_vs_born_p", rep_o.p_value, GOF_ALPHA, rep_o.p_value >= GOF_ALPHA),
        Check("reduction_vs_oracle_p", p, HOMOGENEITY_ALPHA, p >= HOMOGENEITY_ALPHA),
    ]
    for c, (d, crit) in enumerate(zip(rep_r.per_cycle_ks, rep_r.ks_critical), start=1):
        if d is not None:
            checks.append(Check(f"cycle{c}_ks", d, crit, d <= crit))
    return VerificationReport(rep_r, rep_o, chi2, dof, p, checks)
