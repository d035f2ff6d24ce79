import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decaywatch import protocol, reduction, streams
from decaywatch.chain import ChainSpec, make_n_atom_chain
from decaywatch.protocol import StreamExhaustedError, TrajectoryRecord, count_hits, run_trajectory


def test_zero_query_time():
    rec = run_trajectory(make_n_atom_chain(1.0, 2), 0.0, seed=5)
    assert rec.count_at_query == 0
    assert rec.hit_times == ()
    # the cycle straddling t is still read off the clock
    assert len(rec.inter_arrival) == 1


def test_long_query_time_exhausts_two_atom_chain():
    for seed in range(20):
        rec = run_trajectory(make_n_atom_chain(1.0, 2), 1e6, seed=seed)
        assert rec.count_at_query == 2
        assert len(rec.inter_arrival) == 2


def test_stopping_rule_boundary_straddle():
    r = 2.0
    u = -math.expm1(-r * 0.5)
    chain = ChainSpec(rates=(r,))
    before = run_trajectory(chain, 0.4, iter([u]), seed=0)
    after = run_trajectory(chain, 0.6, iter([u]), seed=0)
    assert before.count_at_query == 0
    assert after.count_at_query == 1
    assert before.inter_arrival == pytest.approx((0.5,))
    assert after.hit_times == pytest.approx((0.5,))


def test_hit_exactly_at_query_time_counts():
    chain = ChainSpec(rates=(2.0,))
    tau = reduction.sample_hit(2.0, 0.3).waiting_time
    rec = run_trajectory(chain, tau, iter([0.3]), seed=0)
    assert rec.count_at_query == 1
    assert count_hits(rec.hit_times, tau) == 1


def test_replay_is_bit_identical():
    chain = ChainSpec(rates=(1.5, 0.7, 2.2))
    a = run_trajectory(chain, 1.3, seed=123)
    b = run_trajectory(chain, 1.3, seed=123)
    assert a == b
    assert a.to_json() == b.to_json()


def test_exhausted_stream():
    with pytest.raises(StreamExhaustedError):
        run_trajectory(make_n_atom_chain(1.0, 2), 10.0, iter([0.5]), seed=0)


def test_negative_query_time():
    with pytest.raises(ValueError):
        run_trajectory(make_n_atom_chain(1.0, 2), -1.0)


@settings(max_examples=200)
@given(rates=st.lists(st.floats(0.1, 10), min_size=1, max_size=6),
       t=st.floats(0, 5), seed=st.integers(0, 2**63))
def test_record_invariants(rates, t, seed):
    rec = run_trajectory(ChainSpec(rates=tuple(rates)), t, seed=seed)
    assert rec.count_at_query == count_hits(rec.hit_times, t)
    assert all(b > a for a, b in zip(rec.hit_times, rec.hit_times[1:]))
    partial = np.cumsum(rec.inter_arrival)
    for j, h in enumerate(rec.hit_times):
        assert abs(h - partial[j]) <= 1e-12
    assert rec.components == tuple(range(rec.count_at_query + 1))


@settings(max_examples=100)
@given(rates=st.lists(st.floats(0.1, 10), min_size=1, max_size=6),
       times=st.lists(st.floats(0, 5), min_size=2, max_size=6), seed=st.integers(0, 2**32))
def test_count_nondecreasing_in_query_time(rates, times, seed):
    chain = ChainSpec(rates=tuple(rates))
    counts = [run_trajectory(chain, t, seed=seed).count_at_query for t in sorted(times)]
    assert counts == sorted(counts)


def test_csv_and_json_round_trip():
    rec = run_trajectory(ChainSpec(rates=(2.0, 1.0)), 1.5, seed=99)
    row = rec.to_csv_row()
    fields = row.split(",")
    assert fields[0] == "99"
    assert float(fields[1]) == 1.5
    assert int(fields[2]) == rec.count_at_query
    back = TrajectoryRecord.from_csv_row(row)
    assert back.inter_arrival == rec.inter_arrival
    assert back.count_at_query == rec.count_at_query
    assert back.hit_times == pytest.approx(rec.hit_times, abs=1e-12)
    d = rec.to_dict()
    assert set(d) >= {"inter_arrival", "hit_times", "query_time", "count_at_query", "seed"}


def test_batch_matches_scalar_trajectories():
    chain = ChainSpec(rates=(1.2, 3.0, 0.4, 2.0))
    t = 1.1
    trials = np.arange(500, dtype=np.uint64)
    seeds = streams.trial_seeds(77, trials)
    batch = protocol.run_batch(chain, t, seeds)
    for i, seed in enumerate(seeds):
        rec = run_trajectory(chain, t, seed=int(seed))
        assert rec.count_at_query == batch.counts[i]
        recorded = batch.waiting[i][batch.started[i]]
        assert tuple(recorded.tolist()) == rec.inter_arrival
