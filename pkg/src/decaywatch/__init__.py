"""Simulate and verify measurement-interrupted radioactive decay chains."""

__version__ = "0.1.0"

from .born import CurrentVector, NumericalIntegrityError, born_distribution, currents
from .chain import (
    ChainSpec,
    ComponentDistribution,
    make_n_atom_chain,
    n_atom_analytic,
    two_atom_analytic,
)
from .ensemble import (
    ComparisonReport,
    EnsembleResult,
    compare,
    gillespie_oracle,
    run_ensemble,
    verify,
)
from .protocol import StreamExhaustedError, TrajectoryRecord, run_trajectory
from .reduction import (
    CycleState,
    HitSample,
    TerminalStateError,
    cycle_rate,
    hit_time_cdf,
    reduce,
    sample_hit,
)
from .stats import InsufficientDataError

__all__ = [
    "ChainSpec",
    "ComparisonReport",
    "ComponentDistribution",
    "CurrentVector",
    "CycleState",
    "EnsembleResult",
    "HitSample",
    "InsufficientDataError",
    "NumericalIntegrityError",
    "StreamExhaustedError",
    "TerminalStateError",
    "TrajectoryRecord",
    "born_distribution",
    "compare",
    "currents",
    "cycle_rate",
    "gillespie_oracle",
    "hit_time_cdf",
    "make_n_atom_chain",
    "n_atom_analytic",
    "reduce",
    "run_ensemble",
    "run_trajectory",
    "sample_hit",
    "two_atom_analytic",
    "verify",
]
