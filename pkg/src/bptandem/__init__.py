"""Simulation and exact analysis of back-pressure tandem queueing systems."""

__version__ = "0.1.0"

from ._kernels import BACKEND as kernel_backend
from . import analysis, cli, oracle, tasep
from .core import (
    INFINITE, Arrival, BusyInterval, OrderRelation, QueueState, ServiceRing,
    apply_transition, busy_interval, busy_interval_packed, check_tail_dominance,
    compare, is_eligible,
)
from .engine import (
    EnvSpec, StationarySamples, SystemConfig, SystemSpec, Trajectory,
    run_systems, simulate, simulate_coupled, simulate_obstructed,
    stationary_samples,
)
from .clocks import (
    AllValid, BernoulliMask, CallableMask, ClockField, DeterministicArrivals,
    NoneValid, PoissonArrivals, StreamArrivals,
)
