"""Event-driven simulation engine for back-pressure tandem systems.

The engine materializes clock streams window by window, merges them into one
time-ordered event array (ties broken arrival-first, then lower site), and
hands the merge to the selected kernel backend. Several coupled systems can
ride the same clock field in one run; order relations between them can be
checked after every event.

Started from the empty state, sampled distributions are stochastically below
their long-run limits and grow toward them as the horizon increases, so
means and tail weights estimated this way are conservative underestimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels
from ._kernels.state import (
    DONE, NEED_BOND_CAPACITY, NEED_LOG_CAPACITY, NEED_SITE,
    NEED_STATE_CAPACITY, N_VIOLATIONS, REL_COMPONENTWISE, REL_FIRST_GE,
    REL_TAIL_SUM, RunState, SC_BUSY, SC_BUSY_SAT, SC_FRONTIER, SC_PACKED,
    SC_PACKED_SAT, SC_Q1, SC_TAGGED, SC_TOTAL, V_CONSERVATION, V_ENV_DOM,
    V_ENV_RANGE, V_GATE_IFF, V_PAIR_FIRST, V_PAIR_LE, V_PAIR_TAIL,
    V_TAIL_DOM, V_TIME_ORDER, grow_bond_capacity, grow_log_capacity,
    grow_site_capacity, initial_active_sites, make_run_state,
)
from .clocks import (
    AllValid, ArrivalProcessSpec, ClockField, PoissonArrivals, ValidityMask,
)
from .core import INFINITE, QueueState

__all__ = [
    "SystemConfig",
    "SystemSpec",
    "EnvSpec",
    "EventLog",
    "Trajectory",
    "CoupledRun",
    "ObstructedRun",
    "StationarySamples",
    "RawRun",
    "run_systems",
    "simulate",
    "simulate_coupled",
    "simulate_obstructed",
    "stationary_samples",
]

VIOLATION_NAMES = {
    V_PAIR_LE: "pair_componentwise",
    V_PAIR_TAIL: "pair_tail_sum",
    V_PAIR_FIRST: "pair_first_site",
    V_TAIL_DOM: "tail_dominance",
    V_ENV_DOM: "environment_dominance",
    V_GATE_IFF: "gate_iff",
    V_ENV_RANGE: "environment_range",
    V_TIME_ORDER: "time_order",
    V_CONSERVATION: "conservation",
}

_DEFAULT_WINDOW_EVENTS = 2_000_000


@dataclass(frozen=True)
class SystemConfig:
    """One tandem system: arrival rate, site ladder, run length and seed."""

    arrival_rate: float
    horizon: Union[int, float]
    time_horizon: float
    seed: int
    initial_state: tuple = ()

    def __post_init__(self):
        if not (self.arrival_rate >= 0):
            raise ValueError(f"arrival rate must be >= 0, got {self.arrival_rate}")
        if self.horizon != math.inf:
            if not isinstance(self.horizon, int) or self.horizon < 1:
                raise ValueError(f"horizon must be a positive int or INFINITE, got {self.horizon!r}")
        if not (self.time_horizon > 0) or math.isinf(self.time_horizon):
            raise ValueError(f"time horizon must be positive and finite, got {self.time_horizon}")
        object.__setattr__(self, "initial_state", tuple(int(x) for x in self.initial_state))


@dataclass(frozen=True)
class SystemSpec:
    """Low-level description of one system inside a fused run."""

    initial_state: tuple = ()
    horizon: Union[int, float] = INFINITE
    has_arrivals: bool = True
    use_mask: bool = False
    gated: bool = False
    refill_site1: bool = False
    tagged: Optional[int] = None


@dataclass(frozen=True)
class EnvSpec:
    """Ring exclusion environment sharing the run's site clocks.

    ``occupancy[i]`` is ring site ``i + 1``; jumps from ``bond_site`` are
    recorded with their times.
    """

    occupancy: tuple
    bond_site: int = 1
    sample_occupancy: bool = False

    def __init__(self, occupancy, bond_site: int = 1, sample_occupancy: bool = False):
        object.__setattr__(self, "occupancy", tuple(int(x) for x in occupancy))
        object.__setattr__(self, "bond_site", int(bond_site))
        object.__setattr__(self, "sample_occupancy", bool(sample_occupancy))


@dataclass
class EventLog:
    """Every merged event of a run, with the per-system outcome codes."""

    times: np.ndarray
    streams: np.ndarray
    valid: np.ndarray
    env_jump: np.ndarray
    actions: np.ndarray  # (n_systems, n_events)


@dataclass
class Trajectory:
    """Sampled path of one system plus end-of-run facts."""

    horizon: Union[int, float]
    sample_times: np.ndarray
    queues: np.ndarray  # (n_epochs, sample_width), sites 1..W
    counters: np.ndarray  # (n_epochs, sample_width + 1), cumulative entries per site
    scalars: np.ndarray  # (n_epochs, N_SCALARS)
    final_state: QueueState
    arrivals: int
    departures: int
    violations: dict
    backend: str
    event_log: Optional[EventLog] = None
    system_index: int = 0

    @property
    def q1(self) -> np.ndarray:
        return self.scalars[:, SC_Q1]

    @property
    def busy_sites(self) -> np.ndarray:
        return self.scalars[:, SC_BUSY]

    @property
    def busy_saturated(self) -> np.ndarray:
        return self.scalars[:, SC_BUSY_SAT].astype(bool)

    @property
    def packed_sites(self) -> np.ndarray:
        return self.scalars[:, SC_PACKED]

    @property
    def packed_saturated(self) -> np.ndarray:
        return self.scalars[:, SC_PACKED_SAT].astype(bool)

    @property
    def totals(self) -> np.ndarray:
        return self.scalars[:, SC_TOTAL]

    @property
    def frontiers(self) -> np.ndarray:
        return self.scalars[:, SC_FRONTIER]

    @property
    def tagged_positions(self) -> np.ndarray:
        return self.scalars[:, SC_TAGGED]

    def states(self) -> List[QueueState]:
        """Sampled states as :class:`QueueState` objects.

        Only valid when the sample width covered the whole support at every
        epoch; otherwise the stored prefix would silently truncate.
        """
        W = self.queues.shape[1]
        if np.any(self.frontiers > W):
            raise ValueError("sample width too small to reconstruct full states")
        hz = self.horizon
        out = []
        for row in self.queues:
            if hz == math.inf:
                out.append(QueueState(tuple(row), INFINITE))
            else:
                out.append(QueueState(tuple(row[:int(hz)]), hz))
        return out


@dataclass
class CoupledRun:
    trajectories: List[Trajectory]
    violations: dict


@dataclass
class ObstructedRun:
    unobstructed: Trajectory
    obstructed: Trajectory
    violations: dict


@dataclass
class StationarySamples:
    """Equally spaced post-burn-in samples of one system."""

    epochs: np.ndarray
    queues: np.ndarray  # (n_samples, sample_width)
    scalars: np.ndarray
    horizon: Union[int, float]
    arrival_rate: float

    @property
    def q1(self) -> np.ndarray:
        return self.scalars[:, SC_Q1]

    @property
    def busy_sites(self) -> np.ndarray:
        return self.scalars[:, SC_BUSY]

    @property
    def packed_sites(self) -> np.ndarray:
        return self.scalars[:, SC_PACKED]

    @property
    def busy_saturated(self) -> np.ndarray:
        return self.scalars[:, SC_BUSY_SAT].astype(bool)

    @property
    def packed_saturated(self) -> np.ndarray:
        return self.scalars[:, SC_PACKED_SAT].astype(bool)

    def states(self) -> List[QueueState]:
        W = self.queues.shape[1]
        if np.any(self.scalars[:, SC_FRONTIER] > W):
            raise ValueError("sample width too small to reconstruct full states")
        out = []
        for row in self.queues:
            if self.horizon == math.inf:
                out.append(QueueState(tuple(row), INFINITE))
            else:
                out.append(QueueState(tuple(row[:int(self.horizon)]), self.horizon))
        return out


@dataclass
class RawRun:
    """Everything a fused run produced; systems are addressed by index."""

    rs: RunState
    seed: int
    time_horizon: float
    arrival_spec: object
    backend: str
    env: Optional[EnvSpec]

    def violations(self) -> dict:
        return {VIOLATION_NAMES[i]: int(self.rs.violations[i]) for i in range(N_VIOLATIONS)}

    def bond_times(self) -> np.ndarray:
        return self.rs.bond_times[:self.rs.bond_count].copy()

    def env_samples(self) -> np.ndarray:
        return self.rs.samples_env.copy()

    def event_log(self, k: Optional[int] = None) -> Optional[EventLog]:
        rs = self.rs
        if not rs.log_on:
            return None
        n = rs.log_idx
        actions = rs.log_action[:, :n].copy()
        return EventLog(
            times=rs.log_time[:n].copy(),
            streams=rs.log_stream[:n].copy(),
            valid=rs.log_valid[:n].astype(bool),
            env_jump=rs.log_env_jump[:n].astype(bool),
            actions=actions if k is None else actions[k:k + 1],
        )

    def final_state(self, k: int) -> QueueState:
        rs = self.rs
        if rs.horizon[k] >= 0:
            N = int(rs.horizon[k])
            return QueueState(tuple(rs.q[k, 1:N + 1]), N)
        row = rs.q[k, 1:rs.site_cap + 2]
        support = int(np.nonzero(row)[0].max()) + 1 if np.any(row) else 0
        return QueueState(tuple(row[:support]), INFINITE)

    def trajectory(self, k: int, event_log: bool = False) -> Trajectory:
        rs = self.rs
        hz = INFINITE if rs.horizon[k] < 0 else int(rs.horizon[k])
        return Trajectory(
            horizon=hz,
            sample_times=rs.epochs.copy(),
            queues=rs.samples_q[k].copy(),
            counters=rs.samples_f[k].copy(),
            scalars=rs.samples_scalar[k].copy(),
            final_state=self.final_state(k),
            arrivals=int(rs.arrivals_count[k]),
            departures=int(rs.departures_count[k]),
            violations=self.violations(),
            backend=self.backend,
            event_log=self.event_log(k) if event_log else None,
            system_index=k,
        )


def _normalize_epochs(epochs, time_horizon: float) -> Optional[np.ndarray]:
    if epochs is None:
        return None
    if isinstance(epochs, int):
        if epochs < 1:
            raise ValueError("epoch count must be positive")
        return np.linspace(time_horizon / epochs, time_horizon, epochs)
    arr = np.asarray(epochs, dtype=np.float64)
    if arr.size and (arr.min() < 0 or arr.max() > time_horizon):
        raise ValueError("sample epochs must lie in [0, time_horizon]")
    return arr


def _materialize(field: ClockField, active: Sequence[int], arr_on: bool, t1: float):
    tp, sp, vp = [], [], []
    if arr_on:
        at = field.arrival_take(t1)
        if at.size:
            tp.append(at)
            sp.append(np.zeros(at.size, dtype=np.int64))
            vp.append(np.ones(at.size, dtype=np.uint8))
    for site in active:
        st, sv = field.site_take(site, t1)
        if st.size:
            tp.append(st)
            sp.append(np.full(st.size, site, dtype=np.int64))
            vp.append(sv.astype(np.uint8))
    if not tp:
        return (np.empty(0), np.empty(0, dtype=np.int64), np.empty(0, dtype=np.uint8))
    times = np.concatenate(tp)
    streams = np.concatenate(sp)
    valid = np.concatenate(vp)
    order = np.lexsort((streams, times))
    return times[order], streams[order], valid[order]


def _merge_remainder(times, streams, valid, cursor, new_times, site, new_valid):
    """Insert one site's fresh (sorted) stream into the unprocessed remainder.

    Linear-time insertion; an exact time tie across distinct Poisson streams
    has probability zero, so inserting new points before equal-time remainder
    events cannot matter.
    """
    t_rem = times[cursor:]
    n_out = t_rem.size + new_times.size
    pos = np.searchsorted(t_rem, new_times, side="left")
    idx_new = pos + np.arange(new_times.size)
    keep = np.ones(n_out, dtype=bool)
    keep[idx_new] = False
    out_t = np.empty(n_out, dtype=np.float64)
    out_s = np.empty(n_out, dtype=np.int64)
    out_v = np.empty(n_out, dtype=np.uint8)
    out_t[idx_new] = new_times
    out_s[idx_new] = site
    out_v[idx_new] = new_valid.astype(np.uint8)
    out_t[keep] = t_rem
    out_s[keep] = streams[cursor:]
    out_v[keep] = valid[cursor:]
    return out_t, out_s, out_v


def _preactivate(rs, field, active: list, t0: float, t1: float) -> None:
    """Activate every site a moving front can plausibly reach by ``t1``.

    A move into an inactive site forces an O(window) re-merge of the
    remaining events, and the lead customer of an unbounded ladder walks
    right at rate 1, so fronts would otherwise shrink windows to a crawl.
    A site ahead of the frontier holds no customers, so its extra clock
    points are suppressed no-ops: every sampled quantity, counter and check
    is unchanged, only the raw processed-event tally grows.
    """
    span = t1 - t0
    if span <= 0 or rs.n_systems == 0:
        return
    reach = int(math.ceil(span + 6.0 * math.sqrt(span))) + 8
    need = 0
    for k in range(rs.n_systems):
        top = int(rs.frontier[k]) + reach
        hz = int(rs.horizon[k])
        if hz >= 0:
            top = min(top, hz)
        need = max(need, top)
    if need <= 0:
        return
    while need > rs.site_cap:
        grow_site_capacity(rs)
    for site in range(1, need + 1):
        if not rs.active[site]:
            rs.active[site] = 1
            active.append(site)
            field.site_discard(site, t0)


def run_systems(
    *,
    seed: int,
    time_horizon: float,
    systems: Sequence[SystemSpec],
    arrivals=None,
    mask: Optional[ValidityMask] = None,
    env: Optional[EnvSpec] = None,
    epochs=None,
    sample_width: int = 0,
    record_log: bool = False,
    check_pairs: Sequence[Tuple[int, int, int]] = (),
    check_tail=None,
    check_env_dom: bool = False,
    check_gate: bool = False,
    bond_system: Optional[int] = None,
    bond_capacity_hint: Optional[int] = None,
    site_cap_hint: Optional[int] = None,
    target_window_events: int = _DEFAULT_WINDOW_EVENTS,
    backend: Optional[str] = None,
) -> RawRun:
    """Drive one fused run of several systems over a shared clock field."""
    if not (time_horizon > 0) or math.isinf(time_horizon):
        raise ValueError("time_horizon must be positive and finite")
    systems = list(systems)
    needs_arrivals = any(s.has_arrivals for s in systems)
    if needs_arrivals and arrivals is None:
        raise ValueError("a system consumes arrivals but no arrival spec was given")
    if any(s.use_mask for s in systems) and mask is None:
        raise ValueError("a system uses the mask but no mask was given")
    if arrivals is not None and not isinstance(arrivals, ArrivalProcessSpec):
        raise TypeError(f"unknown arrival spec {arrivals!r}")

    T = float(time_horizon)
    ep = _normalize_epochs(epochs, T)
    log_cap = 0
    if record_log:
        arate = arrivals.rate if (arrivals is not None and needs_arrivals) else 0.0
        guesses = [len(s.initial_state) for s in systems]
        guesses += [int(s.horizon) for s in systems if s.horizon != math.inf]
        if any(s.horizon == math.inf for s in systems):
            guesses.append(int(T) + 8)
        if env is not None:
            guesses.append(len(env.occupancy))
        sites_guess = max(max(guesses, default=0), 8)
        est = (arate + sites_guess) * T * 1.2 + 256
        log_cap = int(min(est, 50_000_000))

    bond_cap = 0
    if env is not None or bond_system is not None:
        if bond_capacity_hint is not None:
            bond_cap = int(bond_capacity_hint)
        else:
            bond_cap = int(0.3 * T + 12.0 * math.sqrt(T)) + 64

    rs = make_run_state(
        initial_states=[s.initial_state for s in systems],
        horizons=[-1 if s.horizon == math.inf else int(s.horizon) for s in systems],
        has_arrivals=[s.has_arrivals for s in systems],
        use_mask=[s.use_mask for s in systems],
        gated=[s.gated for s in systems],
        refill_site1=[s.refill_site1 for s in systems],
        tagged=[-1 if s.tagged is None else int(s.tagged) for s in systems],
        epochs=ep,
        sample_width=sample_width,
        site_cap=site_cap_hint,
        env_occupancy=env.occupancy if env is not None else None,
        bond_site=env.bond_site if env is not None else 1,
        bond_capacity=bond_cap,
        bond_system=-1 if bond_system is None else int(bond_system),
        env_sample=env.sample_occupancy if env is not None else False,
        log_capacity=log_cap,
        check_pairs=check_pairs,
        check_tail=check_tail,
        check_env_dom=check_env_dom,
        check_gate=check_gate,
    )

    field = ClockField(seed, arrivals if arrivals is not None else PoissonArrivals(0.0),
                       mask)
    kern = _kernels.get_backend(backend) if backend else _kernels
    process = kern.process_window
    backend_name = getattr(kern, "BACKEND", None) or (
        "compiled" if kern.__name__.endswith("ckernel") else "python")

    active = initial_active_sites(rs)
    arr_on = needs_arrivals and arrivals is not None
    arr_rate = arrivals.rate if arr_on else 0.0

    # Window length adapts to how fast new sites are activating: each
    # activation re-merges the unprocessed remainder, so windows shrink while
    # a front is advancing and grow back toward the event-count target once
    # the active set is stable. Pre-activation below keeps those re-merges
    # rare for fronts that advance steadily.
    act_target = 32
    w_cap = 64.0
    t = 0.0
    while t < T:
        est_rate = len(active) + arr_rate
        if est_rate <= 0:
            t1 = T
        else:
            w = max(target_window_events / est_rate, 1e-9)
            t1 = min(T, t + min(w, w_cap))
        _preactivate(rs, field, active, t, t1)
        times, streams, valid = _materialize(field, active, arr_on, t1)
        rs.cursor = 0
        acts_before = len(active)
        while True:
            status = process(rs, times, streams, valid, t1)
            if status == DONE:
                break
            if status == NEED_SITE:
                site = int(rs.pending_site)
                while site > rs.site_cap:
                    grow_site_capacity(rs)
                if not rs.active[site]:
                    rs.active[site] = 1
                    active.append(site)
                    field.site_discard(site, rs.t_last)
                    nt, nv = field.site_take(site, t1)
                    times, streams, valid = _merge_remainder(
                        times, streams, valid, rs.cursor, nt, site, nv)
                    rs.cursor = 0
            elif status == NEED_STATE_CAPACITY:
                grow_site_capacity(rs)
            elif status == NEED_BOND_CAPACITY:
                grow_bond_capacity(rs)
            elif status == NEED_LOG_CAPACITY:
                grow_log_capacity(rs)
            else:
                raise RuntimeError(f"kernel returned unknown status {status}")
        acts = len(active) - acts_before
        span = t1 - t
        if acts > act_target and span > 0:
            w_cap = max(span * act_target / acts, 1.0)
        elif acts <= act_target // 2:
            w_cap = min(w_cap * 2.0, 1e18)
        t = t1

    if rs.epochs.size and rs.epoch_idx != rs.epochs.size:
        raise RuntimeError("not every sample epoch was flushed")
    if rs.violations[V_TIME_ORDER]:
        raise RuntimeError("processed event times were out of order")
    if rs.violations[V_CONSERVATION]:
        raise RuntimeError("customer conservation broke; kernel bug")
    return RawRun(rs=rs, seed=int(seed), time_horizon=T,
                  arrival_spec=arrivals, backend=backend_name, env=env)


def _auto_width(horizon, requested: Optional[int]) -> int:
    if requested is not None:
        return int(requested)
    if horizon == math.inf:
        return 64
    return min(int(horizon), 512)


def simulate(
    config: SystemConfig,
    *,
    arrivals=None,
    mask: Optional[ValidityMask] = None,
    epochs=None,
    sample_width: Optional[int] = None,
    record_log: bool = False,
    check_tail: bool = False,
    target_window_events: int = _DEFAULT_WINDOW_EVENTS,
    backend: Optional[str] = None,
) -> Trajectory:
    """Simulate one system and return its sampled trajectory."""
    spec = arrivals if arrivals is not None else PoissonArrivals(config.arrival_rate)
    raw = run_systems(
        seed=config.seed,
        time_horizon=config.time_horizon,
        systems=[SystemSpec(initial_state=config.initial_state, horizon=config.horizon,
                            has_arrivals=True, use_mask=mask is not None)],
        arrivals=spec,
        mask=mask,
        epochs=epochs,
        sample_width=_auto_width(config.horizon, sample_width) if epochs is not None else 0,
        record_log=record_log,
        check_tail=[check_tail],
        target_window_events=target_window_events,
        backend=backend,
    )
    return raw.trajectory(0, event_log=record_log)


def simulate_coupled(
    configs: Sequence[SystemConfig],
    *,
    epochs=None,
    sample_width: Optional[int] = None,
    check_order: bool = True,
    check_tail: bool = False,
    record_log: bool = False,
    target_window_events: int = _DEFAULT_WINDOW_EVENTS,
    backend: Optional[str] = None,
) -> CoupledRun:
    """Run several systems on one clock field.

    With ``check_order`` the componentwise and tail-sum orders are verified
    between each consecutive pair after every event, so pass configs with
    horizons in non-decreasing order (that is the direction in which the
    orders hold when all systems start empty).
    """
    configs = list(configs)
    if not configs:
        raise ValueError("need at least one config")
    seed = configs[0].seed
    rate = configs[0].arrival_rate
    T = configs[0].time_horizon
    for c in configs[1:]:
        if c.seed != seed or c.arrival_rate != rate or c.time_horizon != T:
            raise ValueError("coupled systems must share seed, arrival rate and horizon")
    pairs = []
    if check_order:
        for k in range(len(configs) - 1):
            pairs.append((k, k + 1, REL_COMPONENTWISE))
            pairs.append((k, k + 1, REL_TAIL_SUM))
    widest = max(
        (math.inf if c.horizon == math.inf else int(c.horizon)) for c in configs)
    raw = run_systems(
        seed=seed,
        time_horizon=T,
        systems=[SystemSpec(initial_state=c.initial_state, horizon=c.horizon)
                 for c in configs],
        arrivals=PoissonArrivals(rate),
        epochs=epochs,
        sample_width=_auto_width(widest, sample_width) if epochs is not None else 0,
        record_log=record_log,
        check_pairs=pairs,
        check_tail=[check_tail] * len(configs),
        target_window_events=target_window_events,
        backend=backend,
    )
    return CoupledRun(
        trajectories=[raw.trajectory(k, event_log=record_log) for k in range(len(configs))],
        violations=raw.violations(),
    )


def simulate_obstructed(
    config: SystemConfig,
    mask: ValidityMask,
    *,
    epochs=None,
    sample_width: Optional[int] = None,
    check: bool = True,
    record_log: bool = False,
    target_window_events: int = _DEFAULT_WINDOW_EVENTS,
    backend: Optional[str] = None,
) -> ObstructedRun:
    """Run the system and its obstructed twin (mask applied) on one field.

    With ``check`` the run verifies, after every event, that the obstructed
    system stays below in the tail-sum order while its site-1 queue stays
    at least as large.
    """
    pairs = []
    if check:
        pairs = [(1, 0, REL_TAIL_SUM), (1, 0, REL_FIRST_GE)]
    raw = run_systems(
        seed=config.seed,
        time_horizon=config.time_horizon,
        systems=[
            SystemSpec(initial_state=config.initial_state, horizon=config.horizon),
            SystemSpec(initial_state=config.initial_state, horizon=config.horizon,
                       use_mask=True),
        ],
        arrivals=PoissonArrivals(config.arrival_rate),
        mask=mask,
        epochs=epochs,
        sample_width=_auto_width(config.horizon, sample_width) if epochs is not None else 0,
        record_log=record_log,
        check_pairs=pairs,
        target_window_events=target_window_events,
        backend=backend,
    )
    return ObstructedRun(
        unobstructed=raw.trajectory(0, event_log=record_log),
        obstructed=raw.trajectory(1, event_log=record_log),
        violations=raw.violations(),
    )


def stationary_samples(
    config: SystemConfig,
    n_samples: int,
    *,
    burn_in_fraction: float = 0.5,
    sample_width: Optional[int] = None,
    arrivals=None,
    target_window_events: int = _DEFAULT_WINDOW_EVENTS,
    backend: Optional[str] = None,
) -> StationarySamples:
    """Equally spaced samples over the tail of one long run.

    The first ``burn_in_fraction`` of the horizon is discarded. Successive
    samples are correlated; use batch-means statistics downstream.
    """
    if not (0 <= burn_in_fraction < 1):
        raise ValueError("burn_in_fraction must be in [0, 1)")
    if n_samples < 1:
        raise ValueError("need at least one sample")
    T = config.time_horizon
    t0 = burn_in_fraction * T
    ep = np.linspace(t0 + (T - t0) / n_samples, T, n_samples)
    traj = simulate(config, arrivals=arrivals, epochs=ep,
                    sample_width=sample_width,
                    target_window_events=target_window_events, backend=backend)
    return StationarySamples(
        epochs=traj.sample_times,
        queues=traj.queues,
        scalars=traj.scalars,
        horizon=config.horizon,
        arrival_rate=config.arrival_rate,
    )
