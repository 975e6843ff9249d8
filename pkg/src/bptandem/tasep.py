"""Exclusion-process constructions layered on the tandem engine.

A tandem system whose queues only ever hold 0 or 1 customer evolves exactly
as an exclusion process: the service rule "move iff strictly larger than the
neighbor" degenerates to "jump iff the next site is empty". This module
packages the three variants used here: a ring environment with a fixed
particle count (whose stationary law is exactly uniform), a frozen line
window for tagged-particle runs, and the source process with site 1 pinned
at occupancy 1 whose bond flux relaxes to 1/4.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from . import engine
from .clocks import ClockField, PoissonArrivals
from .core import INFINITE

__all__ = [
    "TasepState",
    "ServiceRecord",
    "TaggedStats",
    "RingRun",
    "SourceRun",
    "BoundResult",
    "bernoulli_init",
    "ring_state",
    "step_tasep",
    "run_ring_tasep",
    "tagged_particle",
    "tagged_window_span",
    "source_tasep",
    "bound_process",
    "ring_flux_exact",
]


@dataclass(frozen=True)
class TasepState:
    """Occupancy snapshot on a ring or a frozen line window.

    ``topology`` is ``("ring", L)`` or ``("line", a, b)`` with absolute site
    indices ``a..b`` inclusive; ``occupancy[i]`` is site ``a + i`` (site
    ``1 + i`` on a ring). ``particle_ids`` optionally labels particles
    (-1 on empty sites) so identities survive jumps.
    """

    topology: tuple
    occupancy: np.ndarray
    particle_ids: Optional[np.ndarray] = None
    density_param: Optional[float] = None

    def __post_init__(self):
        occ = np.asarray(self.occupancy, dtype=np.int8)
        object.__setattr__(self, "occupancy", occ)
        if self.topology[0] == "ring":
            _, L = self.topology
            if L < 2 or occ.size != L:
                raise ValueError("ring occupancy length must match L >= 2")
        elif self.topology[0] == "line":
            _, a, b = self.topology
            if b < a or occ.size != b - a + 1:
                raise ValueError("line occupancy length must match the window")
        else:
            raise ValueError(f"unknown topology {self.topology!r}")
        if not np.all((occ == 0) | (occ == 1)):
            raise ValueError("occupancy must be 0/1")
        if self.particle_ids is not None:
            ids = np.asarray(self.particle_ids, dtype=np.int64)
            object.__setattr__(self, "particle_ids", ids)
            if ids.shape != occ.shape:
                raise ValueError("particle_ids must align with occupancy")
            if np.any((ids >= 0) != (occ == 1)):
                raise ValueError("particle_ids must label exactly the occupied sites")

    @property
    def is_ring(self) -> bool:
        return self.topology[0] == "ring"

    @property
    def n_sites(self) -> int:
        return self.occupancy.size

    @property
    def particle_count(self) -> int:
        return int(self.occupancy.sum())

    @property
    def first_site(self) -> int:
        """Absolute index of the leftmost site of the window (1 on a ring)."""
        return 1 if self.is_ring else self.topology[1]


@dataclass(frozen=True)
class ServiceRecord:
    """Times of particle jumps across one bond, with the nominal rate."""

    bond: int
    jump_times: np.ndarray
    mu_nominal: float

    def __post_init__(self):
        times = np.asarray(self.jump_times, dtype=np.float64)
        object.__setattr__(self, "jump_times", times)
        if times.size and np.any(np.diff(times) <= 0):
            raise ValueError("bond jump times must be strictly increasing")

    def count(self, t1: float, t2: float) -> int:
        """Number of jumps in the interval (t1, t2]."""
        return int(np.searchsorted(self.jump_times, t2, side="right")
                   - np.searchsorted(self.jump_times, t1, side="right"))


@dataclass
class TaggedStats:
    """Trajectory of one tracked particle on a line window."""

    initial_site: int
    times: np.ndarray
    positions: np.ndarray
    headcount_profile: np.ndarray  # cumulative particle count up to each window site

    @property
    def initial_gap(self) -> int:
        """Sites between the window start and the tagged particle at time 0."""
        return int(self.positions[0] - self.initial_site) if self.positions.size else 0

    @property
    def speed(self) -> float:
        if not self.times.size or self.times[-1] <= 0:
            return math.nan
        return float(self.positions[-1] - self.initial_site) / float(self.times[-1])


@dataclass
class RingRun:
    initial: TasepState
    final: TasepState
    record: ServiceRecord
    epochs: np.ndarray
    occupancy_samples: Optional[np.ndarray]
    backend: str


@dataclass
class SourceRun:
    record: ServiceRecord
    epochs: np.ndarray
    bond_counts: np.ndarray  # cumulative 1->2 jumps at each epoch
    final_frontier: int
    backend: str

    @property
    def flux_samples(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.bond_counts / self.epochs


@dataclass
class BoundResult:
    """Coupled free and gated systems riding one clock field with a ring environment."""

    free: engine.Trajectory
    bounded: engine.Trajectory
    record: ServiceRecord
    violations: dict
    env_initial: TasepState
    env_final: TasepState


def ring_flux_exact(ring_size: int, n_particles: int) -> float:
    """Stationary bond flux of the fixed-count ring process: K(L-K)/(L(L-1))."""
    L, K = int(ring_size), int(n_particles)
    if L < 2 or not (0 <= K <= L):
        raise ValueError("need a ring of >= 2 sites with 0 <= particles <= sites")
    return K * (L - K) / (L * (L - 1))


def _label_particles(occ: np.ndarray) -> np.ndarray:
    ids = np.cumsum(occ, dtype=np.int64) - 1
    ids[occ == 0] = -1
    return ids


def bernoulli_init(topology: tuple, rho: float, seed: int,
                   fixed_count: bool = False) -> TasepState:
    """Independent occupancy with density ``rho``; sites are filled i.i.d.

    On a ring, ``fixed_count`` places exactly ``K = round(rho * L)`` particles
    uniformly at random instead, giving the exactly stationary uniform law.
    """
    if not (0 < rho < 1):
        raise ValueError(f"density must lie strictly in (0, 1), got {rho}")
    if topology[0] == "ring":
        n = int(topology[1])
    elif topology[0] == "line":
        n = int(topology[2]) - int(topology[1]) + 1
    else:
        raise ValueError(f"unknown topology {topology!r}")
    if n < 1:
        raise ValueError("empty site window")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(3, 0)))
    if fixed_count:
        if topology[0] != "ring":
            raise ValueError("fixed-count initialization is a ring construction")
        k = int(round(rho * n))
        occ = np.zeros(n, dtype=np.int8)
        occ[rng.choice(n, size=k, replace=False)] = 1
    else:
        occ = (rng.random(n) < rho).astype(np.int8)
    return TasepState(topology=tuple(topology), occupancy=occ,
                      particle_ids=_label_particles(occ), density_param=float(rho))


def ring_state(ring_size: int, n_particles: int, seed: int) -> TasepState:
    """Exactly ``n_particles`` on a ring, placed uniformly at random."""
    L, K = int(ring_size), int(n_particles)
    if L < 2 or not (0 <= K <= L):
        raise ValueError("need a ring of >= 2 sites with 0 <= particles <= sites")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(3, 0)))
    occ = np.zeros(L, dtype=np.int8)
    if K:
        occ[rng.choice(L, size=K, replace=False)] = 1
    return TasepState(topology=("ring", L), occupancy=occ,
                      particle_ids=_label_particles(occ),
                      density_param=K / L)


def step_tasep(state: TasepState, clock_field: ClockField, until: float,
               bond_site: int = 1) -> Tuple[TasepState, ServiceRecord]:
    """Advance the exclusion process through every clock point up to ``until``.

    Reference implementation in plain Python: merges the per-site streams in
    ``(time, site)`` order and applies jumps one by one, so its outcomes are
    directly comparable with the event kernel's. Mask validity flags are
    ignored on purpose (the environment is autonomous; masks obstruct queue
    moves only). Repeated calls continue where the previous one stopped,
    because the clock field hands out each stream segment once. On a line
    window, a jump off the right edge removes the particle.
    """
    occ = state.occupancy.copy()
    ids = (state.particle_ids.copy() if state.particle_ids is not None
           else _label_particles(occ))
    n = occ.size
    ring = state.is_ring
    if not (1 <= bond_site <= n):
        raise ValueError("bond site outside the lattice window")

    tp, sp = [], []
    for j in range(1, n + 1):
        times, _valid = clock_field.site_take(j, until)
        if times.size:
            tp.append(times)
            sp.append(np.full(times.size, j, dtype=np.int64))
    jumps = []
    if tp:
        times = np.concatenate(tp)
        sites = np.concatenate(sp)
        order = np.lexsort((sites, times))
        times = times[order]
        sites = sites[order]
        for t, j in zip(times, sites):
            j = int(j)
            if ring:
                tgt = j + 1 if j < n else 1
            else:
                tgt = j + 1
            if occ[j - 1] == 0:
                continue
            if tgt > n and not ring:
                occ[j - 1] = 0
                ids[j - 1] = -1
                if j == bond_site:
                    jumps.append(t)
                continue
            if occ[tgt - 1] == 0:
                occ[tgt - 1] = 1
                occ[j - 1] = 0
                ids[tgt - 1] = ids[j - 1]
                ids[j - 1] = -1
                if j == bond_site:
                    jumps.append(t)
    rho = state.density_param
    mu = rho * (1 - rho) if rho is not None else math.nan
    new_state = TasepState(topology=state.topology, occupancy=occ,
                           particle_ids=ids, density_param=rho)
    return new_state, ServiceRecord(bond=bond_site, jump_times=np.array(jumps),
                                    mu_nominal=mu)


def run_ring_tasep(
    initial: TasepState,
    *,
    seed: int,
    time_horizon: float,
    bond_site: int = 1,
    epochs=None,
    backend: Optional[str] = None,
) -> RingRun:
    """Drive a ring exclusion process on the event kernel and record one bond."""
    if not initial.is_ring:
        raise ValueError("run_ring_tasep needs a ring state")
    raw = engine.run_systems(
        seed=seed,
        time_horizon=time_horizon,
        systems=[],
        env=engine.EnvSpec(occupancy=tuple(initial.occupancy),
                           bond_site=bond_site,
                           sample_occupancy=epochs is not None),
        epochs=epochs,
        backend=backend,
    )
    L = initial.n_sites
    final_occ = raw.rs.y[1:L + 1].astype(np.int8).copy()
    rho = initial.density_param
    final = TasepState(topology=initial.topology, occupancy=final_occ,
                       density_param=rho)
    record = ServiceRecord(bond=bond_site, jump_times=raw.bond_times(),
                           mu_nominal=rho * (1 - rho) if rho is not None else math.nan)
    return RingRun(initial=initial, final=final, record=record,
                   epochs=raw.rs.epochs.copy(),
                   occupancy_samples=raw.env_samples() if epochs is not None else None,
                   backend=raw.backend)


def tagged_window_span(horizon: float, rho: float, slack: int = 64) -> int:
    """Window length that the tagged particle cannot plausibly outrun:
    mean travel (1 - rho) * horizon plus six standard deviations of margin."""
    return int(math.ceil((1 - rho) * horizon + 6.0 * math.sqrt(max(horizon, 1.0)))) + slack


def tagged_particle(
    state: TasepState,
    horizon: float,
    *,
    seed: int,
    n_epochs: int = 200,
    backend: Optional[str] = None,
) -> TaggedStats:
    """Track the leftmost particle of a frozen line window for ``horizon`` time.

    Particles jump right only and never overtake, so the tagged trajectory
    depends only on the occupancy ahead of it; the frozen left edge cannot
    influence it. Raises if the particle reaches the last window site, since
    from there the (empty) outside would distort its law.
    """
    if state.is_ring:
        raise ValueError("tagged runs need a line window")
    occ = state.occupancy
    nz = np.nonzero(occ)[0]
    if nz.size == 0:
        raise ValueError("no particle in the window to tag")
    a = state.first_site
    local_tag = int(nz[0]) + 1
    W = occ.size
    raw = engine.run_systems(
        seed=seed,
        time_horizon=float(horizon),
        systems=[engine.SystemSpec(initial_state=tuple(int(x) for x in occ),
                                   horizon=W, has_arrivals=False,
                                   tagged=local_tag)],
        epochs=n_epochs,
        backend=backend,
    )
    traj = raw.trajectory(0)
    positions = traj.tagged_positions + (a - 1)
    if positions.size and positions.max() >= a + W - 1:
        raise RuntimeError(
            "tagged particle reached the window edge; enlarge the window "
            "(see tagged_window_span)")
    return TaggedStats(
        initial_site=a + local_tag - 1,
        times=traj.sample_times,
        positions=positions,
        headcount_profile=np.cumsum(occ, dtype=np.int64),
    )


def source_tasep(
    horizon: float,
    seed: int,
    *,
    n_epochs: int = 100,
    backend: Optional[str] = None,
) -> SourceRun:
    """Run the source process: site 1 pinned at occupancy 1, all else empty.

    Every service of site 1 moves a particle to site 2 and instantly refills
    site 1, so the recorded bond times are the cumulative flux count F(t)
    whose rate relaxes toward 1/4 from above.
    """
    raw = engine.run_systems(
        seed=seed,
        time_horizon=float(horizon),
        systems=[engine.SystemSpec(initial_state=(1,), horizon=INFINITE,
                                   has_arrivals=False, refill_site1=True)],
        epochs=n_epochs,
        bond_system=0,
        backend=backend,
    )
    traj = raw.trajectory(0)
    times = raw.bond_times()
    record = ServiceRecord(bond=1, jump_times=times, mu_nominal=0.25)
    counts = np.searchsorted(times, raw.rs.epochs, side="right")
    return SourceRun(record=record, epochs=raw.rs.epochs.copy(),
                     bond_counts=counts.astype(np.int64),
                     final_frontier=int(raw.rs.frontier[0]),
                     backend=raw.backend)


def bound_ring_size(time_horizon: float, rho: float, slack: int = 64) -> int:
    """Ring length the gated system's front cannot plausibly wrap around.

    Customers past the gate ride environment particles, so the front advances
    at most at tagged-particle speed (1 - rho); size like a tagged window.
    """
    return tagged_window_span(time_horizon, rho, slack)


def bound_process(
    config: engine.SystemConfig,
    env: Optional[TasepState] = None,
    *,
    density: float = 0.5,
    ring_size: int = 1000,
    fixed_count: bool = True,
    epochs=None,
    sample_width: Optional[int] = None,
    check_order: bool = True,
    check_env: bool = True,
    backend: Optional[str] = None,
) -> BoundResult:
    """Couple the free system with its gated twin inside a ring environment.

    The gated twin moves a customer from site 1 to 2 only when the ring
    environment jumps across the recorded bond at the same clock point.
    Gating only ever removes site-1 service points, so the obstruction
    orders (gated below in tail sums, gated site-1 queue at least as large)
    hold at any ring size and any horizon; ``check_order`` verifies them
    after every event.

    ``check_env`` additionally verifies occupancy dominance at sites >= 2
    and the gate equivalence. Those express "staying within the environment"
    and are only meaningful until the gated front reaches the ring wrap;
    pick ``ring_size >= bound_ring_size(time_horizon, density)`` to keep the
    whole run in range (the environment_range counter reports events after
    the wrap, where dominance comparisons stop meaning anything).

    The comparison needs the infinite ladder (finite systems lose customers
    through the edge at different times, breaking the total-count order).
    """
    if config.horizon != INFINITE:
        raise ValueError("the bounding construction compares infinite ladders")
    if any(config.initial_state):
        raise ValueError("the bounding construction starts from the empty state")
    if env is None:
        env = bernoulli_init(("ring", int(ring_size)), density, config.seed,
                             fixed_count=fixed_count)
    if not env.is_ring:
        raise ValueError("the environment must be a ring state")
    rho = env.density_param
    if rho is None:
        rho = env.particle_count / env.n_sites
    flux = ring_flux_exact(env.n_sites, env.particle_count)
    if config.arrival_rate >= flux:
        warnings.warn(
            "arrival rate is at or above the environment bond flux; the "
            "path-wise bounds still hold but the gated site-1 queue drifts",
            stacklevel=2)
    if check_env and env.n_sites < bound_ring_size(config.time_horizon, rho):
        warnings.warn(
            "ring shorter than the distance the gated front can travel; "
            "occupancy dominance checks will fire once the front wraps",
            stacklevel=2)
    pairs = []
    check_tail = [False, False]
    if check_order:
        pairs = [(1, 0, engine.REL_TAIL_SUM), (1, 0, engine.REL_FIRST_GE)]
        check_tail = [True, True]
    raw = engine.run_systems(
        seed=config.seed,
        time_horizon=config.time_horizon,
        systems=[
            engine.SystemSpec(horizon=INFINITE),
            engine.SystemSpec(horizon=INFINITE, gated=True),
        ],
        arrivals=PoissonArrivals(config.arrival_rate),
        env=engine.EnvSpec(occupancy=tuple(env.occupancy), bond_site=1),
        epochs=epochs,
        sample_width=(engine._auto_width(INFINITE, sample_width)
                      if epochs is not None else 0),
        check_pairs=pairs,
        check_tail=check_tail,
        check_env_dom=check_env,
        check_gate=check_env,
        backend=backend,
    )
    L = env.n_sites
    final = TasepState(topology=env.topology,
                       occupancy=raw.rs.y[1:L + 1].astype(np.int8).copy(),
                       density_param=rho)
    record = ServiceRecord(bond=1, jump_times=raw.bond_times(),
                           mu_nominal=rho * (1 - rho) if rho is not None else math.nan)
    return BoundResult(
        free=raw.trajectory(0),
        bounded=raw.trajectory(1),
        record=record,
        violations=raw.violations(),
        env_initial=env,
        env_final=final,
    )
