"""Exact stationary analysis of small truncated instances.

Builds the continuous-time generator of a back-pressure tandem on the box
``{0..cap}^N`` (arrivals into a full site 1 are lost, which is the only way
the box can truncate: the service rule itself never pushes a queue above a
strictly larger neighbor), solves the stationary equations, and reports a
``truncation_mass`` diagnostic so results can be read with the right error
bar. Also covers the ring exclusion process on a small ring and the
deterministic reverse-time supremum estimator for stationary queue bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "TruncatedChain",
    "RingChain",
    "StationaryDistribution",
    "LoynesEstimate",
    "build_chain",
    "build_ring_chain",
    "solve_stationary",
    "expected_queue_profile",
    "marginal",
    "boundary_probabilities_exact",
    "ring_bond_flux",
    "loynes_estimate",
]

MAX_STATES = 2_000_000


@dataclass
class TruncatedChain:
    """Generator of the tandem system truncated to ``{0..cap}^N``."""

    n_sites: int
    arrival_rate: float
    cap: int
    states: np.ndarray  # (n_states, N)
    generator: sp.csr_matrix

    @property
    def n_states(self) -> int:
        return self.states.shape[0]

    def state_index(self, state: Sequence[int]) -> int:
        s = tuple(int(x) for x in state)
        if len(s) != self.n_sites or any(x < 0 or x > self.cap for x in s):
            raise ValueError(f"state {s} outside the box")
        idx = 0
        for x in s:
            idx = idx * (self.cap + 1) + x
        return idx


@dataclass
class RingChain:
    """Generator of the exclusion process on a ring with a fixed particle count."""

    ring_size: int
    n_particles: int
    states: np.ndarray  # (n_states, L) of 0/1
    generator: sp.csr_matrix

    @property
    def n_states(self) -> int:
        return self.states.shape[0]


@dataclass
class StationaryDistribution:
    probabilities: np.ndarray
    residual: float
    truncation_mass: float


@dataclass
class LoynesEstimate:
    value: int
    horizon: float
    n_arrivals: int
    n_services: int


def build_chain(n_sites: int, arrival_rate: float, cap: int,
                max_states: int = MAX_STATES) -> TruncatedChain:
    """Enumerate ``{0..cap}^N`` and assemble the sparse generator."""
    if n_sites < 1:
        raise ValueError("need at least one site")
    if cap < 1:
        raise ValueError("cap must be at least 1")
    if not (arrival_rate >= 0):
        raise ValueError("arrival rate must be non-negative")
    n_states = (cap + 1) ** n_sites
    if n_states > max_states:
        raise ValueError(
            f"state space {n_states} exceeds limit {max_states}; lower cap or sites")

    base = cap + 1
    states = np.array(
        list(itertools.product(range(base), repeat=n_sites)), dtype=np.int64)
    idx = np.arange(n_states, dtype=np.int64)
    # site n has positional weight base^(N - n): site 1 is most significant
    weights = base ** np.arange(n_sites - 1, -1, -1, dtype=np.int64)

    rows = []
    cols = []
    data = []
    # arrivals: site 1 gains one customer unless full (lost arrival)
    if arrival_rate > 0:
        mask = states[:, 0] < cap
        rows.append(idx[mask])
        cols.append(idx[mask] + weights[0])
        data.append(np.full(mask.sum(), arrival_rate))
    # service at each site under the back-pressure rule
    for n in range(1, n_sites + 1):
        here = states[:, n - 1]
        nxt = states[:, n] if n < n_sites else np.zeros(n_states, dtype=np.int64)
        mask = here > nxt
        shift = -weights[n - 1] + (weights[n] if n < n_sites else 0)
        rows.append(idx[mask])
        cols.append(idx[mask] + shift)
        data.append(np.ones(mask.sum()))

    rows = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
    data = np.concatenate(data) if data else np.empty(0)
    gen = sp.coo_matrix((data, (rows, cols)), shape=(n_states, n_states)).tocsr()
    out_rates = np.asarray(gen.sum(axis=1)).ravel()
    gen = gen - sp.diags(out_rates)
    return TruncatedChain(n_sites=n_sites, arrival_rate=float(arrival_rate),
                          cap=cap, states=states, generator=gen.tocsr())


def build_ring_chain(ring_size: int, n_particles: int,
                     max_states: int = MAX_STATES) -> RingChain:
    """Exclusion process on a ring: particles hop clockwise into empty sites."""
    L = int(ring_size)
    K = int(n_particles)
    if L < 2 or not (0 <= K <= L):
        raise ValueError("need a ring of >= 2 sites with 0 <= particles <= sites")
    n_states = math.comb(L, K)
    if n_states > max_states:
        raise ValueError(f"state space {n_states} exceeds limit {max_states}")

    configs = []
    index = {}
    for occ_sites in itertools.combinations(range(L), K):
        occ = np.zeros(L, dtype=np.int64)
        occ[list(occ_sites)] = 1
        index[tuple(occ)] = len(configs)
        configs.append(occ)
    states = np.array(configs, dtype=np.int64) if configs else np.zeros((0, L), np.int64)

    rows = []
    cols = []
    for i, occ in enumerate(configs):
        for site in range(L):
            tgt = (site + 1) % L
            if occ[site] == 1 and occ[tgt] == 0:
                moved = occ.copy()
                moved[site] = 0
                moved[tgt] = 1
                rows.append(i)
                cols.append(index[tuple(moved)])
    data = np.ones(len(rows))
    gen = sp.coo_matrix((data, (rows, cols)), shape=(n_states, n_states)).tocsr()
    out_rates = np.asarray(gen.sum(axis=1)).ravel()
    gen = gen - sp.diags(out_rates)
    return RingChain(ring_size=L, n_particles=K, states=states, generator=gen.tocsr())


def _solve_generator(gen: sp.csr_matrix, tol: float, method: str,
                     max_iter: int = 200_000) -> np.ndarray:
    n = gen.shape[0]
    if method == "auto":
        method = "direct" if n <= 200_000 else "power"
    if method == "direct":
        a = gen.T.tolil()
        a[0, :] = 1.0
        b = np.zeros(n)
        b[0] = 1.0
        pi = spla.spsolve(a.tocsc(), b)
    elif method == "power":
        # uniformization: P = I + G / rate_max, iterate to the fixed point
        diag = -gen.diagonal()
        rate = float(diag.max())
        if rate <= 0:
            pi = np.full(n, 1.0 / n)
        else:
            p = sp.eye(n, format="csr") + gen / (rate * 1.001)
            pt = p.T.tocsr()
            pi = np.full(n, 1.0 / n)
            for _ in range(max_iter):
                nxt = pt @ pi
                nxt /= nxt.sum()
                if np.abs(nxt - pi).max() < tol / max(n, 1):
                    pi = nxt
                    break
                pi = nxt
            else:
                raise ValueError("power iteration did not converge; raise max_iter")
    else:
        raise ValueError(f"unknown method {method!r}")
    pi = np.maximum(np.asarray(pi).ravel(), 0.0)
    total = pi.sum()
    if not np.isfinite(total) or total <= 0:
        raise ValueError("stationary solve produced a degenerate vector")
    return pi / total


def solve_stationary(chain, tol: float = 1e-12,
                     method: str = "auto") -> StationaryDistribution:
    """Solve the balance equations; fail loudly if the residual misses ``tol``."""
    pi = _solve_generator(chain.generator, tol, method)
    residual = float(np.abs(pi @ chain.generator).max())
    if residual > tol:
        raise ValueError(
            f"stationary residual {residual:.3e} above tolerance {tol:.3e}")
    if isinstance(chain, TruncatedChain):
        at_cap = np.any(chain.states == chain.cap, axis=1)
        mass = float(pi[at_cap].sum())
    else:
        mass = 0.0
    return StationaryDistribution(probabilities=pi, residual=residual,
                                  truncation_mass=mass)


def expected_queue_profile(chain: TruncatedChain,
                           dist: StationaryDistribution) -> np.ndarray:
    """Stationary mean queue per site (index 0 is site 1)."""
    return chain.states.T @ dist.probabilities


def marginal(chain: TruncatedChain, dist: StationaryDistribution,
             site: int) -> np.ndarray:
    """Stationary law of one site's queue: entry ``k`` is ``P{Q_site = k}``."""
    if not (1 <= site <= chain.n_sites):
        raise ValueError(f"site {site} outside 1..{chain.n_sites}")
    vals = chain.states[:, site - 1]
    return np.bincount(vals, weights=dist.probabilities, minlength=chain.cap + 1)


def boundary_probabilities_exact(chain: TruncatedChain,
                                 dist: StationaryDistribution) -> np.ndarray:
    """Per site ``n``: stationary probability that site ``n`` may serve,
    i.e. ``P{Q_n > Q_{n+1}}`` with the virtual zero beyond the edge."""
    out = np.empty(chain.n_sites)
    for n in range(1, chain.n_sites + 1):
        here = chain.states[:, n - 1]
        nxt = chain.states[:, n] if n < chain.n_sites else 0
        out[n - 1] = dist.probabilities[here > nxt].sum()
    return out


def ring_bond_flux(chain: RingChain, dist: StationaryDistribution,
                   bond_site: int = 1) -> float:
    """Stationary jump rate across ``bond_site -> bond_site + 1`` (1-based)."""
    L = chain.ring_size
    if not (1 <= bond_site <= L):
        raise ValueError("bond site outside the ring")
    here = chain.states[:, bond_site - 1]
    nxt = chain.states[:, bond_site % L]
    return float(dist.probabilities[(here == 1) & (nxt == 0)].sum())


def loynes_estimate(arrival_times, service_times, horizon: float) -> LoynesEstimate:
    """Reverse-time queue bound from two event streams on ``[0, horizon]``.

    Reading both streams backward from the horizon, the estimate is the
    supremum over lookback depths of (arrivals seen) - (services seen),
    never below zero. It grows monotonically with the horizon and converges
    to the stationary queue value fed by these streams.
    """
    a = np.asarray(arrival_times, dtype=np.float64)
    s = np.asarray(service_times, dtype=np.float64)
    if not (horizon > 0):
        raise ValueError("horizon must be positive")
    for name, arr in (("arrival", a), ("service", s)):
        if arr.size and (arr.min() < 0 or arr.max() > horizon):
            raise ValueError(f"{name} times must lie within [0, horizon]")
    times = np.concatenate([a, s])
    signs = np.concatenate([np.ones(a.size, dtype=np.int64),
                            -np.ones(s.size, dtype=np.int64)])
    order = np.argsort(-times, kind="stable")
    times = times[order]
    signs = signs[order]
    best = 0
    diff = 0
    i = 0
    n = times.size
    while i < n:
        t = times[i]
        while i < n and times[i] == t:
            diff += signs[i]
            i += 1
        if diff > best:
            best = diff
    return LoynesEstimate(value=int(best), horizon=float(horizon),
                          n_arrivals=int(a.size), n_services=int(s.size))
