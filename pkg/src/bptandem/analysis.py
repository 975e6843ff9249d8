"""Statistical reduction of runs: tail fits, flux and boundary estimates,
busy-interval survival curves and the load-versus-size phase scan.

Confidence intervals come from batch means: the sample sequence is cut into
contiguous batches, and a Student-t interval is placed on the batch averages.
That absorbs the serial correlation of samples taken along a single path.
Fitted decay rates are empirical estimates of existential constants and are
labeled as such; nothing here treats them as ground truth.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats as sps

from . import core, engine
from ._kernels.state import SC_BUSY, SC_BUSY_SAT, SC_PACKED, SC_PACKED_SAT, SC_Q1

__all__ = [
    "BatchMeans",
    "BoundaryProbabilities",
    "BusyIntervalDistribution",
    "FluxEstimate",
    "PhaseScanResult",
    "ScanPointConfig",
    "TailFit",
    "batch_means",
    "boundary_probabilities",
    "busy_interval_distribution",
    "fit_exponential_tail",
    "flux_estimate",
    "phase_scan",
]

MIN_BATCHES = 20


@dataclass(frozen=True)
class BatchMeans:
    """Point estimate with a 95% batch-means confidence interval."""

    mean: float
    ci_halfwidth: float
    n_batches: int


def batch_means(values, n_batches: int = MIN_BATCHES) -> BatchMeans:
    """Batch-means estimate of the mean of a correlated sample sequence.

    The sequence is cut into ``n_batches`` contiguous batches of equal
    length (a remainder at the front is dropped) and a t-interval is placed
    on the batch averages.
    """
    if n_batches < 2:
        raise ValueError("need at least 2 batches")
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size < n_batches:
        raise ValueError(
            f"need at least {n_batches} values for {n_batches} batches, got {arr.size}")
    m = arr.size // n_batches
    used = arr[arr.size - m * n_batches:]
    b = used.reshape(n_batches, m).mean(axis=1)
    sem = float(b.std(ddof=1)) / math.sqrt(n_batches)
    hw = float(sps.t.ppf(0.975, n_batches - 1)) * sem
    return BatchMeans(float(b.mean()), hw, n_batches)


def _batch_ci(stat_per_batch: np.ndarray) -> float:
    n = stat_per_batch.size
    sem = float(stat_per_batch.std(ddof=1)) / math.sqrt(n)
    return float(sps.t.ppf(0.975, n - 1)) * sem


@dataclass(frozen=True)
class TailFit:
    """Least-squares line on the empirical log-survival of integer samples.

    ``slope`` is the empirical decay rate (the line's slope, negative for a
    decaying tail) and ``exp(intercept)`` the matching prefactor. Both are
    empirical fits; the theory only asserts that some such constants exist.
    """

    support: np.ndarray
    log_survival: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    min_count: int


def fit_exponential_tail(samples, min_count_threshold: int = 100) -> TailFit:
    """Fit ``log P{X > r} = intercept + slope * r`` over reliable r bins.

    A bin ``r`` enters the fit only when the survival count ``#{x > r}`` is
    at least ``min_count_threshold``, so the noisy far tail never drives the
    line. Exactly log-linear input reproduces its slope to round-off.
    """
    arr = np.asarray(samples)
    if arr.size == 0:
        raise ValueError("no samples")
    if not np.issubdtype(arr.dtype, np.integer):
        fl = np.asarray(arr, dtype=np.float64)
        if np.any(fl != np.floor(fl)):
            raise ValueError("samples must be integers")
        arr = fl.astype(np.int64)
    if arr.min() < 0:
        raise ValueError("samples must be non-negative")
    n = arr.size
    counts = np.bincount(arr.ravel())
    # survival[r] = #{x > r} for r = 0 .. max value
    survival = n - np.cumsum(counts)
    usable = survival >= max(int(min_count_threshold), 1)
    support = np.nonzero(usable)[0]
    if support.size < 3:
        raise ValueError(
            f"fewer than 3 usable survival bins (got {support.size}); "
            "need more samples or a smaller min_count_threshold")
    surv_counts = survival[support]
    log_survival = np.log(surv_counts / n)
    slope, intercept = np.polyfit(support.astype(np.float64), log_survival, 1)
    fitted = intercept + slope * support
    ss_res = float(np.sum((log_survival - fitted) ** 2))
    ss_tot = float(np.sum((log_survival - log_survival.mean()) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res < 1e-20 else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return TailFit(
        support=support,
        log_survival=log_survival,
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r_squared,
        min_count=int(surv_counts.min()),
    )


def _states_to_array(samples: Sequence[core.QueueState]):
    states = list(samples)
    if not states:
        raise ValueError("no samples")
    horizon = states[0].horizon
    for s in states:
        if s.horizon != horizon:
            raise ValueError("samples mix different horizons")
    width = max(1, max(len(s.lengths) for s in states))
    if horizon != math.inf:
        width = max(width, int(horizon))
    q = np.zeros((len(states), width), dtype=np.int64)
    for i, s in enumerate(states):
        q[i, :len(s.lengths)] = s.lengths
    return q, horizon


@dataclass(frozen=True)
class BoundaryProbabilities:
    """Per-site frequencies of ``Q_n > Q_{n+1}`` with batch-means CIs."""

    probabilities: np.ndarray
    ci_halfwidths: np.ndarray
    n_samples: int
    n_batches: int


def boundary_probabilities(
    samples: Union[engine.StationarySamples, Sequence[core.QueueState]],
    n_batches: int = MIN_BATCHES,
) -> BoundaryProbabilities:
    """Empirical ``P{Q_n > Q_{n+1}}`` per site of a finite ladder.

    The queue beyond the last site reads as zero, so the final entry is the
    frequency of a non-empty last queue. In the stationary regime every
    entry estimates the arrival rate.
    """
    if isinstance(samples, engine.StationarySamples):
        if samples.horizon == math.inf:
            raise ValueError("boundary probabilities need a finite ladder")
        N = int(samples.horizon)
        if samples.queues.shape[1] < N:
            raise ValueError("sample width narrower than the ladder")
        q = samples.queues
    else:
        q, horizon = _states_to_array(samples)
        if horizon == math.inf:
            raise ValueError("boundary probabilities need a finite ladder")
        N = int(horizon)
    if n_batches < 2:
        raise ValueError("need at least 2 batches")
    n = q.shape[0]
    if n < n_batches:
        raise ValueError(f"need at least {n_batches} samples, got {n}")
    nxt = np.zeros((n, N), dtype=np.int64)
    nxt[:, :N - 1] = q[:, 1:N]
    ind = (q[:, :N] > nxt).astype(np.float64)
    m = n // n_batches
    used = ind[n - m * n_batches:]
    per_batch = used.reshape(n_batches, m, N).mean(axis=1)
    tq = float(sps.t.ppf(0.975, n_batches - 1))
    sems = per_batch.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return BoundaryProbabilities(
        probabilities=per_batch.mean(axis=0),
        ci_halfwidths=tq * sems,
        n_samples=n,
        n_batches=n_batches,
    )


@dataclass(frozen=True)
class BusyIntervalDistribution:
    """Empirical survival curves of the two busy-interval functionals.

    ``survival_b[r]`` is ``P{B > r}`` on the common grid ``support``; the
    packed variant dominates pointwise because it does so pathwise. Fits
    are attempted via :func:`fit_exponential_tail` and left as ``None``
    when too few reliable bins exist.
    """

    support: np.ndarray
    survival_b: np.ndarray
    survival_bprime: np.ndarray
    fit_b: Optional[TailFit]
    fit_bprime: Optional[TailFit]
    n_samples: int
    saturated_fraction_b: float
    saturated_fraction_bprime: float


def busy_interval_distribution(
    samples: Union[engine.StationarySamples, Sequence[core.QueueState]],
    min_count_threshold: int = 100,
) -> BusyIntervalDistribution:
    """Survival curves of the first-empty-site scans over sampled states.

    Saturated values (finite ladders with no qualifying site, reported as
    ``N + 1``) stay in the curves and are tallied separately instead of
    raising, so truncated systems remain analyzable.
    """
    if isinstance(samples, engine.StationarySamples):
        b = samples.scalars[:, SC_BUSY].astype(np.int64)
        bp = samples.scalars[:, SC_PACKED].astype(np.int64)
        sat_b = samples.scalars[:, SC_BUSY_SAT].astype(bool)
        sat_bp = samples.scalars[:, SC_PACKED_SAT].astype(bool)
    else:
        states = list(samples)
        if not states:
            raise ValueError("no samples")
        res_b = [core.busy_interval(s) for s in states]
        res_bp = [core.busy_interval_packed(s) for s in states]
        b = np.array([r.site for r in res_b], dtype=np.int64)
        bp = np.array([r.site for r in res_bp], dtype=np.int64)
        sat_b = np.array([r.saturated for r in res_b], dtype=bool)
        sat_bp = np.array([r.saturated for r in res_bp], dtype=bool)
    n = b.size
    if n == 0:
        raise ValueError("no samples")
    rmax = int(bp.max())
    support = np.arange(rmax + 1)
    survival_b = np.array([(b > r).mean() for r in support])
    survival_bprime = np.array([(bp > r).mean() for r in support])
    try:
        fit_b = fit_exponential_tail(b, min_count_threshold)
    except ValueError:
        fit_b = None
    try:
        fit_bp = fit_exponential_tail(bp, min_count_threshold)
    except ValueError:
        fit_bp = None
    return BusyIntervalDistribution(
        support=support,
        survival_b=survival_b,
        survival_bprime=survival_bprime,
        fit_b=fit_b,
        fit_bprime=fit_bp,
        n_samples=n,
        saturated_fraction_b=float(sat_b.mean()),
        saturated_fraction_bprime=float(sat_bp.mean()),
    )


@dataclass(frozen=True)
class ScanPointConfig:
    """Per-grid-point budget of a phase scan.

    Each grid point runs one long path and samples its tail; the point's
    seed is ``base_seed`` plus the row-major grid index, so scans are
    reproducible and grid points stay independent.
    """

    time_horizon: float = 20000.0
    n_samples: int = 2000
    burn_in_fraction: float = 0.5
    base_seed: int = 0
    n_batches: int = MIN_BATCHES
    backend: Optional[str] = None


@dataclass(frozen=True)
class PhaseScanResult:
    """Site-1 statistics on a (arrival rate, ladder size) grid.

    Arrays are shaped (len(lambdas), len(Ns)). ``saturation_flag`` marks
    rates whose two largest ladders are CI-indistinguishable (the bounded,
    subcritical signature); ``growth_flag`` marks rates whose means are
    strictly ordered beyond CIs along the whole ladder (the growing,
    supercritical signature). The two flags can both be false at a fixed
    budget; they cannot both be true.
    """

    lambdas: np.ndarray
    Ns: np.ndarray
    grid: List[Tuple[float, int]]
    q1_mean: np.ndarray
    q1_mean_ci: np.ndarray
    q1_median: np.ndarray
    q1_median_ci: np.ndarray
    saturation_flag: np.ndarray
    growth_flag: np.ndarray


def phase_scan(
    lambdas: Sequence[float],
    Ns: Sequence[int],
    per_point_config: Optional[ScanPointConfig] = None,
) -> PhaseScanResult:
    """Stationary site-1 estimates over an arrival-rate / ladder-size grid.

    Medians are reported alongside means because runs above the critical
    rate carry heavy transients; the median moves less at a fixed budget.
    """
    cfg = per_point_config or ScanPointConfig()
    if isinstance(cfg, dict):
        cfg = ScanPointConfig(**cfg)
    lam = np.asarray(list(lambdas), dtype=np.float64)
    sizes = np.asarray(list(Ns), dtype=np.int64)
    if lam.size == 0 or sizes.size == 0:
        raise ValueError("empty grid")
    if np.any(lam <= 0):
        raise ValueError("arrival rates must be positive")
    if np.any(lam >= 1):
        raise ValueError("arrival rate at or above 1 is outside the stable regime")
    if np.any(sizes < 1):
        raise ValueError("ladder sizes must be positive")
    if np.any(np.diff(sizes) <= 0):
        raise ValueError("ladder sizes must be strictly increasing")
    shape = (lam.size, sizes.size)
    q1_mean = np.zeros(shape)
    q1_mean_ci = np.zeros(shape)
    q1_median = np.zeros(shape)
    q1_median_ci = np.zeros(shape)
    grid: List[Tuple[float, int]] = []
    for i, lval in enumerate(lam):
        for j, N in enumerate(sizes):
            grid.append((float(lval), int(N)))
            seed = cfg.base_seed + i * sizes.size + j
            point = engine.SystemConfig(float(lval), int(N), cfg.time_horizon, seed)
            ss = engine.stationary_samples(
                point, cfg.n_samples, burn_in_fraction=cfg.burn_in_fraction,
                backend=cfg.backend)
            q1 = ss.scalars[:, SC_Q1].astype(np.float64)
            bm = batch_means(q1, cfg.n_batches)
            q1_mean[i, j] = bm.mean
            q1_mean_ci[i, j] = bm.ci_halfwidth
            m = q1.size // cfg.n_batches
            used = q1[q1.size - m * cfg.n_batches:]
            meds = np.median(used.reshape(cfg.n_batches, m), axis=1)
            q1_median[i, j] = float(np.median(q1))
            q1_median_ci[i, j] = _batch_ci(meds)
    saturation = np.zeros(lam.size, dtype=bool)
    growth = np.zeros(lam.size, dtype=bool)
    if sizes.size >= 2:
        for i in range(lam.size):
            gap = abs(q1_mean[i, -1] - q1_mean[i, -2])
            saturation[i] = gap <= q1_mean_ci[i, -1] + q1_mean_ci[i, -2]
            lows = q1_mean[i, 1:] - q1_mean_ci[i, 1:]
            highs = q1_mean[i, :-1] + q1_mean_ci[i, :-1]
            growth[i] = bool(np.all(lows > highs))
    return PhaseScanResult(
        lambdas=lam,
        Ns=sizes,
        grid=grid,
        q1_mean=q1_mean,
        q1_mean_ci=q1_mean_ci,
        q1_median=q1_median,
        q1_median_ci=q1_median_ci,
        saturation_flag=saturation,
        growth_flag=growth,
    )


@dataclass(frozen=True)
class FluxEstimate:
    """Events per unit time across one counter, with batch-means CI."""

    rate: float
    ci_halfwidth: float
    n_batches: int


def flux_estimate(
    counters,
    site: Optional[int] = None,
    t_window: float = 0.0,
    n_batches: int = MIN_BATCHES,
) -> FluxEstimate:
    """Rate of a cumulative counter over an equally spaced sample window.

    ``counters`` is either the 2D per-epoch counter block of a trajectory
    (column ``site - 1`` holds cumulative entries into ``site``) or a 1D
    cumulative series (``site`` is then ignored). ``t_window`` is the time
    spanned by the sampled epochs; each consecutive increment is one batch.
    """
    arr = np.asarray(counters, dtype=np.float64)
    if arr.ndim == 2:
        if site is None:
            raise ValueError("2D counters need a site")
        col = int(site) - 1
        if not (0 <= col < arr.shape[1]):
            raise ValueError(f"site {site} outside the recorded range")
        series = arr[:, col]
    elif arr.ndim == 1:
        series = arr
    else:
        raise ValueError("counters must be 1D or 2D")
    if not (t_window > 0):
        raise ValueError("t_window must be positive")
    if np.any(np.diff(series) < 0):
        raise ValueError("counters must be cumulative (non-decreasing)")
    inc = np.diff(series)
    if inc.size < n_batches:
        raise ValueError(
            f"fewer than {n_batches} batches ({inc.size} increments)")
    dt = t_window / inc.size
    m = inc.size // n_batches
    used = inc[inc.size - m * n_batches:]
    rates = used.reshape(n_batches, m).sum(axis=1) / (m * dt)
    return FluxEstimate(
        rate=float(rates.mean()),
        ci_halfwidth=_batch_ci(rates),
        n_batches=n_batches,
    )
