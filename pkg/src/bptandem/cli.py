"""Command-line entry point: declarative experiment specs to tables.

One experiment is one spec (a small YAML file and/or flags), one output
directory with ``results.csv`` (wide rows: lambda, N, seed, metric, value,
ci_lo, ci_hi) and ``summary.yaml`` (spec echo, provenance, nested results).
Re-running an identical spec rewrites a byte-identical CSV; wall time and
other run-dependent provenance live only in the summary file.
"""

import argparse
import csv
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from . import __version__, analysis, clocks, engine, oracle, tasep
from ._kernels import BACKEND as _DEFAULT_BACKEND
from ._kernels.state import SC_BUSY, SC_PACKED, SC_Q1, SC_TOTAL

COMMANDS = ("simulate", "exact", "tasep", "couple-check", "scan", "fit-tail", "loynes")
TASEP_MODES = ("ring", "source", "tagged")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

_MetricRow = Tuple[str, Any, Optional[float], Optional[float]]


class RunFailure(RuntimeError):
    """Raised when an experiment cannot produce its outputs."""


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative description of one experiment; no hidden state.

    ``lam`` and ``n_sites`` hold either a scalar (most commands) or a list
    (``scan``); ``n_sites`` may be ``inf`` for the unbounded ladder. Field
    names map to the serialized keys ``lambda``, ``N`` and ``L``.
    """

    command: str
    lam: Union[float, Tuple[float, ...], None] = None
    n_sites: Union[int, float, Tuple[int, ...], None] = None
    horizon: float = 10000.0
    seeds: Tuple[int, ...] = (0,)
    rho: Optional[float] = None
    ring_size: Optional[int] = None
    cap: Optional[int] = None
    burn_in_fraction: float = 0.5
    sample_count: int = 2000
    mode: str = "ring"
    out: str = "."
    workers: int = 1
    backend: Optional[str] = None


_KEY_MAP = {
    "lambda": "lam",
    "N": "n_sites",
    "L": "ring_size",
}
_FIELD_TO_KEY = {v: k for k, v in _KEY_MAP.items()}
_SPEC_FIELDS = {f for f in ExperimentSpec.__dataclass_fields__}
_SPEC_KEYS = {_FIELD_TO_KEY.get(f, f) for f in _SPEC_FIELDS}


def _freeze(value):
    if isinstance(value, (list, tuple)):
        return tuple(_freeze(v) for v in value)
    return value


def _n_from_value(v):
    if v is None:
        return None
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity"):
            return math.inf
        return int(v)
    if isinstance(v, float) and math.isinf(v):
        return math.inf
    if isinstance(v, (list, tuple)):
        return tuple(int(x) for x in v)
    return int(v)


def spec_from_dict(data: Dict[str, Any]) -> ExperimentSpec:
    """Build a spec from serialized form; unknown keys raise."""
    unknown = sorted(set(data) - _SPEC_KEYS)
    if unknown:
        raise ValueError(f"unknown spec fields: {', '.join(unknown)}")
    kwargs: Dict[str, Any] = {}
    for key, value in data.items():
        fname = _KEY_MAP.get(key, key)
        if fname == "n_sites":
            value = _n_from_value(value)
        elif fname == "seeds":
            value = tuple(int(s) for s in value)
        elif fname == "lam" and isinstance(value, (list, tuple)):
            value = tuple(float(x) for x in value)
        kwargs[fname] = _freeze(value)
    return ExperimentSpec(**kwargs)


def spec_to_dict(spec: ExperimentSpec) -> Dict[str, Any]:
    """Serialized form of a spec; inverse of :func:`spec_from_dict`."""
    out: Dict[str, Any] = {}
    for fname in ExperimentSpec.__dataclass_fields__:
        value = getattr(spec, fname)
        key = _FIELD_TO_KEY.get(fname, fname)
        if fname == "n_sites":
            if value is not None and not isinstance(value, tuple) and math.isinf(value):
                value = "inf"
            elif isinstance(value, tuple):
                value = [int(x) for x in value]
        elif isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


def _is_scalar_rate(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def validate(spec: ExperimentSpec) -> List[str]:
    """Every constraint the spec violates, as human-readable strings.

    Never raises; an empty list means the spec is runnable.
    """
    v: List[str] = []
    if spec.command not in COMMANDS:
        v.append(f"command: must be one of {', '.join(COMMANDS)}")
        return v

    if not (isinstance(spec.horizon, (int, float)) and spec.horizon > 0
            and math.isfinite(spec.horizon)):
        v.append("horizon: must be a positive finite time")
    if not spec.seeds:
        v.append("seeds: at least one seed required")
    elif any((not isinstance(s, int)) or s < 0 for s in spec.seeds):
        v.append("seeds: must be non-negative integers")
    elif len(set(spec.seeds)) != len(spec.seeds):
        v.append("seeds: duplicates would double-count replications")
    if not (isinstance(spec.workers, int) and spec.workers >= 1):
        v.append("workers: must be a positive integer")
    if not (0 <= spec.burn_in_fraction < 1):
        v.append("burn_in_fraction: must lie in [0, 1)")
    if not (isinstance(spec.sample_count, int) and spec.sample_count >= 1):
        v.append("sample_count: must be a positive integer")
    if spec.backend is not None and spec.backend not in ("python", "compiled"):
        v.append("backend: must be 'python' or 'compiled'")
    if spec.mode not in TASEP_MODES:
        v.append(f"mode: must be one of {', '.join(TASEP_MODES)}")

    cmd = spec.command
    needs_lambda = cmd in ("simulate", "exact", "couple-check", "scan", "fit-tail", "loynes")
    stationary = cmd in ("simulate", "scan", "fit-tail")

    if needs_lambda:
        if spec.lam is None:
            v.append("lambda: required for this command")
        elif cmd == "scan":
            rates = spec.lam if isinstance(spec.lam, tuple) else (spec.lam,)
            if not all(_is_scalar_rate(x) and x > 0 for x in rates):
                v.append("lambda: rates must be positive numbers")
            elif any(x >= 1 for x in rates):
                v.append("lambda < 1 required for stationary estimation")
        elif not _is_scalar_rate(spec.lam):
            v.append("lambda: must be a single positive number")
        elif spec.lam <= 0:
            v.append("lambda: must be positive")
        elif stationary and spec.lam >= 1:
            v.append("lambda < 1 required for stationary estimation")

    if cmd in ("simulate", "fit-tail"):
        n = spec.n_sites
        if n is None:
            v.append("N: required for this command")
        elif isinstance(n, tuple):
            v.append("N: a single ladder size (or inf) required")
        elif n != math.inf and (not isinstance(n, int) or n < 1):
            v.append("N: must be a positive integer or inf")
        if spec.sample_count < 2 * analysis.MIN_BATCHES:
            v.append(f"sample_count: need at least {2 * analysis.MIN_BATCHES} "
                     "samples for batch-means intervals")
    if cmd == "exact":
        n = spec.n_sites
        if n is None:
            v.append("N: required for this command")
        elif not isinstance(n, int) or n < 1:
            v.append("N: exact solving needs a finite positive ladder")
        if spec.cap is None:
            v.append("cap: required for this command")
        elif not (isinstance(spec.cap, int) and spec.cap >= 1):
            v.append("cap: must be a positive integer")
        elif isinstance(n, int) and n >= 1 and (spec.cap + 1) ** n > oracle.MAX_STATES:
            v.append(f"cap: (cap+1)^N = {(spec.cap + 1) ** n} states exceeds "
                     f"the {oracle.MAX_STATES} limit")
    if cmd == "scan":
        n = spec.n_sites
        sizes = n if isinstance(n, tuple) else (n,) if n is not None else ()
        if not sizes:
            v.append("N: a ladder list is required for a scan")
        elif any(not isinstance(x, int) or x < 1 for x in sizes):
            v.append("N: ladder sizes must be positive integers")
        elif len(sizes) < 2:
            v.append("N: a scan needs at least two ladder sizes")
        elif any(b <= a for a, b in zip(sizes, sizes[1:])):
            v.append("N: ladder sizes must be strictly increasing")
        if spec.sample_count < 2 * analysis.MIN_BATCHES:
            v.append(f"sample_count: need at least {2 * analysis.MIN_BATCHES} "
                     "samples for batch-means intervals")
    if cmd == "tasep":
        if spec.mode in ("ring", "tagged"):
            if spec.rho is None:
                v.append("rho: required for this tasep mode")
            elif not (_is_scalar_rate(spec.rho) and 0 < spec.rho < 1):
                v.append("rho: must lie strictly in (0, 1)")
        if spec.mode == "ring":
            L = spec.ring_size
            if L is None:
                v.append("L: ring size required for ring mode")
            elif not (isinstance(L, int) and L >= 2):
                v.append("L: must be an integer >= 2")
            elif spec.rho is not None and _is_scalar_rate(spec.rho) and 0 < spec.rho < 1:
                k = int(round(spec.rho * L))
                if not (1 <= k <= L - 1):
                    v.append("rho: rounds to an empty or full ring")
            if spec.sample_count < analysis.MIN_BATCHES + 1:
                v.append(f"sample_count: need at least {analysis.MIN_BATCHES + 1} "
                         "epochs for a batch-means flux interval")
    if cmd == "loynes":
        if spec.rho is None:
            v.append("rho: required for this command")
        elif not (_is_scalar_rate(spec.rho) and 0 < spec.rho < 1):
            v.append("rho: must lie strictly in (0, 1)")
        L = spec.ring_size
        if L is None:
            v.append("L: ring size required for this command")
        elif not (isinstance(L, int) and L >= 2):
            v.append("L: must be an integer >= 2")
        elif spec.rho is not None and _is_scalar_rate(spec.rho) and 0 < spec.rho < 1:
            k = int(round(spec.rho * L))
            if not (1 <= k <= L - 1):
                v.append("rho: rounds to an empty or full ring")
    return v


# ---------------------------------------------------------------------------
# per-seed jobs (module level so worker processes can import them)

def _batch_rows(values: np.ndarray, metric: str) -> List[_MetricRow]:
    bm = analysis.batch_means(values)
    return [(metric, bm.mean, bm.mean - bm.ci_halfwidth, bm.mean + bm.ci_halfwidth)]


def _median_row(values: np.ndarray, metric: str) -> List[_MetricRow]:
    n_batches = analysis.MIN_BATCHES
    m = values.size // n_batches
    meds = np.median(values[values.size - m * n_batches:].reshape(n_batches, m), axis=1)
    hw = analysis._batch_ci(meds)
    med = float(np.median(values))
    return [(metric, med, med - hw, med + hw)]


def _stationary_rows(payload: Dict[str, Any], with_boundary: bool) -> List[_MetricRow]:
    hz = payload["N"]
    cfg = engine.SystemConfig(payload["lambda"], hz, payload["horizon"], payload["seed"])
    ss = engine.stationary_samples(
        cfg, payload["sample_count"],
        burn_in_fraction=payload["burn_in_fraction"], backend=payload["backend"])
    q1 = ss.scalars[:, SC_Q1].astype(np.float64)
    rows = _batch_rows(q1, "q1_mean")
    rows += _median_row(q1, "q1_median")
    rows += _batch_rows(ss.scalars[:, SC_TOTAL].astype(np.float64), "total_mean")
    rows += _batch_rows(ss.scalars[:, SC_BUSY].astype(np.float64), "busy_b_mean")
    rows += _batch_rows(ss.scalars[:, SC_PACKED].astype(np.float64), "busy_bprime_mean")
    if with_boundary and hz != math.inf:
        bp = analysis.boundary_probabilities(ss)
        for n in range(1, int(hz) + 1):
            p = float(bp.probabilities[n - 1])
            hw = float(bp.ci_halfwidths[n - 1])
            rows.append((f"boundary_p_site{n}", p, p - hw, p + hw))
    return rows


def _job_simulate(payload: Dict[str, Any]) -> List[_MetricRow]:
    return _stationary_rows(payload, with_boundary=True)


def _job_scan_point(payload: Dict[str, Any]) -> List[_MetricRow]:
    return _stationary_rows(payload, with_boundary=False)[:2]


def _job_fit_tail(payload: Dict[str, Any]) -> List[_MetricRow]:
    hz = payload["N"]
    cfg = engine.SystemConfig(payload["lambda"], hz, payload["horizon"], payload["seed"])
    ss = engine.stationary_samples(
        cfg, payload["sample_count"],
        burn_in_fraction=payload["burn_in_fraction"], backend=payload["backend"])
    q1 = ss.scalars[:, SC_Q1].astype(np.int64)
    rows = _batch_rows(q1.astype(np.float64), "q1_mean")
    rows.append(("_q1_samples", q1.tolist(), None, None))
    return rows


def _job_tasep(payload: Dict[str, Any]) -> List[_MetricRow]:
    mode = payload["mode"]
    seed = payload["seed"]
    T = payload["horizon"]
    backend = payload["backend"]
    if mode == "ring":
        L = payload["L"]
        K = int(round(payload["rho"] * L))
        rr = tasep.run_ring_tasep(tasep.ring_state(L, K, seed), seed=seed,
                                  time_horizon=T, backend=backend)
        ep = np.linspace(T / payload["sample_count"], T, payload["sample_count"])
        counts = np.searchsorted(rr.record.jump_times, ep, side="right")
        fe = analysis.flux_estimate(counts, t_window=float(ep[-1] - ep[0]))
        exact = tasep.ring_flux_exact(L, K)
        return [("bond_flux", fe.rate, fe.rate - fe.ci_halfwidth,
                 fe.rate + fe.ci_halfwidth),
                ("flux_exact", exact, exact, exact)]
    if mode == "source":
        sr = tasep.source_tasep(T, seed, backend=backend)
        flux = float(sr.bond_counts[-1] / sr.epochs[-1])
        return [("source_flux", flux, None, None)]
    if mode == "tagged":
        rho = payload["rho"]
        span = tasep.tagged_window_span(T, rho)
        init = tasep.bernoulli_init(("line", 1, span), rho, seed)
        stats = tasep.tagged_particle(init, T, seed=seed, backend=backend)
        return [("tagged_speed", stats.speed, None, None)]
    raise RunFailure(f"unknown tasep mode {mode!r}")


def _job_couple_check(payload: Dict[str, Any]) -> List[_MetricRow]:
    lam = payload["lambda"]
    T = payload["horizon"]
    seed = payload["seed"]
    backend = payload["backend"]
    chain = [engine.SystemConfig(lam, hz, T, seed) for hz in (1, 2, 4, math.inf)]
    cr = engine.simulate_coupled(chain, check_order=True, check_tail=True,
                                 backend=backend)
    order_v = int(sum(cr.violations.values()))
    mask = clocks.BernoulliMask(0.5, mask_seed=seed)
    obr = engine.simulate_obstructed(
        engine.SystemConfig(lam, math.inf, T, seed), mask, check=True,
        backend=backend)
    obstruction_v = int(sum(obr.violations.values()))
    return [("order_violations", order_v, None, None),
            ("obstruction_violations", obstruction_v, None, None)]


def _job_loynes(payload: Dict[str, Any]) -> List[_MetricRow]:
    seed = payload["seed"]
    T = payload["horizon"]
    L = payload["L"]
    K = int(round(payload["rho"] * L))
    rr = tasep.run_ring_tasep(tasep.ring_state(L, K, seed), seed=seed,
                              time_horizon=T, backend=payload["backend"])
    arrivals = clocks.ClockField(
        seed, clocks.PoissonArrivals(payload["lambda"])).arrival_take(T)
    est = oracle.loynes_estimate(arrivals, rr.record.jump_times, T)
    return [("loynes_estimate", est.value, None, None)]


_JOB_FUNCS = {
    "simulate": _job_simulate,
    "scan": _job_scan_point,
    "fit-tail": _job_fit_tail,
    "tasep": _job_tasep,
    "couple-check": _job_couple_check,
    "loynes": _job_loynes,
}


def _run_job(args: Tuple[str, Dict[str, Any]]):
    command, payload = args
    return _JOB_FUNCS[command](payload)


# ---------------------------------------------------------------------------
# orchestration

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _fmt_n(n) -> str:
    if n is None:
        return ""
    if n == math.inf:
        return "inf"
    return str(int(n))


def _across_seed_ci(values: Sequence[float]) -> Tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, 0.0
    return mean, analysis._batch_ci(arr)


def _grid_points(spec: ExperimentSpec) -> List[Tuple[Optional[float], Any]]:
    if spec.command == "scan":
        rates = spec.lam if isinstance(spec.lam, tuple) else (spec.lam,)
        sizes = spec.n_sites if isinstance(spec.n_sites, tuple) else (spec.n_sites,)
        return [(float(l), int(n)) for l in rates for n in sizes]
    if spec.command == "tasep":
        return [(None, None)]
    if spec.command in ("couple-check", "loynes"):
        return [(float(spec.lam), math.inf)]
    return [(float(spec.lam), spec.n_sites)]


def _payloads(spec: ExperimentSpec):
    """One (command, payload) job per grid point and seed, in output order."""
    grid = _grid_points(spec)
    base = {
        "horizon": float(spec.horizon),
        "burn_in_fraction": spec.burn_in_fraction,
        "sample_count": spec.sample_count,
        "backend": spec.backend,
        "mode": spec.mode,
        "rho": spec.rho,
        "L": spec.ring_size,
    }
    jobs = []
    for gi, (lam, n) in enumerate(grid):
        for seed in sorted(spec.seeds):
            payload = dict(base)
            payload.update({"lambda": lam, "N": n, "seed": seed})
            jobs.append(((gi, seed), (spec.command, payload)))
    return grid, jobs


def _execute_jobs(spec: ExperimentSpec, jobs):
    keys = [k for k, _ in jobs]
    args = [a for _, a in jobs]
    if spec.workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_job, args))
    else:
        results = [_run_job(a) for a in args]
    return dict(zip(keys, results))


def _exact_rows(spec: ExperimentSpec):
    chain = oracle.build_chain(spec.n_sites, spec.lam, spec.cap)
    dist = oracle.solve_stationary(chain)
    rows: List[_MetricRow] = [
        ("truncation_mass", dist.truncation_mass, dist.truncation_mass,
         dist.truncation_mass),
        ("residual", dist.residual, dist.residual, dist.residual),
    ]
    profile = oracle.expected_queue_profile(chain, dist)
    for n in range(1, spec.n_sites + 1):
        m = float(profile[n - 1])
        rows.append((f"mean_q{n}", m, m, m))
    bps = oracle.boundary_probabilities_exact(chain, dist)
    for n in range(1, spec.n_sites + 1):
        p = float(bps[n - 1])
        rows.append((f"boundary_p_site{n}", p, p, p))
    for n in range(1, spec.n_sites + 1):
        marg = oracle.marginal(chain, dist, n)
        for k in range(spec.cap + 1):
            p = float(marg[k])
            rows.append((f"p_site{n}_eq_{k}", p, p, p))
    summary = {
        "n_states": int(chain.states.shape[0]),
        "truncation_mass": float(dist.truncation_mass),
        "residual": float(dist.residual),
    }
    return rows, summary


def _summarize(spec: ExperimentSpec, grid, results) -> Dict[str, Any]:
    """Across-seed aggregation (sorted seed order) for the summary file."""
    seeds = sorted(spec.seeds)

    def metric_values(gi: int, metric: str) -> List[float]:
        vals = []
        for seed in seeds:
            for name, value, _lo, _hi in results[(gi, seed)]:
                if name == metric:
                    vals.append(float(value))
        return vals

    summary: Dict[str, Any] = {}
    if spec.command == "scan":
        rates = spec.lam if isinstance(spec.lam, tuple) else (spec.lam,)
        sizes = spec.n_sites if isinstance(spec.n_sites, tuple) else (spec.n_sites,)
        table = []
        mean = np.zeros((len(rates), len(sizes)))
        ci = np.zeros_like(mean)
        for i, lam in enumerate(rates):
            for j, n in enumerate(sizes):
                gi = i * len(sizes) + j
                m, hw = _across_seed_ci(metric_values(gi, "q1_mean"))
                mean[i, j] = m
                ci[i, j] = hw
                table.append({"lambda": float(lam), "N": int(n),
                              "q1_mean": m, "ci_halfwidth": hw,
                              "n_seeds": len(seeds)})
        saturation = {}
        growth = {}
        for i, lam in enumerate(rates):
            gap = abs(mean[i, -1] - mean[i, -2])
            saturation[repr(float(lam))] = bool(gap <= ci[i, -1] + ci[i, -2])
            lows = mean[i, 1:] - ci[i, 1:]
            highs = mean[i, :-1] + ci[i, :-1]
            growth[repr(float(lam))] = bool(np.all(lows > highs))
        summary["scan"] = {"table": table, "saturation_flag": saturation,
                           "growth_flag": growth}
    elif spec.command == "fit-tail":
        pooled: List[int] = []
        for seed in seeds:
            for name, value, _lo, _hi in results[(0, seed)]:
                if name == "_q1_samples":
                    pooled.extend(value)
        try:
            fit = analysis.fit_exponential_tail(np.asarray(pooled, dtype=np.int64))
        except ValueError as exc:
            raise RunFailure(f"tail fit failed: {exc}") from exc
        summary["tail_fit"] = {
            "label": "empirical decay rate",
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "min_count": fit.min_count,
            "n_bins": int(fit.support.size),
            "n_samples": len(pooled),
        }
    elif spec.command == "couple-check":
        total = 0
        for gi, _ in enumerate(grid):
            for metric in ("order_violations", "obstruction_violations"):
                total += int(sum(metric_values(gi, metric)))
        summary["total_violations"] = total
        if total:
            raise RunFailure(f"coupling checks found {total} violations")
    else:
        aggregates = {}
        first = results[(0, seeds[0])]
        for name, _v, _lo, _hi in first:
            if name.startswith("_"):
                continue
            vals = metric_values(0, name)
            if len(vals) == len(seeds):
                m, hw = _across_seed_ci(vals)
                aggregates[name] = {"mean": m, "ci_halfwidth": hw,
                                    "n_seeds": len(seeds)}
        summary["aggregates"] = aggregates
    return summary


def _write_csv(path: str, spec: ExperimentSpec, grid, results) -> None:
    seeds = sorted(spec.seeds)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lambda", "N", "seed", "metric", "value", "ci_lo", "ci_hi"])
        for gi, (lam, n) in enumerate(grid):
            for seed in seeds:
                for name, value, lo, hi in results[(gi, seed)]:
                    if name.startswith("_"):
                        continue
                    writer.writerow([_fmt(lam), _fmt_n(n), str(seed), name,
                                     _fmt(value), _fmt(lo), _fmt(hi)])


def run(spec: ExperimentSpec) -> int:
    """Validate, execute, and serialize one experiment; returns the exit code."""
    violations = validate(spec)
    if violations:
        for item in violations:
            print(f"invalid spec: {item}", file=sys.stderr)
        return EXIT_VALIDATION

    t_start = time.monotonic()
    created: List[str] = []
    try:
        if spec.command == "exact":
            rows, extra = _exact_rows(spec)
            seed0 = sorted(spec.seeds)[0]
            grid = _grid_points(spec)
            results = {(0, seed0): rows}
            seeds_used = [seed0]
            spec_eff = replace(spec, seeds=(seed0,))
            summary_results = extra
        else:
            grid, jobs = _payloads(spec)
            results = _execute_jobs(spec, jobs)
            seeds_used = sorted(spec.seeds)
            spec_eff = spec
            summary_results = _summarize(spec, grid, results)

        os.makedirs(spec.out, exist_ok=True)
        csv_path = os.path.join(spec.out, "results.csv")
        yaml_path = os.path.join(spec.out, "summary.yaml")
        _write_csv(csv_path, spec_eff, grid, results)
        created.append(csv_path)
        summary = {
            "spec": spec_to_dict(spec),
            "provenance": {
                "seeds": list(seeds_used),
                "code_version": __version__,
                "kernel_backend": spec.backend or _DEFAULT_BACKEND,
                "wall_time_s": round(time.monotonic() - t_start, 3),
            },
            "results": summary_results,
        }
        with open(yaml_path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(summary, fh, sort_keys=True)
        created.append(yaml_path)
    except Exception as exc:  # noqa: BLE001 - single boundary for exit code 3
        for path in created:
            try:
                os.unlink(path)
            except OSError:
                pass
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def _parse_rates(text: str):
    parts = [p for p in text.split(",") if p.strip()]
    values = tuple(float(p) for p in parts)
    return values[0] if len(values) == 1 else values


def _parse_sizes(text: str):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) == 1:
        return _n_from_value(parts[0])
    return tuple(int(p) for p in parts)


def _parse_seeds(text: str):
    seeds: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, dash, hi = part.partition("-")
        if dash and lo:
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return tuple(seeds)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bptandem",
        description="Back-pressure tandem experiments: simulation, exact "
                    "solving, exclusion processes and phase scans.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML experiment spec; flags override it")
        p.add_argument("--lambda", dest="lam", type=_parse_rates,
                       help="arrival rate (scan: comma-separated list)")
        p.add_argument("--n", dest="n_sites", type=_parse_sizes,
                       help="ladder size, 'inf', or comma-separated list for scan")
        p.add_argument("--horizon", type=float)
        p.add_argument("--seeds", type=_parse_seeds,
                       help="comma-separated seed list")
        p.add_argument("--seed", type=int, help="single seed shorthand")
        p.add_argument("--rho", type=float)
        p.add_argument("--l", "--ring-size", dest="ring_size", type=int)
        p.add_argument("--cap", type=int)
        p.add_argument("--burn-in-fraction", dest="burn_in_fraction", type=float)
        p.add_argument("--sample-count", dest="sample_count", type=int)
        p.add_argument("--mode", choices=TASEP_MODES)
        p.add_argument("--out")
        p.add_argument("--workers", type=int)
        p.add_argument("--backend", choices=("python", "compiled"))
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    data: Dict[str, Any] = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a mapping")
        data.update(loaded)
    data["command"] = args.command
    for fname in ("lam", "n_sites", "horizon", "seeds", "rho", "ring_size",
                  "cap", "burn_in_fraction", "sample_count", "mode", "out",
                  "workers", "backend"):
        value = getattr(args, fname, None)
        if value is not None:
            data[_FIELD_TO_KEY.get(fname, fname)] = value
    if getattr(args, "seed", None) is not None and getattr(args, "seeds", None) is None:
        data["seeds"] = (args.seed,)
    return spec_from_dict(data)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = spec_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
