"""Compare the compiled event kernel against the pure-Python fallback.

Runs the same seeded workloads through both backends and reports events per
second plus the speedup. The two backends share every line of driver code
(clock generation, merging, sampling), so their outputs are identical and
only the per-event state loop differs.

Usage: python3 benchmarks/benchmark_kernels.py [--scale X]
"""

import argparse
import math
import time

from bptandem import engine, tasep


def _time_run(fn):
    t0 = time.perf_counter()
    raw = fn()
    dt = time.perf_counter() - t0
    return raw.rs.events_processed, dt


def workloads(scale: float):
    T = 2_000.0 * scale
    yield "ladder N=20, rate 0.3", lambda backend: engine.run_systems(
        seed=1, time_horizon=T,
        systems=[engine.SystemSpec(horizon=20)],
        arrivals=engine.PoissonArrivals(0.3), backend=backend)
    yield "unbounded ladder, rate 0.3", lambda backend: engine.run_systems(
        seed=2, time_horizon=T / 4,
        systems=[engine.SystemSpec(horizon=math.inf)],
        arrivals=engine.PoissonArrivals(0.3), backend=backend)
    yield "ring L=100, K=50", lambda backend: engine.run_systems(
        seed=3, time_horizon=T / 2, systems=[],
        env=engine.EnvSpec(tasep.ring_state(100, 50, 3).occupancy.tolist()),
        backend=backend)
    yield "coupled x4 with order checks", lambda backend: engine.run_systems(
        seed=4, time_horizon=T / 4,
        systems=[engine.SystemSpec(horizon=h) for h in (1, 2, 4, math.inf)],
        arrivals=engine.PoissonArrivals(0.3),
        check_pairs=[(k, k + 1, engine.REL_COMPONENTWISE) for k in range(3)],
        backend=backend)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", type=float, default=1.0,
                        help="multiply every workload horizon by this factor")
    args = parser.parse_args()

    header = f"{'workload':<32} {'events':>10} {'python':>12} {'compiled':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, fn in workloads(args.scale):
        ev_py, dt_py = _time_run(lambda: fn("python"))
        ev_c, dt_c = _time_run(lambda: fn("compiled"))
        assert ev_py == ev_c, f"backends disagree on {name}"
        rate_py = ev_py / dt_py
        rate_c = ev_c / dt_c
        print(f"{name:<32} {ev_c:>10d} {rate_py:>9.2e}/s {rate_c:>9.2e}/s "
              f"{rate_c / rate_py:>7.1f}x")


if __name__ == "__main__":
    main()
