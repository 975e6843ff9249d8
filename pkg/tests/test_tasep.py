"""Exclusion-process constructions: ring, tagged particle, source, bound."""

import math

import numpy as np
import pytest

from bptandem import clocks, engine, tasep

INF = math.inf


def test_step_tasep_matches_kernel_ring():
    initial = tasep.ring_state(30, 12, seed=5)
    field = clocks.ClockField(7, clocks.PoissonArrivals(0.0))
    py_final, py_record = tasep.step_tasep(initial, field, 20.0, bond_site=1)
    run = tasep.run_ring_tasep(initial, seed=7, time_horizon=20.0, bond_site=1)
    np.testing.assert_array_equal(py_final.occupancy, run.final.occupancy)
    np.testing.assert_array_equal(py_record.jump_times, run.record.jump_times)
    assert run.final.particle_count == initial.particle_count


def test_step_tasep_resumes_across_calls():
    initial = tasep.ring_state(20, 9, seed=2)
    split = clocks.ClockField(4, clocks.PoissonArrivals(0.0))
    mid, rec1 = tasep.step_tasep(initial, split, 6.0)
    end, rec2 = tasep.step_tasep(mid, split, 12.0)
    whole = clocks.ClockField(4, clocks.PoissonArrivals(0.0))
    end_once, rec_once = tasep.step_tasep(initial, whole, 12.0)
    np.testing.assert_array_equal(end.occupancy, end_once.occupancy)
    np.testing.assert_array_equal(
        np.concatenate([rec1.jump_times, rec2.jump_times]), rec_once.jump_times)


def test_particle_ids_never_overtake():
    initial = tasep.ring_state(15, 6, seed=8)
    field = clocks.ClockField(9, clocks.PoissonArrivals(0.0))
    state, _ = tasep.step_tasep(initial, field, 30.0)
    ids = state.particle_ids
    assert sorted(ids[ids >= 0]) == sorted(
        initial.particle_ids[initial.particle_ids >= 0])


def test_ring_occupancy_samples_conserve_count():
    initial = tasep.ring_state(25, 10, seed=1)
    run = tasep.run_ring_tasep(initial, seed=3, time_horizon=15.0, epochs=9)
    assert run.occupancy_samples.shape == (9, 25)
    np.testing.assert_array_equal(run.occupancy_samples.sum(axis=1),
                                  np.full(9, 10))


def test_bernoulli_init_fixed_count():
    state = tasep.bernoulli_init(("ring", 40), 0.5, seed=6, fixed_count=True)
    assert state.particle_count == 20
    occupied = state.occupancy == 1
    assert np.all((state.particle_ids >= 0) == occupied)
    with pytest.raises(ValueError):
        tasep.bernoulli_init(("line", 1, 10), 0.5, seed=0, fixed_count=True)
    with pytest.raises(ValueError):
        tasep.bernoulli_init(("ring", 10), 1.0, seed=0)
    with pytest.raises(ValueError):
        tasep.bernoulli_init(("torus", 10), 0.5, seed=0)


def test_leftmost_particle_gap_is_geometric():
    # distance from the window edge to the first particle has mean (1-rho)/rho
    rho = 0.5
    gaps = []
    for seed in range(200):
        occ = tasep.bernoulli_init(("line", 1, 64), rho, seed).occupancy
        nz = np.nonzero(occ)[0]
        if nz.size:
            gaps.append(nz[0])
    mean = np.mean(gaps)
    assert abs(mean - (1 - rho) / rho) < 0.5


def test_ring_flux_exact_values():
    assert tasep.ring_flux_exact(4, 2) == pytest.approx(1 / 3)
    assert tasep.ring_flux_exact(5, 2) == pytest.approx(0.3)
    assert tasep.ring_flux_exact(10, 0) == 0.0
    assert tasep.ring_flux_exact(10, 10) == 0.0
    with pytest.raises(ValueError):
        tasep.ring_flux_exact(1, 0)
    with pytest.raises(ValueError):
        tasep.ring_flux_exact(4, 5)


def test_tagged_particle_speed():
    rho = 0.5
    horizon = 200.0
    span = tasep.tagged_window_span(horizon, rho)
    speeds = []
    for seed in range(10):
        window = tasep.bernoulli_init(("line", 1, span), rho, seed)
        stats = tasep.tagged_particle(window, horizon, seed=seed)
        speeds.append(stats.speed)
    assert np.mean(speeds) == pytest.approx(1 - rho, abs=0.08)


def test_tagged_particle_needs_room():
    occ = np.zeros(5, dtype=np.int8)
    occ[0] = 1
    window = tasep.TasepState(("line", 1, 5), occ,
                              particle_ids=np.array([0, -1, -1, -1, -1]))
    with pytest.raises(RuntimeError):
        tasep.tagged_particle(window, 50.0, seed=0)
    with pytest.raises(ValueError):
        tasep.tagged_particle(tasep.ring_state(10, 4, 0), 5.0, seed=0)
    empty = tasep.TasepState(("line", 1, 4), np.zeros(4, dtype=np.int8))
    with pytest.raises(ValueError):
        tasep.tagged_particle(empty, 5.0, seed=0)


def test_source_first_jump_is_first_site1_clock_point():
    run = tasep.source_tasep(5.0, seed=3)
    field = clocks.ClockField(3, clocks.PoissonArrivals(0.0))
    times, _ = field.site_take(1, 5.0)
    assert run.record.jump_times[0] == times[0]
    assert run.record.mu_nominal == 0.25


def test_source_flux_relaxes_toward_quarter():
    run = tasep.source_tasep(2000.0, seed=12, n_epochs=40)
    assert np.all(np.diff(run.bond_counts) >= 0)
    final_flux = run.flux_samples[-1]
    assert 0.2 < final_flux < 0.35
    assert run.final_frontier > 0


def test_bound_process_orders_hold_in_sized_ring():
    horizon = 60.0
    ring = tasep.bound_ring_size(horizon, 0.5)
    config = engine.SystemConfig(0.2, INF, horizon, seed=9)
    result = tasep.bound_process(config, ring_size=ring, epochs=7)
    assert all(v == 0 for v in result.violations.values())
    assert np.all(result.bounded.q1 >= result.free.q1)
    assert np.all(result.bounded.totals <= result.free.totals)
    assert result.env_final.particle_count == result.env_initial.particle_count
    # every gated site-1 move coincides with a recorded bond jump
    assert result.record.count(0.0, horizon) >= result.bounded.totals[-1] - result.bounded.q1[-1]


def test_bound_process_validation_and_warnings():
    with pytest.raises(ValueError):
        tasep.bound_process(engine.SystemConfig(0.2, 3, 10.0, seed=0))
    with pytest.raises(ValueError):
        tasep.bound_process(
            engine.SystemConfig(0.2, INF, 10.0, seed=0, initial_state=(1,)))
    line_env = tasep.bernoulli_init(("line", 1, 10), 0.5, seed=0)
    with pytest.raises(ValueError):
        tasep.bound_process(engine.SystemConfig(0.2, INF, 10.0, seed=0),
                            env=line_env)
    with pytest.warns(UserWarning, match="bond flux"):
        tasep.bound_process(engine.SystemConfig(0.3, INF, 10.0, seed=0),
                            ring_size=200, check_env=False)
    with pytest.warns(UserWarning, match="front wraps"):
        tasep.bound_process(engine.SystemConfig(0.1, INF, 40.0, seed=0),
                            ring_size=24)


def test_bound_process_order_only_any_ring():
    # with environment checks off, a short ring is fine: gating only ever
    # removes site-1 service points, so the pair orders hold regardless
    config = engine.SystemConfig(0.15, INF, 80.0, seed=5)
    result = tasep.bound_process(config, ring_size=50, check_env=False)
    order_keys = ("pair_tail_sum", "pair_first_site", "tail_dominance")
    assert all(result.violations[k] == 0 for k in order_keys)


def test_service_record_count():
    rec = tasep.ServiceRecord(1, np.array([1.0, 2.0, 3.0]), 0.25)
    assert rec.count(1.0, 3.0) == 2
    assert rec.count(0.0, 3.0) == 3
    assert rec.count(3.0, 9.0) == 0
    with pytest.raises(ValueError):
        tasep.ServiceRecord(1, np.array([2.0, 1.0]), 0.25)


def test_tasep_state_validation():
    with pytest.raises(ValueError):
        tasep.TasepState(("ring", 5), np.zeros(4, dtype=np.int8))
    with pytest.raises(ValueError):
        tasep.TasepState(("line", 3, 2), np.zeros(0, dtype=np.int8))
    with pytest.raises(ValueError):
        tasep.TasepState(("ring", 4), np.array([0, 1, 2, 0]))
    with pytest.raises(ValueError):
        tasep.TasepState(("ring", 4), np.array([0, 1, 0, 0]),
                         particle_ids=np.array([0, -1, -1, -1]))
