"""Engine-level behavior: replay oracle, identities, coupling, determinism."""

import math

import numpy as np
import pytest

from bptandem import clocks, core, engine, oracle
from bptandem._kernels.state import (
    ACT_DEPART, ACT_GATED, ACT_MASKED, ACT_MOVE, ACT_NA, ACT_SUPPRESSED,
)

INF = math.inf


def _replay(traj: engine.Trajectory, horizon, use_mask: bool) -> core.QueueState:
    """Re-apply the event log through the state-level rules.

    The kernel never calls these rules, so agreement here is an independent
    derivation of every logged path, including the per-event action codes.
    """
    log = traj.event_log
    state = core.QueueState((0,) * int(horizon) if horizon != INF else (), horizon)
    k = traj.system_index
    for i in range(log.times.size):
        stream = int(log.streams[i])
        action = int(log.actions[k][i]) if log.actions.shape[0] > 1 else int(log.actions[0][i])
        if stream == 0:
            assert action == ACT_MOVE
            state = core.apply_transition(state, core.Arrival())
            continue
        if use_mask and not log.valid[i]:
            assert action == ACT_MASKED
            continue
        eligible = core.is_eligible(state, stream) if (
            horizon == INF or stream <= horizon) else False
        if not eligible:
            assert action in (ACT_SUPPRESSED, ACT_NA)
            continue
        if horizon != INF and stream == horizon:
            assert action == ACT_DEPART
        else:
            assert action == ACT_MOVE
        state = core.apply_transition(state, core.ServiceRing(stream))
    return state


def test_event_log_replay_finite():
    cfg = engine.SystemConfig(0.5, 4, 600.0, seed=12)
    traj = engine.simulate(cfg, record_log=True)
    replayed = _replay(traj, 4, use_mask=False)
    assert replayed == traj.final_state
    assert traj.arrivals == int(np.sum(traj.event_log.streams == 0))


def test_event_log_replay_infinite():
    cfg = engine.SystemConfig(0.4, INF, 300.0, seed=3)
    traj = engine.simulate(cfg, record_log=True)
    replayed = _replay(traj, INF, use_mask=False)
    assert replayed == traj.final_state
    assert traj.departures == 0  # nothing leaves the unbounded ladder


def test_event_log_replay_masked():
    run = engine.simulate_obstructed(
        engine.SystemConfig(0.5, 3, 500.0, seed=8),
        clocks.BernoulliMask(0.5, mask_seed=2),
        record_log=True, check=False)
    free = _replay(run.unobstructed, 3, use_mask=False)
    obstructed = _replay(run.obstructed, 3, use_mask=True)
    assert free == run.unobstructed.final_state
    assert obstructed == run.obstructed.final_state


def test_mm1_matches_exact_oracle():
    chain = oracle.build_chain(1, 0.5, 30)
    dist = oracle.solve_stationary(chain)
    exact_mean = float(oracle.expected_queue_profile(chain, dist)[0])
    ss = engine.stationary_samples(engine.SystemConfig(0.5, 1, 40000.0, seed=4), 4000)
    q1 = ss.q1.astype(np.float64)
    n_b = 20
    m = q1.size // n_b
    batches = q1[:m * n_b].reshape(n_b, m).mean(axis=1)
    se = batches.std(ddof=1) / np.sqrt(n_b)
    assert abs(q1.mean() - exact_mean) < 3 * se + 1e-3


def test_counter_identity_flow_balance():
    """Entries into site n minus entries into n+1 equal the queue at n."""
    cfg = engine.SystemConfig(0.45, 5, 800.0, seed=21)
    traj = engine.simulate(cfg, epochs=17, sample_width=5)
    for s in range(1, 6):
        np.testing.assert_array_equal(
            traj.counters[:, s - 1] - traj.counters[:, s],
            traj.queues[:, s - 1])


def test_coupled_chain_zero_violations_and_order():
    configs = [engine.SystemConfig(0.3, hz, 400.0, seed=5)
               for hz in (1, 2, 4, INF)]
    run = engine.simulate_coupled(configs, epochs=13, check_tail=True)
    assert all(v == 0 for v in run.violations.values())
    # sampled paths are componentwise nested along the ladder
    for lo, hi in zip(run.trajectories, run.trajectories[1:]):
        w = min(lo.queues.shape[1], hi.queues.shape[1])
        assert np.all(lo.queues[:, :w] <= hi.queues[:, :w])


def test_obstructed_dominance_on_unbounded_ladder():
    run = engine.simulate_obstructed(
        engine.SystemConfig(0.35, INF, 400.0, seed=9),
        clocks.BernoulliMask(0.3, mask_seed=4),
        epochs=11)
    assert all(v == 0 for v in run.violations.values())
    assert np.all(run.obstructed.queues[:, 0] >= run.unobstructed.queues[:, 0])
    # obstructed path carries no more total work at any sample epoch
    assert np.all(run.obstructed.totals <= run.unobstructed.totals)


def test_fully_masked_system_only_accumulates():
    run = engine.simulate_obstructed(
        engine.SystemConfig(0.6, 2, 300.0, seed=14),
        clocks.NoneValid(), check=False)
    blocked = run.obstructed
    assert blocked.departures == 0
    assert blocked.final_state.lengths[0] == blocked.arrivals
    assert blocked.final_state.lengths[1] == 0


def test_determinism_exact_reruns():
    cfg = engine.SystemConfig(0.4, 3, 500.0, seed=33)
    a = engine.simulate(cfg, epochs=9, sample_width=3)
    b = engine.simulate(cfg, epochs=9, sample_width=3)
    np.testing.assert_array_equal(a.queues, b.queues)
    np.testing.assert_array_equal(a.counters, b.counters)
    assert a.final_state == b.final_state


def test_window_size_does_not_change_results():
    cfg = engine.SystemConfig(0.5, INF, 400.0, seed=2)
    a = engine.simulate(cfg, epochs=7, sample_width=8)
    b = engine.simulate(cfg, epochs=7, sample_width=8, target_window_events=64)
    np.testing.assert_array_equal(a.queues, b.queues)
    np.testing.assert_array_equal(a.scalars, b.scalars)
    assert a.final_state == b.final_state


def test_conservation_counts():
    cfg = engine.SystemConfig(0.5, 3, 700.0, seed=6, initial_state=(2, 0, 1))
    traj = engine.simulate(cfg)
    assert traj.final_state.total == 3 + traj.arrivals - traj.departures


def test_stationary_samples_layout():
    cfg = engine.SystemConfig(0.3, 2, 1000.0, seed=7)
    ss = engine.stationary_samples(cfg, 50, burn_in_fraction=0.6)
    assert ss.epochs.size == 50
    assert ss.epochs[0] > 600.0
    assert ss.epochs[-1] == pytest.approx(1000.0)
    assert ss.queues.shape == (50, 2)
    assert ss.horizon == 2
    with pytest.raises(ValueError):
        engine.stationary_samples(cfg, 0)
    with pytest.raises(ValueError):
        engine.stationary_samples(cfg, 10, burn_in_fraction=1.0)


def test_states_reconstruction_guard():
    # the lead customer walks right at rate 1, so width must cover ~T sites
    cfg = engine.SystemConfig(0.8, INF, 60.0, seed=1)
    narrow = engine.simulate(cfg, epochs=5, sample_width=1)
    assert np.any(narrow.frontiers > 1)
    with pytest.raises(ValueError):
        narrow.states()
    wide = engine.simulate(cfg, epochs=5, sample_width=128)
    states = wide.states()
    assert len(states) == 5
    assert states[-1].total == wide.totals[-1]


def test_coupled_config_mismatch_rejected():
    good = engine.SystemConfig(0.3, 1, 100.0, seed=0)
    bad_seed = engine.SystemConfig(0.3, 2, 100.0, seed=1)
    with pytest.raises(ValueError):
        engine.simulate_coupled([good, bad_seed])
    with pytest.raises(ValueError):
        engine.simulate_coupled([])


def test_system_config_validation():
    with pytest.raises(ValueError):
        engine.SystemConfig(-0.1, 1, 10.0, seed=0)
    with pytest.raises(ValueError):
        engine.SystemConfig(0.5, 0, 10.0, seed=0)
    with pytest.raises(ValueError):
        engine.SystemConfig(0.5, 2.5, 10.0, seed=0)
    with pytest.raises(ValueError):
        engine.SystemConfig(0.5, 1, math.inf, seed=0)


def test_run_systems_argument_validation():
    with pytest.raises(ValueError):
        engine.run_systems(seed=0, time_horizon=10.0,
                           systems=[engine.SystemSpec()])  # arrivals missing
    with pytest.raises(ValueError):
        engine.run_systems(seed=0, time_horizon=10.0,
                           systems=[engine.SystemSpec(use_mask=True)],
                           arrivals=clocks.PoissonArrivals(0.2))  # mask missing


def test_deterministic_arrival_spec_through_engine():
    spec = clocks.DeterministicArrivals((1.0, 2.0, 3.5))
    traj = engine.simulate(engine.SystemConfig(0.0, 1, 10.0, seed=0),
                           arrivals=spec)
    assert traj.arrivals == 3
