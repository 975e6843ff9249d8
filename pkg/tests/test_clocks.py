"""Reproducible clock streams: determinism, resumability, masks, arrivals."""

import numpy as np
import pytest

from bptandem import clocks


def _field(seed=3, rate=0.4, mask=None):
    return clocks.ClockField(seed, clocks.PoissonArrivals(rate), mask=mask)


def test_same_seed_same_streams():
    a = _field(seed=11)
    b = _field(seed=11)
    np.testing.assert_array_equal(a.arrival_take(50.0), b.arrival_take(50.0))
    ta, va = a.site_take(3, 50.0)
    tb, vb = b.site_take(3, 50.0)
    np.testing.assert_array_equal(ta, tb)
    np.testing.assert_array_equal(va, vb)


def test_different_seeds_differ():
    a = _field(seed=1).arrival_take(200.0)
    b = _field(seed=2).arrival_take(200.0)
    assert a.size and b.size
    assert not (a.size == b.size and np.allclose(a, b))


def test_sites_have_independent_streams():
    f = _field()
    t1, _ = f.site_take(1, 100.0)
    t2, _ = f.site_take(2, 100.0)
    assert t1.size and t2.size
    assert not np.array_equal(t1[:min(t1.size, t2.size)],
                              t2[:min(t1.size, t2.size)])


def test_incremental_takes_match_single_take():
    """Pulling a stream in many small windows must equal one big pull.

    This is what lets the driver resume a run window by window without
    perturbing the sampled path, across the growing chunk schedule.
    """
    whole = _field(seed=7)
    tw, vw = whole.site_take(2, 300.0)
    pieces_t, pieces_v = [], []
    inc = _field(seed=7)
    for t1 in np.arange(2.5, 300.1, 2.5):
        t, v = inc.site_take(2, float(t1))
        pieces_t.append(t)
        pieces_v.append(v)
    np.testing.assert_array_equal(np.concatenate(pieces_t), tw)
    np.testing.assert_array_equal(np.concatenate(pieces_v), vw)

    aw = _field(seed=7).arrival_take(300.0)
    inc = _field(seed=7)
    parts = [inc.arrival_take(float(t1)) for t1 in np.arange(2.5, 300.1, 2.5)]
    np.testing.assert_array_equal(np.concatenate(parts), aw)


def test_arrival_rate_empirical():
    f = _field(seed=5, rate=0.7)
    times = f.arrival_take(20000.0)
    rate = times.size / 20000.0
    assert abs(rate - 0.7) < 0.03
    assert np.all(np.diff(times) > 0)


def test_site_rate_is_one():
    f = _field(seed=9)
    times, valid = f.site_take(4, 20000.0)
    assert abs(times.size / 20000.0 - 1.0) < 0.03
    assert np.all(valid == 1)  # no mask: everything valid


def test_poisson_arrivals_validation():
    assert clocks.PoissonArrivals(0.0).rate == 0.0  # no arrivals is legal
    with pytest.raises(ValueError):
        clocks.PoissonArrivals(-1.0)
    f = clocks.ClockField(0, clocks.PoissonArrivals(0.0))
    assert f.arrival_take(1000.0).size == 0


def test_deterministic_arrivals():
    spec = clocks.DeterministicArrivals((0.5, 1.25, 4.0))
    f = clocks.ClockField(0, spec)
    np.testing.assert_allclose(f.arrival_take(2.0), [0.5, 1.25])
    np.testing.assert_allclose(f.arrival_take(10.0), [4.0])
    with pytest.raises(ValueError):
        clocks.DeterministicArrivals((1.0, 0.5))


def test_stream_arrivals_callable():
    spec = clocks.StreamArrivals(lambda t0, t1: [t for t in (1.0, 3.0, 5.0)
                                                 if t0 < t <= t1], rate=0.6)
    f = clocks.ClockField(0, spec)
    np.testing.assert_allclose(f.arrival_take(4.0), [1.0, 3.0])
    assert spec.rate == 0.6


def test_bernoulli_mask_determinism_and_rate():
    f1 = _field(seed=2, mask=clocks.BernoulliMask(0.3, mask_seed=8))
    f2 = _field(seed=2, mask=clocks.BernoulliMask(0.3, mask_seed=8))
    t1, v1 = f1.site_take(1, 5000.0)
    t2, v2 = f2.site_take(1, 5000.0)
    np.testing.assert_array_equal(v1, v2)
    assert abs(v1.mean() - 0.7) < 0.03
    # a different mask seed reshuffles validity but not the times
    f3 = _field(seed=2, mask=clocks.BernoulliMask(0.3, mask_seed=9))
    t3, v3 = f3.site_take(1, 5000.0)
    np.testing.assert_array_equal(t1, t3)
    assert not np.array_equal(v1, v3)


def test_mask_extremes():
    t, v = _field(mask=clocks.AllValid()).site_take(1, 500.0)
    assert np.all(v == 1)
    t, v = _field(mask=clocks.NoneValid()).site_take(1, 500.0)
    assert np.all(v == 0)
    assert t.size  # clock points still exist, they are just invalid


def test_callable_mask_by_site():
    mask = clocks.CallableMask(lambda site, times: [site % 2 == 0] * len(times))
    f = _field(mask=mask)
    _, v_odd = f.site_take(1, 100.0)
    _, v_even = f.site_take(2, 100.0)
    assert not np.any(v_odd)
    assert np.all(v_even)
