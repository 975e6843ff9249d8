"""Shared mutable run state and the window protocol both kernels implement.

A simulation run advances window by window. The driver materializes every
active clock stream up to the window end, merges them into three parallel
arrays (times, stream ids, validity flags) sorted by ``(time, stream id)``,
and hands them to the selected kernel's ``process_window``. The kernel
processes events in order, mutating the :class:`RunState`, and returns a
status code. Anything it cannot handle itself (a site activating for the
first time, a full output buffer) is handed back to the driver, which fixes
the problem and resumes from ``rs.cursor``. Nothing is mutated for the event
the cursor points at, so resuming is always safe.

Stream id 0 is the arrival process; id ``n >= 1`` is the service clock at
site ``n``. All state arrays are 1-origin in the site index (entry 0 unused).
"""

from __future__ import annotations

import numpy as np

# process_window status codes
DONE = 0
NEED_SITE = 1  # rs.pending_site just became occupied; its stream must join the merge
NEED_STATE_CAPACITY = 2  # a move would write beyond rs.site_cap
NEED_BOND_CAPACITY = 3  # bond record buffer full
NEED_LOG_CAPACITY = 4  # event log buffer full

# per-system event log action codes
ACT_SUPPRESSED = 0  # clock ring found nothing eligible
ACT_MOVE = 1  # customer moved one site right (or arrival entered site 1)
ACT_MASKED = 2  # point ruled invalid by the mask
ACT_GATED = 3  # blocked because the environment bond did not jump
ACT_NA = 4  # event does not apply to this system
ACT_DEPART = 5  # service at the finite edge: customer left the system

# violation counter indices
V_PAIR_LE = 0  # componentwise order between a checked pair broke
V_PAIR_TAIL = 1  # tail-sum order between a checked pair broke
V_TAIL_DOM = 2  # Q_n + 1 >= max_{k>n} Q_k failed for some system
V_ENV_DOM = 3  # gated system exceeded the environment occupancy at some site >= 2
V_GATE_IFF = 4  # bond jump + non-empty site 1 did not produce a move (or vice versa)
V_ENV_RANGE = 5  # gated system's support reached the ring wrap
V_TIME_ORDER = 6  # event times arrived out of order
V_CONSERVATION = 7  # total != initial + arrivals - departures
V_PAIR_FIRST = 8  # site-1 domination between a checked pair broke
N_VIOLATIONS = 9

# pair-check relations: what must HOLD for the pair (a, b)
REL_COMPONENTWISE = 0  # a <= b per site
REL_TAIL_SUM = 1  # every suffix sum of a <= same suffix sum of b
REL_FIRST_GE = 2  # a's site-1 queue >= b's site-1 queue

# scalar sample columns
SC_Q1 = 0
SC_BUSY = 1
SC_BUSY_SAT = 2
SC_PACKED = 3
SC_PACKED_SAT = 4
SC_TOTAL = 5
SC_FRONTIER = 6
SC_TAGGED = 7
N_SCALARS = 8


class RunState:
    """All mutable arrays and cursors of one simulation run.

    Built by :func:`make_run_state`; mutated in place by the kernels.
    """

    __slots__ = [
        "n_systems", "site_cap", "q", "f", "horizon", "has_arrivals",
        "use_mask", "gated", "refill_site1", "tagged", "frontier", "total",
        "init_total", "arrivals_count", "departures_count", "active",
        "env_on", "L", "bond_site", "y", "bond_times", "bond_count",
        "bond_system",
        "epochs", "epoch_idx", "sample_width", "samples_q", "samples_f",
        "samples_scalar", "env_sample", "samples_env",
        "log_on", "log_cap", "log_idx", "log_time", "log_stream",
        "log_valid", "log_env_jump", "log_action",
        "n_pairs", "pair_a", "pair_b", "pair_rel", "check_tail",
        "check_env_dom", "check_gate", "check_conservation", "violations",
        "cursor", "pending_site", "t_last", "t_now", "events_processed",
    ]


def make_run_state(
    initial_states,
    horizons,
    has_arrivals,
    use_mask=None,
    gated=None,
    refill_site1=None,
    tagged=None,
    epochs=None,
    sample_width=0,
    site_cap=None,
    env_occupancy=None,
    bond_site=1,
    bond_capacity=0,
    bond_system=-1,
    env_sample=False,
    log_capacity=0,
    check_pairs=(),
    check_tail=None,
    check_env_dom=False,
    check_gate=False,
    check_conservation=True,
) -> RunState:
    """Allocate a :class:`RunState` for ``K = len(initial_states)`` systems.

    ``initial_states[k]`` is a 1-based-site sequence of queue lengths (index 0
    of the sequence is site 1). ``horizons[k]`` is the site count or ``-1``
    for unbounded. ``env_occupancy`` (0/1 per ring site, 1-based via index 0
    = site 1) switches on the ring environment.
    """
    K = len(initial_states)
    if K == 0 and env_occupancy is None:
        raise ValueError("need at least one system or an environment")

    def _flags(x, default=False):
        if x is None:
            return np.full(K, default, dtype=np.uint8)
        arr = np.asarray(x, dtype=np.uint8)
        if arr.shape != (K,):
            raise ValueError("per-system flag vector has wrong length")
        return arr.copy()

    rs = RunState()
    rs.n_systems = K
    horizons = np.asarray(horizons, dtype=np.int64).copy()
    if horizons.shape != (K,):
        raise ValueError("horizons has wrong length")

    max_init = 0
    for st in initial_states:
        n = len(st)
        while n > 0 and st[n - 1] == 0:
            n -= 1
        max_init = max(max_init, n)
    finite = horizons[horizons >= 0]
    cap_floor = max(max_init + 1, int(sample_width), 2)
    if finite.size:
        cap_floor = max(cap_floor, int(finite.max()))
    if env_occupancy is not None:
        cap_floor = max(cap_floor, np.asarray(env_occupancy).size)
    if site_cap is None:
        site_cap = max(cap_floor, 64)
    site_cap = max(int(site_cap), cap_floor)
    rs.site_cap = site_cap

    rs.q = np.zeros((K, site_cap + 2), dtype=np.int64)
    rs.f = np.zeros((K, site_cap + 2), dtype=np.int64)
    for k, st in enumerate(initial_states):
        for i, v in enumerate(st):
            if v < 0:
                raise ValueError("queue lengths must be non-negative")
            if horizons[k] >= 0 and i + 1 > horizons[k] and v > 0:
                raise ValueError("initial state extends beyond finite horizon")
            rs.q[k, i + 1] = v
    rs.horizon = horizons
    rs.has_arrivals = _flags(has_arrivals)
    rs.use_mask = _flags(use_mask)
    rs.gated = _flags(gated)
    rs.refill_site1 = _flags(refill_site1)
    if tagged is None:
        rs.tagged = np.full(K, -1, dtype=np.int64)
    else:
        rs.tagged = np.asarray(tagged, dtype=np.int64).copy()
    rs.frontier = np.zeros(K, dtype=np.int64)
    for k in range(K):
        nz = np.nonzero(rs.q[k])[0]
        rs.frontier[k] = int(nz.max()) if nz.size else 0
    rs.total = rs.q.sum(axis=1)
    rs.init_total = rs.total.copy()
    rs.arrivals_count = np.zeros(K, dtype=np.int64)
    rs.departures_count = np.zeros(K, dtype=np.int64)

    rs.active = np.zeros(site_cap + 2, dtype=np.uint8)

    if env_occupancy is not None:
        occ = np.asarray(env_occupancy, dtype=np.int8)
        L = occ.size
        if L < 2:
            raise ValueError("ring environment needs at least 2 sites")
        if not np.all((occ == 0) | (occ == 1)):
            raise ValueError("environment occupancy must be 0/1")
        rs.env_on = 1
        rs.L = L
        rs.bond_site = int(bond_site)
        if not (1 <= rs.bond_site <= L):
            raise ValueError("bond site outside the ring")
        rs.y = np.zeros(L + 2, dtype=np.int8)
        rs.y[1:L + 1] = occ
        cap = max(int(bond_capacity), 16)
        rs.bond_times = np.empty(cap, dtype=np.float64)
    else:
        if check_env_dom or check_gate or np.any(rs.gated):
            raise ValueError("gating and environment checks need an environment")
        rs.env_on = 0
        rs.L = 0
        rs.bond_site = 0
        rs.y = np.zeros(1, dtype=np.int8)
        rs.bond_times = np.empty(0, dtype=np.float64)
    rs.bond_system = int(bond_system)
    if rs.bond_system >= 0:
        if rs.env_on:
            raise ValueError("the bond record buffer serves either the "
                             "environment or one system, not both")
        if rs.bond_system >= K:
            raise ValueError("bond_system indexes a missing system")
        rs.bond_times = np.empty(max(int(bond_capacity), 16), dtype=np.float64)
    rs.bond_count = 0

    rs.epochs = (np.asarray(epochs, dtype=np.float64).copy()
                 if epochs is not None else np.empty(0))
    if rs.epochs.size and np.any(np.diff(rs.epochs) < 0):
        raise ValueError("sample epochs must be non-decreasing")
    rs.epoch_idx = 0
    W = int(sample_width)
    if W < 0 or W > site_cap:
        raise ValueError("sample width outside [0, site_cap]")
    rs.sample_width = W
    E = rs.epochs.size
    rs.samples_q = np.zeros((K, E, W), dtype=np.int64)
    rs.samples_f = np.zeros((K, E, W + 1 if E else 0), dtype=np.int64)
    rs.samples_scalar = np.zeros((K, E, N_SCALARS), dtype=np.int64)
    rs.env_sample = 1 if (env_sample and rs.env_on) else 0
    rs.samples_env = np.zeros((E, rs.L if rs.env_sample else 0), dtype=np.int8)

    rs.log_on = 1 if log_capacity else 0
    rs.log_cap = int(log_capacity)
    rs.log_idx = 0
    rs.log_time = np.empty(rs.log_cap, dtype=np.float64)
    rs.log_stream = np.empty(rs.log_cap, dtype=np.int64)
    rs.log_valid = np.empty(rs.log_cap, dtype=np.uint8)
    rs.log_env_jump = np.empty(rs.log_cap, dtype=np.uint8)
    rs.log_action = np.empty((K, rs.log_cap), dtype=np.int8)

    pairs = list(check_pairs)
    rs.n_pairs = len(pairs)
    rs.pair_a = np.array([p[0] for p in pairs], dtype=np.int64)
    rs.pair_b = np.array([p[1] for p in pairs], dtype=np.int64)
    rs.pair_rel = np.array([p[2] for p in pairs], dtype=np.int64)
    for p in pairs:
        if not (0 <= p[0] < K and 0 <= p[1] < K):
            raise ValueError("pair check indexes a missing system")
        if p[2] not in (REL_COMPONENTWISE, REL_TAIL_SUM, REL_FIRST_GE):
            raise ValueError("unknown pair relation")
    rs.check_tail = _flags(check_tail) if K else np.empty(0, dtype=np.uint8)
    rs.check_env_dom = 1 if check_env_dom else 0
    rs.check_gate = 1 if check_gate else 0
    rs.check_conservation = 1 if check_conservation else 0
    rs.violations = np.zeros(N_VIOLATIONS, dtype=np.int64)

    rs.cursor = 0
    rs.pending_site = 0
    rs.t_last = 0.0
    rs.t_now = 0.0
    rs.events_processed = 0
    return rs


def initial_active_sites(rs: RunState) -> list:
    """Sites whose streams must be live from time zero."""
    need = set()
    for k in range(rs.n_systems):
        if rs.has_arrivals[k] or rs.refill_site1[k]:
            need.add(1)
        nz = np.nonzero(rs.q[k])[0]
        need.update(int(s) for s in nz)
    if rs.env_on:
        need.update(range(1, rs.L + 1))
    for s in sorted(need):
        if s > rs.site_cap:
            raise ValueError("initial occupancy beyond site capacity")
        rs.active[s] = 1
    return sorted(need)


def grow_site_capacity(rs: RunState) -> None:
    """Double the site capacity, preserving all state."""
    old = rs.site_cap
    new = old * 2
    for name in ("q", "f"):
        arr = getattr(rs, name)
        wide = np.zeros((rs.n_systems, new + 2), dtype=arr.dtype)
        wide[:, :old + 2] = arr
        setattr(rs, name, wide)
    active = np.zeros(new + 2, dtype=np.uint8)
    active[:old + 2] = rs.active
    rs.active = active
    rs.site_cap = new


def grow_bond_capacity(rs: RunState) -> None:
    cap = max(16, rs.bond_times.size * 2)
    wide = np.empty(cap, dtype=np.float64)
    wide[:rs.bond_count] = rs.bond_times[:rs.bond_count]
    rs.bond_times = wide


def grow_log_capacity(rs: RunState) -> None:
    cap = max(16, rs.log_cap * 2)
    n = rs.log_idx
    for name, dtype in (("log_time", np.float64), ("log_stream", np.int64),
                        ("log_valid", np.uint8), ("log_env_jump", np.uint8)):
        wide = np.empty(cap, dtype=dtype)
        wide[:n] = getattr(rs, name)[:n]
        setattr(rs, name, wide)
    wide = np.empty((rs.n_systems, cap), dtype=np.int8)
    wide[:, :n] = rs.log_action[:, :n]
    rs.log_action = wide
    rs.log_cap = cap
