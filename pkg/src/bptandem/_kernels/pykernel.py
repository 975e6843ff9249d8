"""Pure-Python event kernel: the reference implementation of the window protocol.

The compiled kernel in ``ckernel.pyx`` mirrors this file statement for
statement; parity tests hold the two to bit-identical outputs. Keep any
semantic change synchronized.
"""

from __future__ import annotations

import math

from .state import (
    ACT_DEPART, ACT_GATED, ACT_MASKED, ACT_MOVE, ACT_NA, ACT_SUPPRESSED,
    DONE, NEED_BOND_CAPACITY, NEED_LOG_CAPACITY, NEED_SITE,
    NEED_STATE_CAPACITY, REL_COMPONENTWISE, REL_FIRST_GE, RunState,
    SC_BUSY, SC_BUSY_SAT, SC_FRONTIER, SC_PACKED, SC_PACKED_SAT, SC_Q1,
    SC_TAGGED, SC_TOTAL,
    V_CONSERVATION, V_ENV_DOM, V_ENV_RANGE, V_GATE_IFF, V_PAIR_FIRST,
    V_PAIR_LE, V_PAIR_TAIL, V_TAIL_DOM, V_TIME_ORDER,
)

KERNEL_NAME = "python"


def _take_sample(rs: RunState, k: int) -> None:
    e = rs.epoch_idx
    q = rs.q[k]
    W = rs.sample_width
    if W:
        rs.samples_q[k, e, :] = q[1:W + 1]
        rs.samples_f[k, e, :] = rs.f[k, 1:W + 2]
    sc = rs.samples_scalar[k, e]
    sc[SC_Q1] = q[1]
    Nk = int(rs.horizon[k])
    fr = int(rs.frontier[k])
    while fr > 0 and q[fr] == 0:
        fr -= 1
    busy = 0
    busy_sat = 0
    n = 1
    while True:
        if Nk >= 0 and n > Nk:
            busy = Nk + 1
            busy_sat = 1
            break
        if Nk < 0 and n > fr:
            busy = n
            break
        if q[n] == 0:
            busy = n
            break
        n += 1
    packed = 0
    packed_sat = 0
    prefix = 0
    n = 1
    while True:
        if Nk >= 0 and n > Nk:
            packed = Nk + 1
            packed_sat = 1
            break
        if Nk < 0 and n > fr:
            packed = int(rs.total[k]) + 1
            break
        prefix += q[n]
        if prefix < n:
            packed = n
            break
        n += 1
    sc[SC_BUSY] = busy
    sc[SC_BUSY_SAT] = busy_sat
    sc[SC_PACKED] = packed
    sc[SC_PACKED_SAT] = packed_sat
    sc[SC_TOTAL] = rs.total[k]
    sc[SC_FRONTIER] = fr
    sc[SC_TAGGED] = rs.tagged[k]


def _flush_epoch(rs: RunState) -> None:
    for k in range(rs.n_systems):
        _take_sample(rs, k)
    if rs.env_sample:
        rs.samples_env[rs.epoch_idx, :] = rs.y[1:rs.L + 1]
    rs.epoch_idx += 1


def _run_checks(rs: RunState) -> None:
    q = rs.q
    for p in range(rs.n_pairs):
        a = int(rs.pair_a[p])
        b = int(rs.pair_b[p])
        rel = rs.pair_rel[p]
        if rel == REL_FIRST_GE:
            if q[a, 1] < q[b, 1]:
                rs.violations[V_PAIR_FIRST] += 1
            continue
        width = int(max(rs.frontier[a], rs.frontier[b])) + 1
        if rel == REL_COMPONENTWISE:
            for n in range(1, width + 1):
                if q[a, n] > q[b, n]:
                    rs.violations[V_PAIR_LE] += 1
                    break
        else:
            ta = 0
            tb = 0
            for n in range(width, 0, -1):
                ta += q[a, n]
                tb += q[b, n]
                if ta > tb:
                    rs.violations[V_PAIR_TAIL] += 1
                    break
    for k in range(rs.n_systems):
        if rs.check_tail[k]:
            upper = int(rs.frontier[k])
            smax = 0
            for n in range(upper, 0, -1):
                if q[k, n] + 1 < smax:
                    rs.violations[V_TAIL_DOM] += 1
                    break
                if q[k, n] > smax:
                    smax = q[k, n]
    if rs.check_env_dom:
        y = rs.y
        for k in range(rs.n_systems):
            if not rs.gated[k]:
                continue
            fr = int(rs.frontier[k])
            if fr >= rs.L:
                rs.violations[V_ENV_RANGE] += 1
            top = min(fr, rs.L)
            for n in range(2, top + 1):
                if q[k, n] > y[n]:
                    rs.violations[V_ENV_DOM] += 1
                    break
    if rs.check_conservation:
        for k in range(rs.n_systems):
            expect = rs.init_total[k] + rs.arrivals_count[k] - rs.departures_count[k]
            if rs.total[k] != expect:
                rs.violations[V_CONSERVATION] += 1


def process_window(rs: RunState, times, streams, valid, window_end: float) -> int:
    """Process merged events up to ``window_end``; see the protocol in state.py."""
    K = rs.n_systems
    E = times.shape[0]
    epochs = rs.epochs
    n_epochs = epochs.shape[0]
    q = rs.q
    f = rs.f
    checks_on = (rs.n_pairs > 0 or rs.check_env_dom or rs.check_conservation
                 or bool(rs.check_tail.any()))
    i = rs.cursor
    while True:
        t_next = times[i] if i < E else math.inf
        while rs.epoch_idx < n_epochs and epochs[rs.epoch_idx] <= window_end \
                and epochs[rs.epoch_idx] < t_next:
            _flush_epoch(rs)
        if i >= E:
            break
        t = float(times[i])
        s = int(streams[i])
        v = int(valid[i])
        if t < rs.t_last:
            rs.violations[V_TIME_ORDER] += 1
        if rs.log_on and rs.log_idx >= rs.log_cap:
            rs.cursor = i
            return NEED_LOG_CAPACITY

        env_jump = 0
        env_tgt = 0
        if rs.env_on and 1 <= s <= rs.L:
            env_tgt = s + 1 if s < rs.L else 1
            if rs.y[s] == 1 and rs.y[env_tgt] == 0:
                if s == rs.bond_site and rs.bond_count >= rs.bond_times.shape[0]:
                    rs.cursor = i
                    return NEED_BOND_CAPACITY
                env_jump = 1
        if rs.bond_system >= 0 and s == 1 \
                and rs.bond_count >= rs.bond_times.shape[0]:
            rs.cursor = i
            return NEED_BOND_CAPACITY

        if s >= 1 and s + 1 > rs.site_cap:
            for k in range(K):
                Nk = rs.horizon[k]
                if (Nk < 0 or s < Nk) and q[k, s] > 0:
                    rs.cursor = i
                    return NEED_STATE_CAPACITY

        # all capacity checks passed: mutate
        if env_jump:
            rs.y[s] = 0
            rs.y[env_tgt] = 1
            if s == rs.bond_site:
                rs.bond_times[rs.bond_count] = t
                rs.bond_count += 1

        need_site = 0
        if s == 0:
            for k in range(K):
                if rs.has_arrivals[k]:
                    q[k, 1] += 1
                    f[k, 1] += 1
                    rs.arrivals_count[k] += 1
                    rs.total[k] += 1
                    if rs.frontier[k] < 1:
                        rs.frontier[k] = 1
                    if not rs.active[1]:
                        need_site = 1
                    act = ACT_MOVE
                else:
                    act = ACT_NA
                if rs.log_on:
                    rs.log_action[k, rs.log_idx] = act
        else:
            for k in range(K):
                Nk = int(rs.horizon[k])
                if Nk >= 0 and s > Nk:
                    act = ACT_NA
                elif rs.use_mask[k] and not v:
                    act = ACT_MASKED
                elif rs.gated[k] and s == 1 and not env_jump:
                    act = ACT_GATED
                else:
                    qs = q[k, s]
                    edge = Nk >= 0 and s == Nk
                    nxt = 0 if edge else q[k, s + 1]
                    if qs > nxt:
                        refill = rs.refill_site1[k] and s == 1
                        if refill:
                            rs.arrivals_count[k] += 1
                            rs.total[k] += 1
                        else:
                            q[k, s] -= 1
                        if edge:
                            rs.departures_count[k] += 1
                            rs.total[k] -= 1
                            f[k, s + 1] += 1
                            act = ACT_DEPART
                        else:
                            q[k, s + 1] += 1
                            f[k, s + 1] += 1
                            act = ACT_MOVE
                            if s + 1 > rs.frontier[k]:
                                rs.frontier[k] = s + 1
                            if rs.tagged[k] == s:
                                rs.tagged[k] = s + 1
                            if not rs.active[s + 1]:
                                need_site = s + 1
                        if rs.bond_system == k and s == 1:
                            rs.bond_times[rs.bond_count] = t
                            rs.bond_count += 1
                    else:
                        act = ACT_SUPPRESSED
                if rs.check_gate and rs.gated[k] and s == 1 and (not rs.use_mask[k] or v):
                    pre_q1 = q[k, 1] if not (act == ACT_MOVE and not rs.refill_site1[k]) \
                        else q[k, 1] + 1
                    expected = bool(env_jump) and pre_q1 >= 1
                    if expected != (act == ACT_MOVE):
                        rs.violations[V_GATE_IFF] += 1
                if rs.log_on:
                    rs.log_action[k, rs.log_idx] = act

        if checks_on:
            _run_checks(rs)
        if rs.log_on:
            rs.log_time[rs.log_idx] = t
            rs.log_stream[rs.log_idx] = s
            rs.log_valid[rs.log_idx] = v
            rs.log_env_jump[rs.log_idx] = env_jump
            rs.log_idx += 1
        rs.t_last = t
        rs.events_processed += 1
        if need_site:
            rs.pending_site = need_site
            rs.cursor = i + 1
            return NEED_SITE
        i += 1

    rs.cursor = E
    rs.t_now = window_end
    return DONE
