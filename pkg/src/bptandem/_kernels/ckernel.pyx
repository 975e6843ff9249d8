# cython: language_level=3
"""Compiled event kernel: a statement-for-statement mirror of pykernel.py.

Parity tests hold the two kernels to bit-identical outputs on shared driver
input. Keep any semantic change synchronized with the Python reference.
"""

from libc.math cimport INFINITY

import numpy as np

from .state import (
    DONE, NEED_BOND_CAPACITY, NEED_LOG_CAPACITY, NEED_SITE,
    NEED_STATE_CAPACITY,
)

KERNEL_NAME = "compiled"

# action codes (keep equal to state.py)
cdef enum:
    C_ACT_SUPPRESSED = 0
    C_ACT_MOVE = 1
    C_ACT_MASKED = 2
    C_ACT_GATED = 3
    C_ACT_NA = 4
    C_ACT_DEPART = 5

# violation indices
cdef enum:
    C_V_PAIR_LE = 0
    C_V_PAIR_TAIL = 1
    C_V_TAIL_DOM = 2
    C_V_ENV_DOM = 3
    C_V_GATE_IFF = 4
    C_V_ENV_RANGE = 5
    C_V_TIME_ORDER = 6
    C_V_CONSERVATION = 7
    C_V_PAIR_FIRST = 8

# pair relations
cdef enum:
    C_REL_COMPONENTWISE = 0
    C_REL_TAIL_SUM = 1
    C_REL_FIRST_GE = 2

# scalar sample columns
cdef enum:
    C_SC_Q1 = 0
    C_SC_BUSY = 1
    C_SC_BUSY_SAT = 2
    C_SC_PACKED = 3
    C_SC_PACKED_SAT = 4
    C_SC_TOTAL = 5
    C_SC_FRONTIER = 6
    C_SC_TAGGED = 7

# status codes as C constants (values fixed in state.py)
cdef enum:
    C_DONE = 0
    C_NEED_SITE = 1
    C_NEED_STATE_CAPACITY = 2
    C_NEED_BOND_CAPACITY = 3
    C_NEED_LOG_CAPACITY = 4


cdef struct Ctx:
    long K
    long site_cap
    long env_on
    long L
    long bond_site
    long bond_system
    long bond_count
    long bond_cap
    long epoch_idx
    long n_epochs
    long sample_width
    long env_sample
    long log_on
    long log_cap
    long log_idx
    long n_pairs
    long check_env_dom
    long check_gate
    long check_conservation
    long checks_on
    double t_last
    long events_processed


cdef void _take_sample(Ctx* c, long k,
                       long[:, ::1] q, long[:, ::1] f,
                       long[::1] horizon, long[::1] frontier, long[::1] total,
                       long[::1] tagged,
                       long[:, :, ::1] samples_q, long[:, :, ::1] samples_f,
                       long[:, :, ::1] samples_scalar) noexcept nogil:
    cdef long e = c.epoch_idx
    cdef long W = c.sample_width
    cdef long n, Nk, fr, busy, busy_sat, packed, packed_sat, prefix
    if W:
        for n in range(W):
            samples_q[k, e, n] = q[k, 1 + n]
        for n in range(W + 1):
            samples_f[k, e, n] = f[k, 1 + n]
    samples_scalar[k, e, C_SC_Q1] = q[k, 1]
    Nk = horizon[k]
    fr = frontier[k]
    while fr > 0 and q[k, fr] == 0:
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
        if q[k, n] == 0:
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
            packed = total[k] + 1
            break
        prefix += q[k, n]
        if prefix < n:
            packed = n
            break
        n += 1
    samples_scalar[k, e, C_SC_BUSY] = busy
    samples_scalar[k, e, C_SC_BUSY_SAT] = busy_sat
    samples_scalar[k, e, C_SC_PACKED] = packed
    samples_scalar[k, e, C_SC_PACKED_SAT] = packed_sat
    samples_scalar[k, e, C_SC_TOTAL] = total[k]
    samples_scalar[k, e, C_SC_FRONTIER] = fr
    samples_scalar[k, e, C_SC_TAGGED] = tagged[k]


cdef void _flush_epoch(Ctx* c,
                       long[:, ::1] q, long[:, ::1] f,
                       long[::1] horizon, long[::1] frontier, long[::1] total,
                       long[::1] tagged, signed char[::1] y,
                       long[:, :, ::1] samples_q, long[:, :, ::1] samples_f,
                       long[:, :, ::1] samples_scalar,
                       signed char[:, ::1] samples_env) noexcept nogil:
    cdef long k, n
    for k in range(c.K):
        _take_sample(c, k, q, f, horizon, frontier, total, tagged,
                     samples_q, samples_f, samples_scalar)
    if c.env_sample:
        for n in range(c.L):
            samples_env[c.epoch_idx, n] = y[1 + n]
    c.epoch_idx += 1


cdef void _run_checks(Ctx* c,
                      long[:, ::1] q,
                      long[::1] pair_a, long[::1] pair_b, long[::1] pair_rel,
                      unsigned char[::1] check_tail, unsigned char[::1] gated,
                      long[::1] frontier, long[::1] total,
                      long[::1] init_total, long[::1] arrivals_count,
                      long[::1] departures_count, signed char[::1] y,
                      long[::1] violations) noexcept nogil:
    cdef long p, a, b, rel, width, n, ta, tb, k, upper, smax, fr, top, expect
    for p in range(c.n_pairs):
        a = pair_a[p]
        b = pair_b[p]
        rel = pair_rel[p]
        if rel == C_REL_FIRST_GE:
            if q[a, 1] < q[b, 1]:
                violations[C_V_PAIR_FIRST] += 1
            continue
        width = frontier[a]
        if frontier[b] > width:
            width = frontier[b]
        width += 1
        if rel == C_REL_COMPONENTWISE:
            for n in range(1, width + 1):
                if q[a, n] > q[b, n]:
                    violations[C_V_PAIR_LE] += 1
                    break
        else:
            ta = 0
            tb = 0
            for n in range(width, 0, -1):
                ta += q[a, n]
                tb += q[b, n]
                if ta > tb:
                    violations[C_V_PAIR_TAIL] += 1
                    break
    for k in range(c.K):
        if check_tail[k]:
            upper = frontier[k]
            smax = 0
            for n in range(upper, 0, -1):
                if q[k, n] + 1 < smax:
                    violations[C_V_TAIL_DOM] += 1
                    break
                if q[k, n] > smax:
                    smax = q[k, n]
    if c.check_env_dom:
        for k in range(c.K):
            if not gated[k]:
                continue
            fr = frontier[k]
            if fr >= c.L:
                violations[C_V_ENV_RANGE] += 1
            top = fr if fr < c.L else c.L
            for n in range(2, top + 1):
                if q[k, n] > y[n]:
                    violations[C_V_ENV_DOM] += 1
                    break
    if c.check_conservation:
        for k in range(c.K):
            expect = init_total[k] + arrivals_count[k] - departures_count[k]
            if total[k] != expect:
                violations[C_V_CONSERVATION] += 1


def process_window(object rs, times_in, streams_in, valid_in, double window_end):
    """Process merged events up to ``window_end``; see the protocol in state.py."""
    cdef Ctx c
    c.K = rs.n_systems
    c.site_cap = rs.site_cap
    c.env_on = rs.env_on
    c.L = rs.L
    c.bond_site = rs.bond_site
    c.bond_system = rs.bond_system
    c.bond_count = rs.bond_count
    c.epoch_idx = rs.epoch_idx
    c.sample_width = rs.sample_width
    c.env_sample = rs.env_sample
    c.log_on = rs.log_on
    c.log_cap = rs.log_cap
    c.log_idx = rs.log_idx
    c.n_pairs = rs.n_pairs
    c.check_env_dom = rs.check_env_dom
    c.check_gate = rs.check_gate
    c.check_conservation = rs.check_conservation
    c.t_last = rs.t_last
    c.events_processed = rs.events_processed

    cdef double[::1] times = times_in
    cdef long[::1] streams = streams_in
    cdef unsigned char[::1] valid = valid_in

    cdef long[:, ::1] q = rs.q
    cdef long[:, ::1] f = rs.f
    cdef long[::1] horizon = rs.horizon
    cdef unsigned char[::1] has_arrivals = rs.has_arrivals
    cdef unsigned char[::1] use_mask = rs.use_mask
    cdef unsigned char[::1] gated = rs.gated
    cdef unsigned char[::1] refill_site1 = rs.refill_site1
    cdef long[::1] tagged = rs.tagged
    cdef long[::1] frontier = rs.frontier
    cdef long[::1] total = rs.total
    cdef long[::1] init_total = rs.init_total
    cdef long[::1] arrivals_count = rs.arrivals_count
    cdef long[::1] departures_count = rs.departures_count
    cdef unsigned char[::1] active = rs.active
    cdef signed char[::1] y = rs.y
    cdef double[::1] bond_times = rs.bond_times
    cdef double[::1] epochs = rs.epochs
    cdef long[:, :, ::1] samples_q = rs.samples_q
    cdef long[:, :, ::1] samples_f = rs.samples_f
    cdef long[:, :, ::1] samples_scalar = rs.samples_scalar
    cdef signed char[:, ::1] samples_env = rs.samples_env
    cdef double[::1] log_time = rs.log_time
    cdef long[::1] log_stream = rs.log_stream
    cdef unsigned char[::1] log_valid = rs.log_valid
    cdef unsigned char[::1] log_env_jump = rs.log_env_jump
    cdef signed char[:, ::1] log_action = rs.log_action
    cdef long[::1] pair_a = rs.pair_a
    cdef long[::1] pair_b = rs.pair_b
    cdef long[::1] pair_rel = rs.pair_rel
    cdef unsigned char[::1] check_tail = rs.check_tail
    cdef long[::1] violations = rs.violations

    c.bond_cap = bond_times.shape[0]
    cdef long n_epochs = epochs.shape[0]
    cdef long E = times.shape[0]

    cdef long any_tail = 0
    cdef long k
    for k in range(c.K):
        if check_tail[k]:
            any_tail = 1
            break
    c.checks_on = (c.n_pairs > 0 or c.check_env_dom or c.check_conservation
                   or any_tail)

    cdef long i = rs.cursor
    cdef long status = -1
    cdef long s, v, env_jump, env_tgt, need_site, act, Nk, qs, nxt
    cdef long edge, refill, pre_q1, expected
    cdef double t, t_next

    with nogil:
        while True:
            t_next = times[i] if i < E else INFINITY
            while c.epoch_idx < n_epochs and epochs[c.epoch_idx] <= window_end \
                    and epochs[c.epoch_idx] < t_next:
                _flush_epoch(&c, q, f, horizon, frontier, total, tagged, y,
                             samples_q, samples_f, samples_scalar, samples_env)
            if i >= E:
                break
            t = times[i]
            s = streams[i]
            v = valid[i]
            if t < c.t_last:
                violations[C_V_TIME_ORDER] += 1
            if c.log_on and c.log_idx >= c.log_cap:
                status = C_NEED_LOG_CAPACITY
                break

            env_jump = 0
            env_tgt = 0
            if c.env_on and 1 <= s <= c.L:
                env_tgt = s + 1 if s < c.L else 1
                if y[s] == 1 and y[env_tgt] == 0:
                    if s == c.bond_site and c.bond_count >= c.bond_cap:
                        status = C_NEED_BOND_CAPACITY
                        break
                    env_jump = 1
            if c.bond_system >= 0 and s == 1 and c.bond_count >= c.bond_cap:
                status = C_NEED_BOND_CAPACITY
                break

            if s >= 1 and s + 1 > c.site_cap:
                for k in range(c.K):
                    Nk = horizon[k]
                    if (Nk < 0 or s < Nk) and q[k, s] > 0:
                        status = C_NEED_STATE_CAPACITY
                        break
                if status == C_NEED_STATE_CAPACITY:
                    break

            # all capacity checks passed: mutate
            if env_jump:
                y[s] = 0
                y[env_tgt] = 1
                if s == c.bond_site:
                    bond_times[c.bond_count] = t
                    c.bond_count += 1

            need_site = 0
            if s == 0:
                for k in range(c.K):
                    if has_arrivals[k]:
                        q[k, 1] += 1
                        f[k, 1] += 1
                        arrivals_count[k] += 1
                        total[k] += 1
                        if frontier[k] < 1:
                            frontier[k] = 1
                        if not active[1]:
                            need_site = 1
                        act = C_ACT_MOVE
                    else:
                        act = C_ACT_NA
                    if c.log_on:
                        log_action[k, c.log_idx] = <signed char>act
            else:
                for k in range(c.K):
                    Nk = horizon[k]
                    if Nk >= 0 and s > Nk:
                        act = C_ACT_NA
                    elif use_mask[k] and not v:
                        act = C_ACT_MASKED
                    elif gated[k] and s == 1 and not env_jump:
                        act = C_ACT_GATED
                    else:
                        qs = q[k, s]
                        edge = 1 if (Nk >= 0 and s == Nk) else 0
                        nxt = 0 if edge else q[k, s + 1]
                        if qs > nxt:
                            refill = 1 if (refill_site1[k] and s == 1) else 0
                            if refill:
                                arrivals_count[k] += 1
                                total[k] += 1
                            else:
                                q[k, s] -= 1
                            if edge:
                                departures_count[k] += 1
                                total[k] -= 1
                                f[k, s + 1] += 1
                                act = C_ACT_DEPART
                            else:
                                q[k, s + 1] += 1
                                f[k, s + 1] += 1
                                act = C_ACT_MOVE
                                if s + 1 > frontier[k]:
                                    frontier[k] = s + 1
                                if tagged[k] == s:
                                    tagged[k] = s + 1
                                if not active[s + 1]:
                                    need_site = s + 1
                            if c.bond_system == k and s == 1:
                                bond_times[c.bond_count] = t
                                c.bond_count += 1
                        else:
                            act = C_ACT_SUPPRESSED
                    if c.check_gate and gated[k] and s == 1 and (not use_mask[k] or v):
                        if act == C_ACT_MOVE and not refill_site1[k]:
                            pre_q1 = q[k, 1] + 1
                        else:
                            pre_q1 = q[k, 1]
                        expected = 1 if (env_jump and pre_q1 >= 1) else 0
                        if expected != (1 if act == C_ACT_MOVE else 0):
                            violations[C_V_GATE_IFF] += 1
                    if c.log_on:
                        log_action[k, c.log_idx] = <signed char>act

            if c.checks_on:
                _run_checks(&c, q, pair_a, pair_b, pair_rel, check_tail, gated,
                            frontier, total, init_total, arrivals_count,
                            departures_count, y, violations)
            if c.log_on:
                log_time[c.log_idx] = t
                log_stream[c.log_idx] = s
                log_valid[c.log_idx] = <unsigned char>v
                log_env_jump[c.log_idx] = <unsigned char>env_jump
                c.log_idx += 1
            c.t_last = t
            c.events_processed += 1
            if need_site:
                status = C_NEED_SITE
                break
            i += 1

    rs.bond_count = c.bond_count
    rs.epoch_idx = c.epoch_idx
    rs.log_idx = c.log_idx
    rs.t_last = c.t_last
    rs.events_processed = c.events_processed

    if status == C_NEED_SITE:
        rs.pending_site = need_site
        rs.cursor = i + 1
        return NEED_SITE
    if status == C_NEED_LOG_CAPACITY:
        rs.cursor = i
        return NEED_LOG_CAPACITY
    if status == C_NEED_BOND_CAPACITY:
        rs.cursor = i
        return NEED_BOND_CAPACITY
    if status == C_NEED_STATE_CAPACITY:
        rs.cursor = i
        return NEED_STATE_CAPACITY
    rs.cursor = E
    rs.t_now = window_end
    return DONE
