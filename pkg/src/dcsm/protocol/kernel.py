"""Compiled frame loops.

These mirror the state machines in :mod:`dcsm.protocol.state` statement for statement; the
test-suite checks that both produce identical results.  A 6 h pass is
~3.6 million frames, which is why the hot loop lives here.
"""
from __future__ import annotations

import numba
import numpy as np

from ._jit import adaptive_y, copies_for, decode_probability


@numba.njit(cache=True)
def fountain_kernel(sched, fer_table, actual_range, tps, end_tick, rtt_ticks, frame_ticks,
                    loss_draws, decode_draws, source_symbols, overhead, y_fixed, adaptive_p, z,
                    max_iter, max_files):
    basis = source_symbols + overhead
    n_sec = sched.shape[0]

    frames_by_code = np.zeros(5, np.int64)
    clean_by_code = np.zeros(5, np.int64)
    f_y = np.full(max_files, -1, np.int64)
    f_sent = np.zeros(max_files, np.int64)
    f_fresh = np.zeros(max_files, np.int64)
    f_clean = np.zeros(max_files, np.int64)
    f_lost = np.zeros(max_files, np.int64)
    f_req = np.zeros(max_files, np.int64)
    f_first = np.full(max_files, -1, np.int64)
    f_last = np.full(max_files, -1, np.int64)
    f_deliv = np.full(max_files, -1, np.int64)
    f_counts = np.zeros((max_files, 5), np.float64)

    cap = 1024
    q_eff = np.zeros(cap, np.int64)
    q_file = np.zeros(cap, np.int64)
    q_cnt = np.zeros(cap, np.int64)
    q_head = 0
    q_len = 0

    n_files = 0
    now = 0
    k = 0  # frame index
    d = 0  # decode draw index
    n_dec = decode_draws.shape[0]
    k_s = 0
    fb_msgs = 0
    fb_syms = 0
    halted = 0

    while True:
        s = now // tps
        if s >= n_sec:
            break
        c = sched[s]
        if c == 0:
            halted += 1
            now = (s + 1) * tps
            continue
        dur = frame_ticks[c]
        if now + dur > end_tick:
            break

        # ---- sender
        fresh = True
        if q_len > 0 and q_eff[q_head] <= now:
            m = q_file[q_head]
            q_cnt[q_head] -= 1
            if q_cnt[q_head] == 0:
                q_head = (q_head + 1) % cap
                q_len -= 1
            fresh = False
        else:
            m = n_files - 1
            if m < 0 or (f_y[m] >= 0 and f_fresh[m] >= basis + f_y[m]):
                m = n_files
                n_files += 1
                f_y[m] = y_fixed
        f_sent[m] += 1
        if f_first[m] < 0:
            f_first[m] = now
        f_last[m] = now
        if fresh:
            if f_fresh[m] < basis:
                f_counts[m, c] += 1.0
            f_fresh[m] += 1
            if f_y[m] < 0 and f_fresh[m] == basis:
                f_y[m] = adaptive_y(f_counts[m], adaptive_p, source_symbols, overhead, z, max_iter)
        y_known = f_y[m]
        end = now + dur

        # ---- channel
        lost = loss_draws[k] < fer_table[s, c]
        frames_by_code[c] += 1
        if not lost:
            clean_by_code[c] += 1
        if c == actual_range[s]:
            k_s += 1

        # ---- receiver
        if f_deliv[m] < 0:
            extra = 0
            decoded = False
            if lost:
                f_lost[m] += 1
            else:
                f_clean[m] += 1
                if f_clean[m] >= basis:
                    u = decode_draws[d % n_dec]
                    d += 1
                    if u < decode_probability(f_clean[m], source_symbols):
                        f_deliv[m] = end
                        decoded = True
                    else:
                        extra = 1
                        f_req[m] += 1
            if not decoded:
                if y_known >= 0:
                    deficit = f_lost[m] - y_known - f_req[m]
                    if deficit > 0:
                        extra += deficit
                        f_req[m] += deficit
                if extra > 0:
                    if q_len == cap:
                        new_cap = cap * 2
                        n_eff = np.zeros(new_cap, np.int64)
                        n_file = np.zeros(new_cap, np.int64)
                        n_cnt = np.zeros(new_cap, np.int64)
                        for i in range(q_len):
                            j = (q_head + i) % cap
                            n_eff[i] = q_eff[j]
                            n_file[i] = q_file[j]
                            n_cnt[i] = q_cnt[j]
                        q_eff, q_file, q_cnt = n_eff, n_file, n_cnt
                        q_head = 0
                        cap = new_cap
                    j = (q_head + q_len) % cap
                    q_eff[j] = end + rtt_ticks
                    q_file[j] = m
                    q_cnt[j] = extra
                    q_len += 1
                    fb_msgs += 1
                    fb_syms += extra

        now = end
        k += 1

    return (frames_by_code, clean_by_code, n_files, f_y[:n_files].copy(), f_sent[:n_files].copy(),
            f_fresh[:n_files].copy(), f_clean[:n_files].copy(), f_lost[:n_files].copy(),
            f_req[:n_files].copy(), f_first[:n_files].copy(), f_last[:n_files].copy(),
            f_deliv[:n_files].copy(), k_s, fb_msgs, fb_syms, halted, now)


@numba.njit(cache=True)
def adu_kernel(sched, fer_table, actual_range, tps, end_tick, frame_ticks, loss_draws, adu_count,
               replicate, eps, max_copies, max_files):
    n_sec = sched.shape[0]
    frames_by_code = np.zeros(5, np.int64)
    clean_by_code = np.zeros(5, np.int64)
    f_sent = np.zeros(max_files, np.int64)
    f_clean = np.zeros(max_files, np.int64)
    f_adus = np.zeros(max_files, np.int64)
    f_ok = np.ones(max_files, np.bool_)
    f_first = np.full(max_files, -1, np.int64)
    f_deliv = np.full(max_files, -1, np.int64)
    f_complete = np.zeros(max_files, np.bool_)

    n_files = 0
    copies_left = 0
    adu_clean = False
    now = 0
    k = 0
    k_s = 0
    halted = 0
    while True:
        s = now // tps
        if s >= n_sec:
            break
        c = sched[s]
        if c == 0:
            halted += 1
            now = (s + 1) * tps
            continue
        dur = frame_ticks[c]
        if now + dur > end_tick:
            break
        fer = fer_table[s, c]
        if copies_left == 0:
            if n_files == 0 or f_complete[n_files - 1]:
                n_files += 1
            if replicate:
                copies_left = copies_for(fer, eps, max_copies)
            else:
                copies_left = 1
            adu_clean = False
        m = n_files - 1
        if f_first[m] < 0:
            f_first[m] = now
        f_sent[m] += 1
        copies_left -= 1
        end = now + dur

        lost = loss_draws[k] < fer
        frames_by_code[c] += 1
        if c == actual_range[s]:
            k_s += 1
        if not lost:
            clean_by_code[c] += 1
            f_clean[m] += 1
            adu_clean = True
        if copies_left == 0:
            if not adu_clean:
                f_ok[m] = False
            f_adus[m] += 1
            if f_adus[m] == adu_count:
                f_complete[m] = True
                if f_ok[m]:
                    f_deliv[m] = end
        now = end
        k += 1

    return (frames_by_code, clean_by_code, n_files, f_sent[:n_files].copy(), f_clean[:n_files].copy(),
            f_adus[:n_files].copy(), f_ok[:n_files].copy(), f_first[:n_files].copy(),
            f_deliv[:n_files].copy(), f_complete[:n_files].copy(), k_s, halted, now)
