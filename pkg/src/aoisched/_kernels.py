"""Queueing inner loops, compiled with numba when available.

Only the two sequential scans live here: the multi-server FCFS start-time
recursion (Lindley) and the non-preemptive priority service loop. Everything
random is drawn outside with numpy Generators and passed in as arrays, so the
compiled and interpreted paths execute the same scalar arithmetic in the same
order and return bit-identical results.

Set AOISCHED_NO_NUMBA=1 to force the interpreted path (useful on hosts
without numba or when debugging); backend_name() reports which one is live.
"""

from __future__ import annotations

import os

import numpy as np


def _fcfs_start_impl(arrivals, server_idx, service, n_servers):
    # Jobs must already be ordered by arrival time (ties by position).
    n = arrivals.shape[0]
    start = np.empty(n, dtype=np.float64)
    free = np.zeros(n_servers, dtype=np.float64)
    for k in range(n):
        s = server_idx[k]
        t = arrivals[k]
        if free[s] > t:
            t = free[s]
        start[k] = t
        free[s] = t + service[k]
    return start


def _priority_start_impl(arrivals, grouped, offsets, key, service):
    # Single non-preemptive server. grouped[offsets[c]:offsets[c+1]] lists
    # class c's job indices in arrival order, which enforces FIFO within a
    # class. Whenever the server frees, it picks the waiting head with the
    # largest key (ties: earlier arrival, then lower class index).
    n = arrivals.shape[0]
    n_classes = offsets.shape[0] - 1
    start = np.empty(n, dtype=np.float64)
    ptr = offsets[:-1].copy()
    now = 0.0
    served = 0
    while served < n:
        best = -1
        best_key = -np.inf
        best_arr = np.inf
        next_arr = np.inf
        for c in range(n_classes):
            if ptr[c] < offsets[c + 1]:
                i = grouped[ptr[c]]
                a = arrivals[i]
                if a <= now:
                    k = key[i]
                    if k > best_key or (k == best_key and a < best_arr):
                        best = c
                        best_key = k
                        best_arr = a
                elif a < next_arr:
                    next_arr = a
        if best < 0:
            now = next_arr
            continue
        i = grouped[ptr[best]]
        ptr[best] += 1
        start[i] = now
        now += service[i]
        served += 1
    return start


def _want_python() -> bool:
    return os.environ.get("AOISCHED_NO_NUMBA", "").strip().lower() in {
        "1",
        "true",
        "yes",
        "on",
    }


BACKEND = "python"
fcfs_start = _fcfs_start_impl
priority_start = _priority_start_impl

if not _want_python():
    try:
        from numba import njit
    except ImportError:
        pass
    else:
        fcfs_start = njit(cache=True)(_fcfs_start_impl)
        priority_start = njit(cache=True)(_priority_start_impl)
        BACKEND = "numba"


def backend_name() -> str:
    return BACKEND
