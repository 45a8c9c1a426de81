"""Small numba helpers shared by the compiled kernel and the reference engine."""
from __future__ import annotations

import math

import numba


@numba.njit(cache=True)
def decode_probability(clean: int, source_symbols: int) -> float:
    excess = clean - source_symbols
    if excess < 0:
        return 0.0
    return 1.0 - 10.0 ** (-2 * (excess + 1))


@numba.njit(cache=True)
def copies_for(fer: float, eps: float, max_copies: int) -> int:
    if fer <= eps:
        return 1
    if fer >= 1.0:
        return max_copies
    m = math.ceil(math.log(eps) / math.log(fer) - 1e-9)
    if m < 1:
        m = 1
    if m > max_copies:
        m = max_copies
    return m


@numba.njit(cache=True)
def adaptive_y(counts, p, source_symbols: int, overhead: int, z: float, max_iter: int) -> int:
    """Fixed-point y from per-range symbol counts and per-range FERs."""
    total = 0.0
    for i in range(counts.shape[0]):
        total += counts[i]
    y = 0
    for _ in range(max_iter):
        n = source_symbols + overhead + y
        mean = 0.0
        var = 0.0
        for i in range(counts.shape[0]):
            pi = counts[i] / total
            mean += pi * n * p[i]
            var += pi * n * p[i] * (1.0 - p[i])
        bound = math.sqrt(var) * z + mean
        y_next = math.ceil(bound - 1e-9)
        if y_next < 0:
            y_next = 0
        if y_next == y:
            return y
        y = y_next
    return y
