"""Compiled O(N^2) pair sums for Gagliardo-type double integrals.

Rows are reduced into a per-row buffer and summed afterwards, so the result
does not depend on the thread count.
"""
import numba

numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
import numpy as np


@numba.njit(cache=True, inline="always")
def _powabs(d, p):
    d = abs(d)
    if p == 2.0:
        return d * d
    if p == 1.0:
        return d
    if p == 1.5:
        return d * np.sqrt(d)
    if p == 3.0:
        return d * d * d
    return d**p


@numba.njit(parallel=True, cache=True)
def _periodic_rows(f, w, p):
    n = f.shape[0]
    half = n // 2
    rows = np.zeros(n)
    for i in numba.prange(n):
        fi = f[i]
        acc = 0.0
        for k in range(1, (n + 1) // 2):
            j = i + k
            if j >= n:
                j -= n
            acc += 2.0 * _powabs(fi - f[j], p) * w[k]
        if n % 2 == 0:
            j = i + half
            if j >= n:
                j -= n
            acc += _powabs(fi - f[j], p) * w[half]
        rows[i] = acc
    return rows


@numba.njit(parallel=True, cache=True)
def _line_rows(f, w, p):
    n = f.shape[0]
    rows = np.zeros(n)
    for i in numba.prange(n):
        fi = f[i]
        acc = 0.0
        for j in range(i + 1, n):
            acc += _powabs(fi - f[j], p) * w[j - i]
        rows[i] = 2.0 * acc
    return rows


def periodic_pair_sum(f: np.ndarray, w: np.ndarray, p: float) -> float:
    """sum_i sum_{k=1}^{n-1} |f_i - f_{i+k mod n}|^p w[min(k, n-k)]."""
    f = np.ascontiguousarray(f, dtype=np.float64)
    return float(np.sum(_periodic_rows(f, np.ascontiguousarray(w, dtype=np.float64), float(p))))


def line_pair_sum(f: np.ndarray, w: np.ndarray, p: float) -> float:
    """sum_{i != j} |f_i - f_j|^p w[|i-j|]."""
    f = np.ascontiguousarray(f, dtype=np.float64)
    return float(np.sum(_line_rows(f, np.ascontiguousarray(w, dtype=np.float64), float(p))))


def set_threads(n: int) -> None:
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
