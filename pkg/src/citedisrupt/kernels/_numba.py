"""numba-compiled kernels. Same signatures and results as ``_numpy``.

The batch kernel uses stamp arrays (one slot per node) instead of sorted
merges: each focal paper gets a fresh stamp, so marking its references and
citers is O(degree) with no clearing pass between focal papers.
"""
import numpy as np
from numba import njit

from ._numpy import (
    COL_CITERS,
    COL_COUPLING_SUM,
    COL_NK,
    COL_UNKNOWN,
    COL_ZERO,
    N_FIXED_COLS,
    YEAR_MISSING,
)

_MISSING = np.int32(YEAR_MISSING)


@njit(cache=True, nogil=True)
def merge_count(a, b):
    i = 0
    j = 0
    n = 0
    while i < a.size and j < b.size:
        if a[i] < b[j]:
            i += 1
        elif a[i] > b[j]:
            j += 1
        else:
            n += 1
            i += 1
            j += 1
    return n


@njit(cache=True, nogil=True)
def _in_window(year, window_end, use_window):
    if not use_window:
        return True
    return year != _MISSING and year <= window_end


@njit(cache=True, nogil=True)
def citer_couplings(out_indptr, out_indices, in_indptr, in_indices, years,
                    focal, window_end, use_window):
    lo = in_indptr[focal]
    hi = in_indptr[focal + 1]
    citers = np.empty(hi - lo, dtype=in_indices.dtype)
    couplings = np.empty(hi - lo, dtype=np.int64)
    refs = out_indices[out_indptr[focal]:out_indptr[focal + 1]]
    n = 0
    n_unknown = 0
    for k in range(lo, hi):
        c = in_indices[k]
        if use_window and years[c] == _MISSING:
            n_unknown += 1
            continue
        if not _in_window(years[c], window_end, use_window):
            continue
        citers[n] = c
        couplings[n] = merge_count(out_indices[out_indptr[c]:out_indptr[c + 1]], refs)
        n += 1
    return citers[:n], couplings[:n], n_unknown


@njit(cache=True, nogil=True)
def count_nk(out_indptr, out_indices, in_indptr, in_indices, years,
             focal, window_end, use_window):
    n_nodes = years.size
    seen = np.zeros(n_nodes, dtype=np.bool_)
    for k in range(in_indptr[focal], in_indptr[focal + 1]):
        seen[in_indices[k]] = True
    seen[focal] = True
    n = 0
    for k in range(out_indptr[focal], out_indptr[focal + 1]):
        r = out_indices[k]
        for m in range(in_indptr[r], in_indptr[r + 1]):
            p = in_indices[m]
            if seen[p]:
                continue
            seen[p] = True
            if _in_window(years[p], window_end, use_window):
                n += 1
    return n


@njit(cache=True, nogil=True)
def batch_counts(out_indptr, out_indices, in_indptr, in_indices, years,
                 focal, thresholds, window_end, use_window):
    n_nodes = years.size
    n_thr = thresholds.size
    result = np.zeros((focal.size, N_FIXED_COLS + n_thr), dtype=np.int64)
    ref_mark = np.full(n_nodes, -1, dtype=np.int64)
    # citers of the focal paper and already-counted N_k papers share one mark
    seen_mark = np.full(n_nodes, -1, dtype=np.int64)
    for row in range(focal.size):
        f = focal[row]
        stamp = row
        for k in range(out_indptr[f], out_indptr[f + 1]):
            ref_mark[out_indices[k]] = stamp
        seen_mark[f] = stamp
        for k in range(in_indptr[f], in_indptr[f + 1]):
            seen_mark[in_indices[k]] = stamp

        n_citers = 0
        n_zero = 0
        coupling_sum = 0
        n_unknown = 0
        for k in range(in_indptr[f], in_indptr[f + 1]):
            c = in_indices[k]
            if use_window and years[c] == _MISSING:
                n_unknown += 1
                continue
            if not _in_window(years[c], window_end, use_window):
                continue
            coupling = 0
            for m in range(out_indptr[c], out_indptr[c + 1]):
                if ref_mark[out_indices[m]] == stamp:
                    coupling += 1
            n_citers += 1
            coupling_sum += coupling
            if coupling == 0:
                n_zero += 1
            for t in range(n_thr):
                if coupling >= thresholds[t]:
                    result[row, N_FIXED_COLS + t] += 1

        n_k = 0
        for k in range(out_indptr[f], out_indptr[f + 1]):
            r = out_indices[k]
            for m in range(in_indptr[r], in_indptr[r + 1]):
                p = in_indices[m]
                if seen_mark[p] == stamp:
                    continue
                seen_mark[p] = stamp
                if _in_window(years[p], window_end, use_window):
                    n_k += 1

        result[row, COL_CITERS] = n_citers
        result[row, COL_ZERO] = n_zero
        result[row, COL_COUPLING_SUM] = coupling_sum
        result[row, COL_NK] = n_k
        result[row, COL_UNKNOWN] = n_unknown
    return result
