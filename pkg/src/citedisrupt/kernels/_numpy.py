"""Vectorized numpy kernels (the fallback path when numba is disabled).

Every function takes raw CSR arrays so that the numba twin in ``_numba`` can
share signatures one-for-one.
"""
import numpy as np

YEAR_MISSING = np.iinfo(np.int32).min

# column layout of the batch_counts result
COL_CITERS = 0
COL_ZERO = 1
COL_COUPLING_SUM = 2
COL_NK = 3
COL_UNKNOWN = 4
N_FIXED_COLS = 5


def _gather(indptr, indices, rows):
    """Concatenate CSR rows; returns (values, owner) with owner = position in rows."""
    starts = indptr[rows]
    lens = indptr[rows + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return indices[:0], np.zeros(0, dtype=np.int64)
    owner = np.repeat(np.arange(rows.size, dtype=np.int64), lens)
    first = np.cumsum(lens) - lens
    pos = np.arange(total, dtype=np.int64) - first[owner] + starts[owner]
    return indices[pos], owner


def _sorted_member(values, sorted_arr):
    if sorted_arr.size == 0 or values.size == 0:
        return np.zeros(values.size, dtype=bool)
    pos = np.searchsorted(sorted_arr, values)
    pos[pos == sorted_arr.size] = 0
    return sorted_arr[pos] == values


def _window_mask(years, idx, window_end, use_window):
    if not use_window:
        return np.ones(idx.size, dtype=bool)
    y = years[idx]
    return (y != YEAR_MISSING) & (y <= window_end)


def merge_count(a, b):
    """Size of the intersection of two sorted, duplicate-free index arrays."""
    return int(np.intersect1d(a, b, assume_unique=True).size)


def citer_couplings(out_indptr, out_indices, in_indptr, in_indices, years,
                    focal, window_end, use_window):
    citers = in_indices[in_indptr[focal]:in_indptr[focal + 1]]
    n_unknown = 0
    if use_window:
        n_unknown = int(np.count_nonzero(years[citers] == YEAR_MISSING))
        citers = citers[_window_mask(years, citers, window_end, use_window)]
    refs = out_indices[out_indptr[focal]:out_indptr[focal + 1]]
    nbrs, owner = _gather(out_indptr, out_indices, citers)
    hit = _sorted_member(nbrs, refs)
    couplings = np.bincount(owner[hit], minlength=citers.size).astype(np.int64)
    return citers, couplings, n_unknown


def count_nk(out_indptr, out_indices, in_indptr, in_indices, years,
             focal, window_end, use_window):
    refs = out_indices[out_indptr[focal]:out_indptr[focal + 1]]
    citers = in_indices[in_indptr[focal]:in_indptr[focal + 1]]
    nbrs, _ = _gather(in_indptr, in_indices, refs)
    cand = np.unique(nbrs)
    cand = cand[cand != focal]
    cand = cand[~_sorted_member(cand, citers)]
    cand = cand[_window_mask(years, cand, window_end, use_window)]
    return int(cand.size)


def batch_counts(out_indptr, out_indices, in_indptr, in_indices, years,
                 focal, thresholds, window_end, use_window):
    n_thr = thresholds.size
    result = np.zeros((focal.size, N_FIXED_COLS + n_thr), dtype=np.int64)
    for row in range(focal.size):
        f = focal[row]
        _, coup, n_unknown = citer_couplings(
            out_indptr, out_indices, in_indptr, in_indices, years,
            f, window_end, use_window)
        result[row, COL_CITERS] = coup.size
        result[row, COL_ZERO] = np.count_nonzero(coup == 0)
        result[row, COL_COUPLING_SUM] = coup.sum()
        result[row, COL_NK] = count_nk(
            out_indptr, out_indices, in_indptr, in_indices, years,
            f, window_end, use_window)
        result[row, COL_UNKNOWN] = n_unknown
        for t in range(n_thr):
            result[row, N_FIXED_COLS + t] = np.count_nonzero(coup >= thresholds[t])
    return result
