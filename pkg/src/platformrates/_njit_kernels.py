"""numba-compiled twins of the kernels dispatched from `kernels`.

Comparison expressions mirror the numpy fallbacks term for term so both
backends produce bitwise-identical decisions.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def shared_control_decisions(control, treatments, inv_se, thresholds):
    reps, cols = treatments.shape
    out = np.empty((reps, cols), dtype=np.bool_)
    for r in range(reps):
        c = control[r]
        for i in range(cols):
            out[r, i] = (treatments[r, i] - c) * inv_se[i] > thresholds[i]
    return out


@numba.njit(cache=True)
def one_factor_decisions(w, eps, loadings, residual, thresholds):
    reps, cols = eps.shape
    out = np.empty((reps, cols), dtype=np.bool_)
    for r in range(reps):
        for i in range(cols):
            out[r, i] = w[r] * loadings[i] + residual * eps[r, i] > thresholds[i]
    return out


@numba.njit(cache=True)
def one_factor_counts(w, eps, loadings, residual, thresholds):
    reps, cols = eps.shape
    out = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        hits = 0
        for i in range(cols):
            if w[r] * loadings[i] + residual * eps[r, i] > thresholds[i]:
                hits += 1
        out[r] = hits
    return out
