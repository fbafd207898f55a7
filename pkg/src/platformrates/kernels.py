"""Hot Monte Carlo decision kernels with numba and pure-numpy backends.

Both backends evaluate the same comparisons in the same order, so outputs are
bitwise identical.  Backend choice:

- default: numba if it imports, else numpy;
- env var PLATFORMRATES_NO_NUMBA set to anything but "" or "0" forces numpy;
- select_backend("numba" | "numpy") overrides programmatically.

The numba import happens lazily on first selection, so analytic code paths
never pay its startup cost.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "select_backend",
    "active_backend",
    "shared_control_decisions",
    "one_factor_decisions",
    "one_factor_counts",
]

_ENV_FLAG = "PLATFORMRATES_NO_NUMBA"
_active: str | None = None


def select_backend(name: str | None = None) -> str:
    """Pick the kernel backend; None re-applies the default policy."""
    global _active
    if name is None:
        if os.environ.get(_ENV_FLAG, "") not in ("", "0"):
            _active = "numpy"
        else:
            try:
                from . import _njit_kernels  # noqa: F401
                _active = "numba"
            except ImportError:
                _active = "numpy"
    elif name == "numpy":
        _active = "numpy"
    elif name == "numba":
        from . import _njit_kernels  # noqa: F401
        _active = "numba"
    else:
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    return _active


def active_backend() -> str:
    return _active if _active is not None else select_backend()


def _as_f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def shared_control_decisions(
    control: np.ndarray,
    treatments: np.ndarray,
    inv_se: np.ndarray,
    thresholds: np.ndarray,
) -> np.ndarray:
    """Per-statement rejection decisions for shared-control pivots.

    control: (reps,) control-arm mean draws; treatments: (reps, cols)
    statement-level mean draws; inv_se, thresholds: (cols,).  Returns a bool
    (reps, cols) matrix of (treatment - control) * inv_se > threshold.
    """
    control = _as_f64(control)
    treatments = _as_f64(treatments)
    inv_se = _as_f64(inv_se)
    thresholds = _as_f64(thresholds)
    if active_backend() == "numba":
        from . import _njit_kernels
        return _njit_kernels.shared_control_decisions(control, treatments, inv_se, thresholds)
    return (treatments - control[:, None]) * inv_se[None, :] > thresholds[None, :]


def one_factor_decisions(
    w: np.ndarray,
    eps: np.ndarray,
    loadings: np.ndarray,
    residual: float,
    thresholds: np.ndarray,
) -> np.ndarray:
    """Per-statement rejection decisions under the one-factor model.

    w: (reps,) common-factor draws; eps: (reps, cols) residual draws;
    loadings, thresholds: (cols,).  Returns a bool (reps, cols) matrix of
    w * loading + residual * eps > threshold.
    """
    w = _as_f64(w)
    eps = _as_f64(eps)
    loadings = _as_f64(loadings)
    thresholds = _as_f64(thresholds)
    residual = float(residual)
    if active_backend() == "numba":
        from . import _njit_kernels
        return _njit_kernels.one_factor_decisions(w, eps, loadings, residual, thresholds)
    return w[:, None] * loadings[None, :] + residual * eps > thresholds[None, :]


def one_factor_counts(
    w: np.ndarray,
    eps: np.ndarray,
    loadings: np.ndarray,
    residual: float,
    thresholds: np.ndarray,
) -> np.ndarray:
    """Rejection counts per rep under the one-factor model.

    T_i = w * loadings[i] + residual * eps[:, i]; counts entries exceeding
    thresholds[i].  Returns an int64 (reps,) vector.
    """
    w = _as_f64(w)
    eps = _as_f64(eps)
    loadings = _as_f64(loadings)
    thresholds = _as_f64(thresholds)
    residual = float(residual)
    if active_backend() == "numba":
        from . import _njit_kernels
        return _njit_kernels.one_factor_counts(w, eps, loadings, residual, thresholds)
    hits = w[:, None] * loadings[None, :] + residual * eps > thresholds[None, :]
    return hits.sum(axis=1, dtype=np.int64)
