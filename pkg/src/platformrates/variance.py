"""Variance of the incorrect-approval count V* under correlated test statistics.

Each true-null study contributes a Bernoulli(alpha) error indicator Z_i with
Var(Z_i) = alpha(1 - alpha); sharing a control arm correlates the pivots, and
Cov(Z_i, Z_j) = P{T_i > z_alpha, T_j > z_alpha} - alpha^2 follows from the
bivariate normal upper orthant.  This module evaluates that decomposition for
common-rho, explicit-matrix, and derived-from-arm-sizes correlation models and
renders the (n, rho) table of StdDev(V*).
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .numerics import (
    bvn_upper_orthant,
    require_correlation,
    require_probability,
    std_normal_quantile,
)

__all__ = [
    "CorrelationModel",
    "VarianceReport",
    "TableCell",
    "shared_control_correlation",
    "cov_noncoverage",
    "var_V_star",
    "stddev_table",
    "table_to_csv",
]


def _positive_count(value, name: str) -> int:
    try:
        value = operator.index(value)
    except TypeError:
        raise ValueError(f"{name} must be an integer count, got {value!r}") from None
    if value < 1:
        raise ValueError(f"{name} must be >= 1, got {value}")
    return value


def shared_control_correlation(n_i: int, n_j: int, n_c: int) -> float:
    """Correlation of two difference-of-means pivots sharing one control arm.

    Unit-variance observations, arm sizes n_i and n_j, common control of size
    n_c: Corr(T_i, T_j) = (1/n_c) / sqrt((1/n_i + 1/n_c)(1/n_j + 1/n_c)).
    """
    n_i = _positive_count(n_i, "n_i")
    n_j = _positive_count(n_j, "n_j")
    n_c = _positive_count(n_c, "n_c")
    inv_c = 1.0 / n_c
    return inv_c / math.sqrt((1.0 / n_i + inv_c) * (1.0 / n_j + inv_c))


@dataclass(frozen=True, eq=False)
class CorrelationModel:
    """Pairwise correlation structure among a family's test statistics.

    Three variants: a common rho for every pair, an explicit symmetric matrix
    with unit diagonal, or correlations derived from arm sample sizes via
    shared_control_correlation.  Use the classmethod constructors.
    """

    kind: str
    rho: float | None = None
    matrix: np.ndarray | None = None
    arms: tuple[int, ...] | None = None
    n_control: int | None = None

    @classmethod
    def common(cls, rho: float) -> "CorrelationModel":
        return cls(kind="common-rho", rho=require_correlation(rho))

    @classmethod
    def from_matrix(cls, matrix) -> "CorrelationModel":
        m = np.array(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError(f"correlation matrix must be square and nonempty, got shape {m.shape}")
        if not np.allclose(m, m.T, atol=1e-12, rtol=0.0):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(m), 1.0, atol=1e-12, rtol=0.0):
            raise ValueError("correlation matrix must have unit diagonal")
        if np.any(np.abs(m) > 1.0 + 1e-12) or not np.all(np.isfinite(m)):
            raise ValueError("correlation matrix entries must lie in [-1, 1]")
        m = np.clip((m + m.T) / 2.0, -1.0, 1.0)
        np.fill_diagonal(m, 1.0)
        return cls(kind="matrix", matrix=m)

    @classmethod
    def from_arm_sizes(cls, arms: Sequence[int], n_control: int) -> "CorrelationModel":
        arms = tuple(_positive_count(n, "arm size") for n in arms)
        if not arms:
            raise ValueError("arms must be nonempty")
        return cls(kind="derived-from-arms", arms=arms,
                   n_control=_positive_count(n_control, "n_control"))

    def dimension(self) -> int | None:
        """Pair count the model pins down, or None for common-rho (any size)."""
        if self.kind == "matrix":
            return int(self.matrix.shape[0])
        if self.kind == "derived-from-arms":
            return len(self.arms)
        return None

    def pairwise_matrix(self, k: int) -> np.ndarray:
        """The k x k correlation matrix this model implies."""
        k = _positive_count(k, "k")
        fixed = self.dimension()
        if fixed is not None and fixed != k:
            raise ValueError(f"model is for {fixed} studies, requested {k}")
        if self.kind == "common-rho":
            m = np.full((k, k), self.rho, dtype=np.float64)
            np.fill_diagonal(m, 1.0)
            return m
        if self.kind == "matrix":
            return self.matrix.copy()
        m = np.empty((k, k), dtype=np.float64)
        for i in range(k):
            m[i, i] = 1.0
            for j in range(i + 1, k):
                m[i, j] = m[j, i] = shared_control_correlation(
                    self.arms[i], self.arms[j], self.n_control
                )
        return m


@dataclass(frozen=True)
class VarianceReport:
    """Variance decomposition of V* for one (n_true, alpha, correlation) setting.

    ``pairwise_cov`` is the average Cov(Z_i, Z_j) over ordered pairs i != j
    (0.0 when n_true = 1, where no pairs exist).
    """

    n_true: int
    alpha: float
    erpf: float
    var_V: float
    stddev_V: float
    pairwise_cov: float


def cov_noncoverage(alpha: float, rho: float) -> float:
    """Cov(Z_i, Z_j) for two error indicators at level alpha with pivot correlation rho.

    Equals P{T_i > z_alpha, T_j > z_alpha} - alpha^2.
    """
    alpha = require_probability(alpha, "alpha", open_interval=True)
    rho = require_correlation(rho)
    z = std_normal_quantile(1.0 - alpha)
    return bvn_upper_orthant(z, z, rho) - alpha * alpha


def var_V_star(n_true: int, alpha: float, model: CorrelationModel) -> VarianceReport:
    """Var(V*) = n alpha(1-alpha) + sum over i != j of Cov(Z_i, Z_j)."""
    n_true = _positive_count(n_true, "n_true")
    alpha = require_probability(alpha, "alpha", open_interval=True)
    base = n_true * alpha * (1.0 - alpha)
    n_pairs = n_true * (n_true - 1)
    if n_pairs == 0:
        cov_sum = 0.0
    else:
        corr = model.pairwise_matrix(n_true)
        off_diag = corr[~np.eye(n_true, dtype=bool)]
        # One orthant evaluation per distinct correlation value.
        values, counts = np.unique(off_diag, return_counts=True)
        cov_sum = math.fsum(
            int(c) * cov_noncoverage(alpha, float(v)) for v, c in zip(values, counts)
        )
    var = base + cov_sum
    return VarianceReport(
        n_true=n_true,
        alpha=alpha,
        erpf=alpha * n_true,
        var_V=var,
        stddev_V=math.sqrt(max(0.0, var)),
        pairwise_cov=cov_sum / n_pairs if n_pairs else 0.0,
    )


@dataclass(frozen=True)
class TableCell:
    """One cell of the StdDev(V*) table: a common-rho setting and its report."""

    rho: float
    report: VarianceReport


def stddev_table(
    ns: Iterable[int],
    rhos: Iterable[float],
    alpha: float = 0.05,
) -> list[TableCell]:
    """Full cross product of family sizes and common correlations.

    Rows are ordered by n, then by rho, matching the iteration order given.
    """
    ns = [_positive_count(n, "n") for n in ns]
    rhos = [require_correlation(r) for r in rhos]
    if not ns or not rhos:
        raise ValueError("ns and rhos must be nonempty")
    cells = []
    for n in ns:
        for rho in rhos:
            cells.append(TableCell(rho=rho, report=var_V_star(n, alpha, CorrelationModel.common(rho))))
    return cells


def table_to_csv(cells: Sequence[TableCell]) -> str:
    """Render table cells as CSV with 4-decimal values."""
    lines = ["n_true,erpf,rho,stddev"]
    for cell in cells:
        r = cell.report
        lines.append(f"{r.n_true},{r.erpf:.4f},{cell.rho:.4f},{r.stddev_V:.4f}")
    return "\n".join(lines) + "\n"
