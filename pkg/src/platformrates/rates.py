"""Error-rate calculus over study outcomes, family tallies, and count distributions.

Three family-scoped rates (per-comparison, per-family, familywise), the
false approval rate over true-null studies, the empirical false discovery
rate with the 0/0 := 0 convention, and the distributional forms that divide
or attenuate the incorrect-approval count V.
"""

from __future__ import annotations

import json
import math
import operator
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .numerics import require_probability

__all__ = [
    "StatementOutcome",
    "StudyOutcome",
    "FamilyTally",
    "CountDistribution",
    "DiscountedFdr",
    "tally_outcomes",
    "merge_tallies",
    "error_rate_per_comparison",
    "error_rate_per_family",
    "error_rate_familywise",
    "false_approval_rate",
    "fdr_empirical",
    "expected_incorrect_approvals",
    "erpf_fraction",
    "fdr_from_distribution",
]


def _count(value, name: str) -> int:
    try:
        value = operator.index(value)
    except TypeError:
        raise ValueError(f"{name} must be an integer count, got {value!r}") from None
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return value


@dataclass(frozen=True)
class StatementOutcome:
    """One statement (a confidence interval or claim) and whether it is erroneous."""

    statement_id: str
    erroneous: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "erroneous", bool(self.erroneous))


@dataclass(frozen=True)
class StudyOutcome:
    """Decision record for one study within a platform family.

    ``null_is_true`` marks a compound that lacks efficacy, so a rejection on
    such a study is an incorrect approval.  ``statements`` is optional: when
    present it carries the within-study layer, and for a true-null study the
    study-level decision must be consistent with "any statement rejects"
    (an erroneous statement on a true null IS a false rejection).  For
    false-null studies an erroneous statement is a coverage failure, which
    carries no rejection information, so no cross-check is possible there.
    """

    study_id: str
    platform_id: str
    null_is_true: bool
    rejected: bool
    alpha_level: float = 0.05
    statements: tuple[StatementOutcome, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "null_is_true", bool(self.null_is_true))
        object.__setattr__(self, "rejected", bool(self.rejected))
        object.__setattr__(self, "statements", tuple(self.statements))
        object.__setattr__(
            self, "alpha_level",
            require_probability(self.alpha_level, "alpha_level", open_interval=True),
        )
        ids = [s.statement_id for s in self.statements]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate statement ids in study {self.study_id!r}")
        if self.statements and self.null_is_true:
            if self.rejected != any(s.erroneous for s in self.statements):
                raise ValueError(
                    f"study {self.study_id!r}: rejected flag inconsistent with "
                    "statement outcomes for a true-null study"
                )


_TALLY_FIELDS = (
    "n_true", "n_false", "V", "R",
    "n_statements", "n_erroneous_statements",
    "n_families", "n_erroneous_families",
)


@dataclass(frozen=True)
class FamilyTally:
    """Counts over a family (or a union of families) of study outcomes.

    ``V`` is the number of incorrect rejections (true nulls rejected) and
    ``R`` the number of rejections of either kind.  Tallies add componentwise,
    associatively and commutatively, so partial tallies merge in any order.
    """

    n_true: int = 0
    n_false: int = 0
    V: int = 0
    R: int = 0
    n_statements: int = 0
    n_erroneous_statements: int = 0
    n_families: int = 0
    n_erroneous_families: int = 0

    def __post_init__(self) -> None:
        for name in _TALLY_FIELDS:
            object.__setattr__(self, name, _count(getattr(self, name), name))
        if self.V > self.n_true:
            raise ValueError(f"V={self.V} exceeds n_true={self.n_true}")
        if self.V > self.R:
            raise ValueError(f"V={self.V} exceeds R={self.R}")
        if self.R > self.n_true + self.n_false:
            raise ValueError(f"R={self.R} exceeds study count {self.n_true + self.n_false}")
        if self.n_erroneous_statements > self.n_statements:
            raise ValueError("n_erroneous_statements exceeds n_statements")
        if self.n_erroneous_families > self.n_families:
            raise ValueError("n_erroneous_families exceeds n_families")

    def __add__(self, other: "FamilyTally") -> "FamilyTally":
        if not isinstance(other, FamilyTally):
            return NotImplemented
        return FamilyTally(**{f: getattr(self, f) + getattr(other, f) for f in _TALLY_FIELDS})

    def as_dict(self) -> dict[str, int]:
        return {f: getattr(self, f) for f in _TALLY_FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.as_dict())

    @classmethod
    def from_json(cls, text: str) -> "FamilyTally":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("tally JSON must be an object")
        if set(data) != set(_TALLY_FIELDS):
            missing = sorted(set(_TALLY_FIELDS) - set(data))
            extra = sorted(set(data) - set(_TALLY_FIELDS))
            raise ValueError(f"tally JSON fields mismatch: missing {missing}, unexpected {extra}")
        return cls(**data)


def merge_tallies(tallies: Iterable[FamilyTally]) -> FamilyTally:
    """Componentwise sum of tallies; empty input yields the zero tally."""
    total = FamilyTally()
    for t in tallies:
        total = total + t
    return total


def tally_outcomes(outcomes: Iterable[StudyOutcome]) -> FamilyTally:
    """Build a FamilyTally from study outcomes, one family per platform_id.

    A study without explicit statements contributes one implicit statement,
    erroneous exactly when the study is a falsely rejected true null.
    """
    outcomes = list(outcomes)
    seen: set[tuple[str, str]] = set()
    n_true = n_false = v = r = n_stmt = n_err_stmt = 0
    family_err: dict[str, bool] = {}
    for o in outcomes:
        key = (o.platform_id, o.study_id)
        if key in seen:
            raise ValueError(f"duplicate study {key!r}")
        seen.add(key)
        if o.null_is_true:
            n_true += 1
            if o.rejected:
                v += 1
        else:
            n_false += 1
        if o.rejected:
            r += 1
        if o.statements:
            n_stmt += len(o.statements)
            err = sum(1 for s in o.statements if s.erroneous)
        else:
            n_stmt += 1
            err = 1 if (o.null_is_true and o.rejected) else 0
        n_err_stmt += err
        family_err[o.platform_id] = family_err.get(o.platform_id, False) or err > 0
    return FamilyTally(
        n_true=n_true,
        n_false=n_false,
        V=v,
        R=r,
        n_statements=n_stmt,
        n_erroneous_statements=n_err_stmt,
        n_families=len(family_err),
        n_erroneous_families=sum(family_err.values()),
    )


@dataclass(frozen=True)
class CountDistribution:
    """Distribution of a nonnegative integer count, as (value, prob) pairs.

    Support values are distinct and sorted; probabilities must sum to 1
    within 1e-9.  Zero-probability entries are dropped on construction.
    """

    support: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        cleaned = []
        for v, p in self.support:
            v = _count(v, "support value")
            p = float(p)
            if not math.isfinite(p) or p < 0.0:
                raise ValueError(f"probability for v={v} must be finite and >= 0, got {p!r}")
            if p > 0.0:
                cleaned.append((v, p))
        cleaned.sort()
        values = [v for v, _ in cleaned]
        if len(set(values)) != len(values):
            raise ValueError("support values must be distinct")
        total = math.fsum(p for _, p in cleaned)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within 1e-9")
        object.__setattr__(self, "support", tuple(cleaned))

    @classmethod
    def point_mass(cls, v: int) -> "CountDistribution":
        return cls(((v, 1.0),))

    @classmethod
    def binomial(cls, n: int, p: float) -> "CountDistribution":
        n = _count(n, "n")
        p = require_probability(p, "p")
        q = 1.0 - p
        support = tuple((v, math.comb(n, v) * p**v * q ** (n - v)) for v in range(n + 1))
        return cls(support)

    @classmethod
    def from_counts(cls, counts: Sequence[int] | Mapping[int, int]) -> "CountDistribution":
        """Empirical distribution from occurrence counts.

        ``counts`` is either a sequence where ``counts[v]`` is the number of
        times the value v occurred, or a mapping from value to count.
        """
        if isinstance(counts, Mapping):
            items = [(_count(v, "value"), _count(c, "count")) for v, c in counts.items()]
        else:
            items = [(v, _count(c, "count")) for v, c in enumerate(counts)]
        total = sum(c for _, c in items)
        if total == 0:
            raise ValueError("counts are all zero")
        return cls(tuple((v, c / total) for v, c in items if c > 0))

    def prob(self, v: int) -> float:
        for value, p in self.support:
            if value == v:
                return p
        return 0.0

    def mean(self) -> float:
        return math.fsum(v * p for v, p in self.support)

    def variance(self) -> float:
        m = self.mean()
        return max(0.0, math.fsum(p * (v - m) ** 2 for v, p in self.support))

    def stddev(self) -> float:
        return math.sqrt(self.variance())


@dataclass(frozen=True)
class DiscountedFdr:
    """FDR computed from a V-distribution, with its replace-V-by-zero upper bound.

    ``upper_bound`` is None when no false-null rejections are supplied and
    V > 0 has positive probability (the bound's denominator would be zero).
    """

    fdr: float
    upper_bound: float | None


def error_rate_per_comparison(tally: FamilyTally) -> float:
    """Erroneous statements per statement made."""
    if tally.n_statements == 0:
        raise ValueError("per-comparison rate undefined: tally has no statements")
    return tally.n_erroneous_statements / tally.n_statements


def error_rate_per_family(tally: FamilyTally) -> float:
    """Erroneous statements per family; may exceed 1."""
    if tally.n_families == 0:
        raise ValueError("per-family rate undefined: tally has no families")
    return tally.n_erroneous_statements / tally.n_families


def error_rate_familywise(tally: FamilyTally) -> float:
    """Fraction of families containing at least one erroneous statement."""
    if tally.n_families == 0:
        raise ValueError("familywise rate undefined: tally has no families")
    return tally.n_erroneous_families / tally.n_families


def false_approval_rate(outcomes: Iterable[StudyOutcome]) -> float:
    """Fraction of true-null studies that were rejected.

    Efficacious compounds enter neither numerator nor denominator.
    """
    n_true = 0
    v = 0
    for o in outcomes:
        if o.null_is_true:
            n_true += 1
            if o.rejected:
                v += 1
    if n_true == 0:
        raise ValueError("false approval rate undefined: no true-null studies")
    return v / n_true


def fdr_empirical(outcomes: Iterable[StudyOutcome]) -> float:
    """V/R over the given outcomes, with 0/0 taken as 0."""
    v = 0
    r = 0
    for o in outcomes:
        if o.rejected:
            r += 1
            if o.null_is_true:
                v += 1
    return v / r if r else 0.0


def expected_incorrect_approvals(alphas: Iterable[float]) -> float:
    """Sum of per-study significance levels.

    Expectations add, so this equals E[V] exactly, regardless of any
    dependence among the studies.  An empty family gives 0.
    """
    return math.fsum(
        require_probability(a, "alpha", open_interval=True) for a in alphas
    )


def erpf_fraction(dist: CountDistribution, n_true: int) -> float:
    """E[V]/n_true for a V-distribution: the per-family rate as a fraction."""
    n_true = _count(n_true, "n_true")
    if n_true == 0:
        raise ValueError("erpf fraction undefined: n_true must be >= 1")
    return math.fsum((v / n_true) * p for v, p in dist.support)


def fdr_from_distribution(dist: CountDistribution, n_false_rejected: int) -> DiscountedFdr:
    """E[V/(V + n_false_rejected)] plus the bound that replaces V by 0 below.

    Models the idealization that every false null is rejected with
    probability 1, so the rejection count is V plus the constant
    ``n_false_rejected``.  The v = 0 term contributes 0 (the 0/0 := 0
    convention covers n_false_rejected = 0).  The upper bound
    E[V]/n_false_rejected is undefined (None) when n_false_rejected = 0
    and V > 0 has positive probability.
    """
    nf = _count(n_false_rejected, "n_false_rejected")
    fdr = math.fsum(p * (v / (v + nf)) for v, p in dist.support if v > 0)
    if nf > 0:
        upper: float | None = math.fsum(p * (v / nf) for v, p in dist.support)
    else:
        p_positive = math.fsum(p for v, p in dist.support if v > 0)
        upper = 0.0 if p_positive == 0.0 else None
    return DiscountedFdr(fdr=fdr, upper_bound=upper)
