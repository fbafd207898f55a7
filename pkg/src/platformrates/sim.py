"""Monte Carlo engine for platform trials with shared-control dependence.

Randomness discipline: every unit of work draws from its own counter-keyed
Philox stream (``keyed_stream(seed, index)``), so results depend only on
(config, seed), never on execution order, chunking, or thread count.  A
platform's draws are one standard-normal vector of length 1 + k*m laid out as
[control-or-factor, statement 0 of study 0, ..., statement m-1 of study k-1];
`simulate_platform` and the batched sequence runner consume the identical
layout, so a platform simulated alone reproduces its in-sequence results
bit for bit.

Two generative modes per platform:

- arm-based: one shared control mean and k*m statement-level treatment means,
  pivots (treatment - control) / sqrt(1/n_i + 1/n_c), inducing the
  shared-control correlation;
- one-factor: T = loading * W + sqrt(1 - |rho|) * eps + effect, giving common
  pairwise correlation rho (negative rho admissible only for k <= 2, via
  opposite-sign loadings).

Each statement is tested one-sided at alpha / statements_per_study; a study
rejects when any of its statements does.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .numerics import require_correlation, require_probability, std_normal_quantile
from .rates import CountDistribution, FamilyTally, StatementOutcome, StudyOutcome

__all__ = [
    "MAX_STUDIES",
    "PlatformConfig",
    "SequenceConfig",
    "Checkpoint",
    "LLNReport",
    "FdrScenarioResult",
    "ControlDiagnostics",
    "keyed_stream",
    "equal_arm_config",
    "simulate_platform",
    "simulate_platform_detailed",
    "simulate_sequence",
    "lln_to_csv",
    "fdr_scenario",
    "one_factor_rejection_histogram",
    "simulate_V_distribution",
    "control_performance_diagnostics",
]

MAX_STUDIES = 100
_BLOCK = 1 << 16
_CHUNK = 1024


def _index_at_least(value, name: str, minimum: int) -> int:
    try:
        value = operator.index(value)
    except TypeError:
        raise ValueError(f"{name} must be an integer, got {value!r}") from None
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def _seed64(seed) -> int:
    try:
        seed = operator.index(seed)
    except TypeError:
        raise ValueError(f"seed must be an integer, got {seed!r}") from None
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must satisfy 0 <= seed < 2**64, got {seed}")
    return seed


def keyed_stream(seed: int, index: int) -> np.random.Generator:
    """Philox stream keyed by (seed, index); independent for distinct keys."""
    key = np.array([_seed64(seed), _index_at_least(index, "index", 0)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class PlatformConfig:
    """One platform: k studies against a shared control arm (or a one-factor proxy).

    Exactly one generative mode must be configured: arm-based (``arm_sizes``
    plus ``control_size``) or ``one_factor_rho``.  Effect sizes are
    standardized unit-variance mean shifts and must be 0 for true nulls.
    """

    k: int
    true_null_flags: tuple[bool, ...]
    effect_sizes: tuple[float, ...]
    arm_sizes: tuple[int, ...] | None = None
    control_size: int | None = None
    alpha: float = 0.05
    statements_per_study: int = 1
    one_factor_rho: float | None = None

    def __post_init__(self) -> None:
        k = _index_at_least(self.k, "k", 1)
        if k > MAX_STUDIES:
            raise ValueError(f"k must be at most {MAX_STUDIES} studies per platform, got {k}")
        object.__setattr__(self, "k", k)
        flags = tuple(bool(f) for f in self.true_null_flags)
        effects = tuple(float(e) for e in self.effect_sizes)
        if len(flags) != k or len(effects) != k:
            raise ValueError("true_null_flags and effect_sizes must have length k")
        for i, (flag, eff) in enumerate(zip(flags, effects)):
            if not math.isfinite(eff):
                raise ValueError(f"effect size for study {i} must be finite")
            if flag and eff != 0.0:
                raise ValueError(f"study {i} is a true null but has effect size {eff!r}")
        object.__setattr__(self, "true_null_flags", flags)
        object.__setattr__(self, "effect_sizes", effects)
        object.__setattr__(
            self, "alpha", require_probability(self.alpha, "alpha", open_interval=True)
        )
        object.__setattr__(
            self, "statements_per_study",
            _index_at_least(self.statements_per_study, "statements_per_study", 1),
        )

        arm_mode = self.arm_sizes is not None or self.control_size is not None
        factor_mode = self.one_factor_rho is not None
        if arm_mode == factor_mode:
            raise ValueError("configure exactly one mode: arm_sizes + control_size, or one_factor_rho")
        if arm_mode:
            if self.arm_sizes is None or self.control_size is None:
                raise ValueError("arm-based mode needs both arm_sizes and control_size")
            arms = tuple(_index_at_least(n, "arm size", 1) for n in self.arm_sizes)
            if len(arms) != k:
                raise ValueError("arm_sizes must have length k")
            object.__setattr__(self, "arm_sizes", arms)
            object.__setattr__(
                self, "control_size", _index_at_least(self.control_size, "control_size", 1)
            )
        else:
            rho = require_correlation(self.one_factor_rho, "one_factor_rho")
            if rho < 0.0 and k > 2:
                raise ValueError("negative one_factor_rho is only admissible for k <= 2")
            object.__setattr__(self, "one_factor_rho", rho)

    @property
    def n_true(self) -> int:
        return sum(self.true_null_flags)


def equal_arm_config(
    k: int,
    arm_size: int = 100,
    control_size: int | None = None,
    alpha: float = 0.05,
    statements_per_study: int = 1,
) -> PlatformConfig:
    """All-true-null platform with k equal arms sharing one control."""
    control_size = arm_size if control_size is None else control_size
    return PlatformConfig(
        k=k,
        true_null_flags=(True,) * k,
        effect_sizes=(0.0,) * k,
        arm_sizes=(arm_size,) * k,
        control_size=control_size,
        alpha=alpha,
        statements_per_study=statements_per_study,
    )


class _Engine:
    """Per-config derived arrays shared by the single and batched paths."""

    def __init__(self, config: PlatformConfig):
        self.config = config
        k, m = config.k, config.statements_per_study
        self.cols = k * m
        z = std_normal_quantile(1.0 - config.alpha / m)
        effects = np.repeat(np.asarray(config.effect_sizes, dtype=np.float64), m)
        self.arm_mode = config.one_factor_rho is None
        if self.arm_mode:
            arms = np.repeat(np.asarray(config.arm_sizes, dtype=np.float64), m)
            self.control_sd = math.sqrt(1.0 / config.control_size)
            self.treat_sd = np.sqrt(1.0 / arms)
            self.treat_mean = effects
            self.inv_se = 1.0 / np.sqrt(1.0 / arms + 1.0 / config.control_size)
            self.thresholds = np.full(self.cols, z)
        else:
            rho = config.one_factor_rho
            if rho >= 0.0:
                study_loadings = np.full(k, math.sqrt(rho))
            else:
                root = math.sqrt(-rho)
                study_loadings = np.array([root, -root][:k])
            self.loadings = np.repeat(study_loadings, m)
            self.residual = math.sqrt(1.0 - abs(rho))
            # Fold the effect shift into the threshold: T + effect > z.
            self.thresholds = z - effects

    def decide(self, draws: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
        """Map raw normal draws (blocks, 1 + cols) to statement decisions.

        Returns (decisions bool (blocks, cols), control means or None).
        """
        if self.arm_mode:
            control = draws[:, 0] * self.control_sd
            treatments = self.treat_mean + draws[:, 1:] * self.treat_sd
            dec = kernels.shared_control_decisions(
                control, treatments, self.inv_se, self.thresholds
            )
            return dec, control
        dec = kernels.one_factor_decisions(
            draws[:, 0], draws[:, 1:], self.loadings, self.residual, self.thresholds
        )
        return dec, None


def _outcomes_from_decisions(
    config: PlatformConfig, decisions: np.ndarray, platform_id: str
) -> list[StudyOutcome]:
    m = config.statements_per_study
    outcomes = []
    for i in range(config.k):
        stmts = decisions[i * m:(i + 1) * m]
        rejected = bool(stmts.any())
        null_true = config.true_null_flags[i]
        if m == 1:
            statements: tuple[StatementOutcome, ...] = ()
        else:
            # A rejected statement on a true null is an erroneous statement;
            # on a false null it is a correct claim.
            statements = tuple(
                StatementOutcome(f"s{i}c{j}", erroneous=bool(stmts[j]) and null_true)
                for j in range(m)
            )
        outcomes.append(
            StudyOutcome(
                study_id=f"s{i}",
                platform_id=platform_id,
                null_is_true=null_true,
                rejected=rejected,
                alpha_level=config.alpha,
                statements=statements,
            )
        )
    return outcomes


def simulate_platform_detailed(
    config: PlatformConfig,
    rng: np.random.Generator,
    platform_id: str = "p0",
) -> tuple[list[StudyOutcome], float | None]:
    """Simulate one platform; also return the realized control mean (arm mode)."""
    eng = _Engine(config)
    draws = rng.standard_normal(1 + eng.cols)[None, :]
    decisions, control = eng.decide(draws)
    control_mean = float(control[0]) if control is not None else None
    return _outcomes_from_decisions(config, decisions[0], platform_id), control_mean


def simulate_platform(
    config: PlatformConfig,
    rng: np.random.Generator,
    platform_id: str = "p0",
) -> list[StudyOutcome]:
    """Simulate one platform trial and return its study outcomes."""
    outcomes, _ = simulate_platform_detailed(config, rng, platform_id)
    return outcomes


@dataclass(frozen=True)
class SequenceConfig:
    """A finite slice of the platform sequence, plus RNG seed and checkpointing.

    ``checkpoint_every`` counts platforms; default is every 10% of the run.
    The platform must contain at least one true-null study so the running
    false approval rate is defined.
    """

    num_platforms: int
    platform_config: PlatformConfig
    seed: int
    checkpoint_every: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "num_platforms", _index_at_least(self.num_platforms, "num_platforms", 1)
        )
        object.__setattr__(self, "seed", _seed64(self.seed))
        if self.platform_config.n_true == 0:
            raise ValueError("sequence platform must contain at least one true-null study")
        if self.checkpoint_every is None:
            object.__setattr__(self, "checkpoint_every", max(1, self.num_platforms // 10))
        else:
            object.__setattr__(
                self, "checkpoint_every",
                _index_at_least(self.checkpoint_every, "checkpoint_every", 1),
            )


@dataclass(frozen=True)
class Checkpoint:
    """Running false-approval-rate state after n true-null studies."""

    n: int
    running_far: float
    running_mean_alpha: float
    deviation: float


@dataclass(frozen=True)
class LLNReport:
    checkpoints: tuple[Checkpoint, ...]

    def final(self) -> Checkpoint:
        return self.checkpoints[-1]


def lln_to_csv(report: LLNReport) -> str:
    """Checkpoint trajectory as CSV; the target column is the mean alpha."""
    lines = ["n,running_far,target,deviation"]
    for c in report.checkpoints:
        lines.append(f"{c.n},{c.running_far:.4f},{c.running_mean_alpha:.4f},{c.deviation:.4f}")
    return "\n".join(lines) + "\n"


def simulate_sequence(config: SequenceConfig) -> tuple[LLNReport, FamilyTally]:
    """Run independent platforms and report LLN checkpoints plus the total tally.

    Platform p draws from keyed_stream(seed, p); across-platform independence
    is what makes the dependence "short term" (it never reaches past a
    platform's k studies).
    """
    pc = config.platform_config
    eng = _Engine(pc)
    k, m = pc.k, pc.statements_per_study
    true_mask = np.asarray(pc.true_null_flags, dtype=bool)
    n_true_per = int(true_mask.sum())
    total = config.num_platforms

    v_per = np.empty(total, dtype=np.int64)
    r_sum = 0
    err_stmt_sum = 0
    err_family_sum = 0
    draws = np.empty((_CHUNK, 1 + eng.cols), dtype=np.float64)
    for start in range(0, total, _CHUNK):
        size = min(_CHUNK, total - start)
        for b in range(size):
            draws[b] = keyed_stream(config.seed, start + b).standard_normal(1 + eng.cols)
        decisions, _ = eng.decide(draws[:size])
        per_study = decisions.reshape(size, k, m).any(axis=2)
        v_per[start:start + size] = per_study[:, true_mask].sum(axis=1)
        r_sum += int(per_study.sum())
        err_stmts = decisions.reshape(size, k, m)[:, true_mask, :].sum(axis=(1, 2))
        err_stmt_sum += int(err_stmts.sum())
        err_family_sum += int((err_stmts > 0).sum())

    v_cum = np.cumsum(v_per)
    boundaries = sorted(set(range(config.checkpoint_every, total + 1, config.checkpoint_every)) | {total})
    checkpoints = []
    for t in boundaries:
        n = t * n_true_per
        far = float(v_cum[t - 1]) / n
        checkpoints.append(
            Checkpoint(n=n, running_far=far, running_mean_alpha=pc.alpha, deviation=far - pc.alpha)
        )
    tally = FamilyTally(
        n_true=total * n_true_per,
        n_false=total * (k - n_true_per),
        V=int(v_cum[-1]),
        R=r_sum,
        n_statements=total * k * m,
        n_erroneous_statements=err_stmt_sum,
        n_families=total,
        n_erroneous_families=err_family_sum,
    )
    return LLNReport(checkpoints=tuple(checkpoints)), tally


@dataclass(frozen=True)
class FdrScenarioResult:
    empirical_fdr: float
    empirical_far: float


def fdr_scenario(alpha_true_null: float, reps: int, seed: int) -> FdrScenarioResult:
    """Two-study platform: one sure-reject false null, one true null at a chosen level.

    The false null has effect 10 with arms of 100 (rejection probability
    1 to machine precision); the true null is tested at ``alpha_true_null``.
    Returns the mean over reps of the per-rep FDR V/R (0/0 := 0) and the
    true-null rejection rate.
    """
    a = require_probability(alpha_true_null, "alpha_true_null")
    reps = _index_at_least(reps, "reps", 1)
    seed = _seed64(seed)
    if a == 0.0:
        thr_true = math.inf
    elif a == 1.0:
        thr_true = -math.inf
    else:
        thr_true = std_normal_quantile(1.0 - a)
    inv_se = np.full(2, 1.0 / math.sqrt(0.02))
    thresholds = np.array([thr_true, std_normal_quantile(0.95)])
    sd = math.sqrt(1.0 / 100.0)

    far_hits = 0
    fdr_total = 0.0
    treatments = np.empty((_BLOCK, 2), dtype=np.float64)
    for block, start in enumerate(range(0, reps, _BLOCK)):
        size = min(_BLOCK, reps - start)
        g = keyed_stream(seed, block).standard_normal((size, 3))
        control = g[:, 0] * sd
        treatments[:size, 0] = g[:, 1] * sd
        treatments[:size, 1] = 10.0 + g[:, 2] * sd
        dec = kernels.shared_control_decisions(
            control, treatments[:size], inv_se, thresholds
        )
        v = dec[:, 0].astype(np.int64)
        r = v + dec[:, 1].astype(np.int64)
        far_hits += int(v.sum())
        ratio = np.zeros(size, dtype=np.float64)
        nonzero = r > 0
        ratio[nonzero] = v[nonzero] / r[nonzero]
        fdr_total += float(ratio.sum())
    return FdrScenarioResult(
        empirical_fdr=fdr_total / reps,
        empirical_far=far_hits / reps,
    )


def one_factor_rejection_histogram(
    alphas: Sequence[float],
    rho: float,
    reps: int,
    seed: int,
) -> np.ndarray:
    """Histogram of V over reps for true nulls tested at per-study levels.

    T_i = loading_i * W + sqrt(1 - |rho|) * eps_i with common factor W;
    negative rho (opposite-sign loadings) is admissible only for k <= 2.
    Returns counts[v] for v = 0..k.
    """
    alphas = [require_probability(a, "alpha", open_interval=True) for a in alphas]
    k = len(alphas)
    if k == 0:
        raise ValueError("alphas must be nonempty")
    rho = require_correlation(rho)
    if rho < 0.0 and k > 2:
        raise ValueError("negative rho is only admissible for k <= 2")
    reps = _index_at_least(reps, "reps", 1)
    seed = _seed64(seed)

    if rho >= 0.0:
        loadings = np.full(k, math.sqrt(rho))
    else:
        root = math.sqrt(-rho)
        loadings = np.array([root, -root][:k])
    residual = math.sqrt(1.0 - abs(rho))
    thresholds = np.array([std_normal_quantile(1.0 - a) for a in alphas])

    counts = np.zeros(k + 1, dtype=np.int64)
    for block, start in enumerate(range(0, reps, _BLOCK)):
        size = min(_BLOCK, reps - start)
        g = keyed_stream(seed, block).standard_normal((size, 1 + k))
        v = kernels.one_factor_counts(g[:, 0], g[:, 1:], loadings, residual, thresholds)
        counts += np.bincount(v, minlength=k + 1)
    return counts


def simulate_V_distribution(
    n_true: int,
    rho: float,
    alpha: float,
    reps: int,
    seed: int,
) -> CountDistribution:
    """Empirical distribution of V under the equicorrelated one-factor model.

    rho must lie in [0, 1]; rho = 1 is the degenerate all-or-nothing limit
    and returns its exact two-point distribution without sampling.
    """
    n_true = _index_at_least(n_true, "n_true", 1)
    rho = require_correlation(rho)
    if rho < 0.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    alpha = require_probability(alpha, "alpha", open_interval=True)
    if rho == 1.0:
        return CountDistribution(((0, 1.0 - alpha), (n_true, alpha)))
    counts = one_factor_rejection_histogram([alpha] * n_true, rho, reps, seed)
    return CountDistribution.from_counts(counts.tolist())


@dataclass(frozen=True)
class ControlDiagnostics:
    """Stability diagnostics for a shared-control platform."""

    control_z: float
    avg_pairwise_corr: float

    def as_dict(self) -> dict[str, float]:
        return {"control_z": self.control_z, "avg_pairwise_corr": self.avg_pairwise_corr}


def control_performance_diagnostics(
    config: PlatformConfig, control_mean: float
) -> ControlDiagnostics:
    """Standardized control-mean deviation and the model-implied mean pairwise correlation.

    ``control_mean`` is the realized control estimate from
    simulate_platform_detailed; its truth is 0 with variance 1/control_size.
    Requires an arm-based config (one-factor platforms record no control draw).
    """
    if config.one_factor_rho is not None:
        raise ValueError("control diagnostics require an arm-based (shared-control) platform")
    control_mean = float(control_mean)
    if not math.isfinite(control_mean):
        raise ValueError("control_mean must be finite")
    z = control_mean * math.sqrt(config.control_size)
    from .variance import shared_control_correlation

    k = config.k
    if k == 1:
        avg = 0.0
    else:
        pairs = [
            shared_control_correlation(config.arm_sizes[i], config.arm_sizes[j], config.control_size)
            for i in range(k)
            for j in range(i + 1, k)
        ]
        avg = math.fsum(pairs) / len(pairs)
    return ControlDiagnostics(control_z=z, avg_pairwise_corr=avg)
