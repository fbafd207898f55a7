"""Family Concurrency Matrix tooling and the append-only trial-record log.

An FCM's diagonal marks per-study rejections; entry (i, j) is 1 exactly when
studies i and j both reject, so the whole matrix is the outer AND of the
rejection vector with itself.  Matrices from separate platform trials combine
by concatenating rejection vectors, and block densities compare within-trial
concurrency against cross-trial concurrency.
"""

from __future__ import annotations

import json
import math
import operator
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .numerics import require_probability

__all__ = [
    "FamilyConcurrencyMatrix",
    "TrialRecord",
    "BlockReport",
    "build_fcm",
    "combine_fcm",
    "block_report",
    "append_record",
    "load_records",
]

_DIAG_KEYS = ("control_z", "avg_pairwise_corr")


@dataclass(frozen=True, eq=False)
class FamilyConcurrencyMatrix:
    """Symmetric binary concurrency matrix with one label per study."""

    labels: tuple[str, ...]
    m: np.ndarray

    def __post_init__(self) -> None:
        labels = tuple(str(x) for x in self.labels)
        if not labels:
            raise ValueError("labels must be nonempty")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        m = np.asarray(self.m)
        k = len(labels)
        if m.shape != (k, k):
            raise ValueError(f"matrix shape {m.shape} does not match {k} labels")
        if not np.isin(m, (0, 1)).all():
            raise ValueError("matrix entries must be 0 or 1")
        m = m.astype(np.uint8)
        diag = np.diag(m)
        if not np.array_equal(m, np.outer(diag, diag)):
            raise ValueError("matrix must equal the outer AND of its diagonal")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "m", m)

    @property
    def size(self) -> int:
        return len(self.labels)

    def rejections(self) -> np.ndarray:
        return np.diag(self.m).copy()

    def to_csv(self) -> str:
        return "\n".join(",".join(str(int(x)) for x in row) for row in self.m) + "\n"


def build_fcm(rejections: Sequence, labels: Sequence[str] | None = None) -> FamilyConcurrencyMatrix:
    """FCM from one rejection vector: m[i][j] = rejections[i] AND rejections[j]."""
    r = list(rejections)
    if not r:
        raise ValueError("rejection vector must be nonempty")
    vec = np.empty(len(r), dtype=np.uint8)
    for i, x in enumerate(r):
        if isinstance(x, (bool, np.bool_)):
            vec[i] = 1 if x else 0
        else:
            value = operator.index(x)
            if value not in (0, 1):
                raise ValueError(f"rejection entries must be 0/1 or boolean, got {x!r}")
            vec[i] = value
    if labels is None:
        labels = tuple(f"s{i}" for i in range(len(r)))
    return FamilyConcurrencyMatrix(labels=tuple(labels), m=np.outer(vec, vec))


@dataclass(frozen=True)
class TrialRecord:
    """One platform trial's rejection results, as logged to the store."""

    platform_id: str
    timestamp: str
    rejections: tuple[tuple[str, bool], ...]
    control_diag: Mapping[str, float] | None = None

    def __post_init__(self) -> None:
        if not self.platform_id:
            raise ValueError("platform_id must be nonempty")
        ts = str(self.timestamp)
        try:
            datetime.fromisoformat(ts.replace("Z", "+00:00"))
        except ValueError:
            raise ValueError(f"timestamp must be ISO-8601, got {ts!r}") from None
        object.__setattr__(self, "timestamp", ts)
        rej = tuple((str(sid), bool(flag)) for sid, flag in self.rejections)
        if not rej:
            raise ValueError("record must contain at least one study")
        ids = [sid for sid, _ in rej]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate study ids in record for {self.platform_id!r}")
        object.__setattr__(self, "rejections", rej)
        if self.control_diag is not None:
            diag = dict(self.control_diag)
            if set(diag) != set(_DIAG_KEYS):
                raise ValueError(f"control_diag keys must be {_DIAG_KEYS}, got {sorted(diag)}")
            diag = {k: float(diag[k]) for k in _DIAG_KEYS}
            if not all(math.isfinite(v) for v in diag.values()):
                raise ValueError("control_diag values must be finite")
            object.__setattr__(self, "control_diag", diag)

    def to_dict(self) -> dict:
        return {
            "platform_id": self.platform_id,
            "timestamp": self.timestamp,
            "rejections": [[sid, flag] for sid, flag in self.rejections],
            "control_diag": dict(self.control_diag) if self.control_diag is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TrialRecord":
        if not isinstance(data, Mapping):
            raise ValueError("record must be a JSON object")
        expected = {"platform_id", "timestamp", "rejections", "control_diag"}
        if set(data) != expected:
            raise ValueError(f"record fields must be {sorted(expected)}, got {sorted(data)}")
        rejections = data["rejections"]
        if not isinstance(rejections, list) or not all(
            isinstance(item, (list, tuple)) and len(item) == 2 and isinstance(item[1], bool)
            for item in rejections
        ):
            raise ValueError("rejections must be a list of [study_id, bool] pairs")
        return cls(
            platform_id=data["platform_id"],
            timestamp=data["timestamp"],
            rejections=tuple((sid, flag) for sid, flag in rejections),
            control_diag=data["control_diag"],
        )


def combine_fcm(records: Sequence[TrialRecord]) -> FamilyConcurrencyMatrix:
    """FCM of the concatenated rejection vectors of several trials.

    Labels become "platform_id/study_id"; duplicate (platform_id, study_id)
    pairs are rejected, so a trial cannot be combined with itself.
    """
    records = list(records)
    if len(records) < 2:
        raise ValueError(f"combining requires at least 2 records, got {len(records)}")
    labels: list[str] = []
    flags: list[bool] = []
    seen: set[tuple[str, str]] = set()
    for rec in records:
        for sid, flag in rec.rejections:
            key = (rec.platform_id, sid)
            if key in seen:
                raise ValueError(f"duplicate study {key!r} across records")
            seen.add(key)
            labels.append(f"{rec.platform_id}/{sid}")
            flags.append(flag)
    return build_fcm(flags, labels)


@dataclass(frozen=True)
class BlockReport:
    """Per-block concurrency densities for a partitioned combined FCM.

    ``blocks`` holds (row_platform, col_platform, density) for every block
    pair with row <= col, platforms indexed by partition order.  Diagonal
    blocks measure pairwise concurrency, so their own diagonal cells are
    excluded; a singleton block has no pairs and reports density 0.
    ``independence_expectation`` is the marginal-rate product pooled over
    off-diagonal blocks: what cross-trial density would look like if trials
    rejected independently.  ``alpha`` is the nominal per-study level the
    report was requested at; it does not enter the densities.
    """

    blocks: tuple[tuple[int, int, float], ...]
    diag_density: float
    offdiag_density: float
    independence_expectation: float
    alpha: float

    def as_dict(self) -> dict:
        return {
            "blocks": [
                {"row_platform": a, "col_platform": b, "density": d}
                for a, b, d in self.blocks
            ],
            "diag_density": self.diag_density,
            "offdiag_density": self.offdiag_density,
            "independence_expectation": self.independence_expectation,
            "alpha": self.alpha,
        }


def block_report(
    combined: FamilyConcurrencyMatrix,
    block_sizes: Sequence[int],
    alpha: float = 0.05,
) -> BlockReport:
    """Density diagnostics over consecutive blocks of a combined FCM.

    ``block_sizes`` are the per-platform study counts, in the order the
    rejection vectors were concatenated; they must cover the matrix exactly.
    """
    alpha = require_probability(alpha, "alpha", open_interval=True)
    sizes = []
    for s in block_sizes:
        s = operator.index(s)
        if s < 1:
            raise ValueError(f"block sizes must be >= 1, got {s}")
        sizes.append(s)
    if not sizes or sum(sizes) != combined.size:
        raise ValueError(
            f"partition {sizes} does not cover the {combined.size}x{combined.size} matrix"
        )
    starts = [0]
    for s in sizes:
        starts.append(starts[-1] + s)
    n_blocks = len(sizes)
    m = combined.m.astype(np.int64)
    marginals = [
        float(np.diag(m[starts[a]:starts[a + 1], starts[a]:starts[a + 1]]).mean())
        for a in range(n_blocks)
    ]

    blocks: list[tuple[int, int, float]] = []
    diag_ones = diag_cells = 0
    off_ones = off_cells = 0
    exp_num = 0.0
    exp_den = 0
    for a in range(n_blocks):
        for b in range(a, n_blocks):
            sub = m[starts[a]:starts[a + 1], starts[b]:starts[b + 1]]
            if a == b:
                cells = sizes[a] * sizes[a] - sizes[a]
                ones = int(sub.sum()) - int(np.diag(sub).sum())
                density = ones / cells if cells else 0.0
                diag_ones += ones
                diag_cells += cells
            else:
                cells = sizes[a] * sizes[b]
                ones = int(sub.sum())
                density = ones / cells
                off_ones += ones
                off_cells += cells
                exp_num += cells * marginals[a] * marginals[b]
                exp_den += cells
            blocks.append((a, b, density))
    return BlockReport(
        blocks=tuple(blocks),
        diag_density=diag_ones / diag_cells if diag_cells else 0.0,
        offdiag_density=off_ones / off_cells if off_cells else 0.0,
        independence_expectation=exp_num / exp_den if exp_den else 0.0,
        alpha=alpha,
    )


def append_record(store, record: TrialRecord) -> Path:
    """Append one record to the JSONL store; creates the file if needed."""
    path = Path(store)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(record.to_dict()) + "\n")
    return path


def load_records(store) -> tuple[list[TrialRecord], list[str]]:
    """Read the store; corrupt lines become diagnostics, valid lines still load.

    Returns (records in insertion order, diagnostics with 1-based line numbers).
    """
    path = Path(store)
    records: list[TrialRecord] = []
    diagnostics: list[str] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(TrialRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, ValueError, TypeError, KeyError) as exc:
                diagnostics.append(f"line {lineno}: {exc}")
    return records, diagnostics
