"""Shared data types and small numeric helpers.

Rating matrices are plain integer numpy arrays of shape (observers, stimuli)
holding ACR levels 1..5. The composite records below (datasets, attacks,
detection results) are frozen dataclasses around such arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

LEVELS = 5
ACR_LEVELS = np.arange(1, LEVELS + 1)


class Rating(int):
    """A single ACR score; only 1..5 can be constructed."""

    def __new__(cls, value) -> "Rating":
        if isinstance(value, (bool, np.bool_)):
            raise ValueError(f"not an ACR rating: {value!r}")
        ivalue = int(value)
        if ivalue != value or not 1 <= ivalue <= LEVELS:
            raise ValueError(f"ACR rating must be an integer in 1..{LEVELS}, got {value!r}")
        return super().__new__(cls, ivalue)


def rating_matrix(data) -> np.ndarray:
    """Validate and copy ``data`` into a read-only int64 rating matrix."""
    arr = np.asarray(data)
    if arr.ndim != 2:
        raise ValueError(f"rating matrix must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"rating matrix must have positive dimensions, got {arr.shape}")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)):
            raise ValueError("rating matrix has missing or non-finite cells")
        if not np.all(arr == np.round(arr)):
            raise ValueError("rating matrix cells must be integers")
    elif arr.dtype.kind not in "iu":
        raise ValueError(f"rating matrix must be numeric, got dtype {arr.dtype}")
    out = arr.astype(np.int64)
    if out.min() < 1 or out.max() > LEVELS:
        raise ValueError(f"ratings must lie in 1..{LEVELS}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SubjectParams:
    bias: np.ndarray
    inconsistency: np.ndarray

    def __post_init__(self):
        bias = np.asarray(self.bias, dtype=float)
        inc = np.asarray(self.inconsistency, dtype=float)
        if bias.shape != inc.shape or bias.ndim != 1:
            raise ValueError("bias and inconsistency must be 1-D arrays of equal length")
        if np.any(inc < 0):
            raise ValueError("inconsistency must be non-negative")
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "inconsistency", inc)


@dataclass(frozen=True)
class Dataset:
    """A sampled rating matrix together with the parameters that produced it."""

    ratings: np.ndarray
    truth: np.ndarray
    subjects: SubjectParams
    seed: int = 0

    def __post_init__(self):
        ratings = rating_matrix(self.ratings)
        truth = np.asarray(self.truth, dtype=float)
        if truth.ndim != 1 or truth.shape[0] != ratings.shape[1]:
            raise ValueError("ground truth length must equal the number of stimuli")
        if not np.all(np.isfinite(truth)):
            raise ValueError("ground truth values must be finite")
        if self.subjects.bias.shape[0] != ratings.shape[0]:
            raise ValueError("subject parameters must have one entry per observer")
        object.__setattr__(self, "ratings", ratings)
        object.__setattr__(self, "truth", truth)

    @property
    def n_subjects(self) -> int:
        return self.ratings.shape[0]

    @property
    def n_items(self) -> int:
        return self.ratings.shape[1]

    @property
    def truth_out_of_range(self) -> bool:
        return bool(np.any((self.truth < 1) | (self.truth > LEVELS)))


@dataclass(frozen=True)
class AttackMatrix:
    ratings: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ratings", rating_matrix(self.ratings))

    @property
    def n_attackers(self) -> int:
        return self.ratings.shape[0]


@dataclass(frozen=True)
class StackedMatrix:
    ratings: np.ndarray
    attacker_flags: np.ndarray

    @property
    def clean(self) -> np.ndarray:
        return self.ratings[~self.attacker_flags]


def stack(dataset: Dataset, attack: Optional[AttackMatrix]) -> StackedMatrix:
    """Append the attacker rows below the dataset rows."""
    base = dataset.ratings
    if attack is None or attack.ratings.shape[0] == 0:
        flags = np.zeros(base.shape[0], dtype=bool)
        return StackedMatrix(base, flags)
    extra = attack.ratings
    if extra.shape[1] != base.shape[1]:
        raise ValueError(
            f"attack has {extra.shape[1]} stimuli but dataset has {base.shape[1]}"
        )
    ratings = np.vstack([base, extra])
    ratings.setflags(write=False)
    flags = np.zeros(ratings.shape[0], dtype=bool)
    flags[base.shape[0]:] = True
    return StackedMatrix(ratings, flags)


def empirical_pmf(column: Sequence[int]) -> np.ndarray:
    col = np.asarray(column, dtype=np.int64).ravel()
    if col.size == 0:
        raise ValueError("empty stimulus column")
    counts = np.bincount(col - 1, minlength=LEVELS)[:LEVELS]
    return counts / col.size


def category_counts(m: np.ndarray) -> np.ndarray:
    """Counts per (stimulus, level), shape (J, 5)."""
    m = np.asarray(m, dtype=np.int64)
    onehot = m[:, :, None] == ACR_LEVELS
    return onehot.sum(axis=0)


def smoothed_pmfs(m: np.ndarray, alpha: float) -> np.ndarray:
    """Additively smoothed per-stimulus pmfs, shape (J, 5)."""
    counts = category_counts(m)
    return (counts + alpha) / (m.shape[0] + LEVELS * alpha)


def zscore_columns(m: np.ndarray) -> np.ndarray:
    """Column z-scores with the population std; zero-variance columns map to 0."""
    x = np.asarray(m, dtype=float)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    centered = x - mean
    safe = np.where(std > 0, std, 1.0)
    return np.where(std > 0, centered / safe, 0.0)


def row_pearson(rows: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Pearson correlation of every row with ``target``; 0 where either side is flat."""
    x = np.asarray(rows, dtype=float)
    y = np.asarray(target, dtype=float)
    xc = x - x.mean(axis=1, keepdims=True)
    yc = y - y.mean()
    sx = np.sqrt((xc * xc).sum(axis=1))
    sy = np.sqrt((yc * yc).sum())
    denom = sx * sy
    num = xc @ yc
    out = np.zeros(x.shape[0])
    ok = denom > 1e-12
    out[ok] = num[ok] / denom[ok]
    return np.clip(out, -1.0, 1.0)


@dataclass(frozen=True)
class DetectionResult:
    """Outcome of a detector or reconstructor on one rating matrix.

    ``inlier_mask`` is set for hard methods. Soft methods fill ``row_weights``
    (normalized to sum 1) and, for per-score weighting, ``cell_weights``.
    """

    kind: Literal["hard", "soft"]
    scores: np.ndarray
    inlier_mask: Optional[np.ndarray] = None
    row_weights: Optional[np.ndarray] = None
    cell_weights: Optional[np.ndarray] = None
    converged: bool = True
    extras: dict = field(default_factory=dict)

    @property
    def removed(self) -> list[int]:
        if self.inlier_mask is None:
            return []
        return [int(i) for i in np.flatnonzero(~self.inlier_mask)]
