"""Evaluation measures for reconstructions and hard classifications.

Attackers are the positive class: a removed attacker is a true positive,
a removed genuine observer a false positive.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DetectionResult


def rmse(est, truth) -> float:
    a = np.asarray(est, dtype=float)
    b = np.asarray(truth, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def rmsd(est_a, est_b) -> float:
    return rmse(est_a, est_b)


@dataclass(frozen=True)
class ClassificationCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Classification:
    fpr: Optional[float]
    fnr: Optional[float]
    acc: float
    counts: ClassificationCounts


def classification_counts(mask, flags) -> ClassificationCounts:
    keep = np.asarray(mask, dtype=bool)
    attacker = np.asarray(flags, dtype=bool)
    if keep.shape != attacker.shape:
        raise ValueError("mask and attacker flags differ in length")
    removed = ~keep
    return ClassificationCounts(
        tp=int((removed & attacker).sum()),
        fp=int((removed & ~attacker).sum()),
        tn=int((keep & ~attacker).sum()),
        fn=int((keep & attacker).sum()),
    )


def classification_metrics(mask, flags) -> Classification:
    """FPR, FNR and accuracy; rates with an empty reference class are None."""
    c = classification_counts(mask, flags)
    genuine = c.fp + c.tn
    attackers = c.tp + c.fn
    fpr = c.fp / genuine if genuine else None
    fnr = c.fn / attackers if attackers else None
    return Classification(fpr, fnr, (c.tp + c.tn) / c.total, c)


def rai(result: DetectionResult, flags) -> float:
    """Remaining attacker influence.

    Soft: attackers' share of the normalized row weights.
    Hard: attackers' share of the inlier set.
    """
    attacker = np.asarray(flags, dtype=bool)
    if result.kind == "hard":
        mask = np.asarray(result.inlier_mask, dtype=bool)
        if mask.shape != attacker.shape:
            raise ValueError("mask and attacker flags differ in length")
        return float((mask & attacker).sum() / mask.sum())
    w = np.asarray(result.row_weights, dtype=float)
    if w.shape != attacker.shape:
        raise ValueError("weights and attacker flags differ in length")
    return float(w[attacker].sum() / w.sum())
