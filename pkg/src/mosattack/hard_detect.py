"""Hard observer screening: each detector maps a rating matrix to an inlier mask.

All detectors are deterministic. Ties are broken towards the lowest row index,
and no detector leaves fewer than ``min_inliers`` observers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .core import category_counts, row_pearson, smoothed_pmfs, zscore_columns

HARD_METHODS = ("NoOpt", "KB", "CB", "LPCC", "HB", "MAZ", "NLL")

# Score differences below this are treated as ties.
TIE_TOL = 1e-12


@dataclass(frozen=True)
class HardDetectorConfig:
    lpcc_threshold: float = 0.75
    maz_threshold: float = 1.0
    nll_threshold: float = 1.31
    nll_alpha: float = 0.5
    hb_outlier_count: int = 5
    # BT.500 kurtosis screen
    kb_kurtosis_low: float = 2.0
    kb_kurtosis_high: float = 4.0
    kb_normal_width: float = 2.0
    kb_wide_width: float = math.sqrt(20.0)
    kb_extreme_fraction: float = 0.05
    kb_balance: float = 0.3
    cb_std_coef: float = 1.0
    min_inliers: int = 2

    def __post_init__(self):
        for name in ("lpcc_threshold", "maz_threshold", "nll_threshold", "nll_alpha",
                     "kb_normal_width", "kb_wide_width", "kb_extreme_fraction", "kb_balance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.hb_outlier_count < 0:
            raise ValueError("hb_outlier_count must be non-negative")
        if self.min_inliers < 1:
            raise ValueError("min_inliers must be at least 1")


DEFAULT_HARD = HardDetectorConfig()


def _first_extreme(values: np.ndarray, candidates: np.ndarray, largest: bool) -> int:
    """Lowest index among candidates whose value ties the extreme."""
    vals = values[candidates]
    best = vals.max() if largest else vals.min()
    close = np.abs(vals - best) <= TIE_TOL
    return int(candidates[np.argmax(close)])


def _guard(remove: np.ndarray, badness: np.ndarray, keep: int) -> np.ndarray:
    """Inlier mask from a single-pass removal decision, keeping at least ``keep`` rows.

    If too many rows would go, the least bad ones are kept (stable order).
    """
    mask = ~remove
    if mask.sum() >= keep:
        return mask
    order = np.argsort(badness, kind="stable")
    mask = np.zeros_like(mask)
    mask[order[:keep]] = True
    return mask


def detect_none(m: np.ndarray, cfg: HardDetectorConfig = DEFAULT_HARD) -> np.ndarray:
    return np.ones(np.shape(m)[0], dtype=bool)


def kb_counts(m: np.ndarray, cfg: HardDetectorConfig = DEFAULT_HARD) -> tuple[np.ndarray, np.ndarray]:
    """Per-subject counts of votes above (P) and below (Q) the extreme bounds."""
    x = np.asarray(m, dtype=float)
    mean = x.mean(axis=0)
    dev = x - mean
    m2 = (dev**2).mean(axis=0)
    m4 = (dev**4).mean(axis=0)
    safe = np.where(m2 > 0, m2, 1.0)
    kurt = np.where(m2 > 0, m4 / safe**2, 3.0)
    normal = (kurt >= cfg.kb_kurtosis_low) & (kurt <= cfg.kb_kurtosis_high)
    width = np.where(normal, cfg.kb_normal_width, cfg.kb_wide_width) * np.sqrt(m2)
    # a vote sitting exactly on a bound (up to rounding) is not extreme
    above = (x > mean + width + TIE_TOL * 8).sum(axis=1)
    below = (x < mean - width - TIE_TOL * 8).sum(axis=1)
    return above, below


def detect_kb(m: np.ndarray, cfg: HardDetectorConfig = DEFAULT_HARD) -> np.ndarray:
    n_items = np.shape(m)[1]
    p, q = kb_counts(m, cfg)
    total = p + q
    frac = total / n_items
    balance = np.abs(p - q) / np.where(total > 0, total, 1)
    remove = (total > 0) & (frac > cfg.kb_extreme_fraction) & (balance < cfg.kb_balance)
    return _guard(remove, frac, cfg.min_inliers)


def cb_correlations(m: np.ndarray) -> np.ndarray:
    """min(Pearson, Spearman) of each subject against the all-subject MOS."""
    x = np.asarray(m, dtype=float)
    mos = x.mean(axis=0)
    pearson = row_pearson(x, mos)
    spearman = row_pearson(rankdata(x, axis=1), rankdata(mos))
    return np.minimum(pearson, spearman)


def detect_cb(m: np.ndarray, cfg: HardDetectorConfig = DEFAULT_HARD) -> np.ndarray:
    c = cb_correlations(m)
    threshold = c.mean() - cfg.cb_std_coef * c.std()
    remove = c < threshold - TIE_TOL
    return _guard(remove, -c, cfg.min_inliers)


def detect_lpcc(m: np.ndarray, cfg: HardDetectorConfig = DEFAULT_HARD) -> np.ndarray:
    x = np.asarray(m, dtype=float)
    mask = np.ones(x.shape[0], dtype=bool)
    keep = max(cfg.min_inliers, 2)
    while mask.sum() > keep:
        idx = np.flatnonzero(mask)
        target = x[idx].mean(axis=0)
        if np.ptp(target) == 0:
            # flat MOS carries no ranking to correlate against
            break
        corr = np.full(x.shape[0], np.inf)
        corr[idx] = row_pearson(x[idx], target)
        worst = _first_extreme(corr, idx, largest=False)
        if corr[worst] >= cfg.lpcc_threshold:
            break
        mask[worst] = False
    return mask


def hb_removal_entropies(m: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Total column entropy (nats) after removing each inlier; inf for non-inliers.

    Only the removed subject's own category changes per column, so every
    candidate is scored from the current counts in one pass.
    """
    r = np.asarray(m, dtype=np.int64)
    n_after = int(mask.sum()) - 1
    counts = category_counts(r[mask]).astype(float)
    flogf = np.where(counts > 0, counts * np.log(np.where(counts > 0, counts, 1.0)), 0.0)
    cols = np.arange(r.shape[1])
    own = counts[cols[None, :], r - 1]
    own_less = own - 1
    delta = np.where(own_less > 0, own_less * np.log(np.where(own_less > 0, own_less, 1.0)), 0.0)
    delta = delta - np.where(own > 0, own * np.log(np.where(own > 0, own, 1.0)), 0.0)
    plogp = flogf.sum() + delta.sum(axis=1)
    total = r.shape[1] * math.log(n_after) - plogp / n_after
    return np.where(mask, total, np.inf)


def _total_entropy(m: np.ndarray, mask: np.ndarray) -> float:
    counts = category_counts(np.asarray(m)[mask]).astype(float)
    p = counts / mask.sum()
    return float(-(p[p > 0] * np.log(p[p > 0])).sum())


def detect_hb(m: np.ndarray, cfg: HardDetectorConfig = DEFAULT_HARD) -> np.ndarray:
    n = np.shape(m)[0]
    if cfg.hb_outlier_count >= n:
        raise ValueError(
            f"HB needs more subjects ({n}) than outliers to remove ({cfg.hb_outlier_count})"
        )
    mask = np.ones(n, dtype=bool)
    for _ in range(cfg.hb_outlier_count):
        if mask.sum() <= cfg.min_inliers or _total_entropy(m, mask) == 0:
            break
        scores = hb_removal_entropies(m, mask)
        mask[_first_extreme(scores, np.flatnonzero(mask), largest=False)] = False
    return mask


def maz_scores(m: np.ndarray) -> np.ndarray:
    return np.abs(zscore_columns(m)).mean(axis=1)


def detect_maz(m: np.ndarray, cfg: HardDetectorConfig = DEFAULT_HARD) -> np.ndarray:
    s = maz_scores(m)
    return _guard(s > cfg.maz_threshold, s, cfg.min_inliers)


def nll_scores(m: np.ndarray, mask: np.ndarray, alpha: float) -> np.ndarray:
    """Per-item mean surprisal of each row under smoothed pmfs of the masked rows."""
    r = np.asarray(m, dtype=np.int64)
    logp = np.log(smoothed_pmfs(r[mask], alpha))
    cols = np.arange(r.shape[1])
    return -logp[cols[None, :], r - 1].mean(axis=1)


def detect_nll(m: np.ndarray, cfg: HardDetectorConfig = DEFAULT_HARD) -> np.ndarray:
    n = np.shape(m)[0]
    mask = np.ones(n, dtype=bool)
    keep = max(cfg.min_inliers, 2)
    while mask.sum() > keep:
        scores = nll_scores(m, mask, cfg.nll_alpha)
        worst = _first_extreme(scores, np.flatnonzero(mask), largest=True)
        if scores[worst] <= cfg.nll_threshold:
            break
        mask[worst] = False
    return mask


DETECTORS = {
    "NoOpt": detect_none,
    "KB": detect_kb,
    "CB": detect_cb,
    "LPCC": detect_lpcc,
    "HB": detect_hb,
    "MAZ": detect_maz,
    "NLL": detect_nll,
}


def detect(name: str, m: np.ndarray, cfg: HardDetectorConfig = DEFAULT_HARD) -> np.ndarray:
    try:
        fn = DETECTORS[name]
    except KeyError:
        raise ValueError(f"unknown hard detector {name!r}; choose from {HARD_METHODS}") from None
    return fn(m, cfg)

