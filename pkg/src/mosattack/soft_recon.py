"""Scale reconstruction: plain MOS and the soft observer-weighting reconstructors.

The three soft methods are self-contained re-statements of their published
ideas, not ports of the reference code:

* ``sureal``: additive subject model r = psi_j + delta_i + v_i * noise, fitted by
  alternating closed-form updates of the Gaussian likelihood.
* ``esqr``: each score weighted by the inverse of its surprisal under the
  stimulus' rating distribution.
* ``zrec``: bias-corrected weighted mean with weights 1 / inconsistency**2.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import smoothed_pmfs

SOFT_METHODS = ("SUREAL", "ESQR", "ZREC")


@dataclass(frozen=True)
class SoftConfig:
    max_iterations: int = 500
    convergence_tol: float = 1e-6
    esqr_surprise_floor: float = 0.02
    esqr_alpha: float = 0.5
    min_inconsistency: float = 0.05

    def __post_init__(self):
        for name in ("max_iterations", "convergence_tol", "esqr_surprise_floor",
                     "esqr_alpha", "min_inconsistency"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


DEFAULT_SOFT = SoftConfig()


def mos(m: np.ndarray, mask: Optional[np.ndarray] = None) -> np.ndarray:
    x = np.asarray(m, dtype=float)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (x.shape[0],):
            raise ValueError("mask must have one entry per row")
        x = x[mask]
    if x.shape[0] == 0:
        raise ValueError("mask keeps no rows")
    return x.mean(axis=0)


class SubjectModelEstimate(NamedTuple):
    psi: np.ndarray
    delta_hat: np.ndarray
    v_hat: np.ndarray


class SurealFit(NamedTuple):
    scores: np.ndarray
    row_weights: np.ndarray
    estimate: SubjectModelEstimate
    converged: bool
    iterations: int
    objective_trace: list


def gaussian_nll(m: np.ndarray, est: SubjectModelEstimate) -> float:
    """Negative log-likelihood of the additive model, up to a constant."""
    x = np.asarray(m, dtype=float)
    resid = x - est.psi[None, :] - est.delta_hat[:, None]
    v2 = est.v_hat**2
    return float((x.shape[1] * np.log(est.v_hat)).sum() + (resid**2 / (2 * v2[:, None])).sum())


def sureal(m: np.ndarray, cfg: SoftConfig = DEFAULT_SOFT, trace: bool = False) -> SurealFit:
    x = np.asarray(m, dtype=float)
    n_subj, n_items = x.shape
    if n_subj < 3 or n_items < 2:
        raise ValueError("sureal needs at least 3 subjects and 2 stimuli")
    floor2 = cfg.min_inconsistency**2
    psi = x.mean(axis=0)
    delta = np.zeros(n_subj)
    v2 = np.ones(n_subj)
    objective = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        w = 1.0 / v2
        new_psi = ((x - delta[:, None]) * w[:, None]).sum(axis=0) / w.sum()
        new_delta = (x - new_psi[None, :]).mean(axis=1)
        # zero-mean bias gauge; psi absorbs the shift so psi + delta is unchanged
        shift = new_delta.mean()
        new_delta -= shift
        new_psi += shift
        resid = x - new_psi[None, :] - new_delta[:, None]
        new_v2 = np.maximum((resid**2).mean(axis=1), floor2)
        change = max(
            np.abs(new_psi - psi).max(),
            np.abs(new_delta - delta).max(),
            np.abs(np.sqrt(new_v2) - np.sqrt(v2)).max(),
        )
        psi, delta, v2 = new_psi, new_delta, new_v2
        if trace:
            objective.append(gaussian_nll(x, SubjectModelEstimate(psi, delta, np.sqrt(v2))))
        if change < cfg.convergence_tol:
            converged = True
            break
    w = 1.0 / v2
    est = SubjectModelEstimate(psi, delta, np.sqrt(v2))
    return SurealFit(psi, w / w.sum(), est, converged, it, objective)


class EsqrFit(NamedTuple):
    scores: np.ndarray
    cell_weights: np.ndarray
    row_weights: np.ndarray
    surprise: np.ndarray


def esqr(m: np.ndarray, cfg: SoftConfig = DEFAULT_SOFT) -> EsqrFit:
    r = np.asarray(m)
    if r.shape[0] < 2:
        raise ValueError("esqr needs at least 2 subjects")
    logp = np.log(smoothed_pmfs(r, cfg.esqr_alpha))
    cols = np.arange(r.shape[1])
    surprise = np.maximum(-logp[cols[None, :], r.astype(np.int64) - 1], cfg.esqr_surprise_floor)
    w = 1.0 / surprise
    # per-stimulus rescaling leaves the weighted mean unchanged and turns equal
    # weights into exact ones, so symmetric columns give the plain mean exactly
    rel = w / w.max(axis=0)
    scores = (rel * r).sum(axis=0) / rel.sum(axis=0)
    per_row = w.sum(axis=1)
    return EsqrFit(scores, w, per_row / per_row.sum(), surprise)


class ZrecFit(NamedTuple):
    scores: np.ndarray
    row_weights: np.ndarray
    bias: np.ndarray
    inconsistency: np.ndarray


def zrec(m: np.ndarray, cfg: SoftConfig = DEFAULT_SOFT) -> ZrecFit:
    x = np.asarray(m, dtype=float)
    if x.shape[0] < 3 or x.shape[1] < 2:
        raise ValueError("zrec needs at least 3 subjects and 2 stimuli")
    dev = x - x.mean(axis=0)
    bias = dev.mean(axis=1)
    sigma = np.maximum((dev - bias[:, None]).std(axis=1), cfg.min_inconsistency)
    # scaling by the largest weight makes equal weights exactly 1.0, so the
    # symmetric case reproduces the plain mean bit for bit
    w = 1.0 / sigma**2
    w = w / w.max()
    scores = (w[:, None] * (x - bias[:, None])).sum(axis=0) / w.sum()
    return ZrecFit(scores, w / w.sum(), bias, sigma)
