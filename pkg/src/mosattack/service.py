"""Handlers behind the HTTP endpoints: request models in, response models out."""
from __future__ import annotations

import numpy as np

from . import schemas
from .core import Dataset, SubjectParams, rating_matrix
from .ga_attack import ga_optimize
from .harness import resolve_pool, run_ablation, run_spammers, run_worst_case
from .methods import MethodUnderTest
from .sim import SimConfig, sample_dataset
from .soft_recon import esqr, mos, sureal, zrec


def simulate(req: schemas.SimulateRequest) -> schemas.DatasetOut:
    pool = resolve_pool(req.pool.resolve())
    d = sample_dataset(pool, SimConfig(req.n_subjects, req.n_items, req.seed))
    return schemas.DatasetOut(
        ratings=d.ratings.tolist(),
        truth=d.truth.tolist(),
        bias=d.subjects.bias.tolist(),
        inconsistency=d.subjects.inconsistency.tolist(),
        seed=d.seed,
    )


def detect(req: schemas.DetectRequest) -> schemas.DetectResponse:
    m = rating_matrix(req.ratings)
    method = MethodUnderTest(req.method, hard=req.config)
    if method.kind != "hard":
        raise ValueError(f"{method.name} is not a hard detector")
    result = method(m)
    return schemas.DetectResponse(
        method=method.name,
        inlier_mask=result.inlier_mask.tolist(),
        removed=result.removed,
        scores=result.scores.tolist(),
    )


def reconstruct(req: schemas.ReconstructRequest) -> schemas.ReconstructResponse:
    m = rating_matrix(req.ratings)
    if req.method == "mos":
        mask = None if req.mask is None else np.asarray(req.mask, dtype=bool)
        return schemas.ReconstructResponse(method="mos", scores=mos(m, mask).tolist())
    if req.mask is not None:
        raise ValueError("a mask only applies to plain mos")
    if req.method == "sureal":
        fit = sureal(m, req.config)
        return schemas.ReconstructResponse(
            method="sureal", scores=fit.scores.tolist(),
            row_weights=fit.row_weights.tolist(), converged=fit.converged,
        )
    if req.method == "esqr":
        fit = esqr(m, req.config)
        return schemas.ReconstructResponse(
            method="esqr", scores=fit.scores.tolist(),
            row_weights=fit.row_weights.tolist(), cell_weights=fit.cell_weights.tolist(),
        )
    fit = zrec(m, req.config)
    return schemas.ReconstructResponse(
        method="zrec", scores=fit.scores.tolist(), row_weights=fit.row_weights.tolist()
    )


def attack(req: schemas.AttackRequest) -> schemas.AttackResponse:
    ratings = rating_matrix(req.ratings)
    n = ratings.shape[0]
    dataset = Dataset(ratings, req.truth, SubjectParams(np.zeros(n), np.zeros(n)))
    method = MethodUnderTest(req.method, req.hard, req.soft)
    outcome = ga_optimize(dataset, method, req.ga, n_attackers=req.n_attackers)
    return schemas.AttackResponse(
        method=method.name,
        best_attack=outcome.best_attack.ratings.tolist(),
        best_fitness=outcome.best_fitness,
        evaluations=outcome.evaluations,
        history=outcome.history,
    )


def worst_case(req: schemas.ExperimentRequest) -> schemas.ReportOut:
    return schemas.ReportOut.model_validate(run_worst_case(req.to_config()).to_dict())


def spammers(req: schemas.ExperimentRequest) -> schemas.ReportOut:
    return schemas.ReportOut.model_validate(run_spammers(req.to_config()).to_dict())


def ablation(req: schemas.AblationRequest) -> schemas.AblationResponse:
    res = run_ablation(req.to_config(), req.method)
    return schemas.AblationResponse(
        method=res.method,
        dataset_index=res.dataset_index,
        ga_values=res.ga_values.tolist(),
        random_values=res.random_values.tolist(),
        ga_best=res.ga_best,
        random_best=res.random_best,
    )
