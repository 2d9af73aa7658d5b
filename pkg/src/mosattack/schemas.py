"""Request/response models of the HTTP service.

The detector, solver and GA settings reuse the library's config dataclasses,
so their defaults and validation live in one place.
"""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .ga_attack import GaConfig
from .hard_detect import HardDetectorConfig
from .harness import ExperimentConfig, SyntheticPool
from .methods import METHOD_NAMES, canonical_name
from .sim import POOL_PRESETS, ParameterPool, SynthPoolParams
from .soft_recon import SoftConfig

RatingRows = list[list[int]]


class Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PoolSpec(Model):
    """Synthetic pool recipe, or an inline pool (e.g. a pool file read by the client)."""

    source: Literal["synthetic", "inline"] = "synthetic"
    preset: str = "uniform"
    n_subjects: int = Field(1257, ge=1)
    n_items: int = Field(10073, ge=1)
    seed: int = Field(0, ge=0)
    bias_sd: Optional[float] = None
    inconsistency_mean: Optional[float] = None
    inconsistency_sd: Optional[float] = None
    mos_distribution: Optional[str] = None
    mos_low: Optional[float] = None
    mos_high: Optional[float] = None
    mos_mean: Optional[float] = None
    mos_sd: Optional[float] = None
    biases: Optional[list[float]] = None
    inconsistencies: Optional[list[float]] = None
    mos_values: Optional[list[float]] = None

    @field_validator("preset")
    @classmethod
    def _known_preset(cls, v: str) -> str:
        if v not in POOL_PRESETS:
            raise ValueError(f"unknown preset {v!r}; choose from {sorted(POOL_PRESETS)}")
        return v

    def params(self) -> SynthPoolParams:
        base = POOL_PRESETS[self.preset]
        overrides = {
            k: getattr(self, k)
            for k in ("bias_sd", "inconsistency_mean", "inconsistency_sd", "mos_distribution",
                      "mos_low", "mos_high", "mos_mean", "mos_sd")
            if getattr(self, k) is not None
        }
        return SynthPoolParams(**{**base.__dict__, **overrides})

    def resolve(self):
        if self.source == "inline":
            if self.biases is None or self.inconsistencies is None or self.mos_values is None:
                raise ValueError("inline pool needs biases, inconsistencies and mos_values")
            return ParameterPool(self.biases, self.inconsistencies, self.mos_values)
        return SyntheticPool(self.n_subjects, self.n_items, self.seed, self.params())


class SimulateRequest(Model):
    pool: PoolSpec = PoolSpec()
    n_subjects: int = Field(..., ge=2)
    n_items: int = Field(..., ge=1)
    seed: int = Field(0, ge=0)


class DatasetOut(Model):
    ratings: RatingRows
    truth: list[float]
    bias: list[float]
    inconsistency: list[float]
    seed: int


class DetectRequest(Model):
    method: str
    ratings: RatingRows
    config: HardDetectorConfig = HardDetectorConfig()


class DetectResponse(Model):
    method: str
    inlier_mask: list[bool]
    removed: list[int]
    scores: list[float]


class ReconstructRequest(Model):
    method: Literal["mos", "sureal", "esqr", "zrec"]
    ratings: RatingRows
    mask: Optional[list[bool]] = None
    config: SoftConfig = SoftConfig()


class ReconstructResponse(Model):
    method: str
    scores: list[float]
    row_weights: Optional[list[float]] = None
    cell_weights: Optional[list[list[float]]] = None
    converged: bool = True


class AttackRequest(Model):
    method: str
    ratings: RatingRows
    truth: list[float]
    n_attackers: int = Field(5, ge=1)
    ga: GaConfig = GaConfig()
    hard: HardDetectorConfig = HardDetectorConfig()
    soft: SoftConfig = SoftConfig()


class GenerationStat(Model):
    generation: int
    best: float
    mean: float


class AttackResponse(Model):
    method: str
    best_attack: RatingRows
    best_fitness: float
    evaluations: int
    history: list[GenerationStat]


class ExperimentSection(Model):
    n_datasets: int = Field(250, ge=1)
    n_subjects: int = Field(30, ge=2)
    n_items: int = Field(20, ge=1)
    n_attackers: int = Field(5, ge=0)
    methods: list[str] = list(METHOD_NAMES)
    master_seed: int = Field(0, ge=0)
    parallelism: int = Field(1, ge=1)
    ablation_dataset: int = Field(0, ge=0)

    @field_validator("methods")
    @classmethod
    def _known_methods(cls, v: list[str]) -> list[str]:
        return [canonical_name(m) for m in v]


class ExperimentRequest(Model):
    experiment: ExperimentSection = ExperimentSection()
    pool: PoolSpec = PoolSpec()
    ga: GaConfig = GaConfig()
    hard: HardDetectorConfig = HardDetectorConfig()
    soft: SoftConfig = SoftConfig()

    def to_config(self) -> ExperimentConfig:
        exp = self.experiment.model_dump()
        exp["methods"] = tuple(exp["methods"])
        return ExperimentConfig(pool=self.pool.resolve(), ga=self.ga, hard=self.hard,
                                soft=self.soft, **exp)


class AblationRequest(ExperimentRequest):
    method: str = "KB"


class AggregateOut(Model):
    method: str
    kind: str
    mean_rmse: float
    mean_rmsd: float
    fpr: Optional[float]
    fnr: Optional[float]
    acc: Optional[float]
    rai: float
    rmse_rank: int
    rmsd_rank: int
    rows: list[dict]


class ReportOut(Model):
    kind: str
    config: dict
    clean_baseline_rmse: float
    clean_baseline_rows: list[dict]
    aggregates: list[AggregateOut]
    density: dict[str, list[float]]


class AblationResponse(Model):
    method: str
    dataset_index: int
    ga_values: list[float]
    random_values: list[float]
    ga_best: float
    random_best: float
