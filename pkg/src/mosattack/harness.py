"""Experiment orchestration: worst-case GA runs, spammer runs, GA-vs-random ablation.

Every (dataset, method) job is replayable from ``(master_seed, dataset_index,
method)`` alone; the pool of workers only changes scheduling, and results are
assembled in index order.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .core import AttackMatrix, Dataset, stack
from .ga_attack import GaConfig, ga_optimize, random_search
from .hard_detect import DEFAULT_HARD, HardDetectorConfig
from .methods import METHOD_NAMES, MethodUnderTest, canonical_name, method_index
from .metrics import classification_metrics, rai, rmse, rmsd
from .sim import (
    ParameterPool,
    SimConfig,
    SynthPoolParams,
    derive_seed,
    make_spammers,
    sample_dataset,
    synth_pool,
)
from .soft_recon import DEFAULT_SOFT, SoftConfig, mos

# stream tags for derive_seed(master_seed, dataset_index, tag, ...)
DATASET_STREAM = 0
GA_STREAM = 1
SPAM_STREAM = 2
RANDOM_STREAM = 3

SUMMARY_COLUMNS = ("method", "mean_rmse", "mean_rmsd", "fpr", "fnr", "acc", "rai")


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class SyntheticPool:
    n_subjects: int = 1257
    n_items: int = 10073
    seed: int = 0
    params: SynthPoolParams = SynthPoolParams()

    def build(self) -> ParameterPool:
        return synth_pool(self.n_subjects, self.n_items, self.seed, self.params)


@dataclass(frozen=True)
class ExperimentConfig:
    pool: Union[SyntheticPool, ParameterPool] = SyntheticPool()
    n_datasets: int = 250
    n_subjects: int = 30
    n_items: int = 20
    n_attackers: int = 5
    methods: tuple = METHOD_NAMES
    ga: GaConfig = GaConfig()
    hard: HardDetectorConfig = DEFAULT_HARD
    soft: SoftConfig = DEFAULT_SOFT
    master_seed: int = 0
    parallelism: int = 1
    ablation_dataset: int = 0

    def __post_init__(self):
        for name in ("n_datasets", "n_subjects", "n_items", "parallelism"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_attackers < 0:
            raise ValueError("n_attackers must be non-negative")
        if not self.methods:
            raise ValueError("no methods configured")
        names = tuple(canonical_name(m) for m in self.methods)
        if len(set(names)) != len(names):
            raise ValueError("duplicate method names")
        object.__setattr__(self, "methods", names)

    def echo(self) -> dict:
        if isinstance(self.pool, ParameterPool):
            digest = hashlib.sha256()
            for arr in (self.pool.biases, self.pool.inconsistencies, self.pool.mos_values):
                digest.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
            pool = {"kind": "inline", "sizes": list(self.pool.sizes), "sha256": digest.hexdigest()}
        else:
            pool = {"kind": "synthetic", **asdict(self.pool)}
        return {
            "pool": pool,
            "n_datasets": self.n_datasets,
            "n_subjects": self.n_subjects,
            "n_items": self.n_items,
            "n_attackers": self.n_attackers,
            "methods": list(self.methods),
            "ga": asdict(self.ga),
            "hard": asdict(self.hard),
            "soft": asdict(self.soft),
            "master_seed": self.master_seed,
            "ablation_dataset": self.ablation_dataset,
        }


def resolve_pool(pool: Union[SyntheticPool, ParameterPool]) -> ParameterPool:
    return pool.build() if isinstance(pool, SyntheticPool) else pool


def dataset_for(cfg: ExperimentConfig, pool: ParameterPool, index: int) -> Dataset:
    seed = derive_seed(cfg.master_seed, index, DATASET_STREAM)
    return sample_dataset(pool, SimConfig(cfg.n_subjects, cfg.n_items, seed))


def ga_seed_for(cfg: ExperimentConfig, index: int, method: str) -> int:
    return derive_seed(cfg.master_seed, index, GA_STREAM, method_index(method))


def _method(cfg: ExperimentConfig, name: str) -> MethodUnderTest:
    return MethodUnderTest(name, cfg.hard, cfg.soft)


def _attack_for(cfg, dataset, index, name, mode) -> tuple[Optional[AttackMatrix], dict]:
    if cfg.n_attackers == 0:
        return None, {}
    if mode == "spammers":
        seed = derive_seed(cfg.master_seed, index, SPAM_STREAM)
        return make_spammers(cfg.n_attackers, cfg.n_items, seed), {"attack_seed": seed}
    seed = ga_seed_for(cfg, index, name)
    outcome = ga_optimize(
        dataset, _method(cfg, name), replace(cfg.ga, seed=seed), n_attackers=cfg.n_attackers
    )
    return outcome.best_attack, {"attack_seed": seed, "evaluations": outcome.evaluations}


def run_job(cfg: ExperimentConfig, pool: ParameterPool, index: int, name: str, mode: str) -> dict:
    """One (dataset, method) cell of an experiment."""
    try:
        dataset = dataset_for(cfg, pool, index)
        method = _method(cfg, name)
        attack, info = _attack_for(cfg, dataset, index, name, mode)
        stacked = stack(dataset, attack)
        attacked = method(stacked.ratings)
        clean = method(dataset.ratings)
    except Exception as exc:
        raise ExperimentError(
            f"{mode} run failed: dataset_index={index} method={name} "
            f"master_seed={cfg.master_seed}: {exc}"
        ) from exc
    row = {
        "dataset_index": index,
        "dataset_seed": dataset.seed,
        "method": method.name,
        "rmse": rmse(attacked.scores, dataset.truth),
        "rmsd": rmsd(attacked.scores, clean.scores),
        "clean_rmse": rmse(clean.scores, dataset.truth),
        "fpr": None,
        "fnr": None,
        "acc": None,
        "rai": rai(attacked, stacked.attacker_flags),
        **info,
    }
    if attacked.kind == "hard":
        cls = classification_metrics(attacked.inlier_mask, stacked.attacker_flags)
        row.update(fpr=cls.fpr, fnr=cls.fnr, acc=cls.acc)
    if attack is not None:
        row["attack"] = attack.ratings.tolist()
    return row


def _run_job_args(args):
    return run_job(*args)


def _run_jobs(cfg: ExperimentConfig, pool: ParameterPool, mode: str) -> list[dict]:
    jobs = [(cfg, pool, d, m, mode) for d in range(cfg.n_datasets) for m in cfg.methods]
    if cfg.parallelism == 1:
        return [_run_job_args(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=cfg.parallelism) as ex:
        return list(ex.map(_run_job_args, jobs))


def _mean(values) -> Optional[float]:
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def _competition_ranks(values: list[float]) -> list[int]:
    return [1 + sum(1 for w in values if w < v - 1e-12) for v in values]


@dataclass
class MethodAggregate:
    method: str
    kind: str
    mean_rmse: float
    mean_rmsd: float
    fpr: Optional[float]
    fnr: Optional[float]
    acc: Optional[float]
    rai: float
    rmse_rank: int = 0
    rmsd_rank: int = 0
    rows: list = field(default_factory=list)


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    aggregates: list
    clean_baseline_rmse: float
    clean_baseline_rows: list
    density: dict

    def aggregate(self, method: str) -> MethodAggregate:
        name = canonical_name(method)
        for agg in self.aggregates:
            if agg.method == name:
                return agg
        raise KeyError(method)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "clean_baseline_rmse": self.clean_baseline_rmse,
            "clean_baseline_rows": self.clean_baseline_rows,
            "aggregates": [asdict(a) for a in self.aggregates],
            "density": self.density,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentReport":
        return cls(
            kind=data["kind"],
            config=data["config"],
            aggregates=[MethodAggregate(**a) for a in data["aggregates"]],
            clean_baseline_rmse=data["clean_baseline_rmse"],
            clean_baseline_rows=data["clean_baseline_rows"],
            density={k: list(v) for k, v in data["density"].items()},
        )


def _assemble(cfg: ExperimentConfig, pool: ParameterPool, rows: list[dict], kind: str):
    aggregates = []
    for name in cfg.methods:
        mine = [r for r in rows if r["method"] == name]
        hard = MethodUnderTest(name).kind == "hard"
        aggregates.append(MethodAggregate(
            method=name,
            kind="hard" if hard else "soft",
            mean_rmse=float(np.mean([r["rmse"] for r in mine])),
            mean_rmsd=float(np.mean([r["rmsd"] for r in mine])),
            fpr=_mean(r["fpr"] for r in mine) if hard else None,
            fnr=_mean(r["fnr"] for r in mine) if hard else None,
            acc=_mean(r["acc"] for r in mine) if hard else None,
            rai=float(np.mean([r["rai"] for r in mine])),
            rows=mine,
        ))
    for agg, rank in zip(aggregates, _competition_ranks([a.mean_rmse for a in aggregates])):
        agg.rmse_rank = rank
    for agg, rank in zip(aggregates, _competition_ranks([a.mean_rmsd for a in aggregates])):
        agg.rmsd_rank = rank
    aggregates.sort(key=lambda a: (a.mean_rmse, METHOD_NAMES.index(a.method)))
    baseline = []
    for d in range(cfg.n_datasets):
        ds = dataset_for(cfg, pool, d)
        baseline.append({"dataset_index": d, "rmse": rmse(mos(ds.ratings), ds.truth)})
    return ExperimentReport(
        kind=kind,
        config=cfg.echo(),
        aggregates=aggregates,
        clean_baseline_rmse=float(np.mean([b["rmse"] for b in baseline])),
        clean_baseline_rows=baseline,
        density={a.method: [r["rmse"] for r in a.rows] for a in aggregates},
    )


def run_worst_case(cfg: ExperimentConfig) -> ExperimentReport:
    """GA attack per dataset and method; RMSE vs truth and RMSD vs the clean reconstruction."""
    pool = resolve_pool(cfg.pool)
    return _assemble(cfg, pool, _run_jobs(cfg, pool, "worst-case"), "worst-case")


def run_spammers(cfg: ExperimentConfig) -> ExperimentReport:
    """Same pipeline with uniform-random spammers shared by all methods of a dataset."""
    pool = resolve_pool(cfg.pool)
    return _assemble(cfg, pool, _run_jobs(cfg, pool, "spammers"), "spammers")


@dataclass
class AblationResult:
    method: str
    dataset_index: int
    ga_values: np.ndarray
    random_values: np.ndarray
    ga_best: float
    random_best: float


def run_ablation(cfg: ExperimentConfig, method: str = "KB") -> AblationResult:
    """All fitness values of one GA run and of an equal-budget random search."""
    name = canonical_name(method)
    pool = resolve_pool(cfg.pool)
    index = cfg.ablation_dataset
    dataset = dataset_for(cfg, pool, index)
    mut = _method(cfg, name)
    k = max(cfg.n_attackers, 1)
    ga_cfg = replace(cfg.ga, seed=ga_seed_for(cfg, index, name))
    ga = ga_optimize(dataset, mut, ga_cfg, n_attackers=k, record_all=True)
    rs_seed = derive_seed(cfg.master_seed, index, RANDOM_STREAM, method_index(name))
    rs = random_search(dataset, mut, ga_cfg.budget, rs_seed, n_attackers=k, record_all=True)
    return AblationResult(name, index, ga.fitness_values, rs.fitness_values,
                          ga.best_fitness, rs.best_fitness)


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".6g")


def _num(x):
    if x is None:
        return None
    return float(format(float(x), ".6g"))


def summary_rows(report: ExperimentReport) -> list[dict]:
    out = []
    for a in report.aggregates:
        out.append({
            "method": a.method,
            "mean_rmse": a.mean_rmse,
            "mean_rmsd": a.mean_rmsd,
            "fpr": a.fpr,
            "fnr": a.fnr,
            "acc": a.acc,
            "rai": a.rai,
            "rmse_rank": a.rmse_rank,
            "rmsd_rank": a.rmsd_rank,
        })
    return out


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def export_report(report: ExperimentReport, out_dir, fmt: str = "csv") -> list[Path]:
    """Write summary, per-method density files and the config echo."""
    if fmt not in ("csv", "json"):
        raise ValueError("format must be csv or json")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = summary_rows(report)
    columns = SUMMARY_COLUMNS + ("rmse_rank", "rmsd_rank")
    written = []
    summary = out / f"summary.{fmt}"
    if fmt == "csv":
        text = _csv_text(columns, [
            [r["method"]] + [_fmt(r[c]) for c in SUMMARY_COLUMNS[1:]] + [r["rmse_rank"], r["rmsd_rank"]]
            for r in rows
        ])
    else:
        payload = {
            "kind": report.kind,
            "clean_baseline_rmse": _num(report.clean_baseline_rmse),
            "methods": [
                {c: (r[c] if c in ("method", "rmse_rank", "rmsd_rank") else _num(r[c])) for c in columns}
                for r in rows
            ],
        }
        text = json.dumps(payload, indent=2) + "\n"
    summary.write_text(text, encoding="utf-8")
    written.append(summary)
    for method, values in report.density.items():
        path = out / f"density_{method}.csv"
        path.write_text(_csv_text(["rmse"], [[_fmt(v)] for v in values]), encoding="utf-8")
        written.append(path)
    echo = out / "config.echo.json"
    echo.write_text(json.dumps(report.config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(echo)
    return written


def export_ablation(result: AblationResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for label, values in (("ga", result.ga_values), ("random", result.random_values)):
        path = out / f"ablation_{result.method}_{label}.csv"
        path.write_text(_csv_text(["rmse"], [[_fmt(v)] for v in values]), encoding="utf-8")
        paths.append(path)
    return paths


def report_json(report: ExperimentReport) -> str:
    """Full report (including per-dataset rows), stable for byte comparison."""
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

