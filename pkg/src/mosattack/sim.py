"""Synthetic ACR datasets drawn from a bias/inconsistency subject model."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .core import LEVELS, AttackMatrix, Dataset, SubjectParams


class PoolFormatError(ValueError):
    pass


def derive_seed(*keys: int) -> int:
    """Stable 64-bit seed from a tuple of non-negative integers.

    Used for stream splitting: the same (master_seed, index, ...) tuple always
    yields the same child seed, independent of scheduling.
    """
    words = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, np.uint32)
    return int(words[0]) << 32 | int(words[1])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class ParameterPool:
    biases: np.ndarray
    inconsistencies: np.ndarray
    mos_values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.biases, dtype=float).ravel()
        v = np.asarray(self.inconsistencies, dtype=float).ravel()
        mu = np.asarray(self.mos_values, dtype=float).ravel()
        if b.shape != v.shape:
            raise ValueError("biases and inconsistencies must be paired (equal length)")
        if b.size == 0:
            raise ValueError("pool has no subjects")
        if mu.size == 0:
            raise ValueError("pool has no MOS values")
        if np.any(v < 0):
            raise ValueError("inconsistencies must be non-negative")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(v)) and np.all(np.isfinite(mu))):
            raise ValueError("pool values must be finite")
        object.__setattr__(self, "biases", b)
        object.__setattr__(self, "inconsistencies", v)
        object.__setattr__(self, "mos_values", mu)

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.biases), len(self.inconsistencies), len(self.mos_values)


@dataclass(frozen=True)
class SimConfig:
    n_subjects: int
    n_items: int
    seed: int = 0

    def __post_init__(self):
        if self.n_subjects < 2:
            raise ValueError("need at least 2 subjects")
        if self.n_items < 1:
            raise ValueError("need at least 1 item")


@dataclass(frozen=True)
class SynthPoolParams:
    """Distribution parameters of the synthetic stand-in pool.

    Biases are Normal(0, bias_sd), inconsistencies |Normal(mean, sd)|. MOS values
    are Uniform(mos_low, mos_high) or, with ``mos_distribution="normal"``,
    Normal(mos_mean, mos_sd) clipped into [mos_low, mos_high].
    """

    bias_sd: float = 0.3
    inconsistency_mean: float = 0.55
    inconsistency_sd: float = 0.2
    mos_distribution: str = "uniform"
    mos_low: float = 1.2
    mos_high: float = 4.8
    mos_mean: float = 3.0
    mos_sd: float = 0.6

    def __post_init__(self):
        if self.mos_distribution not in ("uniform", "normal"):
            raise ValueError("mos_distribution must be 'uniform' or 'normal'")
        if self.bias_sd < 0 or self.inconsistency_sd < 0 or self.mos_sd < 0:
            raise ValueError("standard deviations must be non-negative")
        if not self.mos_low <= self.mos_high:
            raise ValueError("mos_low must not exceed mos_high")


# Narrow, centred MOS spread resembling a large crowdsourced IQA database
# (about 3.35 +- 0.62 on the 1..5 scale); subject parameters as the default.
POOL_PRESETS = {
    "uniform": SynthPoolParams(),
    "koniq-like": SynthPoolParams(
        mos_distribution="normal", mos_mean=3.35, mos_sd=0.62, mos_low=1.0, mos_high=5.0
    ),
}


def parse_pool(lines: Iterable[str]) -> ParameterPool:
    """Parse the two-section pool text format.

    ``[subjects]`` holds ``bias,inconsistency`` lines, ``[mos]`` one value per
    line; ``#`` starts a comment.
    """
    section = None
    biases, incs, mos = [], [], []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("subjects", "mos"):
                raise PoolFormatError(f"line {lineno}: unknown section [{section}]")
            continue
        if section is None:
            raise PoolFormatError(f"line {lineno}: value outside of a section")
        parts = [p.strip() for p in line.split(",")]
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise PoolFormatError(f"line {lineno}: cannot parse {line!r}") from None
        if not all(np.isfinite(values)):
            raise PoolFormatError(f"line {lineno}: non-finite value")
        if section == "subjects":
            if len(values) != 2:
                raise PoolFormatError(f"line {lineno}: expected 'bias,inconsistency'")
            if values[1] < 0:
                raise PoolFormatError(f"line {lineno}: negative inconsistency {values[1]}")
            biases.append(values[0])
            incs.append(values[1])
        else:
            if len(values) != 1:
                raise PoolFormatError(f"line {lineno}: expected a single MOS value")
            mos.append(values[0])
    if not biases:
        raise PoolFormatError("pool file has no [subjects] entries")
    if not mos:
        raise PoolFormatError("pool file has no [mos] entries")
    return ParameterPool(np.array(biases), np.array(incs), np.array(mos))


def load_pool(source: Union[str, Path]) -> ParameterPool:
    with open(source, encoding="utf-8") as fh:
        return parse_pool(fh)


def dump_pool(pool: ParameterPool) -> str:
    out = ["[subjects]"]
    out += [f"{b!r},{v!r}" for b, v in zip(pool.biases.tolist(), pool.inconsistencies.tolist())]
    out.append("[mos]")
    out += [repr(m) for m in pool.mos_values.tolist()]
    return "\n".join(out) + "\n"


def synth_pool(
    n_subjects: int, n_items: int, seed: int, params: SynthPoolParams = SynthPoolParams()
) -> ParameterPool:
    if n_subjects < 1 or n_items < 1:
        raise ValueError("pool sizes must be at least 1")
    rng = make_rng(seed)
    biases = rng.normal(0.0, params.bias_sd, n_subjects)
    incs = np.abs(rng.normal(params.inconsistency_mean, params.inconsistency_sd, n_subjects))
    if params.mos_distribution == "uniform":
        mos = rng.uniform(params.mos_low, params.mos_high, n_items)
    else:
        mos = np.clip(rng.normal(params.mos_mean, params.mos_sd, n_items),
                      params.mos_low, params.mos_high)
    return ParameterPool(biases, incs, mos)


def round_clamp(x: np.ndarray) -> np.ndarray:
    """Round half away from zero, then clamp into 1..5."""
    x = np.asarray(x, dtype=float)
    rounded = np.sign(x) * np.floor(np.abs(x) + 0.5)
    return np.clip(rounded, 1, LEVELS).astype(np.int64)


def sample_ratings(
    truth: np.ndarray, bias: np.ndarray, inconsistency: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    noise = rng.standard_normal((len(bias), len(truth)))
    latent = truth[None, :] + bias[:, None] + inconsistency[:, None] * noise
    return round_clamp(latent)


def sample_dataset(pool: ParameterPool, cfg: SimConfig) -> Dataset:
    n_pool_subjects, _, n_pool_items = pool.sizes
    if cfg.n_subjects > n_pool_subjects:
        raise ValueError(f"pool has {n_pool_subjects} subjects, {cfg.n_subjects} requested")
    if cfg.n_items > n_pool_items:
        raise ValueError(f"pool has {n_pool_items} MOS values, {cfg.n_items} requested")
    rng = make_rng(cfg.seed)
    who = rng.choice(n_pool_subjects, cfg.n_subjects, replace=False)
    what = rng.choice(n_pool_items, cfg.n_items, replace=False)
    subjects = SubjectParams(pool.biases[who], pool.inconsistencies[who])
    truth = pool.mos_values[what]
    ratings = sample_ratings(truth, subjects.bias, subjects.inconsistency, rng)
    return Dataset(ratings=ratings, truth=truth, subjects=subjects, seed=int(cfg.seed))


def make_spammers(n_attackers: int, n_items: int, seed: int) -> AttackMatrix:
    """Observers rating every stimulus uniformly at random."""
    if n_attackers < 1 or n_items < 1:
        raise ValueError("spammer matrix needs positive dimensions")
    rng = make_rng(seed)
    return AttackMatrix(rng.integers(1, LEVELS + 1, size=(n_attackers, n_items)))
