"""Declarative TOML configuration.

An experiment file mirrors the service's request body::

    [experiment]
    n_datasets = 10
    methods = ["NoOpt", "KB", "MAZ"]
    master_seed = 7

    [pool]
    source = "synthetic"      # or source = "file", file = "pool.txt"
    preset = "koniq-like"

    [ga]
    population_size = 50
    generations = 60

Pool files are read on the client side and sent inline.
"""
from __future__ import annotations

from pathlib import Path

import tomli
from pydantic import ValidationError

from .ga_attack import GaConfig
from .harness import ExperimentConfig
from .schemas import AblationRequest, ExperimentRequest
from .sim import load_pool


class ConfigError(ValueError):
    pass


def read_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def inline_pool(data: dict, base_dir: Path = Path(".")) -> dict:
    """Replace a ``source = "file"`` pool table with its inline contents."""
    pool = dict(data.get("pool") or {})
    if pool.get("source") != "file":
        return data
    if "file" not in pool:
        raise ConfigError("[pool] source = 'file' needs a 'file' entry")
    extra = set(pool) - {"source", "file"}
    if extra:
        raise ConfigError(f"unknown key(s) in [pool]: {', '.join(sorted(extra))}")
    path = Path(pool["file"])
    if not path.is_absolute():
        path = base_dir / path
    try:
        loaded = load_pool(path)
    except OSError as exc:
        raise ConfigError(f"cannot read pool file {path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"pool file {path}: {exc}") from None
    out = dict(data)
    out["pool"] = {
        "source": "inline",
        "biases": loaded.biases.tolist(),
        "inconsistencies": loaded.inconsistencies.tolist(),
        "mos_values": loaded.mos_values.tolist(),
    }
    return out


def experiment_payload(data: dict, base_dir: Path = Path("."), **overrides) -> dict:
    """Wire-ready experiment request: pool files inlined, overrides applied."""
    data = inline_pool(data, base_dir)
    exp = dict(data.get("experiment") or {})
    exp.update({k: v for k, v in overrides.items() if v is not None})
    out = dict(data)
    out["experiment"] = exp
    return out


def experiment_request(data: dict, base_dir: Path = Path("."), ablation: bool = False, **overrides):
    model = AblationRequest if ablation else ExperimentRequest
    try:
        return model.model_validate(experiment_payload(data, base_dir, **overrides))
    except ValidationError as exc:
        raise ConfigError(describe(exc)) from None


def experiment_config(data: dict, base_dir: Path = Path("."), **overrides) -> ExperimentConfig:
    req = experiment_request(data, base_dir, **overrides)
    try:
        return req.to_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_experiment(path, **overrides) -> ExperimentConfig:
    path = Path(path)
    return experiment_config(read_toml(path), path.parent, **overrides)


def section(data: dict, name: str) -> dict:
    """The ``[name]`` table, or the top-level keys of a single-purpose file."""
    if name in data:
        return dict(data[name])
    return {k: v for k, v in data.items() if not isinstance(v, dict)}


def load_ga(path) -> GaConfig:
    table = section(read_toml(path), "ga")
    try:
        return GaConfig(**table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
