"""Black-box attacks: a genetic algorithm over K x J attacker rating blocks.

The adversary appends K rows of ACR scores to a dataset and tries to
maximize the ground-truth RMSE of whatever the method under test reconstructs.
``random_search`` is the equal-budget baseline and ``brute_force_best`` the
exact oracle for tiny instances.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .core import LEVELS, AttackMatrix, Dataset, stack
from .methods import MethodUnderTest
from .metrics import rmse
from .sim import make_rng

BRUTE_FORCE_LIMIT = 10**7
CROSSOVER_RULES = ("rows_cols", "uniform")


class FitnessError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 150
    generations: int = 300
    mutation_rate: float = 0.005
    elitism_rate: float = 0.03
    seed: int = 0
    crossover: str = "rows_cols"
    two_children: bool = True

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        for name in ("mutation_rate", "elitism_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.crossover not in CROSSOVER_RULES:
            raise ValueError(f"crossover must be one of {CROSSOVER_RULES}")
        if self.elite_count >= self.population_size:
            raise ValueError("elitism leaves no room for offspring")

    @property
    def elite_count(self) -> int:
        # half-up rounding: 3% of 150 is 5 elites, not banker's 4
        return max(1, math.floor(self.elitism_rate * self.population_size + 0.5))

    @property
    def budget(self) -> int:
        """Individuals assessed over a run, counting every generation in full."""
        return self.population_size * (self.generations + 1)


@dataclass
class AttackOutcome:
    best_attack: AttackMatrix
    best_fitness: float
    history: list = field(default_factory=list)
    evaluations: int = 0
    fitness_values: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        out = {
            "best_attack": self.best_attack.ratings.tolist(),
            "best_fitness": self.best_fitness,
            "evaluations": self.evaluations,
            "history": self.history,
        }
        if self.fitness_values is not None:
            out["fitness_values"] = self.fitness_values.tolist()
        return out


class Fitness:
    """Ground-truth RMSE of ``method`` on the dataset with ``genome`` appended.

    Counts every real method invocation in ``calls``.
    """

    def __init__(self, dataset: Dataset, method: MethodUnderTest):
        self.dataset = dataset
        self.method = method
        self.calls = 0

    def __call__(self, genome: np.ndarray) -> float:
        self.calls += 1
        ratings = np.vstack([self.dataset.ratings, genome])
        try:
            result = self.method(ratings)
        except Exception as exc:
            raise FitnessError(
                f"method {self.method.name} failed on dataset seed {self.dataset.seed}: {exc}"
            ) from exc
        return rmse(result.scores, self.dataset.truth)


def fitness(attack: AttackMatrix, dataset: Dataset, method: MethodUnderTest) -> float:
    stacked = stack(dataset, attack)
    return rmse(method(stacked.ratings).scores, dataset.truth)


def _evaluate_batch(fit: Fitness, genomes: np.ndarray, cache: dict, executor=None) -> np.ndarray:
    keys = [g.tobytes() for g in genomes]
    todo = {}
    for key, g in zip(keys, genomes):
        if key not in cache and key not in todo:
            todo[key] = g
    if todo:
        if executor is None:
            values = [fit(g) for g in todo.values()]
        else:
            before = fit.calls
            values = list(executor.map(fit, todo.values()))
            fit.calls = before + len(values)
        cache.update(zip(todo.keys(), values))
    return np.array([cache[k] for k in keys])


def _crossover(a: np.ndarray, b: np.ndarray, rule: str, rng: np.random.Generator):
    n_rows, n_cols = a.shape
    if rule == "uniform":
        take = rng.random(a.shape) < 0.5
        return np.where(take, b, a), np.where(take, a, b)
    rows = rng.choice(n_rows, size=rng.integers(0, n_rows + 1), replace=False)
    cols = rng.choice(n_cols, size=rng.integers(0, n_cols + 1), replace=False)
    c1, c2 = a.copy(), b.copy()
    c1[rows, :] = b[rows, :]
    c2[rows, :] = a[rows, :]
    c1[:, cols] = b[:, cols]
    c2[:, cols] = a[:, cols]
    return c1, c2


def _roulette(fit: np.ndarray, size, rng: np.random.Generator) -> np.ndarray:
    total = fit.sum()
    if not total > 0:
        return rng.integers(0, len(fit), size=size)
    return rng.choice(len(fit), size=size, p=fit / total)


def _breed(pop: np.ndarray, fit: np.ndarray, n_children: int, cfg: GaConfig, rng) -> np.ndarray:
    per_pair = 2 if cfg.two_children else 1
    n_pairs = -(-n_children // per_pair)
    parents = _roulette(fit, (n_pairs, 2), rng)
    children = []
    for i, j in parents:
        c1, c2 = _crossover(pop[i], pop[j], cfg.crossover, rng)
        children.append(c1)
        if cfg.two_children:
            children.append(c2)
    kids = np.stack(children[:n_children])
    mutate = rng.random(kids.shape) < cfg.mutation_rate
    kids[mutate] = rng.integers(1, LEVELS + 1, size=int(mutate.sum()))
    return kids


def ga_optimize(
    dataset: Dataset,
    method: MethodUnderTest,
    cfg: GaConfig = GaConfig(),
    n_attackers: int = 5,
    record_all: bool = False,
    executor=None,
    callback: Optional[Callable[[int, np.ndarray, np.ndarray], None]] = None,
) -> AttackOutcome:
    """Evolve attacker blocks maximizing ``fitness``.

    Each generation keeps the elite unchanged and fills the rest with
    roulette-selected parent pairs, row/column crossover and per-gene
    mutation. Duplicate genomes are evaluated once. All random draws come
    from one generator, so ``executor`` only changes scheduling.
    """
    if n_attackers < 1:
        raise ValueError("need at least one attacker")
    rng = make_rng(cfg.seed)
    fit_fn = Fitness(dataset, method)
    cache: dict = {}
    shape = (cfg.population_size, n_attackers, dataset.n_items)
    pop = rng.integers(1, LEVELS + 1, size=shape)
    fit = _evaluate_batch(fit_fn, pop, cache, executor)
    history = [{"generation": 0, "best": float(fit.max()), "mean": float(fit.mean())}]
    seen = [fit] if record_all else None
    if callback:
        callback(0, pop, fit)
    n_elite = cfg.elite_count
    for gen in range(1, cfg.generations + 1):
        order = np.argsort(-fit, kind="stable")[:n_elite]
        kids = _breed(pop, fit, cfg.population_size - n_elite, cfg, rng)
        kid_fit = _evaluate_batch(fit_fn, kids, cache, executor)
        pop = np.concatenate([pop[order], kids])
        fit = np.concatenate([fit[order], kid_fit])
        history.append({"generation": gen, "best": float(fit.max()), "mean": float(fit.mean())})
        if record_all:
            seen.append(fit)
        if callback:
            callback(gen, pop, fit)
    best = int(np.argmax(fit))
    return AttackOutcome(
        best_attack=AttackMatrix(pop[best]),
        best_fitness=float(fit[best]),
        history=history,
        evaluations=fit_fn.calls,
        fitness_values=np.concatenate(seen) if record_all else None,
    )


def random_search(
    dataset: Dataset,
    method: MethodUnderTest,
    budget: int,
    seed: int,
    n_attackers: int = 5,
    record_all: bool = False,
) -> AttackOutcome:
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = make_rng(seed)
    fit_fn = Fitness(dataset, method)
    values = np.empty(budget)
    best_val, best_genome = -np.inf, None
    for k in range(budget):
        genome = rng.integers(1, LEVELS + 1, size=(n_attackers, dataset.n_items))
        values[k] = fit_fn(genome)
        if values[k] > best_val:
            best_val, best_genome = values[k], genome
    history = [{"generation": 0, "best": float(best_val), "mean": float(values.mean())}]
    return AttackOutcome(
        AttackMatrix(best_genome), float(best_val), history, fit_fn.calls,
        values if record_all else None,
    )


def _all_attacks(n_attackers: int, n_items: int) -> Iterable[np.ndarray]:
    for cells in itertools.product(range(1, LEVELS + 1), repeat=n_attackers * n_items):
        yield np.array(cells, dtype=np.int64).reshape(n_attackers, n_items)


def brute_force_best(
    dataset: Dataset, method: MethodUnderTest, n_attackers: int = 1
) -> AttackOutcome:
    """Exact optimum by enumerating all 5**(K*J) attacker blocks; ties keep the first."""
    size = LEVELS ** (n_attackers * dataset.n_items)
    if size > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"search space 5^{n_attackers * dataset.n_items} = {size} exceeds {BRUTE_FORCE_LIMIT}"
        )
    fit_fn = Fitness(dataset, method)
    best_val, best_genome, total = -np.inf, None, 0.0
    for genome in _all_attacks(n_attackers, dataset.n_items):
        val = fit_fn(genome)
        total += val
        if val > best_val:
            best_val, best_genome = val, genome
    history = [{"generation": 0, "best": float(best_val), "mean": total / size}]
    return AttackOutcome(AttackMatrix(best_genome), float(best_val), history, fit_fn.calls)
