"""Real-coded genetic algorithm over component parameters.

The search space maps flat parameter paths (e.g. "observer.omega0",
"nlsef.delta1", "td.R") onto the component configs; fitness is the composite
objective index of a closed-loop run, with a fixed large penalty for runs
that diverge.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .controller import InlsefConfig, NlsefConfig
from .differentiator import TdConfig
from .errors import ConfigError, DivergenceError
from .metrics import OpiWeights, compute_metrics
from .observer import ObserverConfig
from .odesim import Scenario, run_closed_loop
from .plant import PlantParams

DIVERGENCE_PENALTY = 1e9


@dataclass(frozen=True)
class SearchSpace:
    """Box bounds: entries are (parameter path, lower, upper)."""

    entries: tuple

    def __post_init__(self):
        for path, lo, hi in self.entries:
            if not lo < hi:
                raise ConfigError(f"bounds for {path} must satisfy lower < upper")

    @property
    def dim(self) -> int:
        return len(self.entries)

    def lower(self) -> np.ndarray:
        return np.array([e[1] for e in self.entries], dtype=float)

    def upper(self) -> np.ndarray:
        return np.array([e[2] for e in self.entries], dtype=float)


@dataclass(frozen=True)
class GaConfig:
    """Operator settings for the real-coded GA.

    Mutation is Gaussian with per-gene probability mutation_rate and standard
    deviation mutation_scale * range, annealed by mutation_decay each
    generation so late generations refine rather than explore.
    """

    population: int = 50
    crossover_rate: float = 0.9
    mutation_rate: float = 0.9
    mutation_scale: float = 0.1
    mutation_decay: float = 0.92
    tournament: int = 3
    seed: int = 0
    evaluation_budget: int = 5000

    def __post_init__(self):
        if self.population < 4:
            raise ConfigError("population must be at least 4")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.evaluation_budget <= 0:
            raise ConfigError("evaluation budget must be positive")
        if self.evaluation_budget < self.population:
            raise ConfigError("budget smaller than one population")


_CONFIG_GROUPS = {
    "plant": PlantParams,
    "observer": ObserverConfig,
    "nlsef": NlsefConfig,
    "inlsef": InlsefConfig,
    "td": TdConfig,
}


def apply_candidate(space: SearchSpace, candidate, configs: dict) -> dict:
    """Overlay candidate values onto a dict of component configs.

    configs maps group names ("plant", "observer", "nlsef"/"inlsef", "td")
    to their dataclass instances; a new dict with replaced fields is returned.
    """
    out = dict(configs)
    for (path, lo, hi), value in zip(space.entries, np.asarray(candidate, dtype=float)):
        if not lo - 1e-12 <= value <= hi + 1e-12:
            raise ConfigError(f"candidate value {value} for {path} outside bounds")
        group, _, field = path.partition(".")
        if group not in out or not field:
            raise ConfigError(f"parameter path {path!r} does not resolve to a config key")
        cfg = out[group]
        if field == "a" or (field.startswith("a") and field[1:].isdigit()
                            and isinstance(cfg, ObserverConfig)):
            idx = int(field[1:]) - 1
            a = list(cfg.a)
            if not 0 <= idx < len(a):
                raise ConfigError(f"observer coefficient index out of range in {path!r}")
            a[idx] = float(value)
            out[group] = replace(cfg, a=tuple(a))
            continue
        if not hasattr(cfg, field):
            raise ConfigError(f"parameter path {path!r} does not resolve to a config key")
        out[group] = replace(cfg, **{field: float(value)})
    return out


def evaluate(candidate, scenario: Scenario, space: SearchSpace, configs: dict,
             weights: OpiWeights | None = None) -> float:
    """Fitness of one candidate: OPI of the closed loop over the tuning horizon."""
    weights = weights if weights is not None else OpiWeights()
    resolved = apply_candidate(space, candidate, configs)
    controller = resolved.get("nlsef") or resolved.get("inlsef")
    try:
        record = run_closed_loop(scenario, resolved["plant"], resolved["observer"],
                                 controller, resolved["td"])
        return compute_metrics(record, weights).opi
    except DivergenceError:
        return DIVERGENCE_PENALTY


def ga_optimize(objective, space: SearchSpace, cfg: GaConfig):
    """Minimize objective over the box; returns (best, best_fitness, history).

    history holds the best-so-far fitness after the initial population and
    after each generation; elitism of one makes it monotone nonincreasing.
    """
    rng = np.random.default_rng(cfg.seed)
    lo, hi = space.lower(), space.upper()
    span = hi - lo
    d = space.dim
    pop = cfg.population

    population = lo + rng.random((pop, d)) * span
    fitness = np.array([objective(ind) for ind in population])
    evaluations = pop
    best_idx = int(fitness.argmin())
    best = population[best_idx].copy()
    best_f = float(fitness[best_idx])
    history = [best_f]

    generation = 0
    while evaluations + pop <= cfg.evaluation_budget:
        sigma = cfg.mutation_scale * span * cfg.mutation_decay**generation
        children = [best.copy()]  # elite survives untouched
        while len(children) < pop:
            p1 = _tournament(population, fitness, cfg.tournament, rng).copy()
            p2 = _tournament(population, fitness, cfg.tournament, rng).copy()
            if rng.random() < cfg.crossover_rate:
                mask = rng.random(d) < 0.5
                p1[mask], p2[mask] = p2[mask], p1[mask].copy()
            for child in (p1, p2):
                mmask = rng.random(d) < cfg.mutation_rate
                if mmask.any():
                    child[mmask] += rng.normal(0.0, 1.0, int(mmask.sum())) * sigma[mmask]
                np.clip(child, lo, hi, out=child)
                if len(children) < pop:
                    children.append(child)
        population = np.array(children)
        fitness = np.array([objective(ind) for ind in population])
        evaluations += pop
        gen_idx = int(fitness.argmin())
        if fitness[gen_idx] < best_f:
            best = population[gen_idx].copy()
            best_f = float(fitness[gen_idx])
        history.append(best_f)
        generation += 1

    return best, best_f, history


def _tournament(population, fitness, k, rng):
    idx = rng.integers(0, population.shape[0], k)
    return population[idx[fitness[idx].argmin()]]
