"""Optimisation loops: DE/rand/1/{bin,exp}, SHADE and L-SHADE.

All engines are synchronous: every trial of a generation is built from the
generation-start population, the SDIS repairs it, it is evaluated, and
1-to-1 greedy selection (ties go to the trial) is applied afterwards.
A run stops exactly when the evaluation budget is used up, so the last
generation may evaluate only a prefix of its targets.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    MIN_POPULATION, Budget, ConfigurationError, Population, RngStream, init_population,
)
from .functions import ObjectiveFunction
from .instruments import Instrument, Recorder, RunLog
from .sdis import SdisKind, repair, row_cosines
from .variation import DeParams, crossover_mask, binomial_mask, pbest_mutants, rand1_mutants

SHADE_SCALE = 0.1
P_MAX = 0.2


class EngineKind(str, enum.Enum):
    DE_RAND1 = "DE_RAND1"
    SHADE = "SHADE"
    LSHADE = "LSHADE"

    @classmethod
    def parse(cls, value) -> "EngineKind":
        if isinstance(value, cls):
            return value
        v = str(value).upper().replace("-", "").replace("/", "")
        aliases = {"DE": "DE_RAND1", "DERAND1": "DE_RAND1", "DE_RAND1": "DE_RAND1"}
        try:
            return cls(aliases.get(v, v))
        except ValueError:
            raise ValueError(f"unknown engine {value!r}") from None


@dataclass(frozen=True)
class EngineConfig:
    """Everything needed to reproduce one run.

    ``params`` is required for DE_RAND1 and ignored by the SHADE family.
    For LSHADE ``N`` is the initial population size.
    """

    engine: EngineKind
    N: int
    sdis: SdisKind
    max_evaluations: int
    seed: int
    params: Optional[DeParams] = None
    memory_size: Optional[int] = None
    archive_rate: float = 1.0
    p_max: float = P_MAX
    N_min: int = MIN_POPULATION
    cotn_sigma: Optional[float] = None
    diversity_ddof: int = 0

    def __post_init__(self):
        object.__setattr__(self, "engine", EngineKind.parse(self.engine))
        object.__setattr__(self, "sdis", SdisKind.parse(self.sdis))
        if self.N < MIN_POPULATION:
            raise ConfigurationError(f"N must be >= {MIN_POPULATION}, got {self.N}")
        if self.max_evaluations < self.N:
            raise ConfigurationError(f"budget {self.max_evaluations} is smaller than N={self.N}")
        if self.engine is EngineKind.DE_RAND1 and self.params is None:
            raise ConfigurationError("DE_RAND1 needs DeParams")
        if self.engine is EngineKind.LSHADE and self.N < self.N_min:
            raise ConfigurationError("initial N must be >= N_min")

    @property
    def H(self) -> int:
        if self.memory_size is not None:
            return self.memory_size
        return 6 if self.engine is EngineKind.LSHADE else self.N

    def as_dict(self) -> dict:
        d = {
            "engine": self.engine.value, "N": self.N, "sdis": self.sdis.value,
            "max_evaluations": self.max_evaluations, "seed": self.seed,
        }
        if self.params is not None:
            d.update(F=self.params.F, Cr=self.params.Cr, crossover=self.params.crossover.value)
        if self.engine is not EngineKind.DE_RAND1:
            d.update(H=self.H, archive_rate=self.archive_rate, p_max=self.p_max)
        if self.engine is EngineKind.LSHADE:
            d["N_min"] = self.N_min
        return d


@dataclass
class ShadeState:
    memory_F: np.ndarray
    memory_Cr: np.ndarray
    memory_index: int = 0
    archive: np.ndarray = None
    archive_capacity: int = 0

    @classmethod
    def initial(cls, H: int, n: int, capacity: int) -> "ShadeState":
        return cls(np.full(H, 0.5), np.full(H, 0.5), 0, np.empty((0, n)), capacity)

    @property
    def H(self) -> int:
        return self.memory_F.size


def weighted_lehmer_mean(values, weights) -> float:
    v, w = np.asarray(values, float), np.asarray(weights, float)
    return float(np.sum(w * v * v) / np.sum(w * v))


def weighted_mean(values, weights) -> float:
    v, w = np.asarray(values, float), np.asarray(weights, float)
    return float(np.sum(w * v) / np.sum(w))


def sample_shade_parameters(state: ShadeState, m: int, rng: RngStream, p_min: float, p_max: float = P_MAX):
    """Per-individual (F, Cr, p) drawn around random memory slots."""
    r = rng.integers(0, state.H, m)
    mu_F, mu_Cr = state.memory_F[r], state.memory_Cr[r]
    Cr = np.clip(rng.normal(mu_Cr, SHADE_SCALE), 0.0, 1.0)
    F = rng.cauchy(mu_F, SHADE_SCALE)
    bad = F <= 0.0
    while bad.any():
        F[bad] = rng.cauchy(mu_F[bad], SHADE_SCALE)
        bad = F <= 0.0
    F = np.minimum(F, 1.0)
    p = rng.uniform(p_min, max(p_min, p_max), m)
    return F, Cr, p


def update_memory(state: ShadeState, F_success, Cr_success, improvement) -> None:
    """Write the weighted means of successful parameters into the next slot.

    No-op when there were no successes.  A Cr mean of exactly 0 leaves its
    slot unchanged so memory entries stay in (0, 1].
    """
    if len(F_success) == 0:
        return
    k = state.memory_index
    state.memory_F[k] = weighted_lehmer_mean(F_success, improvement)
    cr = weighted_mean(Cr_success, improvement)
    if cr > 0.0:
        state.memory_Cr[k] = cr
    state.memory_index = (k + 1) % state.H


def push_archive(state: ShadeState, parents: np.ndarray, rng: RngStream) -> None:
    if len(parents):
        state.archive = np.vstack([state.archive, parents])
    trim_archive(state, rng)


def trim_archive(state: ShadeState, rng: RngStream) -> None:
    excess = len(state.archive) - state.archive_capacity
    if excess > 0:
        drop = np.sort(rng.generator.choice(len(state.archive), size=excess, replace=False))
        state.archive = np.delete(state.archive, drop, axis=0)


def lshade_target_size(used: int, max_evaluations: int, N_init: int, N_min: int = MIN_POPULATION) -> int:
    frac = 1.0 - used / max_evaluations
    return int(round(N_min + (N_init - N_min) * frac))


def lshade_resize(pop: Population, budget: Budget, N_init: int, N_min: int = MIN_POPULATION,
                  state: ShadeState = None, archive_rate: float = 1.0, rng: RngStream = None) -> Population:
    """Drop the worst members down to the linear schedule's size."""
    target = max(N_min, lshade_target_size(budget.used, budget.max_evaluations, N_init, N_min))
    if pop.size > target:
        keep = np.sort(pop.order()[:target])
        pop = Population(pop.positions[keep], pop.fitness[keep], pop.generation)
    if state is not None:
        state.archive_capacity = int(round(archive_rate * pop.size))
        if rng is not None:
            trim_archive(state, rng)
    return pop


@dataclass
class _Generation:
    targets: np.ndarray
    trials: np.ndarray
    mask: np.ndarray
    F: np.ndarray = None
    Cr: np.ndarray = None


class _Runner:
    def __init__(self, config: EngineConfig, objective: ObjectiveFunction, instruments: Sequence[Instrument]):
        self.config = config
        self.objective = objective
        self.domain = objective.domain
        self.budget = Budget(config.max_evaluations)
        root = RngStream(config.seed)
        self.rng = root.child("algorithm")
        self.sdis_rng = root.child("sdis")
        self.recorder = Recorder(self.domain, diversity_ddof=config.diversity_ddof)
        self.instruments = [self.recorder, *instruments]
        self.best = np.inf
        self.state: Optional[ShadeState] = None

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        self.budget.charge(len(X))
        f = self.objective.evaluate(X)
        first = self.budget.used - len(X) + 1
        running = np.minimum.accumulate(np.concatenate([[self.best], f]))[1:]
        improved = np.flatnonzero(running < np.concatenate([[self.best], running[:-1]]))
        for j in improved:
            self.recorder.on_improvement(int(first + j), float(running[j]))
        self.best = float(running[-1]) if len(f) else self.best
        return f

    def record_generation(self, pop: Population, trials=0, infeasible_trials=0, infeasible_components=0,
                          mutated_components=0):
        rec = {
            "generation": pop.generation,
            "diversity": self.recorder.diversity_of(pop.positions),
            "infeasible_trials": int(infeasible_trials),
            "trials": int(trials),
            "best_fitness": self.best,
            "pop_size": pop.size,
            "infeasible_components": int(infeasible_components),
            "mutated_components": int(mutated_components),
        }
        for ins in self.instruments:
            ins.on_generation(rec, pop.positions)

    def propose(self, pop: Population) -> _Generation:
        cfg = self.config
        N, n = pop.size, pop.n
        if cfg.engine is EngineKind.DE_RAND1:
            mutants = rand1_mutants(pop.positions, cfg.params.F, self.rng)
            mask = crossover_mask(cfg.params.crossover, N, n, cfg.params.Cr, self.rng)
            return _Generation(np.arange(N), np.where(mask, mutants, pop.positions), mask)
        F, Cr, p = sample_shade_parameters(self.state, N, self.rng, p_min=2.0 / N, p_max=cfg.p_max)
        mutants = pbest_mutants(pop.positions, pop.fitness, self.state.archive, F, p, self.rng)
        mask = binomial_mask(N, n, Cr, self.rng)
        return _Generation(np.arange(N), np.where(mask, mutants, pop.positions), mask, F, Cr)

    def run(self) -> RunLog:
        cfg = self.config
        pop = init_population(cfg.N, self.domain, self.rng)
        pop.fitness = self.evaluate(pop.positions)
        if cfg.engine is not EngineKind.DE_RAND1:
            self.state = ShadeState.initial(cfg.H, pop.n, int(round(cfg.archive_rate * cfg.N)))
        self.record_generation(pop)
        lo, hi = self.domain.lower, self.domain.upper

        while not self.budget.exhausted:
            gen = self.propose(pop)
            m = min(len(gen.targets), self.budget.remaining)
            targets, Z, mask = gen.targets[:m], gen.trials[:m], gen.mask[:m]
            X = pop.positions[targets]

            bad = (Z < lo) | (Z > hi)
            n_bad = bad.sum(axis=1)
            C = Z.copy()
            rows = np.flatnonzero(n_bad)
            cosines = np.full(m, np.nan)
            if rows.size:
                C[rows] = repair(cfg.sdis, Z[rows], X[rows], lo, hi, self.sdis_rng, cfg.cotn_sigma)
                cosines[rows] = row_cosines(Z[rows] - X[rows], C[rows] - X[rows])

            start = self.budget.used + 1
            f = self.evaluate(C)
            eval_index = np.arange(start, start + m)
            generation = pop.generation + 1
            for ins in self.instruments:
                ins.on_trials(generation, eval_index, X, Z, C, n_bad, cosines)

            parent_f = pop.fitness[targets]
            accept = f <= parent_f
            if self.state is not None:
                success = f < parent_f
                update_memory(self.state, gen.F[:m][success], gen.Cr[:m][success],
                              np.abs(parent_f[success] - f[success]))
                push_archive(self.state, X[success], self.rng)

            positions = pop.positions.copy()
            fitness = pop.fitness.copy()
            positions[targets[accept]] = C[accept]
            fitness[targets[accept]] = f[accept]
            pop = Population(positions, fitness, generation)

            if cfg.engine is EngineKind.LSHADE:
                pop = lshade_resize(pop, self.budget, cfg.N, cfg.N_min, self.state, cfg.archive_rate, self.rng)

            self.record_generation(pop, m, np.count_nonzero(n_bad), n_bad.sum(), mask.sum())

        self.population = pop
        meta = cfg.as_dict()
        meta.update(function=self.objective.id, n=self.domain.n, instance=self.objective.instance,
                    optimum_value=self.objective.optimum_value, evaluations=self.budget.used)
        return self.recorder.log(meta)


def run(config: EngineConfig, objective: ObjectiveFunction, instruments: Sequence[Instrument] = ()) -> RunLog:
    """Run one optimisation and return its log."""
    return _Runner(config, objective, instruments).run()


def run_with_population(config: EngineConfig, objective: ObjectiveFunction,
                        instruments: Sequence[Instrument] = ()) -> tuple[RunLog, Population]:
    runner = _Runner(config, objective, instruments)
    log = runner.run()
    return log, runner.population


def shade_step(state: ShadeState, pop: Population, objective: ObjectiveFunction, budget: Budget,
               sdis: SdisKind, rng: RngStream, p_max: float = P_MAX, cotn_sigma=None):
    """One SHADE generation outside the run loop.

    Returns ``(population, info)`` and updates ``state`` and ``budget`` in
    place; ``info`` carries the sampled F/Cr and the success mask.
    """
    N, n = pop.size, pop.n
    m = min(N, budget.remaining)
    F, Cr, p = sample_shade_parameters(state, N, rng, p_min=2.0 / N, p_max=p_max)
    mutants = pbest_mutants(pop.positions, pop.fitness, state.archive, F, p, rng)
    mask = binomial_mask(N, n, Cr, rng)
    Z = np.where(mask, mutants, pop.positions)[:m]
    X = pop.positions[:m]
    C = repair(sdis, Z, X, objective.domain.lower, objective.domain.upper, rng, cotn_sigma)
    budget.charge(m)
    f = objective.evaluate(C)
    parent_f = pop.fitness[:m]
    success = f < parent_f
    accept = f <= parent_f
    update_memory(state, F[:m][success], Cr[:m][success], np.abs(parent_f[success] - f[success]))
    push_archive(state, X[success], rng)
    positions, fitness = pop.positions.copy(), pop.fitness.copy()
    idx = np.flatnonzero(accept)
    positions[idx], fitness[idx] = C[idx], f[idx]
    info = {"F": F[:m], "Cr": Cr[:m], "success": success, "accepted": accept}
    return Population(positions, fitness, pop.generation + 1), info


def default_lshade_size(n: int) -> int:
    return 18 * n
