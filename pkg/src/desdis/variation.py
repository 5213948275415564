"""DE mutation and crossover.

Batched versions (``rand1_mutants``, ``pbest_mutants``, ``*_mask``) generate
a whole generation at once; the single-target functions wrap them.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import MIN_POPULATION, ConfigurationError, Population, RngStream


class Crossover(str, enum.Enum):
    BIN = "BIN"
    EXP = "EXP"

    @classmethod
    def parse(cls, value) -> "Crossover":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown crossover {value!r}") from None


@dataclass(frozen=True)
class DeParams:
    F: float
    Cr: float
    crossover: Crossover = Crossover.BIN

    def __post_init__(self):
        if not 0.0 < self.F <= 2.0:
            raise ConfigurationError(f"F must lie in (0, 2], got {self.F}")
        if not 0.0 <= self.Cr <= 1.0:
            raise ConfigurationError(f"Cr must lie in [0, 1], got {self.Cr}")
        object.__setattr__(self, "crossover", Crossover.parse(self.crossover))


def mutation_probability(Cr: float, n: int, crossover=Crossover.BIN) -> float:
    """Probability that a given trial component comes from the mutant."""
    if Crossover.parse(crossover) is Crossover.BIN:
        return Cr * (1.0 - 1.0 / n) + 1.0 / n
    if Cr >= 1.0:
        return 1.0
    return (1.0 - Cr**n) / (n * (1.0 - Cr))


def distinct_indices(N: int, k: int, rng: RngStream, exclude=None, rows: int = None) -> np.ndarray:
    """Draw ``k`` distinct indices in ``range(N)`` per row by rejection.

    ``exclude`` is an optional ``(rows, m)`` array of indices each row must
    avoid (e.g. the target itself).
    """
    if rows is None:
        rows = N if exclude is None else len(exclude)
    taken = np.empty((rows, 0), dtype=np.int64) if exclude is None else np.asarray(exclude).reshape(rows, -1)
    if N - taken.shape[1] < k:
        raise ConfigurationError(f"cannot draw {k} distinct indices from {N} with {taken.shape[1]} excluded")
    out = np.empty((rows, k), dtype=np.int64)
    for j in range(k):
        col = rng.integers(0, N, rows)
        clash = (col[:, None] == taken).any(axis=1)
        while clash.any():
            col[clash] = rng.integers(0, N, int(clash.sum()))
            clash = (col[:, None] == taken).any(axis=1)
        out[:, j] = col
        taken = np.column_stack([taken, col])
    return out


def rand1_mutants(X: np.ndarray, F, rng: RngStream, targets=None) -> np.ndarray:
    """``x_r1 + F (x_r2 - x_r3)`` for every target row; r's distinct and != target."""
    N = len(X)
    if N < MIN_POPULATION:
        raise ConfigurationError(f"rand/1 needs at least {MIN_POPULATION} individuals, got {N}")
    targets = np.arange(N) if targets is None else np.asarray(targets)
    r = distinct_indices(N, 3, rng, exclude=targets[:, None])
    F = np.asarray(F, dtype=np.float64).reshape(-1, 1) if np.ndim(F) else F
    return X[r[:, 0]] + F * (X[r[:, 1]] - X[r[:, 2]])


def mutate_rand1(pop: Population, target_index: int, F: float, rng: RngStream) -> np.ndarray:
    return rand1_mutants(pop.positions, F, rng, targets=[target_index])[0]


def pbest_mutants(X, fitness, archive, F, p, rng: RngStream, targets=None) -> np.ndarray:
    """current-to-pbest/1 with optional archive, one mutant per target row.

    pbest is uniform among the ``ceil(p N)`` best members (excluding the
    target when the pool has another member); r1 is drawn from the
    population and r2 from population + archive, all mutually distinct.
    """
    X = np.asarray(X)
    N = len(X)
    targets = np.arange(N) if targets is None else np.asarray(targets)
    m = len(targets)
    p = np.broadcast_to(np.asarray(p, dtype=np.float64), (m,))
    if np.any(p <= 0) or np.any(p > 1):
        raise ConfigurationError("p must lie in (0, 1]")
    archive = np.empty((0, X.shape[1])) if archive is None or len(archive) == 0 else np.asarray(archive)
    union = np.vstack([X, archive])
    if N < 3:
        raise ConfigurationError("current-to-pbest/1 needs at least 3 individuals")

    order = np.argsort(fitness, kind="stable")
    pool = np.maximum(1, np.ceil(p * N).astype(np.int64))
    pbest = order[(rng.random(m) * pool).astype(np.int64)]
    # Redraw pbest == target when the pool offers an alternative.
    clash = (pbest == targets) & (pool > 1)
    while clash.any():
        pbest[clash] = order[(rng.random(int(clash.sum())) * pool[clash]).astype(np.int64)]
        clash = (pbest == targets) & (pool > 1)

    r1 = distinct_indices(N, 1, rng, exclude=np.column_stack([targets, pbest]))[:, 0]
    r2 = distinct_indices(len(union), 1, rng, exclude=np.column_stack([targets, pbest, r1]))[:, 0]
    F = np.asarray(F, dtype=np.float64).reshape(-1, 1) if np.ndim(F) else F
    x = X[targets]
    return x + F * (X[pbest] - x) + F * (X[r1] - union[r2])


def mutate_current_to_pbest1(pop: Population, archive, target_index: int, F: float, p: float,
                             rng: RngStream) -> np.ndarray:
    arch = None if not archive else np.array([getattr(a, "position", a) for a in archive])
    return pbest_mutants(pop.positions, pop.fitness, arch, F, p, rng, targets=[target_index])[0]


def binomial_mask(m: int, n: int, Cr, rng: RngStream) -> np.ndarray:
    Cr = np.asarray(Cr, dtype=np.float64).reshape(-1, 1) if np.ndim(Cr) else Cr
    mask = rng.random((m, n)) < Cr
    mask[np.arange(m), rng.integers(0, n, m)] = True
    return mask


def exponential_mask(m: int, n: int, Cr, rng: RngStream) -> np.ndarray:
    """One circular block per row, starting at a uniform index."""
    Cr = np.asarray(Cr, dtype=np.float64).reshape(-1, 1) if np.ndim(Cr) else Cr
    start = rng.integers(0, n, m)
    if n > 1:
        cont = rng.random((m, n - 1)) < Cr
        length = 1 + np.cumprod(cont, axis=1).sum(axis=1)
    else:
        length = np.ones(m, dtype=np.int64)
    offset = (np.arange(n)[None, :] - start[:, None]) % n
    return offset < length[:, None]


def crossover_mask(kind, m: int, n: int, Cr, rng: RngStream) -> np.ndarray:
    if Crossover.parse(kind) is Crossover.BIN:
        return binomial_mask(m, n, Cr, rng)
    return exponential_mask(m, n, Cr, rng)


def crossover_bin(target, mutant, Cr: float, rng: RngStream) -> np.ndarray:
    target, mutant = np.asarray(target, float), np.asarray(mutant, float)
    if target.shape != mutant.shape:
        raise ValueError("target and mutant lengths differ")
    mask = binomial_mask(1, target.size, Cr, rng)[0]
    return np.where(mask, mutant, target)


def crossover_exp(target, mutant, Cr: float, rng: RngStream) -> np.ndarray:
    target, mutant = np.asarray(target, float), np.asarray(mutant, float)
    if target.shape != mutant.shape:
        raise ValueError("target and mutant lengths differ")
    mask = exponential_mask(1, target.size, Cr, rng)[0]
    return np.where(mask, mutant, target)


def expected_exp_length(Cr: float, n: int) -> float:
    return n if Cr >= 1.0 else (1.0 - Cr**n) / (1.0 - Cr)


__all__ = [
    "Crossover", "DeParams", "mutation_probability", "distinct_indices", "rand1_mutants",
    "mutate_rand1", "pbest_mutants", "mutate_current_to_pbest1", "binomial_mask",
    "exponential_mask", "crossover_mask", "crossover_bin", "crossover_exp",
]
