"""Domains, populations, seeded random streams and evaluation budgets."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

MIN_POPULATION = 4


class ConfigurationError(ValueError):
    """Raised for invalid run or experiment settings."""


class ContractViolation(ValueError):
    """Raised when an operation is called outside its preconditions."""


class BudgetExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box ``[lower_i, upper_i]`` (closed intervals)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=np.float64)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=np.float64)).copy()
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size < 1:
            raise ConfigurationError("lower and upper must be 1-D and of equal length >= 1")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ConfigurationError("bounds must be finite")
        if np.any(lower >= upper):
            raise ConfigurationError("every lower bound must be strictly below its upper bound")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, n: int, low: float = 0.0, high: float = 1.0) -> "BoxDomain":
        return cls(np.full(n, low), np.full(n, high))

    @property
    def n(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1:] != (self.n,):
            raise ContractViolation(f"vector of length {x.shape[-1:]} does not match domain dimension {self.n}")
        return x


def is_feasible(x, d: BoxDomain) -> bool:
    x = d._check(x)
    return bool(np.all((x >= d.lower) & (x <= d.upper)))


def infeasible_components(x, d: BoxDomain) -> list[tuple[int, str]]:
    """Indices violating a bound, each paired with ``"lower"`` or ``"upper"``."""
    x = d._check(x)
    out = []
    for i in np.flatnonzero((x < d.lower) | (x > d.upper)):
        out.append((int(i), "lower" if x[i] < d.lower[i] else "upper"))
    return out


def derive_seed(master_seed: int, *keys) -> int:
    """Stable 64-bit child seed from a master seed and arbitrary keys.

    Keys are hashed by their ``repr`` so strings, ints and tuples all work and
    the result does not depend on Python's randomised ``hash``.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(repr((int(master_seed),) + tuple(keys)).encode())
    return int.from_bytes(h.digest(), "little")


class RngStream:
    """Seeded random stream backed by numpy's PCG64.

    Child streams are derived by hashing ``(seed, *keys)``, so adding a new
    consumer never shifts the draws of an existing one.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def child(self, *keys) -> "RngStream":
        return RngStream(derive_seed(self.seed, *keys))

    def random(self, size=None):
        return self.generator.random(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def cauchy(self, loc=0.0, scale=1.0, size=None):
        return loc + scale * self.generator.standard_cauchy(size)

    def __repr__(self):
        return f"RngStream(seed={self.seed})"


@dataclass
class Budget:
    max_evaluations: int
    used: int = 0

    def __post_init__(self):
        if self.max_evaluations < 1:
            raise ConfigurationError("max_evaluations must be positive")

    @property
    def remaining(self) -> int:
        return self.max_evaluations - self.used

    @property
    def exhausted(self) -> bool:
        return self.used >= self.max_evaluations

    def charge(self, k: int = 1) -> None:
        if k > self.remaining:
            raise BudgetExhausted(f"requested {k} evaluations, {self.remaining} left")
        self.used += k


@dataclass
class Individual:
    position: np.ndarray
    fitness: Optional[float] = None


@dataclass
class Population:
    """N members stored row-wise; ``fitness`` is NaN until evaluated."""

    positions: np.ndarray
    fitness: np.ndarray = None
    generation: int = 0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.positions.ndim != 2:
            raise ContractViolation("positions must be an (N, n) array")
        if self.fitness is None:
            self.fitness = np.full(len(self.positions), np.nan)
        else:
            self.fitness = np.asarray(self.fitness, dtype=np.float64)

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    @property
    def members(self) -> list[Individual]:
        return [
            Individual(p.copy(), None if np.isnan(f) else float(f))
            for p, f in zip(self.positions, self.fitness)
        ]

    def order(self) -> np.ndarray:
        """Member indices sorted best (lowest fitness) first; stable."""
        return np.argsort(self.fitness, kind="stable")

    def best_index(self) -> int:
        return int(np.argmin(self.fitness))

    def copy(self) -> "Population":
        return Population(self.positions.copy(), self.fitness.copy(), self.generation)


def init_population(N: int, d: BoxDomain, rng: RngStream) -> Population:
    """N members i.i.d. uniform on the box, fitness unset."""
    if N < MIN_POPULATION:
        raise ConfigurationError(f"population size must be >= {MIN_POPULATION}, got {N}")
    positions = d.lower + rng.random((N, d.n)) * d.width
    return Population(positions)
