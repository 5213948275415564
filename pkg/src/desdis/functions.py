"""Objective functions: the stochastic f0 and a small shifted suite on [-5, 5]^n.

The suite functions are simple analogues of BBOB f1, f2, f5, f8, f15 and
f23 with a seedable shift in place of the full instance transformations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import BoxDomain, ConfigurationError, RngStream, derive_seed

SUITE_BOUND = 5.0
SHIFT_BOUND = 4.0


@dataclass
class ObjectiveFunction:
    """A batch-evaluable objective on a box.

    ``batch`` maps an ``(m, n)`` array to ``m`` values.  ``optimum`` and
    ``optimum_value`` are ``None`` for f0.
    """

    id: str
    domain: BoxDomain
    batch: Callable[[np.ndarray], np.ndarray]
    instance: Optional[int] = None
    shift: Optional[np.ndarray] = None
    optimum: Optional[np.ndarray] = None
    optimum_value: Optional[float] = None
    stochastic: bool = False

    @property
    def n(self) -> int:
        return self.domain.n

    def __call__(self, x) -> float:
        return float(self.batch(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0])

    def evaluate(self, X) -> np.ndarray:
        return np.asarray(self.batch(np.atleast_2d(np.asarray(X, dtype=np.float64))), dtype=np.float64)


def f0(x, rng: RngStream) -> float:
    """A fresh U(0, 1) draw, whatever ``x`` is."""
    return float(rng.random())


def make_f0(n: int, rng: RngStream) -> ObjectiveFunction:
    return ObjectiveFunction(
        id="f0",
        domain=BoxDomain.uniform(n, 0.0, 1.0),
        batch=lambda X: rng.random(len(X)),
        stochastic=True,
    )


def _sphere(s):
    return lambda X: np.sum((X - s) ** 2, axis=1)


def _ellipsoidal(s):
    n = s.size
    w = 10.0 ** (6.0 * np.arange(n) / (n - 1)) if n > 1 else np.ones(1)
    return lambda X: np.sum(w * (X - s) ** 2, axis=1)


def _linear_slope(s):
    const = np.sum(5.0 * np.abs(s))
    return lambda X: const - X @ s


def _rosenbrock(s):
    def f(X):
        z = X - s + 1.0
        if z.shape[1] == 1:
            return (z[:, 0] - 1.0) ** 2
        return np.sum(100.0 * (z[:, :-1] ** 2 - z[:, 1:]) ** 2 + (z[:, :-1] - 1.0) ** 2, axis=1)
    return f


def _rastrigin(s):
    def f(X):
        y = X - s
        return 10.0 * y.shape[1] + np.sum(y * y - 10.0 * np.cos(2.0 * np.pi * y), axis=1)
    return f


def _katsuura(s):
    n = s.size
    pow2 = 2.0 ** np.arange(1, 33)
    i = np.arange(1, n + 1)

    def f(X):
        y = X - s
        t = pow2[None, None, :] * y[:, :, None]
        inner = np.sum(np.abs(t - np.round(t)) / pow2, axis=2)
        prod = np.prod((1.0 + i * inner) ** (10.0 / n**1.2), axis=1)
        return 10.0 / n**2 * prod - 10.0 / n**2
    return f


SUITE = {
    "sphere": _sphere,
    "ellipsoidal": _ellipsoidal,
    "linear_slope": _linear_slope,
    "rosenbrock": _rosenbrock,
    "rastrigin": _rastrigin,
    "katsuura": _katsuura,
}


def instance_shift(fid: str, n: int, instance: int) -> np.ndarray:
    rng = RngStream(derive_seed(instance, "shift", fid, n))
    if fid == "linear_slope":
        return np.where(rng.random(n) < 0.5, -SUITE_BOUND, SUITE_BOUND)
    return rng.uniform(-SHIFT_BOUND, SHIFT_BOUND, n)


def suite(fid: str, n: int, instance: int = 1, shift=None) -> ObjectiveFunction:
    """Build a suite function; ``shift`` overrides the instance-derived one."""
    if fid not in SUITE:
        raise ConfigurationError(f"unknown function id {fid!r}; known: {sorted(SUITE)} and 'f0'")
    s = instance_shift(fid, n, instance) if shift is None else np.asarray(shift, dtype=np.float64)
    if s.shape != (n,):
        raise ConfigurationError("shift length must equal n")
    fn = SUITE[fid](s)
    return ObjectiveFunction(
        id=fid,
        domain=BoxDomain.uniform(n, -SUITE_BOUND, SUITE_BOUND),
        batch=fn,
        instance=instance,
        shift=s,
        optimum=s.copy(),
        optimum_value=0.0,
    )


def make_objective(fid: str, n: int, instance: int = 1, rng: RngStream = None) -> ObjectiveFunction:
    if fid == "f0":
        if rng is None:
            raise ConfigurationError("f0 needs a random stream")
        return make_f0(n, rng)
    return suite(fid, n, instance)


FUNCTION_IDS = ("f0",) + tuple(SUITE)
