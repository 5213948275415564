"""Closed-form predictions for DE/rand/1 under a flat fitness, plus the
Monte-Carlo simulations and randomized checks used to cross-validate them.

Unless stated otherwise the 1-D results assume the unit domain [0, 1] and
an almost uniformly distributed current population.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import RngStream
from .sdis import SdisKind, repair, row_cosines


class TheoryRangeWarning(UserWarning):
    """A formula was evaluated outside the range it was derived for."""


@dataclass
class TheoryPrediction:
    quantity: str
    params: dict
    value: object
    warnings: list = field(default_factory=list)


# -- violation probability -------------------------------------------------

def violation_step(p: float, F: float) -> float:
    """One step of the SAT violation-probability recursion."""
    return p / 2.0 + (1.0 - p) * (p * p * F / 4.0 + (1.0 - p * p) * F / 3.0)


def violation_fixed_point(F: float, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    p = F / 3.0
    for _ in range(max_iter):
        nxt = violation_step(p, F)
        if abs(nxt - p) < tol:
            return nxt
        p = nxt
    raise RuntimeError(f"violation recursion did not converge for F={F}")


def violation_recursion(F: float, generations: int) -> tuple[np.ndarray, float]:
    """``p_v(1..generations)`` starting from ``F/3``, and the limit value."""
    if not 0.0 <= F <= 1.0:
        raise ValueError("the recursion is stated for F in [0, 1]")
    series = np.empty(generations)
    p = F / 3.0
    for g in range(generations):
        series[g] = p
        p = violation_step(p, F)
    return series, violation_fixed_point(F)


def infeasible_solution_probability(p_v: float, n: int) -> float:
    """Chance that at least one of ``n`` independent components is infeasible."""
    return 1.0 - (1.0 - p_v) ** n


# -- distance between infeasible and corrected element ----------------------

def expected_correction_distance(p_m: float, p_v: float, deltas) -> float:
    """Expected ``||z - c(z)||^2`` given per-component gaps ``y_i - SDIS(y_i)``."""
    for name, v in (("p_m", p_m), ("p_v", p_v)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must be a probability")
    d = np.asarray(deltas, dtype=np.float64)
    return float(p_m * p_v * np.sum(d * d))


def simulate_correction_distance(p_m, p_v, deltas, n_samples: int, rng: RngStream) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of ``||z - c(z)||^2`` under the
    component mixture (kept / mutated-feasible / mutated-and-corrected)."""
    d2 = np.asarray(deltas, dtype=np.float64) ** 2
    mutated = rng.random((n_samples, d2.size)) < p_m
    violated = rng.random((n_samples, d2.size)) < p_v
    sq = np.where(mutated & violated, d2, 0.0).sum(axis=1)
    return float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(n_samples))


# -- variance of corrected elements ------------------------------------------

def mirror_corrected_variance(F: float) -> float:
    """Variance of mirror-corrected components on [0, 1].

    Derived for F in [0.5, 1]; outside that window a TheoryRangeWarning is
    issued and the polynomial is still returned.
    """
    if not 0.5 <= F <= 1.0:
        warnings.warn(f"mirror variance formula derived for F in [0.5, 1], got {F}", TheoryRangeWarning,
                      stacklevel=2)
    return F * F / 10.0 - F / 4.0 + 0.25


def overshoot_moments(F: float) -> dict:
    """Mean and variance of infeasible DE/rand/1 mutants below 0 and above 1."""
    return {"mean_lower": -F / 4.0, "mean_upper": 1.0 + F / 4.0, "var": 3.0 * F * F / 80.0}


def overshoot_density(z, F: float) -> np.ndarray:
    """Density of infeasible mutants, conditional on the side (F in [0.5, 1])."""
    z = np.asarray(z, dtype=np.float64)
    lower = (z >= -F) & (z < 0)
    upper = (z > 1) & (z <= 1 + F)
    # Normalised so each side integrates to 1.
    return np.where(lower, 3.0 * (F + z) ** 2 / F**3, np.where(upper, 3.0 * (1 + F - z) ** 2 / F**3, 0.0))


def sdis_moments(kind, F: Optional[float] = None, pop_mean: float = 0.5, a: float = 0.0, b: float = 1.0):
    """(mean, variance) of the corrected values under a flat fitness.

    MIR/TOR variances use the unit-domain mirror formula scaled by the
    squared width; COTN and HVB have no closed form here.
    """
    kind = SdisKind.parse(kind)
    w = b - a
    if kind is SdisKind.UNI:
        return (a + b) / 2.0, w * w / 12.0
    if kind is SdisKind.SAT:
        return (a + b) / 2.0, w * w / 4.0
    if kind in (SdisKind.MIR, SdisKind.TOR):
        if F is None:
            raise ValueError(f"{kind.value} moments depend on F")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TheoryRangeWarning)
            var = mirror_corrected_variance(F) * w * w
        mean = (a + b) - pop_mean if kind is SdisKind.MIR else pop_mean
        return mean, var
    raise ValueError(f"no closed-form moments for {kind.value}")


def beta_term(p_m: float, p_v: float, N: int, sdis_mean: float, sdis_var: float, pop_mean: float) -> float:
    """SDIS-dependent free term of the expected trial-population variance."""
    if N < 2:
        raise ValueError("N must be >= 2")
    q = p_m * p_v
    return (q * (1.0 - q) * (N - 1) / N * (pop_mean - sdis_mean) ** 2
            + q * (1.0 - (1.0 - q) / N) * sdis_var)


# -- Monte-Carlo counterparts --------------------------------------------------

def rand1_mutants_1d(population: np.ndarray, F: float, n_draws: int, rng: RngStream) -> np.ndarray:
    """1-D DE/rand/1 mutants from random (with replacement) parent triples."""
    idx = rng.integers(0, len(population), (3, n_draws))
    return population[idx[0]] + F * (population[idx[1]] - population[idx[2]])


def simulate_corrected_variance(F: float, n_draws: int, rng: RngStream, kind=SdisKind.MIR) -> float:
    """Variance of corrected infeasible mutants drawn from a uniform 1-D population."""
    x = rng.random((3, n_draws))
    z = x[0] + F * (x[1] - x[2])
    bad = (z < 0.0) | (z > 1.0)
    zi = z[bad]
    c = repair(kind, zi[:, None], np.full((zi.size, 1), 0.5), np.zeros(1), np.ones(1), rng)[:, 0]
    return float(c.var())


def simulate_violation_probability(F: float, n_draws: int, rng: RngStream) -> float:
    x = rng.random((3, n_draws))
    z = x[0] + F * (x[1] - x[2])
    return float(np.mean((z < 0.0) | (z > 1.0)))


def simulate_sat_violation(F: float, size: int, generations: int, rng: RngStream) -> np.ndarray:
    """Per-generation violation frequency of SAT-corrected 1-D DE/rand/1 on a
    flat function (all trials accepted), starting from a uniform population."""
    x = rng.random(size)
    out = np.empty(generations)
    for g in range(generations):
        z = rand1_mutants_1d(x, F, size, rng)
        bad = (z < 0.0) | (z > 1.0)
        out[g] = bad.mean()
        x = np.clip(z, 0.0, 1.0)
    return out


# -- randomized inequality checks ----------------------------------------------

@dataclass(frozen=True)
class Verdict:
    holds: Optional[bool]
    reason: str = "ok"
    lhs: float = np.nan
    rhs: float = np.nan


TOL = 1e-12


def mirror_vs_torus_batch(x, z, a, b):
    """Vectorised MIR-vs-TOR check on ``(m, n)`` arrays.

    Returns ``(reason, cos_mir, cos_tor)``; ``reason`` is ``"ok"`` where the
    preconditions hold, otherwise the first failed precondition.
    """
    x, z, a, b = np.broadcast_arrays(*(np.atleast_2d(np.asarray(v, dtype=np.float64)) for v in (x, z, a, b)))
    bad = (z < a) | (z > b)
    cm = repair(SdisKind.MIR, z, x, a, b, None)
    ct = repair(SdisKind.TOR, z, x, a, b, None)
    mid = (a + b) / 2.0
    d = z - x
    cos_m, cos_t = row_cosines(d, cm - x), row_cosines(d, ct - x)
    reason = np.full(len(x), "ok", dtype=object)
    reason[np.isnan(cos_m) | np.isnan(cos_t)] = "zero_direction"
    reason[np.any((cm - mid) * (x - mid) < 0, axis=1)] = "different_quadrant"
    reason[np.any(np.maximum(a - z, z - b) > (b - a) / 2.0, axis=1)] = "overshoot_beyond_half_width"
    reason[~bad.any(axis=1)] = "feasible"
    return reason, cos_m, cos_t


def check_mirror_vs_torus(x, z, a, b) -> Verdict:
    """MIR keeps the direction at least as well as TOR when overshoots are at
    most half the width and mirror/target share a half-box per coordinate."""
    reason, cm, ct = mirror_vs_torus_batch(x, z, a, b)
    if reason[0] != "ok":
        return Verdict(None, reason[0])
    return Verdict(bool(cm[0] >= ct[0] - TOL), "ok", float(cm[0]), float(ct[0]))


def saturation_vs_interior_batch(x, z, a, b, c_k):
    """Vectorised SAT-vs-interior check; ``c_k`` is one interior value per row."""
    x, z, a, b = np.broadcast_arrays(*(np.atleast_2d(np.asarray(v, dtype=np.float64)) for v in (x, z, a, b)))
    c_k = np.broadcast_to(np.asarray(c_k, dtype=np.float64), (len(x),))
    rows = np.arange(len(x))
    bad = (z < a) | (z > b)
    nbad = bad.sum(axis=1)
    k = np.argmax(bad, axis=1)
    ak, bk, zk, xk = a[rows, k], b[rows, k], z[rows, k], x[rows, k]
    bound = np.where(zk > bk, bk, ak)
    d = z - x
    ds, dc = d.copy(), d.copy()
    ds[rows, k] = bound - xk
    dc[rows, k] = c_k - xk
    cos_s, cos_c = row_cosines(d, ds), row_cosines(d, dc)
    reason = np.full(len(x), "ok", dtype=object)
    reason[np.isnan(cos_s) | np.isnan(cos_c)] = "zero_direction"
    reason[np.einsum("ij,ij->i", d, d) < 2.0 * (zk - xk) * (zk - bound)] = "norm_condition"
    reason[~((ak < c_k) & (c_k < bk))] = "not_interior"
    reason[nbad > 1] = "multiple_infeasible"
    reason[nbad == 0] = "feasible"
    return reason, cos_s, cos_c


def check_saturation_vs_interior(x, z, a, b, c_k: float) -> Verdict:
    """SAT beats any interior replacement ``c_k`` of the single infeasible component."""
    reason, cs, cc = saturation_vs_interior_batch(x, z, a, b, c_k)
    if reason[0] != "ok":
        return Verdict(None, reason[0])
    return Verdict(bool(cs[0] >= cc[0] - TOL), "ok", float(cs[0]), float(cc[0]))


def _random_boxes(m, n, rng: RngStream):
    a = rng.uniform(-5.0, 5.0, (m, n))
    return a, a + rng.uniform(0.1, 10.0, (m, n))


def mirror_vs_torus_candidates(m: int, n: int, rng: RngStream):
    """Random (x, z, a, b) arrays built to mostly satisfy the MIR/TOR preconditions."""
    a, b = _random_boxes(m, n, rng)
    w, mid = b - a, (a + b) / 2.0
    x = a + rng.random((m, n)) * w
    upper = x >= mid
    # Feasible components and overshoots both stay on x's side of the midpoint.
    half = rng.random((m, n)) * w / 2.0
    z = np.where(upper, mid + half, mid - half)
    out = rng.random((m, n)) < 0.6
    over = rng.random((m, n)) * w / 2.0 + 1e-12 * w
    z = np.where(out & upper, b + over, np.where(out & ~upper, a - over, z))
    return x, z, a, b


def saturation_vs_interior_candidates(m: int, n: int, rng: RngStream):
    """Random (x, z, a, b, c_k) with exactly one infeasible component."""
    a, b = _random_boxes(m, n, rng)
    w = b - a
    rows = np.arange(m)
    x = a + rng.random((m, n)) * w
    z = a + rng.random((m, n)) * w
    k = rng.integers(0, n, m)
    wk = w[rows, k]
    over = rng.random(m) * rng.random(m) * wk + 1e-9 * wk
    up = rng.random(m) < 0.5
    z[rows, k] = np.where(up, b[rows, k] + over, a[rows, k] - over)
    c_k = a[rows, k] + rng.uniform(1e-9, 1.0 - 1e-9, m) * wk
    return x, z, a, b, c_k


def run_inequality_batch(batch, candidates, count: int, rng: RngStream, max_n: int = 6) -> dict:
    """Check ``count`` precondition-satisfying random instances.

    Dimensions cycle through ``1..max_n``; candidates failing a precondition
    are discarded and tallied under their reason code.
    """
    counts = {"checked": 0, "violations": 0, "worst_gap": 0.0, "skipped": {}}
    per_round = -(-count // max_n)
    n = 0
    while counts["checked"] < count:
        n = n % max_n + 1
        need = min(count - counts["checked"], per_round)
        reason, lhs, rhs = batch(*candidates(2 * need, n, rng))
        ok = np.flatnonzero(reason == "ok")[:need]
        for r, c in zip(*np.unique(reason[reason != "ok"], return_counts=True)):
            counts["skipped"][r] = counts["skipped"].get(r, 0) + int(c)
        counts["checked"] += ok.size
        viol = lhs[ok] < rhs[ok] - TOL
        counts["violations"] += int(viol.sum())
        if viol.any():
            counts["worst_gap"] = max(counts["worst_gap"], float(np.max(rhs[ok][viol] - lhs[ok][viol])))
    return counts


def mirror_vs_torus_suite(count: int, rng: RngStream, max_n: int = 4, require_positive_dot: bool = False) -> dict:
    """Prop-2 style check; ``require_positive_dot`` adds the d.d_M >= 0 condition."""
    def batch(x, z, a, b):
        reason, cm, ct = mirror_vs_torus_batch(x, z, a, b)
        if require_positive_dot:
            cmv = repair(SdisKind.MIR, z, x, a, b, None)
            neg = np.einsum("ij,ij->i", z - x, cmv - x) < 0
            reason = np.where((reason == "ok") & neg, "negative_mirror_dot", reason)
        return reason, cm, ct
    return run_inequality_batch(batch, mirror_vs_torus_candidates, count, rng, max_n)


def saturation_vs_interior_suite(count: int, rng: RngStream, max_n: int = 6) -> dict:
    return run_inequality_batch(saturation_vs_interior_batch, saturation_vs_interior_candidates, count, rng, max_n)


def check_dominance(quantile_x: Callable, quantile_y: Callable, n_draws: int, rng: RngStream) -> float:
    """Monte-Carlo estimate of P(X <= Y) for independent X, Y given by quantile functions."""
    X = quantile_x(rng.random(n_draws))
    Y = quantile_y(rng.random(n_draws))
    return float(np.mean(X <= Y))


def dominance_discrete(pmf_x, pmf_y) -> float:
    """Exact P(X <= Y) for independent X, Y on a shared sorted support."""
    px, py = np.asarray(pmf_x, dtype=np.float64), np.asarray(pmf_y, dtype=np.float64)
    return float(np.sum(py * np.cumsum(px)))


def dominance_candidates(m: int, support: int, rng: RngStream):
    """``(pmf_x, pmf_y)`` rows on a shared support with CDF_X >= CDF_Y pointwise.

    CDF_X = 1 - (1 - lam)(1 - CDF_Y) with non-decreasing ``lam`` in [0, 1]
    keeps CDF_X monotone and above CDF_Y.
    """
    py = rng.generator.dirichlet(np.ones(support), size=m)
    Fy = np.minimum(np.cumsum(py, axis=1), 1.0)
    lam = np.sort(rng.random((m, support)), axis=1)
    Fx = 1.0 - (1.0 - lam) * (1.0 - Fy)
    Fx[:, -1] = 1.0
    px = np.maximum(np.diff(Fx, axis=1, prepend=0.0), 0.0)
    return px, py


def dominance_batch(pmf_x, pmf_y):
    px, py = np.atleast_2d(pmf_x), np.atleast_2d(pmf_y)
    Fx, Fy = np.cumsum(px, axis=1), np.cumsum(py, axis=1)
    p = np.sum(py * Fx, axis=1)
    reason = np.where(np.any(Fx < Fy - TOL, axis=1), "no_dominance", "ok").astype(object)
    return reason, p, np.full(len(p), 0.5)


def check_dominance_discrete(pmf_x, pmf_y) -> Verdict:
    """P(X <= Y) >= 1/2 for a pair where X's CDF dominates Y's."""
    reason, p, half = dominance_batch(pmf_x, pmf_y)
    if reason[0] != "ok":
        return Verdict(None, reason[0])
    return Verdict(bool(p[0] >= 0.5 - TOL), "ok", float(p[0]), 0.5)


def dominance_suite(count: int, rng: RngStream, max_support: int = 12) -> dict:
    return run_inequality_batch(dominance_batch, dominance_candidates, count, rng, max_support)
