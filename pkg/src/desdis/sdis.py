"""Component-wise strategies for dealing with infeasible solutions (SDIS).

Every strategy maps an out-of-bounds trial component back into
``[a, b]``.  ``repair`` is the vectorised workhorse used by the engines;
``correct_component`` and ``apply_sdis`` are the scalar / single-vector
entry points built on top of it.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BoxDomain, ContractViolation, RngStream

# Re-wrapping cap for mirror/toroidal; only reachable when F > 1.
MAX_WRAPS = 10


class UndefinedInputError(ValueError):
    pass


class SdisKind(str, enum.Enum):
    COTN = "COTN"  # complete one-sided truncated normal
    HVB = "HVB"  # halfway to violated bound
    MIR = "MIR"  # mirror
    SAT = "SAT"  # saturation
    TOR = "TOR"  # toroidal
    UNI = "UNI"  # uniform resample

    @classmethod
    def parse(cls, value) -> "SdisKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown SDIS {value!r}; expected one of {[k.value for k in cls]}") from None


def cotn_default_sigma(a, b):
    """Default COTN spread: a third of the domain width."""
    return (np.asarray(b) - np.asarray(a)) / 3.0


def _cotn(upper_side: np.ndarray, a: np.ndarray, b: np.ndarray, sigma: np.ndarray, rng: RngStream) -> np.ndarray:
    # Half-normal from the violated bound towards the interior, truncated at
    # the opposite bound by rejection.
    out = np.empty(a.shape)
    todo = np.arange(a.size)
    while todo.size:
        step = np.abs(rng.normal(size=todo.size)) * sigma[todo]
        y = np.where(upper_side[todo], b[todo] - step, a[todo] + step)
        ok = (y >= a[todo]) & (y <= b[todo])
        out[todo[ok]] = y[ok]
        todo = todo[~ok]
    return out


def repair(
    kind: SdisKind,
    trials: np.ndarray,
    targets: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    rng: RngStream,
    cotn_sigma: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Return a feasible copy of ``trials`` (shape ``(..., n)``).

    Feasible components are left untouched.  ``targets`` is only read by HVB.
    """
    kind = SdisKind.parse(kind)
    z = np.array(trials, dtype=np.float64, copy=True)
    lo = np.broadcast_to(lower, z.shape)
    hi = np.broadcast_to(upper, z.shape)
    below = z < lo
    above = z > hi
    bad = below | above
    if not bad.any():
        return z

    if kind is SdisKind.SAT:
        z[below] = lo[below]
        z[above] = hi[above]
    elif kind is SdisKind.MIR:
        for _ in range(MAX_WRAPS):
            b_, a_ = z > hi, z < lo
            if not (b_.any() or a_.any()):
                break
            z = np.where(b_, 2.0 * hi - z, z)
            z = np.where(a_, 2.0 * lo - z, z)
    elif kind is SdisKind.TOR:
        w = hi - lo
        for _ in range(MAX_WRAPS):
            b_, a_ = z > hi, z < lo
            if not (b_.any() or a_.any()):
                break
            z = np.where(b_, z - w, z)
            z = np.where(a_, z + w, z)
    elif kind is SdisKind.UNI:
        idx = np.nonzero(bad)
        z[idx] = lo[idx] + rng.random(len(idx[0])) * (hi[idx] - lo[idx])
    elif kind is SdisKind.HVB:
        x = np.broadcast_to(targets, z.shape)
        z[below] = 0.5 * (x[below] + lo[below])
        z[above] = 0.5 * (x[above] + hi[above])
    elif kind is SdisKind.COTN:
        sigma = cotn_default_sigma(lo, hi) if cotn_sigma is None else np.broadcast_to(cotn_sigma, z.shape)
        idx = np.nonzero(bad)
        z[idx] = _cotn(above[idx], lo[idx], hi[idx], np.asarray(sigma)[idx], rng)

    # Only reachable for MIR/TOR after MAX_WRAPS re-wraps, or rounding at the edge.
    np.clip(z, lo, hi, out=z)
    return z


def correct_component(kind, z_i: float, x_i: float, a_i: float, b_i: float, rng: RngStream = None,
                      cotn_sigma: Optional[float] = None) -> float:
    if a_i <= z_i <= b_i:
        raise ContractViolation(f"component {z_i} is feasible in [{a_i}, {b_i}]")
    if not a_i <= x_i <= b_i:
        raise ContractViolation(f"target component {x_i} is outside [{a_i}, {b_i}]")
    kind = SdisKind.parse(kind)
    if kind in (SdisKind.UNI, SdisKind.COTN) and rng is None:
        raise ContractViolation(f"{kind.value} needs a random stream")
    sigma = None if cotn_sigma is None else np.array([cotn_sigma])
    out = repair(kind, np.array([z_i]), np.array([x_i]), np.array([a_i]), np.array([b_i]), rng, sigma)
    return float(out[0])


def cosine_similarity(v1, v2) -> float:
    v1 = np.asarray(v1, dtype=np.float64)
    v2 = np.asarray(v2, dtype=np.float64)
    n1, n2 = np.linalg.norm(v1), np.linalg.norm(v2)
    if n1 == 0.0 or n2 == 0.0:
        raise UndefinedInputError("cosine similarity is undefined for a zero vector")
    return float(np.clip(v1 @ v2 / (n1 * n2), -1.0, 1.0))


def row_cosines(d: np.ndarray, dc: np.ndarray) -> np.ndarray:
    """Row-wise cosine similarity; NaN where either row has zero norm."""
    n1 = np.linalg.norm(d, axis=-1)
    n2 = np.linalg.norm(dc, axis=-1)
    dot = np.einsum("...i,...i->...", d, dc)
    with np.errstate(invalid="ignore", divide="ignore"):
        cs = dot / (n1 * n2)
    cs = np.where((n1 > 0) & (n2 > 0), cs, np.nan)
    return np.clip(cs, -1.0, 1.0)


@dataclass(frozen=True)
class CorrectionOutcome:
    corrected: np.ndarray
    n_corrected: int
    cosine: Optional[float] = None


def apply_sdis(kind, trial, target, d: BoxDomain, rng: RngStream = None, cotn_sigma=None) -> CorrectionOutcome:
    """Repair one trial vector and report how much the search direction moved.

    The cosine compares target->trial with target->corrected trial and is
    only reported for infeasible trials with non-zero difference vectors.
    """
    trial = d._check(trial)
    target = d._check(target)
    if np.any(target < d.lower) or np.any(target > d.upper):
        raise ContractViolation("target must be feasible")
    bad = (trial < d.lower) | (trial > d.upper)
    n_bad = int(bad.sum())
    if n_bad == 0:
        return CorrectionOutcome(trial.copy(), 0, None)
    corrected = repair(kind, trial, target, d.lower, d.upper, rng, cotn_sigma)
    cs = row_cosines(trial - target, corrected - target)
    return CorrectionOutcome(corrected, n_bad, None if np.isnan(cs) else float(cs))
