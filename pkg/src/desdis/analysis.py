"""Cross-run summaries: hitting times, ERT, fixed-target ECDF and rank tables."""
from __future__ import annotations

import json
import math
from typing import Iterable, Optional, Sequence

import numpy as np

from .instruments import RunLog

ERT_INF = math.inf
DEFAULT_TARGET_COUNT = 51


def default_targets() -> np.ndarray:
    """51 log-spaced precision targets from 1e2 down to 1e-8."""
    return np.logspace(2, -8, DEFAULT_TARGET_COUNT)


def hitting_time(log: RunLog, target: float, optimum_value: float = 0.0) -> float:
    """First evaluation index whose best-so-far precision is <= ``target``; inf if never."""
    evals, best = log.best_so_far()
    hit = np.flatnonzero(best - optimum_value <= target)
    return float(evals[hit[0]]) if hit.size else math.inf


def hitting_times(logs: Iterable[RunLog], target: float, optimum_value: float = 0.0) -> list[float]:
    return [hitting_time(lg, target, optimum_value) for lg in logs]


def ert(hitting_times: Sequence[float], budget: float) -> float:
    """Budget-capped evaluations summed over runs, divided by the number of successes.

    Returns ``math.inf`` when no run succeeds.
    """
    t = np.asarray(list(hitting_times), dtype=np.float64)
    if t.size == 0:
        raise ValueError("ert needs at least one run")
    if budget <= 0:
        raise ValueError("budget must be positive")
    successes = np.count_nonzero(np.isfinite(t))
    if successes == 0:
        return ERT_INF
    return float(np.minimum(t, budget).sum() / successes)


def format_ert(value: float) -> str:
    return "inf" if math.isinf(value) else format(value, ".17g")


def fixed_target_ecdf(logs: Sequence[RunLog], targets=None, evaluations=None,
                      optimum_values: Optional[Sequence[float]] = None) -> tuple[np.ndarray, np.ndarray]:
    """Fraction of (run, target) pairs reached by each evaluation count.

    Logs from different functions may be mixed; each contributes its
    per-(run, target) indicators with equal weight.  ``optimum_values`` gives
    f(x*) per log (default 0).  Returns ``(evaluations, fraction)``.
    """
    targets = default_targets() if targets is None else np.asarray(targets, dtype=np.float64)
    if optimum_values is None:
        optimum_values = [0.0] * len(logs)
    times = np.array([[hitting_time(lg, t, fo) for t in targets] for lg, fo in zip(logs, optimum_values)],
                     dtype=np.float64).ravel()
    if evaluations is None:
        finite = np.unique(times[np.isfinite(times)])
        evaluations = finite if finite.size else np.array([1.0])
    evaluations = np.asarray(evaluations, dtype=np.float64)
    if times.size == 0:
        return evaluations, np.zeros_like(evaluations)
    ts = np.sort(times)
    frac = np.searchsorted(ts, evaluations, side="right") / ts.size
    return evaluations, frac


LABEL_KEYS = ("engine", "N", "F", "Cr", "crossover", "sdis", "function", "n")


def group_key(config: dict, keys=LABEL_KEYS) -> tuple:
    return tuple(config.get(k) for k in keys)


def group_runs(runs, keys=LABEL_KEYS) -> dict:
    """Group ``(entry, log)`` pairs by the given config keys, preserving order."""
    groups: dict = {}
    for entry, lg in runs:
        groups.setdefault(group_key(entry["config"], keys), []).append((entry, lg))
    return groups


def rank(values: dict, reverse: bool = False) -> list:
    """Keys sorted by value (ascending unless ``reverse``), ties broken by key."""
    return sorted(values, key=lambda k: ((-values[k] if reverse else values[k]), str(k)))


def config_label(config: dict) -> str:
    return json.dumps({k: config.get(k) for k in LABEL_KEYS if config.get(k) is not None}, sort_keys=True)
