"""Run-time measurements: disruptiveness, diversity and infeasibility rates.

A ``RunLog`` holds three streams:

* corrections -- one row per trial: ``eval_index, generation, n_corrected, cosine``
  (``cosine`` is NaN for feasible trials or degenerate directions),
* generations -- one row per generation, generation 0 being the initial
  population,
* trace -- ``(eval_index, best_fitness)`` every time the best-so-far improves.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

CORRECTION_COLUMNS = ("eval_index", "generation", "n_corrected", "cosine")
GENERATION_COLUMNS = (
    "generation", "diversity", "infeasible_trials", "trials", "best_fitness", "pop_size",
    "infeasible_components", "mutated_components",
)
TRACE_COLUMNS = ("eval_index", "best_fitness")
_INT_COLUMNS = {
    "eval_index", "generation", "n_corrected", "infeasible_trials", "trials", "pop_size",
    "infeasible_components", "mutated_components",
}


def diversity(positions, domain=None, ddof: int = 0, normalize: bool = False) -> float:
    """Mean over dimensions of the per-dimension standard deviation.

    ``positions`` may be a Population or an ``(N, n)`` array.  With
    ``normalize`` each dimension is divided by the domain width.
    """
    X = np.asarray(getattr(positions, "positions", positions), dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("diversity needs at least two members")
    sd = X.std(axis=0, ddof=ddof)
    if normalize:
        if domain is None:
            raise ValueError("normalize=True needs a domain")
        sd = sd / domain.width
    return float(sd.mean())


def _frame(columns, data) -> dict:
    out = {}
    for c in columns:
        dtype = np.int64 if c in _INT_COLUMNS else np.float64
        out[c] = np.asarray(data.get(c, []), dtype=dtype)
    return out


@dataclass
class RunLog:
    corrections: dict
    generations: dict
    trace: dict = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.corrections = _frame(CORRECTION_COLUMNS, self.corrections)
        self.generations = _frame(GENERATION_COLUMNS, self.generations)
        self.trace = _frame(TRACE_COLUMNS, self.trace or {})

    @property
    def n_trials(self) -> int:
        return len(self.corrections["eval_index"])

    @property
    def cosines(self) -> np.ndarray:
        cs = self.corrections["cosine"]
        return cs[~np.isnan(cs)]

    @property
    def final_pois(self) -> float:
        if self.n_trials == 0:
            return 0.0
        return float(np.count_nonzero(self.corrections["n_corrected"] > 0) / self.n_trials)

    @property
    def total_infeasible_components(self) -> int:
        return int(self.generations["infeasible_components"].sum())

    @property
    def total_components_generated(self) -> int:
        return int(self.generations["mutated_components"].sum())

    @property
    def summary(self) -> dict:
        return {
            "final_pois": self.final_pois,
            "total_infeasible_components": self.total_infeasible_components,
            "total_components_generated": self.total_components_generated,
            "trials": self.n_trials,
        }

    def best_so_far(self) -> tuple[np.ndarray, np.ndarray]:
        return self.trace["eval_index"], self.trace["best_fitness"]

    # -- serialisation -----------------------------------------------------
    def write(self, directory) -> list[str]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        files = []
        for name, cols, data in (
            ("corrections.csv", CORRECTION_COLUMNS, self.corrections),
            ("generations.csv", GENERATION_COLUMNS, self.generations),
            ("trace.csv", TRACE_COLUMNS, self.trace),
        ):
            write_csv(directory / name, cols, data)
            files.append(name)
        with open(directory / "summary.json", "w") as fh:
            json.dump({"schema_version": SCHEMA_VERSION, "summary": self.summary, "meta": self.meta},
                      fh, indent=1, sort_keys=True)
        files.append("summary.json")
        return files

    @classmethod
    def read(cls, directory) -> "RunLog":
        directory = Path(directory)
        with open(directory / "summary.json") as fh:
            head = json.load(fh)
        check_schema(head.get("schema_version"))
        return cls(
            corrections=read_csv(directory / "corrections.csv", CORRECTION_COLUMNS),
            generations=read_csv(directory / "generations.csv", GENERATION_COLUMNS),
            trace=read_csv(directory / "trace.csv", TRACE_COLUMNS),
            meta=head.get("meta", {}),
        )


def check_schema(version) -> None:
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported log schema version {version!r} (expected {SCHEMA_VERSION})")


def _fmt(v, is_int):
    if is_int:
        return str(int(v))
    v = float(v)
    if np.isnan(v):
        return "nan"
    return format(v, ".17g")


def write_csv(path, columns, data) -> None:
    rows = len(data[columns[0]]) if columns else 0
    ints = [c in _INT_COLUMNS for c in columns]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        cols = [data[c] for c in columns]
        for r in range(rows):
            fh.write(",".join(_fmt(col[r], is_int) for col, is_int in zip(cols, ints)) + "\n")


def read_csv(path, columns) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != tuple(columns):
            raise ValueError(f"{os.fspath(path)}: unexpected columns {header}")
        rows = list(reader)
    out = {}
    for j, c in enumerate(columns):
        vals = [r[j] for r in rows]
        out[c] = np.array([int(v) for v in vals], dtype=np.int64) if c in _INT_COLUMNS else \
            np.array([float(v) for v in vals], dtype=np.float64)
    return out


def _generation_fractions(log: RunLog):
    g = log.generations
    keep = g["trials"] > 0
    return g["generation"][keep], g["infeasible_trials"][keep] / g["trials"][keep]


def windowed_pois(log: RunLog, window: int = 10) -> list[tuple[int, float]]:
    """Per-generation infeasible-trial fraction, moving-averaged over ``window`` generations."""
    if window < 1:
        raise ValueError("window must be >= 1")
    gens, frac = _generation_fractions(log)
    csum = np.concatenate([[0.0], np.cumsum(frac)])
    out = []
    for k in range(len(frac)):
        lo = max(0, k - window + 1)
        out.append((int(gens[k]), float((csum[k + 1] - csum[lo]) / (k + 1 - lo))))
    return out


def cumulative_pois(log: RunLog) -> list[tuple[int, float]]:
    """Fraction of all trials so far that needed correction, per generation."""
    g = log.generations
    keep = g["trials"] > 0
    inf = np.cumsum(g["infeasible_trials"][keep])
    tot = np.cumsum(g["trials"][keep])
    return [(int(a), float(b)) for a, b in zip(g["generation"][keep], inf / tot)]


def violation_frequency(log: RunLog, horizon_generations: int) -> float:
    """Infeasible components over mutant-inherited components in generations 1..horizon."""
    g = log.generations
    recorded = int(g["generation"].max()) if len(g["generation"]) else 0
    if horizon_generations > recorded:
        raise ValueError(f"horizon {horizon_generations} exceeds the {recorded} recorded generations")
    sel = (g["generation"] >= 1) & (g["generation"] <= horizon_generations)
    total = g["mutated_components"][sel].sum()
    return float(g["infeasible_components"][sel].sum() / total) if total else 0.0


def cs_ecdf(values, grid) -> list[tuple[float, float]]:
    """Fraction of ``values`` that are <= x, for each x on ``grid``."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ValueError("ECDF of an empty sample")
    grid = np.asarray(grid, dtype=np.float64)
    frac = np.searchsorted(v, grid, side="right") / v.size
    return list(zip(grid.tolist(), frac.tolist()))


def ecdf_area(values) -> float:
    """Area under the CS ECDF on [-1, 1]; larger means more disruptive."""
    # For values in [-1, 1] the integral of the ECDF is 1 - mean.
    return float(1.0 - np.asarray(values, dtype=np.float64).mean())


class Instrument:
    """Hook interface the engines call into; override what you need."""

    def on_trials(self, generation: int, eval_index: np.ndarray, targets: np.ndarray, trials: np.ndarray,
                  corrected: np.ndarray, n_corrected: np.ndarray, cosines: np.ndarray) -> None:
        pass

    def on_generation(self, record: dict, positions: np.ndarray) -> None:
        pass


class Recorder(Instrument):
    """Builds the RunLog during a run."""

    def __init__(self, domain=None, diversity_ddof: int = 0, diversity_normalize: bool = False):
        self.domain = domain
        self.ddof = diversity_ddof
        self.normalize = diversity_normalize
        self._corr = {c: [] for c in CORRECTION_COLUMNS}
        self._gens = {c: [] for c in GENERATION_COLUMNS}
        self._trace = {c: [] for c in TRACE_COLUMNS}

    def diversity_of(self, positions) -> float:
        if len(positions) < 2:
            return 0.0
        return diversity(positions, self.domain, ddof=self.ddof, normalize=self.normalize)

    def on_trials(self, generation, eval_index, targets, trials, corrected, n_corrected, cosines):
        self._corr["eval_index"].append(eval_index)
        self._corr["generation"].append(np.full(len(eval_index), generation))
        self._corr["n_corrected"].append(n_corrected)
        self._corr["cosine"].append(cosines)

    def on_generation(self, record, positions):
        for c in GENERATION_COLUMNS:
            self._gens[c].append(record[c])

    def on_improvement(self, eval_index: int, best: float):
        self._trace["eval_index"].append(eval_index)
        self._trace["best_fitness"].append(best)

    def log(self, meta=None) -> RunLog:
        corr = {c: (np.concatenate(v) if v else []) for c, v in self._corr.items()}
        return RunLog(corr, dict(self._gens), dict(self._trace), dict(meta or {}))
