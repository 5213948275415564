"""Experiment grids: expansion, deterministic seeding, log bundles and manifest."""
from __future__ import annotations

import hashlib
import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .core import ConfigurationError, RngStream, derive_seed
from .engines import EngineConfig, EngineKind, run
from .functions import FUNCTION_IDS, make_objective
from .instruments import SCHEMA_VERSION, RunLog, check_schema
from .sdis import SdisKind
from .variation import Crossover, DeParams

log = logging.getLogger(__name__)

OUTPUT_ENV = "DESDIS_OUT"
MANIFEST = "manifest.json"

STUDY_F_GRID = [0.05, 0.285, 0.52, 0.755, 0.99]
STUDY_CR_BIN = [0.05, 0.285, 0.52, 0.755, 0.99, 0.0891, 0.1283, 0.1675, 0.2067, 0.2458]
STUDY_CR_EXP = [0.05, 0.285, 0.52, 0.755, 0.99]


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


@dataclass(frozen=True)
class RunTask:
    config: dict
    config_hash: str
    run_index: int
    seed: int

    @property
    def run_id(self) -> str:
        return f"{self.config_hash}/run{self.run_index:03d}"


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _validate_block(block: dict) -> None:
    engine = EngineKind.parse(block.get("engine", "DE_RAND1"))
    for F in _as_list(block.get("F", [])):
        if F is not None and not 0.0 < float(F) <= 2.0:
            raise ConfigurationError(f"invalid F={F}: must lie in (0, 2]")
    for Cr in _as_list(block.get("Cr", [])):
        if Cr is not None and not 0.0 <= float(Cr) <= 1.0:
            raise ConfigurationError(f"invalid Cr={Cr}: must lie in [0, 1]")
    for N in _as_list(block.get("N", [])):
        if str(N) != "18n" and int(N) < 4:
            raise ConfigurationError(f"invalid N={N}: must be >= 4")
    for fid in _as_list(block.get("functions", [])):
        if fid not in FUNCTION_IDS:
            raise ConfigurationError(f"unknown function {fid!r}")
    for s in _as_list(block.get("sdis", [])):
        SdisKind.parse(s)
    for c in _as_list(block.get("crossover", ["BIN"])):
        Crossover.parse(c)
    if engine is EngineKind.DE_RAND1 and (not block.get("F") or not block.get("Cr")):
        raise ConfigurationError("DE_RAND1 blocks need non-empty F and Cr grids")
    if int(block.get("runs", 1)) < 1:
        raise ConfigurationError("runs must be >= 1")
    for key in ("N", "sdis", "functions"):
        if not _as_list(block.get(key, [])):
            raise ConfigurationError(f"grid {key!r} must be non-empty")


class ExperimentSpec:
    """A list of grid blocks plus a master seed.

    A block looks like::

        {"engine": "DE_RAND1", "N": [100], "F": [0.52], "Cr": [0.52],
         "crossover": ["BIN"], "sdis": ["SAT", "MIR"], "functions": ["f0"],
         "dimension": 30, "instances": [1], "runs": 10, "budget_multiplier": 1000}

    For SHADE/LSHADE the F, Cr and crossover grids are ignored; an LSHADE
    ``N`` of ``"18n"`` means eighteen times the dimension.
    """

    def __init__(self, blocks: list, master_seed: int = 0, output: Optional[str] = None):
        if not blocks:
            raise ConfigurationError("experiment spec has no blocks")
        self.blocks = [dict(b) for b in blocks]
        for b in self.blocks:
            _validate_block(b)
        self.master_seed = int(master_seed)
        self.output = output

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        blocks = data.get("experiments")
        if blocks is None:
            blocks = [{k: v for k, v in data.items() if k not in ("master_seed", "seed", "output")}]
        return cls(blocks, data.get("master_seed", data.get("seed", 0)), data.get("output"))

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {"master_seed": self.master_seed, "experiments": self.blocks}

    def configs(self) -> list[dict]:
        out = []
        for block in self.blocks:
            engine = EngineKind.parse(block.get("engine", "DE_RAND1"))
            de = engine is EngineKind.DE_RAND1
            dims = _as_list(block.get("dimension", block.get("dimensions", 30)))
            Fs = _as_list(block.get("F")) if de else [None]
            Crs = _as_list(block.get("Cr")) if de else [None]
            xovers = _as_list(block.get("crossover", ["BIN"])) if de else [None]
            mult = int(block.get("budget_multiplier", 10000))
            for n, N, F, Cr, xo, sdis, fid, inst in itertools.product(
                dims, _as_list(block["N"]), Fs, Crs, xovers, _as_list(block["sdis"]),
                _as_list(block["functions"]), _as_list(block.get("instances", [1])),
            ):
                n = int(n)
                size = 18 * n if str(N) == "18n" else int(N)
                cfg = {
                    "engine": engine.value, "N": size, "sdis": SdisKind.parse(sdis).value,
                    "function": fid, "n": n, "instance": int(inst), "max_evaluations": mult * n,
                }
                if de:
                    cfg.update(F=float(F), Cr=float(Cr), crossover=Crossover.parse(xo).value)
                for key in ("memory_size", "archive_rate", "p_max", "N_min", "cotn_sigma"):
                    if key in block:
                        cfg[key] = block[key]
                out.append(cfg)
        return out

    def tasks(self) -> list[RunTask]:
        tasks = []
        for block_cfgs, block in zip(self._per_block(), self.blocks):
            runs = int(block.get("runs", 1))
            for cfg in block_cfgs:
                h = config_hash(cfg)
                for r in range(runs):
                    tasks.append(RunTask(cfg, h, r, derive_seed(self.master_seed, h, r)))
        return tasks

    def _per_block(self):
        for b in self.blocks:
            yield ExperimentSpec([b], self.master_seed).configs()


def engine_config(cfg: dict, seed: int) -> EngineConfig:
    params = None
    if cfg["engine"] == EngineKind.DE_RAND1.value:
        params = DeParams(cfg["F"], cfg["Cr"], cfg["crossover"])
    extra = {k: cfg[k] for k in ("memory_size", "archive_rate", "p_max", "N_min", "cotn_sigma") if k in cfg}
    return EngineConfig(cfg["engine"], cfg["N"], cfg["sdis"], cfg["max_evaluations"], seed, params, **extra)


def execute(task: RunTask) -> RunLog:
    objective = make_objective(task.config["function"], task.config["n"], task.config["instance"],
                               rng=RngStream(task.seed).child("objective"))
    logrec = run(engine_config(task.config, task.seed), objective)
    logrec.meta.update(config_hash=task.config_hash, run_index=task.run_index)
    return logrec


def _run_and_write(args) -> dict:
    task, out_dir = args
    entry = {
        "run_id": task.run_id, "config": task.config, "config_hash": task.config_hash,
        "run_index": task.run_index, "seed": task.seed, "path": f"runs/{task.run_id}",
    }
    try:
        files = execute(task).write(Path(out_dir) / entry["path"])
        entry.update(status="ok", files=files)
    except Exception as exc:  # recorded in the manifest; other runs continue
        entry.update(status="failed", error=f"{type(exc).__name__}: {exc}", files=[])
    return entry


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV, "desdis-out")


def run_experiment(spec: ExperimentSpec, out_dir=None, workers: int = 1) -> dict:
    """Run every task, write one log bundle per run and ``manifest.json``.

    Results do not depend on ``workers``: seeds are derived per run.
    """
    out_dir = Path(out_dir or spec.output or default_output_dir())
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = spec.tasks()
    args = [(t, str(out_dir)) for t in tasks]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_run_and_write, args, chunksize=max(1, len(args) // (4 * workers))))
    else:
        entries = [_run_and_write(a) for a in args]
    failed = sum(e["status"] != "ok" for e in entries)
    if failed:
        log.warning("%d of %d runs failed", failed, len(entries))
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "spec": spec.to_dict(),
        "runs": entries,
        "failed": failed,
    }
    with open(out_dir / MANIFEST, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest


def load_manifest(out_dir) -> dict:
    with open(Path(out_dir) / MANIFEST) as fh:
        manifest = json.load(fh)
    check_schema(manifest.get("schema_version"))
    for e in manifest["runs"]:
        if e["status"] == "ok" and config_hash(e["config"]) != e["config_hash"]:
            raise ValueError(f"config hash mismatch for {e['run_id']}")
    return manifest


def load_runs(out_dir) -> list[tuple[dict, RunLog]]:
    """All successful runs as ``(manifest entry, RunLog)`` pairs, in manifest order."""
    manifest = load_manifest(out_dir)
    return [(e, RunLog.read(Path(out_dir) / e["path"])) for e in manifest["runs"] if e["status"] == "ok"]
