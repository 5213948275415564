"""Command-line entry point: ``desdis <subcommand> ...``.

``run`` executes an experiment spec; the remaining subcommands read a
results directory (with ``manifest.json``) and write a CSV summary to
``--output`` or stdout.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from typing import Sequence

import numpy as np

from . import analysis, theory
from .core import ConfigurationError, RngStream
from .experiment import ExperimentSpec, default_output_dir, load_runs, run_experiment
from .instruments import cs_ecdf, cumulative_pois, ecdf_area, windowed_pois

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 2

LABELS = list(analysis.LABEL_KEYS)


def _fmt(v):
    if isinstance(v, float):
        return "inf" if math.isinf(v) else ("nan" if math.isnan(v) else format(v, ".17g"))
    return "" if v is None else str(v)


def _write_rows(path, header, rows) -> None:
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    finally:
        if path:
            fh.close()


def _groups(args):
    return analysis.group_runs(load_runs(args.results)).items()


# -- subcommands ---------------------------------------------------------------

def cmd_run(args) -> int:
    spec = ExperimentSpec.load(args.config)
    if args.seed is not None:
        spec.master_seed = args.seed
    out = args.out or spec.output or default_output_dir()
    manifest = run_experiment(spec, out, workers=args.workers)
    n, failed = len(manifest["runs"]), manifest["failed"]
    print(f"{n - failed}/{n} runs completed; manifest in {out}", file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_ecdf_cs(args) -> int:
    grid = np.linspace(-1.0, 1.0, args.points)
    rows = []
    for key, runs in _groups(args):
        values = np.concatenate([lg.cosines for _, lg in runs])
        if values.size == 0:
            continue
        area = ecdf_area(values)
        rows += [(*key, x, y, area) for x, y in cs_ecdf(values, grid)]
    _write_rows(args.output, LABELS + ["cosine", "ecdf", "area"], rows)
    return EXIT_OK


def cmd_ecdf_target(args) -> int:
    targets = analysis.default_targets()
    rows = []
    groups = analysis.group_runs(load_runs(args.results), keys=("engine", "N", "F", "Cr", "crossover", "sdis", "n"))
    for key, runs in groups.items():
        logs = [lg for _, lg in runs]
        opt = [lg.meta.get("optimum_value") or 0.0 for lg in logs]
        evals, frac = analysis.fixed_target_ecdf(logs, targets, optimum_values=opt)
        rows += [(*key, int(e), f) for e, f in zip(evals, frac)]
    _write_rows(args.output, ["engine", "N", "F", "Cr", "crossover", "sdis", "n", "evaluations", "fraction"], rows)
    return EXIT_OK


def cmd_ert(args) -> int:
    targets = args.target or [1e-8]
    rows = []
    for key, runs in _groups(args):
        logs = [lg for _, lg in runs]
        budget = max(e["config"]["max_evaluations"] for e, _ in runs)
        opt = logs[0].meta.get("optimum_value") or 0.0
        for t in targets:
            times = analysis.hitting_times(logs, t, opt)
            succ = sum(math.isfinite(x) for x in times)
            rows.append((*key, t, analysis.ert(times, budget), succ, len(times)))
    _write_rows(args.output, LABELS + ["target", "ert", "successes", "runs"], rows)
    return EXIT_OK


def cmd_pois(args) -> int:
    rows = []
    for entry, lg in load_runs(args.results):
        key = analysis.group_key(entry["config"])
        cum = dict(cumulative_pois(lg))
        for g, w in windowed_pois(lg, args.window):
            rows.append((*key, entry["run_index"], g, w, cum[g], lg.final_pois))
    _write_rows(args.output, LABELS + ["run", "generation", "windowed_pois", "cumulative_pois", "final_pois"], rows)
    return EXIT_OK


def cmd_diversity(args) -> int:
    rows = []
    for key, runs in _groups(args):
        gens = [lg.generations for _, lg in runs]
        length = min(len(g["generation"]) for g in gens)
        D = np.array([g["diversity"][:length] for g in gens])
        for k in range(length):
            rows.append((*key, int(gens[0]["generation"][k]), float(D[:, k].mean()), float(D[:, k].std()), len(gens)))
    _write_rows(args.output, LABELS + ["generation", "mean_diversity", "std_diversity", "runs"], rows)
    return EXIT_OK


def cmd_theory_check(args) -> int:
    rng = RngStream(args.seed if args.seed is not None else 0)
    m = args.samples
    rows = []
    for F in (0.25, 0.5, 0.75, 1.0):
        pred = theory.violation_fixed_point(F)
        sim = theory.simulate_sat_violation(F, m, 200, rng.child("sat", F))[-50:].mean()
        rows.append(("violation_fixed_point", F, pred, sim, abs(pred - sim)))
    for F in (0.5, 0.75, 1.0):
        pred = theory.mirror_corrected_variance(F)
        for kind in ("MIR", "TOR"):
            sim = theory.simulate_corrected_variance(F, m, rng.child("var", kind, F), kind)
            rows.append((f"corrected_variance_{kind}", F, pred, sim, abs(pred - sim)))
    suites = (
        ("mirror_vs_torus", theory.mirror_vs_torus_suite),
        ("saturation_vs_interior", theory.saturation_vs_interior_suite),
        ("dominance", theory.dominance_suite),
    )
    for name, suite in suites:
        res = suite(m, rng.child(name))
        rows.append((f"{name}_violations", "", 0.0, float(res["violations"]), float(res["violations"])))
    _write_rows(args.output, ["quantity", "F", "predicted", "simulated", "abs_diff"], rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="desdis", description="DE experiments with swappable SDIS operators.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment spec")
    r.add_argument("--config", required=True, help="JSON experiment spec")
    r.add_argument("--out", help="output directory (default: $DESDIS_OUT or ./desdis-out)")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--seed", type=int, help="master seed, overrides the spec")
    r.set_defaults(func=cmd_run)

    def reader(name, func, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("results", nargs="?", default=None, help="results directory (default: $DESDIS_OUT)")
        s.add_argument("--output", "-o", help="CSV file (default: stdout)")
        s.set_defaults(func=func)
        return s

    reader("ecdf-cs", cmd_ecdf_cs, "ECDF of cosine similarities per configuration").add_argument(
        "--points", type=int, default=201)
    reader("ecdf-target", cmd_ecdf_target, "fixed-target ECDF over 51 log-spaced targets")
    reader("ert", cmd_ert, "expected running time per configuration").add_argument(
        "--target", type=float, action="append", help="precision target (repeatable, default 1e-8)")
    reader("pois", cmd_pois, "windowed and cumulative infeasible-trial rates").add_argument(
        "--window", type=int, default=10)
    reader("diversity", cmd_diversity, "mean diversity per generation")

    t = sub.add_parser("theory-check", help="compare closed forms with simulation")
    t.add_argument("--samples", type=int, default=100_000)
    t.add_argument("--seed", type=int)
    t.add_argument("--output", "-o")
    t.set_defaults(func=cmd_theory_check)
    return p


def main(argv: Sequence[str] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "results", "unset") is None:
        args.results = default_output_dir()
    try:
        return args.func(args)
    except (ConfigurationError, ValueError, FileNotFoundError) as exc:
        print(f"desdis: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
