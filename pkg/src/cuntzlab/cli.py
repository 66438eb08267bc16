"""Batch experiment runner.

    cuntzlab run CONFIG [--jobs N] [--out DIR] [--tolerance-scale X]
    cuntzlab list-generators
    cuntzlab version

A config is a JSON object with an ``experiment`` kind, fixed ``params`` and
an optional ``grid`` of parameter lists; the cells are the cartesian
product of the grid, each merged over ``params``.  Cell i draws its random
numbers from ``numpy.random.default_rng([seed, i])``, so results do not
depend on ``--jobs``.

Outputs go to ``--out``, else ``$CUNTZLAB_OUT``, else ``./cuntzlab-out``:
``report.json`` and ``curves.csv``.  Exit status: 0 all cells passed,
1 some cell failed (named on stderr), 2 invalid config, 3 budget overflow.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .experiments import RUNNERS, ConfigError, generator_catalog
from .lattice import BudgetError, level_budget

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3
OUT_ENV = "CUNTZLAB_OUT"

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["experiment"],
    "additionalProperties": False,
    "properties": {
        "experiment": {"enum": sorted(RUNNERS)},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "max_dim": {"type": "integer", "minimum": 1},
        "params": {"type": "object"},
        "grid": {
            "type": "object",
            "additionalProperties": {"type": "array", "minItems": 1},
        },
    },
}

_POSITIVE_INTS = ("m", "k", "K", "N", "W", "M", "level", "xi_level", "sites")


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"schema violation: {exc.message}") from None
    for cell in expand_cells(cfg):
        n = cell.get("n")
        if n is not None and (not isinstance(n, int) or n < 2):
            raise ConfigError(f"n must be an integer >= 2, got {n!r}")
        for key in _POSITIVE_INTS:
            v = cell.get(key)
            if v is not None and (not isinstance(v, int) or v < 0):
                raise ConfigError(f"{key} must be a nonnegative integer, got {v!r}")
        for key, low in (("horizons", 1), ("windows", 1), ("levels", 0)):
            v = cell.get(key)
            if v is not None and (not v or any(not isinstance(x, int) or x < low for x in v)):
                raise ConfigError(f"{key} must be a nonempty list of integers >= {low}")


def expand_cells(cfg: dict) -> list:
    base = dict(cfg.get("params", {}))
    grid = cfg.get("grid", {})
    keys = sorted(grid)
    cells = []
    for values in itertools.product(*(grid[k] for k in keys)):
        cell = dict(base)
        cell.update(zip(keys, values))
        cells.append(cell)
    return cells


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def run_cell(experiment: str, idx: int, params: dict, seed: int, tol: float) -> dict:
    rng = np.random.default_rng([seed, idx])
    t0 = time.perf_counter()
    passed, metrics, curves = RUNNERS[experiment](params, rng, tol)
    return {
        "id": f"cell-{idx:03d}",
        "params": params,
        "passed": bool(passed),
        "metrics": _jsonable(metrics),
        "curves": {k: np.asarray(v) for k, v in curves.items()},
        "wall_clock": time.perf_counter() - t0,
    }


def run_config(cfg: dict, jobs: int = 1, tolerance_scale: float = 1.0) -> dict:
    """Execute every cell; raises BudgetError on level overflow."""
    experiment = cfg["experiment"]
    seed = int(cfg.get("seed", 0))
    tol = float(cfg.get("tolerance", 1e-12)) * tolerance_scale
    cells = expand_cells(cfg)
    with level_budget(int(cfg.get("max_dim", 4096))):
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(run_cell, experiment, i, c, seed, tol) for i, c in enumerate(cells)]
                results = [f.result() for f in futures]
        else:
            results = [run_cell(experiment, i, c, seed, tol) for i, c in enumerate(cells)]
    results.sort(key=lambda r: r["id"])
    return {
        "tool": "cuntzlab",
        "version": __version__,
        "seed": seed,
        "tolerance": tol,
        "config": cfg,
        "passed": all(r["passed"] for r in results),
        "cells": results,
    }


def write_outputs(report: dict, out_dir) -> tuple:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = [{k: v for k, v in c.items() if k not in ("curves", "wall_clock")} for c in report["cells"]]
    body = {k: v for k, v in report.items() if k != "cells"}
    body["cells"] = cells
    # wall-clock times are kept apart so the result fields stay reproducible
    body["timing"] = {c["id"]: c["wall_clock"] for c in report["cells"]}
    rpath = out / "report.json"
    rpath.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    cpath = out / "curves.csv"
    with open(cpath, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["experiment", "cell_id", "index", "real", "imag"])
        exp = report["config"]["experiment"]
        for c in report["cells"]:
            for name in sorted(c["curves"]):
                for k, z in enumerate(np.asarray(c["curves"][name], dtype=complex)):
                    w.writerow([exp, f"{c['id']}:{name}", k, "%.17g" % z.real, "%.17g" % z.imag])
    return rpath, cpath


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_config(cfg, args.jobs, args.tolerance_scale)
    except BudgetError as exc:
        print(f"budget overflow: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, KeyError, TypeError) as exc:
        print(f"error: bad cell parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or os.environ.get(OUT_ENV) or "cuntzlab-out"
    rpath, cpath = write_outputs(report, out)
    failed = [c["id"] for c in report["cells"] if not c["passed"]]
    for c in report["cells"]:
        if not c["passed"]:
            print(f"FAILED {c['id']} {json.dumps(_jsonable(c['params']), sort_keys=True)}", file=sys.stderr)
    print(f"{len(report['cells']) - len(failed)}/{len(report['cells'])} cells passed; wrote {rpath} and {cpath}")
    return EXIT_FAIL if failed else EXIT_OK


def _cmd_list(args) -> int:
    print(json.dumps(generator_catalog(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_version(args) -> int:
    print(f"cuntzlab {__version__}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cuntzlab", description="Cuntz-algebra shift experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--jobs", type=int, default=1, help="parallel cells")
    run.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./cuntzlab-out)")
    run.add_argument("--tolerance-scale", type=float, default=1.0, help="multiply every tolerance")
    run.set_defaults(func=_cmd_run)
    sub.add_parser("list-generators", help="catalog of sequence generators").set_defaults(func=_cmd_list)
    sub.add_parser("version", help="print the version").set_defaults(func=_cmd_version)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1 or getattr(args, "tolerance_scale", 1.0) <= 0:
        print("error: --jobs must be >= 1 and --tolerance-scale > 0", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
