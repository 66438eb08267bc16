import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuntzlab.cuntz_rep import NearestNeighbor, WeightedHaar, haar_family, transfer_unitary
from cuntzlab.invariants import (
    LevelIsometry,
    adjoint_blocks,
    angle_partial_sums,
    character_basis,
    eigen_residual,
    eigen_residual_curve,
    fourier_recursion_check,
    fourier_recursion_matrix,
    harmonic_crossing,
    harmonic_number,
    increment_partial_sums,
    invariant_vector_search,
    lambda_grid,
    matrix_element_decay,
    sigma_compose,
    sigma_isometry,
    us_isometry,
    us_matrix,
    wold_decompose,
)
from cuntzlab.lattice import CylinderVector, MeasureSpec, character_vector
from cuntzlab.sequences import ThetaHarmonic

ETA = np.array([0.6, 0.8j])


def test_weighted_eigen_residual_vanishes_at_conjugate_weights():
    fam = WeightedHaar(ETA)
    for m in range(4):
        r = eigen_residual(fam, np.conj(ETA), m)
        assert r.residual < 1e-14
        one = CylinderVector.constant(m, fam.measure)
        assert np.abs(r.minimizer.amplitudes - one.amplitudes).max() < 1e-8
    assert eigen_residual(fam, ETA, 2).residual > 1e-3


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_eigen_residual_is_a_minimum(seed):
    rng = np.random.default_rng(seed)
    fam = NearestNeighbor(2)
    lam = rng.normal(size=2) + 1j * rng.normal(size=2)
    lam /= np.linalg.norm(lam)
    blocks = adjoint_blocks(fam, 2)
    r = eigen_residual(fam, lam, 2, blocks)
    x = rng.normal(size=4) + 1j * rng.normal(size=4)
    x /= np.linalg.norm(x)
    direct = sum(np.linalg.norm(A @ x - l * x) ** 2 for A, l in zip(blocks, lam))
    assert r.residual <= direct + 1e-12
    y = r.minimizer.amplitudes
    at_min = sum(np.linalg.norm(A @ y - l * y) ** 2 for A, l in zip(blocks, lam))
    assert abs(at_min - r.residual) < 1e-12


@pytest.mark.parametrize("n", [2, 3])
def test_nearest_neighbor_residuals_positive(n):
    fam = NearestNeighbor(n)
    lam = np.full(n, n**-0.5)
    c = eigen_residual_curve(fam, lam, range(1, 5))
    assert min(c.residuals) > 1e-6
    with pytest.raises(ValueError):
        eigen_residual(fam, lam, 0)
    with pytest.raises(ValueError):
        eigen_residual(fam, np.ones(n), 1)


def test_invariant_vector_search():
    found = invariant_vector_search(WeightedHaar(ETA), 2)
    assert found["verdict"] == "found"
    phase = np.vdot(found["lam"], np.conj(ETA))
    assert abs(abs(phase) - 1) < 1e-10
    none = invariant_vector_search(NearestNeighbor(2), 2, iterations=10)
    assert none["verdict"] == "none-found" and none["grid_min_residual"] > 1e-6


def test_lambda_grid():
    g = lambda_grid(2, 0.05)
    assert np.abs(np.linalg.norm(g, axis=1) - 1).max() < 1e-14
    assert np.all(g[:, 0].imag == 0) and np.all(g[:, 0].real >= 0)
    assert len(g) == 32 * 126
    assert lambda_grid(3, 0.5).shape[1] == 3


@pytest.mark.parametrize("n,m", [(2, 1), (2, 3), (3, 2)])
def test_us_is_transfer_after_sigma(n, m):
    # xi o sigma ignores the leading digit, scaled to keep the norm
    Sig = np.kron(np.ones((n, 1)), np.eye(n**m)) / np.sqrt(n)
    assert np.abs(sigma_compose(np.eye(n**m), n).T - Sig).max() < 1e-15
    U = transfer_unitary(haar_family(n), NearestNeighbor(n), m + 1)
    M = us_matrix(n, m)
    assert np.abs(M - U @ Sig).max() < 1e-13
    assert np.abs(M.conj().T @ M - np.eye(n**m)).max() < 1e-13


def test_fourier_recursion_frozen_entries():
    R = fourier_recursion_matrix(2, 1)
    # lambda = (1, 1, 1): phase conj<1,1> = -1, source (1 - 1) = 0
    assert abs(R[7, 0] + 0.5) < 1e-15
    # lambda = (0, 1, 1): source 1, phase 1
    assert abs(R[3, 1] - 0.5) < 1e-15
    assert np.count_nonzero(R) == 8


@pytest.mark.parametrize("n,m", [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3)])
def test_fourier_recursion(n, m):
    assert fourier_recursion_check(n, m) < 1e-12


def test_character_basis_unitary():
    C = character_basis(3, 2)
    assert np.abs(C.conj().T @ C - np.eye(9)).max() < 1e-14


@pytest.mark.parametrize("n", [2, 3])
def test_matrix_element_decay(n):
    rng = np.random.default_rng(n)
    xi = CylinderVector(rng.normal(size=n**2) + 1j * rng.normal(size=n**2), MeasureSpec.haar(n))
    t = matrix_element_decay(xi, 3)
    assert t["ok"]
    assert np.abs(t["bounds"] - xi.norm() * float(n) ** -np.arange(4)).max() < 1e-14
    e = character_vector([1, 0], 2, n)
    p = matrix_element_decay(e, 2, probes=[[0], [1, 1]])
    assert p["ok"] and p["values"][0] <= 1 + 1e-12


def test_wold_us_is_pure():
    for m in range(1, 6):
        rep = wold_decompose(us_isometry(2), 5, m)
        assert rep.unitary_rank[-1] == 0
        assert all(a >= b for a, b in zip(rep.unitary_rank, rep.unitary_rank[1:]))
    rep = wold_decompose(us_isometry(2), 5, 1)
    assert rep.kernel_codim == {2: 2, 3: 4, 4: 8, 5: 16, 6: 32}
    rep3 = wold_decompose(us_isometry(3), 3, 1)
    assert all(v == 3 ** (l - 1) * 2 for l, v in rep3.kernel_codim.items())


def test_wold_sigma_keeps_constant():
    rep = wold_decompose(sigma_isometry(2), 5, 1)
    assert min(rep.unitary_rank) >= 1
    assert rep.unitary_rank[-1] == 1


def test_wold_unitary_and_nonisometric_inputs():
    mu = MeasureSpec.haar(2)
    ident = LevelIsometry(lambda a, m: a, 2, mu, 0, 0, "I")
    assert wold_decompose(ident, 4, 2).unitary_rank == [4, 4, 4, 4]
    bad = LevelIsometry(lambda a, m: 2 * a, 2, mu, 0, 0, "2I")
    with pytest.raises(ValueError):
        wold_decompose(bad, 2, 1)


def test_theta_series_are_harmonic():
    seq = ThetaHarmonic()
    Q = 83
    ends = tuple(q * (q + 1) // 2 for q in range(1, Q + 1))
    sums = angle_partial_sums(seq, ends)
    oracle = [math.fsum(1.0 / p for p in range(1, q + 1)) for q in range(1, Q + 1)]
    assert np.abs(sums - oracle).max() < 1e-12
    assert sums[-1] > 5 > sums[-2]
    inc = increment_partial_sums(seq, (10, 100, 1000, 10000, 100000))
    assert inc[-1] <= math.sqrt(2) + 1e-9
    assert np.all(np.diff(inc) >= 0)


def test_harmonic_crossing():
    q, terms = harmonic_crossing(5.0)
    assert (q, terms) == (83, 3486)
    assert harmonic_number(82) <= 5 < harmonic_number(83)
    assert terms <= 11300
