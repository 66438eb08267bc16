import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuntzlab.cuntz_rep import NearestNeighbor, WeightedHaar, vacuum_word_expectation
from cuntzlab.sequences import Constant, Geometric, InverseSqrt, Rotated, ThetaHarmonic
from cuntzlab.states import (
    CuntzState,
    FiniteMix,
    FState,
    Gauged,
    NearestNeighborState,
    ProductState,
    Shifted,
    conjugacy_test,
    density_matrix,
    equivalence_forms,
    equivalence_test,
    eval_state,
    explicit_product_state,
    finite_mix_conjugacy,
    gauge_transform,
    gauge_word_expansion,
    hellinger_singularity,
    in_P_test,
    lemma_sequence,
    partial_trace_last,
    state_distance,
    trace_norm,
)

E0 = np.array([1.0, 0.0])


def _unitary(rng, n):
    Q, R = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def _unit(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def _specs(n):
    rng = np.random.default_rng(n)
    return [
        CuntzState(_unit(rng, n)),
        ProductState(ThetaHarmonic(n)),
        NearestNeighborState(n),
        FiniteMix(1, [0.25, 0.75], [_unit(rng, n), _unit(rng, n)]),
        Gauged(NearestNeighborState(n), _unitary(rng, n)),
        Shifted(NearestNeighborState(n), 1),
    ]


@pytest.mark.parametrize("n", [2, 3])
def test_density_matrices_are_states(n):
    for spec in _specs(n):
        s = 1 if isinstance(spec, FiniteMix) else 0
        prev = None
        for k in range(1, 4):
            rho = density_matrix(spec, k, s).block
            assert np.abs(rho - rho.conj().T).max() < 1e-14
            assert abs(np.trace(rho) - 1) < 1e-13
            assert np.linalg.eigvalsh(rho).min() > -1e-13
            if prev is not None:
                assert np.abs(partial_trace_last(rho, n) - prev).max() < 1e-14
            prev = rho


@pytest.mark.parametrize("n", [2, 3])
def test_eval_matches_density_and_is_hermitian(n):
    for spec in _specs(n):
        s = 1 if isinstance(spec, FiniteMix) else 0
        rho = density_matrix(spec, 2, s).block
        for i in itertools.product(range(n), repeat=2):
            for j in itertools.product(range(n), repeat=2):
                a = eval_state(spec, i, j, s)
                assert abs(a - np.conj(eval_state(spec, j, i, s))) < 1e-14
                assert abs(a - rho[j[0] * n + j[1], i[0] * n + i[1]]) < 1e-14


@pytest.mark.parametrize("n", [2, 3])
def test_nearest_neighbor_closed_form_vs_brute_force(n):
    fam, spec = NearestNeighbor(n), NearestNeighborState(n)
    for k in (1, 2, 3):
        for i in itertools.product(range(n), repeat=k):
            for j in itertools.product(range(n), repeat=k):
                assert abs(eval_state(spec, i, j) - vacuum_word_expectation(fam, i, j)) < 1e-12
    # diagonal one-site value
    for i in range(n):
        assert abs(eval_state(spec, (i,), (i,)) - 1 / n) < 1e-15


def test_nearest_neighbor_frozen_values():
    spec = NearestNeighborState(2)
    # e_10 (x) e_00 and e_11 (x) e_01 at the origin
    assert abs(eval_state(spec, (0, 0), (1, 0)) - 0.25) < 1e-15
    assert abs(eval_state(spec, (1, 1), (0, 1)) + 0.25) < 1e-15
    # one site further out the same word has value 0
    assert abs(eval_state(spec, (0, 0), (1, 0), offset=1)) < 1e-15


def test_nearest_neighbor_shift_difference_vanishes_after_one_step():
    spec = NearestNeighborState(2)
    lem = lemma_sequence(spec, count=5, window=2)
    assert abs(lem[0] - 1.0) < 1e-12
    assert lem[1:].max() < 1e-12
    v = in_P_test(spec, window=2, count=6)
    assert v.verdict == "converges"


def test_cuntz_state_word_formula():
    eta = np.array([0.6, 0.8j])
    fam = WeightedHaar(eta)
    spec = CuntzState(eta)
    for i, j in [((0,), (1,)), ((1, 1), (0, 1)), ((0, 1, 1), (1, 0, 0))]:
        assert abs(eval_state(spec, i, j) - vacuum_word_expectation(fam, i, j)) < 1e-14


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_gauge_covariance(seed):
    rng = np.random.default_rng(seed)
    n = 2
    g = _unitary(rng, n)
    words = [((0, 1), (1, 1)), ((1,), (0,)), ((1, 0), (0, 1))]
    for spec in (CuntzState(_unit(rng, n)), ProductState(Geometric()), NearestNeighborState(n)):
        gs = gauge_transform(spec, g)
        for i, j in words:
            assert abs(eval_state(gs, i, j) - gauge_word_expansion(spec, g, i, j)) < 1e-12


def test_finite_mix_gauge_matches_wrapper():
    rng = np.random.default_rng(9)
    mix = FiniteMix(1, [0.5, 0.5], [_unit(rng, 2), _unit(rng, 2)])
    g = _unitary(rng, 2)
    closed = density_matrix(gauge_transform(mix, g), 2, 1).block
    wrapped = density_matrix(Gauged(mix, g), 2, 1).block
    assert np.abs(closed - wrapped).max() < 1e-14


def test_gauge_rejects_nonunitary():
    with pytest.raises(ValueError):
        gauge_transform(NearestNeighborState(2), np.ones((2, 2)))


def test_shifted_is_offset():
    spec = ProductState(ThetaHarmonic())
    a = density_matrix(Shifted(spec, 3), 2).block
    b = density_matrix(spec, 2, 3).block
    assert np.abs(a - b).max() == 0
    with pytest.raises(ValueError):
        Shifted(spec, -1)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_one_site_distance_oracle(n, seed):
    rng = np.random.default_rng(seed)
    a, b = _unit(rng, n), _unit(rng, n)
    d = state_distance(ProductState(Constant(a)), ProductState(Constant(b)), 1)
    c = abs(np.vdot(a, b))
    assert abs(d - 2 * np.sqrt(1 - c**2)) < 1e-12
    f = equivalence_forms(a[None, :], b[None, :])
    assert abs(f["aligned_vector_squared"][0] - 2 * (1 - c)) < 1e-12
    assert abs(f["state_norm_squared"][0] - d**2) < 1e-11
    assert abs(f["one_minus_overlap"][0] - (1 - c)) < 1e-12
    assert abs(f["minus_log_overlap"][0] + np.log(c)) < 1e-10


def test_vector_distance_identity():
    # |xi - xi'|^2 = 2 (1 - Re <xi, xi'>) for unit vectors
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = _unit(rng, 3), _unit(rng, 3)
        assert abs(np.linalg.norm(a - b) ** 2 - 2 * (1 - np.vdot(a, b).real)) < 1e-14


@pytest.mark.parametrize("n,s", [(2, 0), (2, 1), (3, 0), (3, 1)])
def test_nearest_neighbor_distance_probe(n, s):
    other = ProductState(Constant(np.eye(n)[0]))
    d = [state_distance(NearestNeighborState(n), other, k, s) for k in (1, 2, 3)]
    assert all(b >= a - 1e-12 for a, b in zip(d, d[1:]))
    assert max(d) <= 2 + 1e-12
    assert trace_norm(np.eye(2)) == 2


@pytest.mark.parametrize(
    "seq,verdict",
    [(ThetaHarmonic(), "diverges"), (InverseSqrt(), "diverges"), (Geometric(), "converges"), (Constant(E0), "converges")],
)
def test_equivalence_forms_agree(seq, verdict):
    res = equivalence_test(ProductState(seq), ProductState(Constant(E0)))
    assert res.details["agree"]
    assert res.verdict == verdict
    prods = res.details["overlap_products"]
    assert all(b <= a + 1e-15 for a, b in zip(prods, prods[1:]))


def test_in_P_product_states():
    assert in_P_test(ProductState(Geometric())).verdict == "converges"
    # consecutive ThetaHarmonic vectors differ only at block ends
    assert in_P_test(ProductState(ThetaHarmonic())).verdict == "converges"
    flip = explicit_product_state([np.eye(2)[k % 2] for k in range(10001)])
    assert in_P_test(flip, horizons=(10, 100, 1000, 10000)).verdict == "diverges"
    assert in_P_test(CuntzState([0.6, 0.8])).verdict == "converges"


def test_conjugacy_exact_and_heuristic():
    rep = conjugacy_test(ProductState(ThetaHarmonic()), ProductState(Constant(E0)))
    assert rep["verdict"] == "diverges" and not rep["heuristic"]
    g = np.array([[0, 1], [1, 0]], dtype=complex)
    rep = conjugacy_test(ProductState(Geometric()), ProductState(Rotated(Geometric(), g)))
    assert rep["verdict"] == "converges" and not rep["heuristic"]
    assert rep["aligned"].verdict == "converges"
    # no declared limits: the polar iteration recovers a rotation
    rng = np.random.default_rng(3)
    U = _unitary(rng, 2)
    vecs = Geometric().vectors(0, 10000)
    a = explicit_product_state(vecs)
    b = explicit_product_state(vecs @ U.T)
    rep = conjugacy_test(a, b, horizons=(10, 100, 1000, 10000))
    assert rep["heuristic"] and rep["verdict"] == "converges"


def test_finite_mix_conjugacy():
    rng = np.random.default_rng(4)
    vecs = [_unit(rng, 2), _unit(rng, 2), _unit(rng, 2)]
    A = FiniteMix(2, [0.2, 0.3, 0.5], vecs)
    assert finite_mix_conjugacy(A, A)["conjugate"]
    g = _unitary(rng, 2)
    B = gauge_transform(A, g)
    r = finite_mix_conjugacy(A, B)
    s = finite_mix_conjugacy(B, A)
    assert r["conjugate"] and s["conjugate"]
    # the witness maps the mixes onto each other
    rho_a = density_matrix(gauge_transform(A, r["g"]), 2, 2).block
    assert np.abs(rho_a - density_matrix(B, 2, 2).block).max() < 1e-10
    # relabelled components still match
    P = FiniteMix(2, [0.5, 0.2, 0.3], [B.vectors[2], B.vectors[0], B.vectors[1]])
    assert finite_mix_conjugacy(A, P)["permutation"] == (1, 2, 0)


def test_finite_mix_weight_mismatch():
    rng = np.random.default_rng(5)
    vecs = [_unit(rng, 2), _unit(rng, 2)]
    A = FiniteMix(1, [0.5, 0.5], vecs)
    B = FiniteMix(1, [0.25, 0.75], vecs)
    r = finite_mix_conjugacy(A, B)
    assert not r["conjugate"] and r["reason"] == "weight multisets differ"
    # same weights, overlap moduli differ
    C = FiniteMix(1, [0.5, 0.5], [E0, np.array([0, 1.0])])
    D = FiniteMix(1, [0.5, 0.5], [E0, np.array([0.6, 0.8])])
    assert not finite_mix_conjugacy(C, D)["conjugate"]


def test_finite_mix_validation():
    with pytest.raises(ValueError):
        FiniteMix(0, [0.5, 0.5], [E0, np.array([0, 1.0])])
    with pytest.raises(ValueError):
        FiniteMix(1, [0.5, 0.5], [E0, 1j * E0])
    mix = FiniteMix(1, [0.5, 0.5], [E0, np.array([0, 1.0])])
    with pytest.raises(ValueError):
        eval_state(mix, (0,), (0,), offset=0)
    with pytest.raises(ValueError):
        density_matrix(mix, 2, 0)


def test_fstate_reserved():
    with pytest.raises(NotImplementedError):
        eval_state(FState(2), (0,), (0,))
    with pytest.raises(NotImplementedError):
        density_matrix(FState(2), 1)


def test_hellinger():
    r = hellinger_singularity([0.5, 0.5], [0.25, 0.75])
    a = r.details["affinity"]
    assert abs(a - (np.sqrt(1 / 8) + np.sqrt(3 / 8))) < 1e-15
    assert abs(a - 0.9659) < 1e-4
    assert a**40 < 0.25 and r.verdict == "diverges"
    same = hellinger_singularity([0.25, 0.75], [0.25, 0.75])
    assert same.details["affinity"] == 1.0 and same.verdict == "converges"
    with pytest.raises(ValueError):
        hellinger_singularity([0.5, 0.6], [0.5, 0.5])
