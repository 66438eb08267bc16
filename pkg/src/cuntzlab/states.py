"""States on the UHF algebra M_(n^infinity) and the product-state classification tests.

Matrix-unit convention: e_ij = |i><j| in the point basis, which is what
S_i S_j^* is for the uniform Haar family.  A state value on a word pair is
omega(e_(i_1 j_1) (x) ... (x) e_(i_k j_k)) and the window density matrix rho
satisfies omega(X) = tr(rho X), so rho[j, i] = omega(e_ij).  In this convention
the product state of unit vectors psi_m has rho = (x)_m |psi_m><psi_m| and the
Cuntz state of eta is the product state of conj(eta).

Windows: every evaluation takes an ``offset`` s so that words sit on the
sites s, ..., s+k-1.  Shifting a state by t (omega o sigma^t) adds t to the offset.
"""

from __future__ import annotations

import itertools

import numpy as np

from .cuntz_rep import UnitarySequence, frame_unitary, is_unitary
from .endo import MatrixObservable
from .lattice import DEFAULT_TOL, all_words, character_matrix, check_budget, word_index
from .sequences import Constant, ExplicitList, Rotated, SequenceFamily
from .series import (
    DEFAULT_HORIZONS,
    SeriesVerdict,
    classify_series,
    infidelity,
    one_minus_overlap,
    overlap_modulus,
)

# ----------------------------------------------------------------- specs


class StateSpec:
    kind = "abstract"
    n: int


class CuntzState(StateSpec):
    """omega_eta(s_i1 ... s_ik s_jk^* ... s_j1^*) = prod eta_ip conj(eta_jp)."""

    kind = "cuntz"

    def __init__(self, eta):
        eta = np.asarray(eta, dtype=complex).reshape(-1)
        if abs(np.linalg.norm(eta) - 1) > DEFAULT_TOL:
            raise ValueError("eta must be a unit vector")
        self.eta, self.n = eta, eta.size


class ProductState(StateSpec):
    """Infinite product of the vector states of psi_m = family.vector(m)."""

    kind = "product"

    def __init__(self, family: SequenceFamily):
        self.family, self.n = family, family.n

    @classmethod
    def from_unitaries(cls, U: UnitarySequence) -> "ProductState":
        return cls(GaugeVacuumFamily(U))


class NearestNeighborState(StateSpec):
    """The translation-invariant state induced by the nearest-neighbour family."""

    kind = "nearest_neighbor"

    def __init__(self, n: int):
        self.n = int(n)


class FiniteMix(StateSpec):
    """sum_r lambda_r (x)_(sites >= anchor) omega_(xi_r), defined on the tail algebra only."""

    kind = "finite_mix"

    def __init__(self, anchor: int, weights, vectors):
        weights = np.asarray(weights, dtype=float)
        vectors = np.asarray(vectors, dtype=complex)
        if weights.ndim != 1 or vectors.shape[0] != weights.size:
            raise ValueError("need one vector per weight")
        if np.any(weights <= 0) or abs(weights.sum() - 1) > DEFAULT_TOL:
            raise ValueError("weights must be positive and sum to 1")
        if np.abs(np.linalg.norm(vectors, axis=1) - 1).max() > DEFAULT_TOL:
            raise ValueError("mix vectors must be unit vectors")
        n = vectors.shape[1]
        if n**anchor < weights.size:
            raise ValueError("anchor too small: need n**anchor >= number of components")
        for a, b in itertools.combinations(range(weights.size), 2):
            if infidelity(vectors[a], vectors[b])[0] <= DEFAULT_TOL:
                raise ValueError("mix vectors must be pairwise distinct as states")
        self.anchor, self.weights, self.vectors, self.n = int(anchor), weights, vectors, n


class Gauged(StateSpec):
    """omega o tau_g for a base state without a closed-form gauge image."""

    kind = "gauged"

    def __init__(self, base: StateSpec, g):
        self.base, self.g, self.n = base, np.asarray(g, dtype=complex), base.n


class Shifted(StateSpec):
    """omega o sigma^t."""

    kind = "shifted"

    def __init__(self, base: StateSpec, t: int):
        if t < 0:
            raise ValueError("shift must be nonnegative")
        self.base, self.t, self.n = base, int(t), base.n


class FState(StateSpec):
    """Reserved identifier for states built from a function F; not evaluated."""

    kind = "f_state"

    def __init__(self, n: int, **params):
        self.n, self.params = int(n), params


class GaugeVacuumFamily(SequenceFamily):
    """psi_m = point-basis form of U_0^* ... U_(m-1)^* e_0."""

    name = "GaugeVacuum"

    def __init__(self, U: UnitarySequence):
        super().__init__(U.n)
        self.U = U
        self._cache = {}

    def _one(self, m):
        if m not in self._cache:
            x = np.zeros(self.n, dtype=complex)
            x[0] = 1.0
            for p in reversed(range(m)):
                x = self.U.unitary(p).conj().T @ x
            self._cache[m] = character_matrix(self.n) @ x
        return self._cache[m]

    def _vectors(self, start, stop):
        return np.array([self._one(m) for m in range(start, stop)]).reshape(-1, self.n)


# ------------------------------------------------------------ evaluation


def _word_array(word, n):
    d = np.asarray(getattr(word, "digits", word), dtype=np.int64).reshape(-1)
    if np.any(d < 0) or np.any(d >= n):
        raise ValueError("digit out of range")
    return d


def _product_sites(spec, offset, k):
    """Per-site unit vectors psi for product-type specs, shape (k, n)."""
    if isinstance(spec, CuntzState):
        return np.tile(np.conj(spec.eta), (k, 1))
    if isinstance(spec, ProductState):
        return spec.family.vectors(offset, offset + k)
    return None


def _nn_phase(words, n):
    """exp(2 pi i / n * sum_p w_p w_(p+1)) for rows of a digit array."""
    if words.shape[1] < 2:
        return np.ones(words.shape[0], dtype=complex)
    s = np.sum(words[:, :-1] * words[:, 1:], axis=1) % n
    return np.exp(2j * np.pi * s / n)


def eval_state(spec: StateSpec, i, j, offset: int = 0) -> complex:
    """omega(e_(i_1 j_1) (x) ... (x) e_(i_k j_k)) with the word on sites offset..offset+k-1."""
    n = spec.n
    i, j = _word_array(i, n), _word_array(j, n)
    if i.size != j.size:
        raise ValueError("words must have equal length")
    k = i.size
    if k == 0:
        return 1.0 + 0j
    if isinstance(spec, Shifted):
        return eval_state(spec.base, i, j, offset + spec.t)
    sites = _product_sites(spec, offset, k)
    if sites is not None:
        rows = np.arange(k)
        return complex(np.prod(np.conj(sites[rows, i]) * sites[rows, j]))
    if isinstance(spec, NearestNeighborState) and offset == 0:
        if i[-1] != j[-1]:
            return 0j
        ph = _nn_phase(i[None, :], n)[0] * np.conj(_nn_phase(j[None, :], n)[0])
        return complex(ph / n**k)
    if isinstance(spec, FiniteMix):
        _check_mix_window(spec, offset)
        vals = np.conj(spec.vectors[:, i]) * spec.vectors[:, j]
        return complex(np.sum(spec.weights * np.prod(vals, axis=1)))
    if isinstance(spec, FState):
        raise NotImplementedError("F-states are reserved but not evaluated")
    rho = density_matrix(spec, k, offset).block
    return complex(rho[word_index(j, n), word_index(i, n)])


def _check_mix_window(spec: FiniteMix, offset: int) -> None:
    if offset < spec.anchor:
        raise ValueError(
            f"finite mix is defined on sites >= {spec.anchor}; window starts at {offset}"
        )


def _kron_all(mats):
    out = np.ones((1, 1), dtype=complex)
    for M in mats:
        out = np.kron(out, M)
    return out


def density_matrix(spec: StateSpec, k: int, offset: int = 0) -> MatrixObservable:
    """The restriction of the state to the window [offset, offset+k), as a density matrix."""
    n = spec.n
    check_budget(n, k)
    if isinstance(spec, Shifted):
        return density_matrix(spec.base, k, offset + spec.t)
    sites = _product_sites(spec, offset, k)
    if sites is not None:
        v = np.ones(1, dtype=complex)
        for psi in sites:
            v = np.kron(v, psi)
        return MatrixObservable(np.outer(v, v.conj()), n)
    if isinstance(spec, NearestNeighborState):
        L = offset + k
        check_budget(n, L, "vector")
        u = np.conj(_nn_phase(all_words(L, n), n)) if L > 0 else np.ones(1, dtype=complex)
        rho = np.zeros((n**k, n**k), dtype=complex)
        last = all_words(L, n)[:, -1]
        for c in range(n):
            U = np.where(last == c, u, 0).reshape(n**offset, n**k)
            rho += U.T @ U.conj()
        return MatrixObservable(rho / n**L, n)
    if isinstance(spec, FiniteMix):
        _check_mix_window(spec, offset)
        rho = 0
        for lam, xi in zip(spec.weights, spec.vectors):
            v = _kron_all([xi[:, None]] * k)[:, 0] if k else np.ones(1)
            rho = rho + lam * np.outer(v, v.conj())
        return MatrixObservable(rho, n)
    if isinstance(spec, Gauged):
        base = density_matrix(spec.base, k, offset).block
        G = _kron_all([spec.g] * k)
        return MatrixObservable(G.conj().T @ base @ G, n)
    if isinstance(spec, FState):
        raise NotImplementedError("F-states are reserved but not evaluated")
    raise TypeError(f"unsupported state kind {type(spec).__name__}")


def partial_trace_last(rho: np.ndarray, n: int) -> np.ndarray:
    d = rho.shape[0] // n
    return np.einsum("aibi->ab", rho.reshape(d, n, d, n))


def trace_norm(M: np.ndarray) -> float:
    M = (M + M.conj().T) / 2
    return float(np.sum(np.abs(np.linalg.eigvalsh(M))))


def state_distance(spec1: StateSpec, spec2: StateSpec, k: int, shift_offset: int = 0) -> float:
    """Trace norm of the difference of the two window density matrices."""
    if spec1.n != spec2.n:
        raise ValueError("states on different bases")
    r1 = density_matrix(spec1, k, shift_offset).block
    r2 = density_matrix(spec2, k, shift_offset).block
    return trace_norm(r1 - r2)


def gauge_transform(spec: StateSpec, g) -> StateSpec:
    """omega o tau_g, where tau_g(s_i) = sum_j g_ji s_j."""
    g = np.asarray(g, dtype=complex)
    if g.shape != (spec.n, spec.n) or not is_unitary(g):
        raise ValueError("g must be an n x n unitary")
    if isinstance(spec, CuntzState):
        return CuntzState(g.T @ spec.eta)
    if isinstance(spec, ProductState):
        return ProductState(Rotated(spec.family, g.conj().T))
    if isinstance(spec, FiniteMix):
        return FiniteMix(spec.anchor, spec.weights, spec.vectors @ np.conj(g))
    return Gauged(spec, g)


def gauge_word_expansion(spec: StateSpec, g, i, j) -> complex:
    """omega(tau_g(e_ij)) by expanding tau_g on the word, term by term."""
    n = spec.n
    g = np.asarray(g, dtype=complex)
    i, j = _word_array(i, n), _word_array(j, n)
    total = 0j
    for a in itertools.product(range(n), repeat=i.size):
        ca = np.prod([g[a[p], i[p]] for p in range(i.size)])
        if ca == 0:
            continue
        for b in itertools.product(range(n), repeat=j.size):
            cb = np.prod([np.conj(g[b[p], j[p]]) for p in range(j.size)])
            total += ca * cb * eval_state(spec, a, b)
    return total


# ---------------------------------------------------------- classification


def _as_product(spec: StateSpec) -> ProductState:
    if isinstance(spec, ProductState):
        return spec
    if isinstance(spec, CuntzState):
        return ProductState(Constant(np.conj(spec.eta)))
    raise TypeError("a product-type state is required")


def _vectors(spec: ProductState, count: int) -> np.ndarray:
    return spec.family.vectors(0, count)


def lemma_sequence(spec: StateSpec, count: int = 6, window: int = 2) -> np.ndarray:
    """|omega o sigma^(m+1) - omega o sigma^m| on the window [0, window), m < count."""
    return np.array(
        [state_distance(Shifted(spec, 1), spec, window, m) for m in range(count)]
    )


def in_P_test(spec: StateSpec, horizons=DEFAULT_HORIZONS, window: int = 2, count: int = 6) -> SeriesVerdict:
    """Series sum_m (1 - |<psi_m, psi_(m+1)>|) for product states.

    For other states only the shift-difference sequence on small windows is
    available; the verdict is ``converges`` when that sequence is eventually zero.
    """
    lem = lemma_sequence(spec, count, window)
    if isinstance(spec, (ProductState, CuntzState)):
        spec = _as_product(spec)
        H = horizons[-1]
        v = _vectors(spec, H + 1)
        terms = one_minus_overlap(v[:-1], v[1:])
        res = classify_series(terms, horizons)
        details = dict(res.details, lemma_sequence=lem.tolist(), window=window)
        return SeriesVerdict(res.verdict, res.horizons, res.partial_sums, res.rule, details)
    # only the tail matters: the sequence may be nonzero for small m
    tail = lem[count // 2:]
    verdict = "converges" if tail.size and tail.max() <= 1e-12 else "undetermined"
    rule = "shift-difference sequence is eventually zero on the probed window" if verdict == "converges" else (
        "shift-difference sequence does not vanish; no series available"
    )
    return SeriesVerdict(verdict, tuple(range(count)), tuple(np.cumsum(lem).tolist()), rule,
                         {"lemma_sequence": lem.tolist(), "window": window})


def equivalence_forms(a: np.ndarray, b: np.ndarray) -> dict:
    """Termwise values of the four equivalent series for site vectors a_m, b_m."""
    s2 = infidelity(a, b)
    c = np.sum(np.conj(a) * b, axis=1)
    mod = np.abs(c)
    phase = np.where(mod > 0, np.conj(c) / np.where(mod > 0, mod, 1), 1.0)
    aligned = np.sum(np.abs(a - phase[:, None] * b) ** 2, axis=1)
    return {
        "state_norm_squared": 4.0 * s2,
        "one_minus_overlap": s2 / (1.0 + mod),
        "minus_log_overlap": -0.5 * np.log1p(-s2),
        "aligned_vector_squared": aligned,
    }


def equivalence_test(spec1: StateSpec, spec2: StateSpec, horizons=DEFAULT_HORIZONS) -> SeriesVerdict:
    """Quasi-equivalence of two product states through the four series forms.

    The returned verdict is the common verdict of the four forms, or
    ``undetermined`` if they disagree.  The ``minus_log_overlap`` form is the
    logarithm of the tail product of overlaps, whose partial products are
    reported as ``overlap_products``.
    """
    p1, p2 = _as_product(spec1), _as_product(spec2)
    H = horizons[-1]
    forms = equivalence_forms(_vectors(p1, H), _vectors(p2, H))
    verdicts = {name: classify_series(t, horizons) for name, t in forms.items()}
    names = sorted({v.verdict for v in verdicts.values()})
    main = verdicts["one_minus_overlap"]
    details = {
        "forms": {k: v.as_dict() for k, v in verdicts.items()},
        "agree": len(names) == 1,
        "overlap_products": [float(np.exp(-s)) for s in verdicts["minus_log_overlap"].partial_sums],
    }
    verdict = names[0] if len(names) == 1 else "undetermined"
    return SeriesVerdict(verdict, main.horizons, main.partial_sums, main.rule, details)


def _polar_unitary(M: np.ndarray) -> np.ndarray:
    """The unitary g maximising Re tr(g M)."""
    W, _, Vh = np.linalg.svd(M)
    return Vh.conj().T @ W.conj().T


def align_gauge(a: np.ndarray, b: np.ndarray, decay: float = 0.999, iterations: int = 200) -> np.ndarray:
    """Heuristic g maximising sum_m w_m |<a_m, g b_m>| with w_m = decay^(M-1-m).

    Alternates the polar step for fixed phases with the phase update
    phase_m = arg <a_m, g b_m>.  Weights decay geometrically away from the
    horizon so that the tail dominates.
    """
    M = a.shape[0]
    w = decay ** np.arange(M - 1, -1, -1, dtype=float)
    g = np.eye(a.shape[1], dtype=complex)
    best, best_score = g, -np.inf
    for _ in range(iterations):
        c = np.sum(np.conj(a) * (b @ g.T), axis=1)
        phase = np.where(np.abs(c) > 0, np.conj(c) / np.maximum(np.abs(c), 1e-300), 1.0)
        score = float(np.sum(w * np.abs(c)))
        if score > best_score + 1e-15:
            best, best_score = g, score
        # maximise Re sum_m w_m phase_m <a_m, g b_m> = Re tr(g sum_m w_m phase_m b_m a_m^H)
        Mmat = (b * (w * phase)[:, None]).T @ np.conj(a)
        g_new = _polar_unitary(Mmat)
        if np.abs(g_new - g).max() < 1e-14:
            g = g_new
            break
        g = g_new
    c = np.sum(np.conj(a) * (b @ g.T), axis=1)
    if float(np.sum(w * np.abs(c))) > best_score:
        best = g
    return best


def conjugacy_test(spec1: StateSpec, spec2: StateSpec, horizons=DEFAULT_HORIZONS) -> dict:
    """Search U(n) for g making sum_m (1 - |<psi_m, g psi'_m>|) finite.

    When both sequences declare limits h, h' the decision is exact: with R
    the rotation frames, g = R(h) R(h')^* maps h' to h, and the aligned series
    converges iff both tail series sum (1 - |<psi_m, h>|) and
    sum (1 - |<psi'_m, h'>|) converge.  If exactly one converges, the
    aligned series diverges for every g.  Otherwise g comes from the
    weighted polar iteration and the result is flagged heuristic.
    """
    p1, p2 = _as_product(spec1), _as_product(spec2)
    H = horizons[-1]
    a, b = _vectors(p1, H), _vectors(p2, H)
    h1, h2 = p1.family.limit, p2.family.limit
    exact = None
    if h1 is not None and h2 is not None:
        t1 = classify_series(one_minus_overlap(a, np.tile(h1, (H, 1))), horizons)
        t2 = classify_series(one_minus_overlap(b, np.tile(h2, (H, 1))), horizons)
        v = {t1.verdict, t2.verdict}
        if v == {"converges"}:
            exact = "converges"
        elif v == {"converges", "diverges"}:
            exact = "diverges"
    if exact is not None:
        g = frame_unitary(h1) @ frame_unitary(h2).conj().T
    else:
        g = align_gauge(a, b)
    aligned = classify_series(one_minus_overlap(a, b @ g.T), horizons)
    report = {
        "g": g,
        "aligned": aligned,
        "heuristic": exact is None,
        "verdict": exact if exact is not None else aligned.verdict,
    }
    if exact is not None:
        report["tail_series"] = {"first": t1.as_dict(), "second": t2.as_dict()}
    return report


def finite_mix_conjugacy(mixA: FiniteMix, mixB: FiniteMix, tol: float = 1e-10) -> dict:
    """Decide whether two finite mixes are conjugate by a gauge and a relabelling.

    Returns ``{"conjugate": bool, "permutation": tuple | None, "g": array | None,
    "reason": str}``.  For a weight-compatible permutation phi the witness g
    satisfies xi'_phi(i) = c_i g^* xi_i with |c_i| = 1, so that
    ``gauge_transform(mixA, g)`` equals ``mixB``.
    """
    if not isinstance(mixA, FiniteMix) or not isinstance(mixB, FiniteMix):
        raise TypeError("finite mixes required")
    if mixA.n != mixB.n:
        return {"conjugate": False, "permutation": None, "g": None, "reason": "different bases"}
    k = mixA.weights.size
    if k != mixB.weights.size:
        return {"conjugate": False, "permutation": None, "g": None, "reason": "different sizes"}
    if np.abs(np.sort(mixA.weights) - np.sort(mixB.weights)).max() > DEFAULT_TOL:
        return {"conjugate": False, "permutation": None, "g": None, "reason": "weight multisets differ"}
    A = mixA.vectors
    Ga = np.conj(A) @ A.T
    reason = "no permutation admits a consistent gauge"
    for perm in itertools.permutations(range(k)):
        if np.abs(mixA.weights - mixB.weights[list(perm)]).max() > DEFAULT_TOL:
            continue
        B = mixB.vectors[list(perm)]
        Gb = np.conj(B) @ B.T
        if np.abs(np.abs(Ga) - np.abs(Gb)).max() > tol:
            reason = "overlap moduli differ"
            continue
        c = _phase_sync(Ga, Gb, tol)
        if c is None:
            reason = "overlap phases are inconsistent"
            continue
        Y = (A * c[:, None]).T
        X = B.T
        Q = _polar_unitary(X @ Y.conj().T)
        if np.abs(Q @ X - Y).max() > 1e3 * tol:
            reason = "frame alignment failed"
            continue
        return {"conjugate": True, "permutation": perm, "g": Q, "reason": "witness found"}
    return {"conjugate": False, "permutation": None, "g": None, "reason": reason}


def _phase_sync(Ga, Gb, tol):
    """Phases c with Gb[i, j] = conj(c_i) c_j Ga[i, j], or None."""
    k = Ga.shape[0]
    c = np.full(k, np.nan, dtype=complex)
    for root in range(k):
        if not np.isnan(c[root]):
            continue
        c[root] = 1.0
        stack = [root]
        while stack:
            i = stack.pop()
            for j in range(k):
                if np.isnan(c[j]) and abs(Ga[i, j]) > tol:
                    c[j] = c[i] * Gb[i, j] / Ga[i, j]
                    c[j] /= abs(c[j])
                    stack.append(j)
    if np.abs(np.conj(c)[:, None] * c[None, :] * Ga - Gb).max() > 1e3 * tol:
        return None
    return c


def hellinger_singularity(p, q, horizons=(1, 10, 40, 100, 1000)) -> SeriesVerdict:
    """Kakutani test for the product measures of p and q via the affinity sum sqrt(p_i q_i).

    The per-site terms of the series are -log(affinity); ``diverges`` means
    the product of affinities tends to 0, i.e. the measures are mutually
    singular.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    for w in (p, q):
        if w.ndim != 1 or np.any(w < 0) or abs(w.sum() - 1) > DEFAULT_TOL:
            raise ValueError("weights must be probability vectors")
    if p.size != q.size:
        raise ValueError("weight vectors of different length")
    a = float(np.sum(np.sqrt(p * q)))
    a = min(a, 1.0)
    products = [a**h for h in horizons]
    with np.errstate(divide="ignore"):
        term = -np.log(a) if a > 0 else np.inf
    sums = tuple(float(term * h) if term > 0 else 0.0 for h in horizons)
    if a < 1 - 1e-12:
        verdict, rule = "diverges", "affinity below 1: the product of affinities tends to 0"
    else:
        verdict, rule = "converges", "affinity equals 1 (p = q): the product stays 1"
    return SeriesVerdict(verdict, tuple(horizons), sums, rule, {"affinity": a, "products": products})


def explicit_product_state(vectors, limit=None) -> ProductState:
    return ProductState(ExplicitList(vectors, limit))
