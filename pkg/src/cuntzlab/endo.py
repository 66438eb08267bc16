"""Endomorphisms alpha(A) = sum_i S_i A S_i^* on truncated matrix algebras.

Observables are stored in factored form: a ``MatrixObservable`` is
I_(n^offset) (x) B (x) I_(n^trailing) with a small dense block B.  Every family
in ``cuntz_rep`` maps this form to itself:

* weighted Haar: alpha(I_s (x) B) = I_(s+1) (x) B;
* gauge-perturbed: alpha(I_s (x) B) = I_(s+1) (x) G B G^* with G the product
  of the point-basis U_p over the block's sites p = s, ..., s+b-1;
* nearest neighbour: alpha(B) = sum_i P_i (x) D_i B D_i^* with D_i the
  multiplier <i, x_0>; once a block is diagonal in its leading site the
  multiplier commutes with it and alpha acts as the tensor shift.

So alpha^k(A) of a level-l observable is an exact level-(l+k) cylinder
observable whose block stays small, which is what makes long clustering
curves and Cesaro means affordable.  ``alpha_dense`` keeps the plain
sum_i S_i A S_i^* route for cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cuntz_rep import (
    GaugePerturbed,
    IsometryFamily,
    NearestNeighbor,
    WeightedHaar,
    _first_digit_characters,
    isometry_matrix,
)
from .lattice import CylinderVector, all_words, check_budget, embed, get_max_dim, level_of_size


@dataclass(frozen=True, eq=False)
class MatrixObservable:
    """I_(n^offset) (x) block (x) I on the level-``level`` point basis."""

    block: np.ndarray
    n: int
    offset: int = 0
    level: int = -1

    def __post_init__(self):
        B = np.array(self.block, dtype=complex)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError("block must be a square matrix")
        b = level_of_size(B.shape[0], self.n)
        B.setflags(write=False)
        object.__setattr__(self, "block", B)
        level = self.offset + b if self.level < 0 else self.level
        if level < self.offset + b:
            raise ValueError("level smaller than the block support")
        object.__setattr__(self, "level", level)

    @property
    def block_level(self) -> int:
        return level_of_size(self.block.shape[0], self.n)

    @property
    def support(self) -> tuple:
        return (self.offset, self.offset + self.block_level)

    @classmethod
    def identity(cls, n: int, level: int) -> "MatrixObservable":
        return cls(np.eye(1), n, 0, level)

    def dense(self) -> np.ndarray:
        check_budget(self.n, self.level)
        lead = np.eye(self.n**self.offset)
        tail = np.eye(self.n ** (self.level - self.offset - self.block_level))
        return np.kron(np.kron(lead, self.block), tail)

    @property
    def entries(self) -> np.ndarray:
        return self.dense()

    def embed(self, level: int) -> "MatrixObservable":
        if level < self.level:
            raise ValueError("cannot embed into a lower level")
        return MatrixObservable(self.block, self.n, self.offset, level)

    def norm(self) -> float:
        return float(np.linalg.norm(self.block, 2))

    def trace(self) -> complex:
        return complex(np.trace(self.block)) * self.n ** (self.level - self.block_level)

    def adjoint(self) -> "MatrixObservable":
        return MatrixObservable(self.block.conj().T, self.n, self.offset, self.level)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.abs(self.block - self.block.conj().T).max() <= tol)

    def is_projection(self, tol: float = 1e-12) -> bool:
        B = self.block
        return self.is_hermitian(tol) and bool(np.abs(B @ B - B).max() <= tol)


def dense_observable(M, n: int) -> MatrixObservable:
    return MatrixObservable(np.asarray(M), n)


def _on_sites(X: MatrixObservable, lo: int, hi: int) -> np.ndarray:
    """Dense matrix of X restricted to sites [lo, hi) (X's support must lie inside)."""
    s, e = X.support
    n = X.n
    return np.kron(np.kron(np.eye(n ** (s - lo)), X.block), np.eye(n ** (hi - e)))


def difference_norm(X: MatrixObservable, Y: MatrixObservable) -> float:
    """Operator norm of X - Y, computed on the union of the two supports.

    Sites where both operators act as the identity only tensor the
    difference with an identity, so they are dropped.  This includes a gap
    between disjoint supports, after a permutation of tensor factors.
    """
    if X.n != Y.n:
        raise ValueError("different bases")
    n = X.n
    (s1, e1), (s2, e2) = X.support, Y.support
    if e1 == s1:
        s1, e1 = s2, s2
    if e2 == s2:
        s2, e2 = s1, s1
    if max(s1, s2) <= min(e1, e2):
        lo, hi = min(s1, s2), max(e1, e2)
        check_budget(n, hi - lo)
        D = _on_sites(X, lo, hi) - _on_sites(Y, lo, hi)
    else:
        if s2 < s1:
            X, Y = Y, X
        b1, b2 = X.block_level, Y.block_level
        check_budget(n, b1 + b2)
        D = np.kron(X.block, np.eye(n**b2)) - np.kron(np.eye(n**b1), Y.block)
    return float(np.linalg.norm(D, 2))


# ------------------------------------------------------------------ alpha


def _leading_site_diagonal(B: np.ndarray, n: int) -> bool:
    d = B.shape[0] // n
    B4 = B.reshape(n, d, n, d)
    for i in range(n):
        for j in range(n):
            if i != j and np.any(B4[i, :, j, :] != 0):
                return False
    return True


def alpha_apply(fam: IsometryFamily, A: MatrixObservable) -> MatrixObservable:
    """alpha(A) = sum_i S_i A S_i^*, one level up, in factored form."""
    if A.n != fam.n:
        raise ValueError("observable and family have different bases")
    check_budget(fam.n, A.block_level + 1)
    s, B, L = A.offset, A.block, A.level
    b = A.block_level
    if isinstance(fam, WeightedHaar) or b == 0:
        return MatrixObservable(B, fam.n, s + 1, L + 1)
    if isinstance(fam, GaugePerturbed):
        G = np.ones((1, 1), dtype=complex)
        for p in range(s, s + b):
            G = np.kron(G, fam.unitaries.point_unitary(p))
        return MatrixObservable(G @ B @ G.conj().T, fam.n, s + 1, L + 1)
    if isinstance(fam, NearestNeighbor):
        if s >= 1 or _leading_site_diagonal(B, fam.n):
            return MatrixObservable(B, fam.n, s + 1, L + 1)
        chars = _first_digit_characters(fam.n, b)
        out = np.zeros((fam.n ** (b + 1),) * 2, dtype=complex)
        d = fam.n**b
        for i in range(fam.n):
            Di = chars[i]
            out[i * d : (i + 1) * d, i * d : (i + 1) * d] = Di[:, None] * B * np.conj(Di)[None, :]
        return MatrixObservable(out, fam.n, 0, L + 1)
    raise TypeError(f"unsupported family {type(fam).__name__}")


def alpha_dense(fam: IsometryFamily, A) -> np.ndarray:
    """sum_i S_i A S_i^* with the isometry matrices; A dense or factored."""
    M = A.dense() if isinstance(A, MatrixObservable) else np.asarray(A)
    m = level_of_size(M.shape[0], fam.n)
    out = 0
    for i in range(fam.n):
        S = isometry_matrix(fam, i, m)
        out = out + S @ M @ S.conj().T
    return out


def alpha_power(fam: IsometryFamily, A: MatrixObservable, k: int) -> MatrixObservable:
    for _ in range(k):
        A = alpha_apply(fam, A)
    return A


def canonical_shift(A: MatrixObservable) -> MatrixObservable:
    """1_n (x) A."""
    return MatrixObservable(A.block, A.n, A.offset + 1, A.level + 1)


def vacuum_expectation(A: MatrixObservable, measure) -> complex:
    """<1, A 1> with 1 the constant function at A's level."""
    return expectation(A, CylinderVector.constant(0, measure))


def expectation(A: MatrixObservable, xi: CylinderVector) -> complex:
    """<xi, A xi>, aligning levels and touching only the block's sites."""
    n, s, b = A.n, A.offset, A.block_level
    if xi.level <= s:
        one = CylinderVector.constant(b, xi.measure).amplitudes
        return complex(np.vdot(one, A.block @ one)) * xi.norm() ** 2
    L = max(xi.level, s + b)
    x = embed(xi, L).amplitudes.reshape(n**s, n**b, n ** (L - s - b))
    y = np.einsum("ac,icj->iaj", A.block, x)
    return complex(np.vdot(x, y))


def relative_commutant_dim(fam: IsometryFamily, m: int, spanning: str = "generators", cutoff: float = 1e-9) -> int:
    """Dimension of {X in M_(n^m) : [X, alpha(A)] = 0 for all A in M_(n^(m-1))}.

    With ``spanning="generators"`` the constraints use a diagonal matrix with
    distinct entries and the cyclic shift, which generate M_(n^(m-1)) as an
    algebra; ``"matrix_units"`` uses every matrix unit.  Singular values of
    the stacked system below ``cutoff`` count as zero.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    n = fam.n
    check_budget(n, 2 * m)
    N = n ** (m - 1)
    if spanning == "generators":
        gens = [np.diag(np.arange(N, dtype=complex)), np.roll(np.eye(N), 1, axis=0)]
    elif spanning == "matrix_units":
        gens = []
        for a in range(N):
            for c in range(N):
                E = np.zeros((N, N))
                E[a, c] = 1.0
                gens.append(E)
    else:
        raise ValueError("spanning must be 'generators' or 'matrix_units'")
    D = n**m
    eye = np.eye(D)
    rows = []
    for g in gens:
        B = alpha_apply(fam, MatrixObservable(g, n)).embed(m).dense()
        # row-major vec: vec(X B) = (I kron B^T) vec X, vec(B X) = (B kron I) vec X
        rows.append(np.kron(eye, B.T) - np.kron(B, eye))
    sv = np.linalg.svd(np.vstack(rows), compute_uv=False)
    return int(np.sum(sv < cutoff)) + max(0, D * D - sv.size)


def clustering_curve(fam: IsometryFamily, A: MatrixObservable, xi: CylinderVector, K: int) -> np.ndarray:
    """c_k = <xi, alpha^k(A) xi> for k = 0..K."""
    if xi.measure != fam.measure:
        raise ValueError("vector and family use different measures")
    out = np.empty(K + 1, dtype=complex)
    for k in range(K + 1):
        out[k] = expectation(A, xi)
        if k < K:
            A = alpha_apply(fam, A)
    return out


def clustering_curve_dense(fam: IsometryFamily, A: MatrixObservable, xi: CylinderVector, K: int) -> np.ndarray:
    """The same curve through dense sum_i S_i X S_i^* iteration (small sizes only)."""
    M = A.dense()
    out = np.empty(K + 1, dtype=complex)
    for k in range(K + 1):
        lvl = level_of_size(M.shape[0], fam.n)
        L = max(lvl, xi.level)
        v = embed(xi, L).amplitudes
        Mk = np.kron(M, np.eye(fam.n ** (L - lvl)))
        out[k] = np.vdot(v, Mk @ v)
        if k < K:
            M = alpha_dense(fam, M)
    return out


@dataclass(frozen=True)
class CesaroResult:
    terms: tuple
    defect: float
    bound: float
    route: str

    def mean(self) -> np.ndarray:
        """Dense A_N at level l + N - 1."""
        L = self.terms[-1].level
        return sum(t.embed(L).dense() for t in self.terms) / len(self.terms)


def cesaro_mean(fam: IsometryFamily, A: MatrixObservable, N: int, route: str = "auto") -> CesaroResult:
    """A_N = (1/N) sum_(m<N) alpha^m(A) and the defect |alpha(A_N) - A_N|.

    ``route="dense"`` builds A_N and alpha(A_N) as matrices at level l+N.
    ``route="telescoped"`` uses alpha(A_N) - A_N = (alpha^N(A) - A) / N and
    evaluates the norm on the supports only.  ``"auto"`` picks dense when it
    fits the level budget.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    terms = [A]
    for _ in range(N - 1):
        terms.append(alpha_apply(fam, terms[-1]))
    bound = 2 * A.norm() / N
    top = A.level + N
    if route == "auto":
        route = "dense" if fam.n**top <= get_max_dim() else "telescoped"
    if route == "dense":
        check_budget(fam.n, top)
        res = CesaroResult(tuple(terms), 0.0, bound, route)
        AN = res.mean()
        D = alpha_dense(fam, AN) - np.kron(AN, np.eye(fam.n))
        defect = float(np.linalg.norm(D, 2))
    elif route == "telescoped":
        defect = difference_norm(alpha_apply(fam, terms[-1]), A) / N
    else:
        raise ValueError("route must be 'auto', 'dense' or 'telescoped'")
    return CesaroResult(tuple(terms), defect, bound, route)


# ------------------------------------------------- two-sided extension


def _rotation_permutation(n: int, slots: int) -> np.ndarray:
    """perm[a] = index of basis vector a after moving slot t to slot t+1 (cyclically)."""
    digits = np.roll(all_words(slots, n), 1, axis=1)
    return digits @ (n ** np.arange(slots - 1, -1, -1))


def embed_right(A: MatrixObservable, W: int) -> np.ndarray:
    """A on sites 0..m-1 of the window -W..W-1, identity elsewhere."""
    m = A.level
    if m > W:
        raise ValueError("observable does not fit in the right half-window")
    return np.kron(np.kron(np.eye(A.n**W), A.dense()), np.eye(A.n ** (W - m)))


def two_sided_extension_check(W: int, A: MatrixObservable, tol: float = 1e-12) -> dict:
    """Compare the slot rotation with the canonical shift on M_(n^m) (x) 1.

    The rotation moves the tensor factor at slot t of the window -W..W-1 to
    slot t+1 (the last slot wraps to the first).  Equality with the
    canonical shift is checked for A and for every matrix unit of A's level.
    """
    n, m = A.n, A.level
    if W < m + 1:
        raise ValueError("window too small: the shifted observable would wrap around")
    check_budget(n, 2 * W)
    perm = _rotation_permutation(n, 2 * W)
    tests = [A.dense()]
    for a in range(n**m):
        for c in range(n**m):
            E = np.zeros((n**m, n**m))
            E[a, c] = 1.0
            tests.append(E)
    worst = 0.0
    for M in tests:
        X = MatrixObservable(M, n)
        big = embed_right(X, W)
        rotated = np.empty_like(big)
        rotated[np.ix_(perm, perm)] = big
        target = embed_right(canonical_shift(X), W)
        worst = max(worst, float(np.abs(rotated - target).max()))
    return {"ok": worst <= tol, "max_defect": worst, "checked": len(tests), "window": W}
