"""Concrete Cuntz isometry families acting between truncation levels.

Three variants are provided:

* ``WeightedHaar(eta)``: (S_i f)(x) = conj(eta_i)^(-1) [x_0 = i] f(x_1, x_2, ...)
  on L^2 of the product measure with weights |eta_i|^2.  In absorbed point
  coordinates S_i is e_i (x) (phase_i * identity) with phase_i = eta_i / |eta_i|.
* ``GaugePerturbed(U)``: T_i = S_i Gamma(U) over the uniform Haar family,
  where Gamma(U) is the sitewise product of the unitaries U_p acting in the
  character basis of each coordinate.  At level m the product is truncated
  to p < m.
* ``NearestNeighbor(n)``: T_i = S_i M_i over the uniform Haar family, where
  M_i multiplies by <i, x_0>.  Because M_i reads x_0, T_i acts on levels >= 1.

Level bookkeeping: S_i raises the level by one, S_i^* lowers it by one (never
below the family's minimum level).  Inputs below the minimum level are
rejected; use ``lattice.embed`` first.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .lattice import (
    DEFAULT_TOL,
    CylinderVector,
    MeasureSpec,
    all_words,
    character_matrix,
    check_budget,
    embed_amplitudes,
)
from .sequences import SequenceFamily


def frame_unitary(h) -> np.ndarray:
    """A unitary R with R e_0 = h that acts as a rotation in span(e_0, h).

    R depends continuously on h wherever h_0 != 0 and nearby unit vectors
    get nearby frames.
    """
    h = np.asarray(h, dtype=complex).reshape(-1)
    n = h.size
    a = h[0]
    rest = h.copy()
    rest[0] = 0.0
    b = np.linalg.norm(rest)
    R = np.eye(n, dtype=complex)
    if b < 1e-300:
        R[0, 0] = a / abs(a)
        return R
    u = rest / b
    e0 = np.zeros(n, dtype=complex)
    e0[0] = 1.0
    # R e_0 = a e_0 + b u, R u = -b e_0 + conj(a) u, identity on the complement
    R -= np.outer(e0, e0) + np.outer(u, u.conj())
    R += np.outer(a * e0 + b * u, e0) + np.outer(-b * e0 + np.conj(a) * u, u.conj())
    return R


def is_unitary(M, tol=DEFAULT_TOL) -> bool:
    M = np.asarray(M)
    return M.shape[0] == M.shape[1] and np.abs(M.conj().T @ M - np.eye(M.shape[0])).max() <= tol


class UnitarySequence:
    """A sequence p -> U_p of n x n unitaries, written in the character basis.

    Args:
        generator: callable returning U_p for p >= 0.
        n: matrix size.
        horizon: index beyond which U_p is the identity, or None for an
            infinite analytic family.
        name: label used in reports.
    """

    def __init__(self, generator, n: int, horizon=None, name: str = "custom"):
        self.n = int(n)
        self.horizon = horizon
        self.name = name
        self._gen = generator
        self._cache = {}

    def unitary(self, p: int) -> np.ndarray:
        if p < 0:
            raise ValueError("negative index")
        if self.horizon is not None and p >= self.horizon:
            return np.eye(self.n, dtype=complex)
        if p not in self._cache:
            U = np.asarray(self._gen(p), dtype=complex)
            if U.shape != (self.n, self.n) or not is_unitary(U):
                raise ValueError(f"U_{p} is not an {self.n}x{self.n} unitary")
            self._cache[p] = U
        return self._cache[p]

    def point_unitary(self, p: int) -> np.ndarray:
        """U_p acting on absorbed point coordinates: C U_p C^H."""
        C = character_matrix(self.n)
        return C @ self.unitary(p) @ C.conj().T

    def summability(self, count: int) -> dict:
        """Partial sums over p < count of the three summability conditions.

        Keys: ``operator`` for sum |I - U_p|, ``square`` for sum |I - U_p|^2
        (operator norms) and ``vacuum`` for sum |e_0 - U_p e_0|^2.
        """
        eye = np.eye(self.n)
        op, sq, vac = [], [], []
        for p in range(count):
            D = eye - self.unitary(p)
            nrm = np.linalg.norm(D, 2)
            op.append(nrm)
            sq.append(nrm**2)
            vac.append(np.linalg.norm(D[:, 0]) ** 2)
        return {
            "operator": np.cumsum(op),
            "square": np.cumsum(sq),
            "vacuum": np.cumsum(vac),
        }

    @classmethod
    def identity(cls, n: int) -> "UnitarySequence":
        return cls(lambda p: np.eye(n), n, horizon=0, name="identity")

    @classmethod
    def from_list(cls, mats, name: str = "explicit") -> "UnitarySequence":
        mats = [np.asarray(M, dtype=complex) for M in mats]
        return cls(lambda p: mats[p], mats[0].shape[0], horizon=len(mats), name=name)

    @classmethod
    def from_sequence(cls, family: SequenceFamily) -> "UnitarySequence":
        """U_p = R(h_(p+1))^* R(h_p) with R the rotation frames of the sequence.

        With this choice the shift built from Gamma(U) is unitarily equivalent
        to the tensor shift on the product space with reference vectors h_p,
        the constant function corresponding to the product of the h_p.
        """

        def gen(p):
            h = family.vectors(p, p + 2)
            return frame_unitary(h[1]).conj().T @ frame_unitary(h[0])

        horizon = None if family.horizon is None else family.horizon - 1
        return cls(gen, family.n, horizon=horizon, name=f"from:{family.name}")

    @classmethod
    def random(cls, n: int, horizon: int, rng, scale: float = 1.0) -> "UnitarySequence":
        """exp(i scale H_p) with H_p drawn from the Gaussian unitary ensemble."""
        mats = []
        for _ in range(horizon):
            X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            H = (X + X.conj().T) / 2
            w, V = np.linalg.eigh(H)
            mats.append((V * np.exp(1j * scale * w)) @ V.conj().T)
        return cls.from_list(mats, name="random")


# ----------------------------------------------------------------- families


class IsometryFamily:
    """Common interface; subclasses implement the amplitude-level maps.

    Amplitude arrays may carry leading batch axes; the last axis is the
    level-m point index.
    """

    min_level = 0

    def __init__(self, measure: MeasureSpec):
        self.measure = measure
        self.n = measure.n

    def _check_level(self, m: int) -> None:
        if m < self.min_level:
            raise ValueError(
                f"{type(self).__name__} acts on levels >= {self.min_level}; embed the input first"
            )

    def s_amplitudes(self, i: int, amps: np.ndarray, m: int) -> np.ndarray:
        raise NotImplementedError

    def s_star_amplitudes(self, i: int, amps: np.ndarray, m: int):
        """Return (amplitudes, level) of S_i^* applied at level m."""
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


def _haar_s(i, amps, m, n, phase=1.0):
    out = np.zeros(amps.shape[:-1] + (n, n**m), dtype=complex)
    out[..., i, :] = phase * amps
    return out.reshape(amps.shape[:-1] + (n ** (m + 1),))


def _haar_s_star(i, amps, m, measure, phase=1.0):
    n = measure.n
    if m == 0:
        amps = embed_amplitudes(amps, measure, 1)
        m = 1
    blocks = amps.reshape(amps.shape[:-1] + (n, n ** (m - 1)))
    return np.conj(phase) * blocks[..., i, :], m - 1


class WeightedHaar(IsometryFamily):
    """S_i f = conj(eta_i)^(-1) 1_{x_0 = i} f o shift, on the eta-weighted product measure."""

    def __init__(self, eta):
        eta = np.asarray(eta, dtype=complex).reshape(-1)
        if eta.size < 2:
            raise ValueError("need n >= 2")
        if abs(np.sum(np.abs(eta) ** 2) - 1.0) > DEFAULT_TOL:
            raise ValueError("eta must be a unit vector")
        if np.min(np.abs(eta)) == 0:
            raise ValueError("every eta_i must be nonzero")
        super().__init__(MeasureSpec.from_amplitudes(eta))
        self.eta = eta
        self.phases = eta / np.abs(eta)

    @classmethod
    def haar(cls, n: int) -> "WeightedHaar":
        return cls(np.full(n, n**-0.5, dtype=complex))

    def s_amplitudes(self, i, amps, m):
        self._check_level(m)
        return _haar_s(i, amps, m, self.n, self.phases[i])

    def s_star_amplitudes(self, i, amps, m):
        return _haar_s_star(i, amps, m, self.measure, self.phases[i])

    def describe(self):
        return {"kind": "weighted_haar", "eta": [[z.real, z.imag] for z in self.eta]}


def apply_sitewise(amps: np.ndarray, mats, n: int) -> np.ndarray:
    """Apply mats[p] on coordinate p of level-len(mats) amplitudes (last axis)."""
    m = len(mats)
    if m == 0:
        return amps
    lead = amps.shape[:-1]
    arr = amps.reshape(lead + (n,) * m)
    k = len(lead)
    for p, M in enumerate(mats):
        if M is None:
            continue
        arr = np.moveaxis(np.tensordot(M, arr, axes=([1], [k + p])), 0, k + p)
    return arr.reshape(lead + (n**m,))


class GaugePerturbed(IsometryFamily):
    """T_i = S_i Gamma(U) over the uniform Haar family."""

    def __init__(self, unitaries: UnitarySequence):
        super().__init__(MeasureSpec.haar(unitaries.n))
        self.unitaries = unitaries

    @classmethod
    def from_sequence(cls, family: SequenceFamily) -> "GaugePerturbed":
        return cls(UnitarySequence.from_sequence(family))

    def gamma(self, amps, m, adjoint=False):
        mats = []
        for p in range(m):
            M = self.unitaries.point_unitary(p)
            mats.append(M.conj().T if adjoint else M)
        return apply_sitewise(amps, mats, self.n)

    def s_amplitudes(self, i, amps, m):
        return _haar_s(i, self.gamma(amps, m), m, self.n)

    def s_star_amplitudes(self, i, amps, m):
        out, lvl = _haar_s_star(i, amps, m, self.measure)
        return self.gamma(out, lvl, adjoint=True), lvl

    def describe(self):
        return {"kind": "gauge_perturbed", "unitaries": self.unitaries.name}


@lru_cache(maxsize=64)
def _first_digit_characters(n: int, m: int) -> np.ndarray:
    """Array [i, x] = <i, x_0> over level-m points x."""
    x0 = all_words(m, n)[:, 0]
    return np.exp(2j * np.pi * (np.outer(np.arange(n), x0) % n) / n)


class NearestNeighbor(IsometryFamily):
    """T_i = S_i M_i with (M_i f)(x) = <i, x_0> f(x), over uniform Haar."""

    min_level = 1

    def __init__(self, n: int):
        super().__init__(MeasureSpec.haar(n))

    def s_amplitudes(self, i, amps, m):
        self._check_level(m)
        return _haar_s(i, amps * _first_digit_characters(self.n, m)[i], m, self.n)

    def s_star_amplitudes(self, i, amps, m):
        out, lvl = _haar_s_star(i, amps, m, self.measure)
        if lvl == 0:
            out, lvl = embed_amplitudes(out, self.measure, 1), 1
        return out * np.conj(_first_digit_characters(self.n, lvl)[i]), lvl

    def describe(self):
        return {"kind": "nearest_neighbor", "n": self.n}


def haar_family(n: int) -> WeightedHaar:
    return WeightedHaar.haar(n)


# --------------------------------------------------------------- operations


def _check_vector(fam: IsometryFamily, v: CylinderVector) -> None:
    if v.measure != fam.measure:
        raise ValueError("vector is absorbed against a different measure than the family")


def apply_s(fam: IsometryFamily, i: int, v: CylinderVector) -> CylinderVector:
    """S_i v, one level up."""
    _check_vector(fam, v)
    check_budget(fam.n, v.level + 1, "vector")
    return CylinderVector(fam.s_amplitudes(int(i), v.amplitudes, v.level), fam.measure)


def apply_s_star(fam: IsometryFamily, i: int, v: CylinderVector) -> CylinderVector:
    """S_i^* v, one level down (level 0 stays at 0; multiplier families stay >= 1)."""
    _check_vector(fam, v)
    out, _ = fam.s_star_amplitudes(int(i), v.amplitudes, v.level)
    return CylinderVector(out, fam.measure)


def isometry_matrix(fam: IsometryFamily, i: int, m: int) -> np.ndarray:
    """Matrix of S_i from level m to level m+1 (shape n^(m+1) x n^m)."""
    fam._check_level(m)
    check_budget(fam.n, m + 1)
    eye = np.eye(fam.n**m, dtype=complex)
    return fam.s_amplitudes(int(i), eye, m).T


def isometry_matrices(fam: IsometryFamily, m: int) -> list:
    return [isometry_matrix(fam, i, m) for i in range(fam.n)]


def gauge_unitary(U: UnitarySequence, m: int, basis: str = "point") -> np.ndarray:
    """Gamma(U) truncated to level m: the Kronecker product of U_0, ..., U_(m-1).

    ``basis="point"`` gives the matrix on absorbed point coordinates,
    ``basis="character"`` the matrix on the character basis ordered by word
    index.
    """
    if basis not in ("point", "character"):
        raise ValueError("basis must be 'point' or 'character'")
    check_budget(U.n, m)
    out = np.ones((1, 1), dtype=complex)
    for p in range(m):
        M = U.point_unitary(p) if basis == "point" else U.unitary(p)
        out = np.kron(out, M)
    return out


def _check_pair(famS, famT):
    if famS.n != famT.n or famS.measure != famT.measure:
        raise ValueError("families must share base n and measure")


def transfer_unitary(famS: IsometryFamily, famT: IsometryFamily, m: int) -> np.ndarray:
    """U = sum_j T_j S_j^* on the level-m space, built from level-(m-1) maps."""
    _check_pair(famS, famT)
    if m < 1:
        raise ValueError("transfer unitary needs m >= 1")
    k = m - 1
    famS._check_level(k)
    famT._check_level(k)
    U = np.zeros((famS.n**m, famS.n**m), dtype=complex)
    for j in range(famS.n):
        U += isometry_matrix(famT, j, k) @ isometry_matrix(famS, j, k).conj().T
    return U


def radon_nikodym_matrix(famS: IsometryFamily, famT: IsometryFamily, m: int) -> np.ndarray:
    """Block matrix with block (j, i) equal to S_j^* T_i on level m."""
    _check_pair(famS, famT)
    n, d = famS.n, famS.n**m
    S = isometry_matrices(famS, m)
    T = isometry_matrices(famT, m)
    out = np.zeros((n * d, n * d), dtype=complex)
    for j in range(n):
        for i in range(n):
            out[j * d : (j + 1) * d, i * d : (i + 1) * d] = S[j].conj().T @ T[i]
    return out


def cuntz_defect(fam: IsometryFamily, m: int) -> tuple:
    """(max_ij |S_i^* S_j - delta_ij I|, |sum_i S_i S_i^* - I|) in operator norm."""
    mats = isometry_matrices(fam, m)
    d = fam.n**m
    first = 0.0
    for i, Mi in enumerate(mats):
        for j, Mj in enumerate(mats):
            D = Mi.conj().T @ Mj - (np.eye(d) if i == j else 0.0)
            first = max(first, np.linalg.norm(D, 2))
    total = sum(M @ M.conj().T for M in mats)
    second = np.linalg.norm(total - np.eye(d * fam.n), 2)
    return float(first), float(second)


def vacuum_word_expectation(fam: IsometryFamily, i, j) -> complex:
    """<1, S_(i_1) ... S_(i_k) S_(j_k)^* ... S_(j_1)^* 1> by direct operator application."""
    i = [int(a) for a in getattr(i, "digits", i)]
    j = [int(a) for a in getattr(j, "digits", j)]
    if len(i) != len(j):
        raise ValueError("words must have equal length")
    one = CylinderVector.constant(max(len(j), fam.min_level), fam.measure)
    v = one
    for a in j:
        v = apply_s_star(fam, a, v)
    for a in reversed(i):
        v = apply_s(fam, a, v)
    return one.inner(v)
