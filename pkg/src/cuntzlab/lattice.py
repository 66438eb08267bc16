"""Words, product measures and cylinder vectors on the compact group (Z_n)^N.

A level-m cylinder vector is a function of the first m coordinates.  It is
stored in measure-absorbed coordinates: the amplitude at the point x equals
the function value times the square root of the measure of the level-m
cylinder containing x.  Inner products are then plain Euclidean ones.

Points of Z_n^m are linearised big-endian: coordinate 0 is the most
significant digit.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-12
_MAX_DIM = [4096]


class BudgetError(ValueError):
    """Raised when a computation would exceed the configured level budget."""


def get_max_dim() -> int:
    return _MAX_DIM[0]


def set_max_dim(max_dim: int) -> None:
    if max_dim < 1:
        raise ValueError("max_dim must be positive")
    _MAX_DIM[0] = int(max_dim)


@contextlib.contextmanager
def level_budget(max_dim: int):
    """Temporarily change the largest admissible matrix dimension n^m."""
    old = get_max_dim()
    set_max_dim(max_dim)
    try:
        yield
    finally:
        set_max_dim(old)


def check_budget(n: int, level: int, kind: str = "matrix") -> None:
    """Raise BudgetError if a level-``level`` object of the given kind is too big.

    Matrices are limited to dimension ``max_dim``; vectors may have up to
    ``max_dim**2`` entries, the same storage as one admissible matrix.
    """
    limit = get_max_dim() if kind == "matrix" else get_max_dim() ** 2
    if level < 0:
        raise ValueError(f"negative level {level}")
    if n ** level > limit:
        raise BudgetError(
            f"level budget exceeded: {kind} at level {level} with n={n} has "
            f"dimension {n ** level} > {limit}"
        )


# ---------------------------------------------------------------- words


@dataclass(frozen=True)
class Word:
    """A finite multi-index over Z_n."""

    digits: tuple
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("base n must be at least 2")
        digits = tuple(int(d) for d in self.digits)
        for d in digits:
            if not 0 <= d < self.n:
                raise ValueError(f"digit {d} out of range for base {self.n}")
        object.__setattr__(self, "digits", digits)

    @property
    def level(self) -> int:
        return len(self.digits)

    @property
    def index(self) -> int:
        return word_index(self.digits, self.n)

    @classmethod
    def from_index(cls, index: int, level: int, n: int) -> "Word":
        return cls(index_digits(index, level, n), n)

    def padded(self, level: int) -> "Word":
        """The same dual element written with ``level`` digits (zeros appended)."""
        if level < self.level:
            raise ValueError("cannot pad a word to a shorter length")
        return Word(self.digits + (0,) * (level - self.level), self.n)


def _digits_of(word, n=None):
    if isinstance(word, Word):
        return word.digits
    return tuple(int(d) for d in word)


def word_index(digits, n: int) -> int:
    idx = 0
    for d in digits:
        idx = idx * n + int(d)
    return idx


def index_digits(index: int, level: int, n: int) -> tuple:
    if not 0 <= index < n ** level:
        raise ValueError(f"index {index} out of range for level {level}")
    out = []
    for _ in range(level):
        index, d = divmod(index, n)
        out.append(d)
    return tuple(reversed(out))


def all_words(level: int, n: int) -> np.ndarray:
    """Digits of every point of Z_n^level, shape (n**level, level), in index order."""
    if level == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((n,) * level).reshape(level, -1)
    return grids.T.astype(np.int64)


def level_of_size(size: int, n: int) -> int:
    level, s = 0, 1
    while s < size:
        s *= n
        level += 1
    if s != size:
        raise ValueError(f"size {size} is not a power of {n}")
    return level


# -------------------------------------------------------------- measures


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    """Per-coordinate weights of an infinite product measure on (Z_n)^N.

    Two specs compare equal when their weights agree to 1e-12.
    """

    weights: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if len(w) < 2:
            raise ValueError("need at least two weights")
        if min(w) < 0:
            raise ValueError("weights must be nonnegative")
        if abs(sum(w) - 1.0) > DEFAULT_TOL:
            raise ValueError(f"weights sum to {sum(w)!r}, not 1")
        object.__setattr__(self, "weights", w)

    def __eq__(self, other):
        if not isinstance(other, MeasureSpec) or other.n != self.n:
            return NotImplemented if not isinstance(other, MeasureSpec) else False
        return max(abs(a - b) for a, b in zip(self.weights, other.weights)) <= DEFAULT_TOL

    def __hash__(self):
        return hash(("MeasureSpec", self.n))

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def is_haar(self) -> bool:
        return all(abs(w - 1.0 / self.n) <= DEFAULT_TOL for w in self.weights)

    @classmethod
    def haar(cls, n: int) -> "MeasureSpec":
        return cls((1.0 / n,) * n)

    @classmethod
    def from_amplitudes(cls, eta) -> "MeasureSpec":
        return cls(tuple(np.abs(np.asarray(eta, dtype=complex)) ** 2))

    def root_weights(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.weights))

    def cylinder_weights(self, level: int) -> np.ndarray:
        """mu of every level-``level`` cylinder, in index order."""
        out = np.ones(1)
        w = np.asarray(self.weights)
        for _ in range(level):
            out = np.kron(out, w)
        return out


# ------------------------------------------------------- cylinder vectors


@dataclass(frozen=True, eq=False)
class CylinderVector:
    """Level-m element of L^2 in measure-absorbed point coordinates."""

    amplitudes: np.ndarray
    measure: MeasureSpec

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        level_of_size(a.size, self.measure.n)
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def n(self) -> int:
        return self.measure.n

    @property
    def level(self) -> int:
        return level_of_size(self.amplitudes.size, self.n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "CylinderVector") -> complex:
        """<self, other>, linear in the second slot; levels are aligned by embedding."""
        if other.measure != self.measure:
            raise ValueError("vectors are absorbed against different measures")
        level = max(self.level, other.level)
        a = embed(self, level).amplitudes
        b = embed(other, level).amplitudes
        return complex(np.vdot(a, b))

    def function_values(self) -> np.ndarray:
        """Point values of the represented function (zero-weight cylinders give 0)."""
        root = np.sqrt(self.measure.cylinder_weights(self.level))
        out = np.zeros_like(self.amplitudes)
        nz = root > 0
        out[nz] = self.amplitudes[nz] / root[nz]
        return out

    @classmethod
    def from_function(cls, values, measure: MeasureSpec) -> "CylinderVector":
        values = np.asarray(values, dtype=complex).reshape(-1)
        level = level_of_size(values.size, measure.n)
        return cls(values * np.sqrt(measure.cylinder_weights(level)), measure)

    @classmethod
    def constant(cls, level: int, measure: MeasureSpec, value: complex = 1.0):
        """value times the constant function 1 at the given level."""
        return cls.from_function(np.full(measure.n ** level, value, dtype=complex), measure)

    def scaled(self, c: complex) -> "CylinderVector":
        return CylinderVector(c * self.amplitudes, self.measure)

    def __add__(self, other: "CylinderVector") -> "CylinderVector":
        level = max(self.level, other.level)
        return CylinderVector(
            embed(self, level).amplitudes + embed(other, level).amplitudes, self.measure
        )

    def __sub__(self, other: "CylinderVector") -> "CylinderVector":
        return self + other.scaled(-1.0)


def embed_amplitudes(amps: np.ndarray, measure: MeasureSpec, levels: int) -> np.ndarray:
    """Append ``levels`` constant coordinates to absorbed amplitudes (last axis)."""
    amps = np.asarray(amps)
    if levels == 0:
        return amps
    tail = np.ones(1)
    root = measure.root_weights()
    for _ in range(levels):
        tail = np.kron(tail, root)
    lead = amps.shape[:-1]
    return (amps[..., :, None] * tail).reshape(lead + (-1,))


def embed(v: CylinderVector, level: int) -> CylinderVector:
    """The same function viewed as a cylinder vector of a deeper level."""
    if level < v.level:
        raise ValueError(f"cannot embed level {v.level} into level {level}")
    if level == v.level:
        return v
    check_budget(v.n, level, "vector")
    return CylinderVector(embed_amplitudes(v.amplitudes, v.measure, level - v.level), v.measure)


# --------------------------------------------------------------- Fourier


def char_value(j: int, x: int, n: int) -> complex:
    """The pairing exp(2 pi i j x / n) between Z_n and its dual."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return complex(np.exp(2j * np.pi * ((int(j) * int(x)) % n) / n))


def character_matrix(n: int) -> np.ndarray:
    """Absorbed one-site characters as columns: C[x, y] = <y, x> / sqrt(n).

    C is unitary; it converts character-basis coordinates to point-basis ones.
    """
    x = np.arange(n)
    return np.exp(2j * np.pi * (np.outer(x, x) % n) / n) / np.sqrt(n)


def _require_haar(measure: MeasureSpec) -> None:
    if not measure.is_haar:
        raise ValueError("characters are orthonormal only for the Haar measure")


def character_vector(lam, level: int, n: int) -> CylinderVector:
    """The character e_lambda at the given level, with Haar absorption."""
    digits = _digits_of(lam)
    if len(digits) > level:
        raise ValueError("character word is longer than the level")
    digits = digits + (0,) * (level - len(digits))
    check_budget(n, level, "vector")
    amps = np.ones(1, dtype=complex)
    c = character_matrix(n)
    for y in digits:
        if not 0 <= y < n:
            raise ValueError(f"digit {y} out of range for base {n}")
        amps = np.kron(amps, c[:, y])
    return CylinderVector(amps, MeasureSpec.haar(n))


def fourier_forward(v: CylinderVector) -> np.ndarray:
    """Coefficients <e_lambda, v> for every lambda of length level(v), by word index."""
    _require_haar(v.measure)
    m, n = v.level, v.n
    if m == 0:
        return v.amplitudes.copy()
    arr = v.amplitudes.reshape((n,) * m)
    return np.fft.fftn(arr, norm="ortho").reshape(-1)


def fourier_inverse(coefficients, n: int) -> CylinderVector:
    coefficients = np.asarray(coefficients, dtype=complex).reshape(-1)
    m = level_of_size(coefficients.size, n)
    if m == 0:
        return CylinderVector(coefficients, MeasureSpec.haar(n))
    arr = np.fft.ifftn(coefficients.reshape((n,) * m), norm="ortho")
    return CylinderVector(arr.reshape(-1), MeasureSpec.haar(n))


def fourier_coefficient(v: CylinderVector, lam) -> complex:
    """<e_lambda, v> for a single word; lambda may be longer than level(v)."""
    digits = _digits_of(lam)
    level = max(v.level, len(digits))
    return complex(np.vdot(character_vector(digits, level, v.n).amplitudes, embed(v, level).amplitudes))
