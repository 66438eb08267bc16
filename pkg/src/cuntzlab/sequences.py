"""Named generators of unit vectors h_0, h_1, ... in C^n.

The angle families put h_k = cos(theta_k) e_0 + sin(theta_k) e_1 with a
closed-form angle ladder and limit e_0.  Index k starts at 0; the ladders
are written so that k = 0 is the first rung.
"""

from __future__ import annotations

import math

import numpy as np


class SequenceFamily:
    """Base class: a possibly infinite sequence of unit vectors in C^n."""

    name = "abstract"
    note = ""

    def __init__(self, n: int, horizon=None, limit=None):
        if n < 2:
            raise ValueError("n must be at least 2")
        self.n = int(n)
        self.horizon = horizon
        self.limit = None if limit is None else _unit(limit)

    def vectors(self, start: int, stop: int) -> np.ndarray:
        if start < 0 or stop < start:
            raise ValueError("bad index range")
        if self.horizon is not None and stop > self.horizon:
            raise ValueError(f"{self.name} has only {self.horizon} vectors")
        return self._vectors(start, stop)

    def vector(self, k: int) -> np.ndarray:
        return self.vectors(k, k + 1)[0]

    def params(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"name": self.name, "n": self.n, "params": self.params()}

    def _vectors(self, start, stop):  # pragma: no cover - abstract
        raise NotImplementedError


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    nv = np.linalg.norm(v)
    if abs(nv - 1.0) > 1e-12:
        raise ValueError(f"vector has norm {nv!r}, expected 1")
    return v


class AngleFamily(SequenceFamily):
    """h_k = [cos theta_k, sin theta_k, 0, ...] with limit e_0."""

    def __init__(self, n: int = 2):
        e0 = np.zeros(n, dtype=complex)
        e0[0] = 1.0
        super().__init__(n, None, e0)

    def angles(self, start: int, stop: int) -> np.ndarray:
        raise NotImplementedError

    def _vectors(self, start, stop):
        th = self.angles(start, stop)
        out = np.zeros((th.size, self.n), dtype=complex)
        out[:, 0] = np.cos(th)
        out[:, 1] = np.sin(th)
        return out


def harmonic_block(k) -> np.ndarray:
    """Block number q >= 1 of index k in the ladder 1, 2, 2, 3, 3, 3, ..."""
    k = np.asarray(k, dtype=np.int64)
    # q is the largest integer with q (q - 1) / 2 <= k
    q = np.array([(1 + math.isqrt(1 + 8 * int(x))) // 2 for x in k.reshape(-1)], dtype=np.int64)
    return q.reshape(k.shape)


class ThetaHarmonic(AngleFamily):
    name = "ThetaHarmonic"
    note = (
        "angles 1, 1/2, 1/2, 1/3, 1/3, 1/3, ...; sum of |h_k - h_(k+1)| is finite "
        "and h_k -> e_0, but sum of theta_k^2 diverges, so the product of <h_k, e_0> "
        "does not converge: yields a shift without invariant vector states"
    )

    def angles(self, start, stop):
        return 1.0 / harmonic_block(np.arange(start, stop)).astype(float)


class InverseSqrt(AngleFamily):
    name = "InverseSqrt"
    note = (
        "angles (k+1)^(-1/2); monotone angles keep sum |h_k - h_(k+1)| <= 1 and "
        "h_k -> e_0, while sum theta_k^2 diverges like the harmonic series"
    )

    def angles(self, start, stop):
        return 1.0 / np.sqrt(np.arange(start + 1, stop + 1, dtype=float))


class Geometric(AngleFamily):
    name = "Geometric"
    note = (
        "angles r^(k+1), 0 < r < 1; summable increments and convergent product "
        "of <h_k, e_0>: absorption regime with a limiting product state"
    )

    def __init__(self, n: int = 2, r: float = 0.5):
        if not 0 < r < 1:
            raise ValueError("Geometric needs 0 < r < 1")
        super().__init__(n)
        self.r = float(r)

    def params(self):
        return {"r": self.r}

    def angles(self, start, stop):
        return self.r ** np.arange(start + 1, stop + 1, dtype=float)


class Constant(SequenceFamily):
    name = "Constant"
    note = "h_k = h for all k; trivially summable, limit h"

    def __init__(self, h):
        h = _unit(h)
        super().__init__(h.size, None, h)
        self.h = h

    def params(self):
        return {"h": [[float(z.real), float(z.imag)] for z in self.h]}

    def _vectors(self, start, stop):
        return np.tile(self.h, (stop - start, 1))


class ExplicitList(SequenceFamily):
    name = "ExplicitList"
    note = "a finite user-supplied list of unit vectors; horizon = list length"

    def __init__(self, vectors, limit=None):
        vecs = np.array([_unit(v) for v in vectors])
        super().__init__(vecs.shape[1], len(vecs), limit)
        self._data = vecs

    def params(self):
        return {"vectors": [[[float(z.real), float(z.imag)] for z in v] for v in self._data]}

    def _vectors(self, start, stop):
        return self._data[start:stop].copy()


class Rotated(SequenceFamily):
    """The sitewise image g h_k of another family under a fixed unitary g."""

    name = "Rotated"
    note = "g h_k for a fixed unitary g"

    def __init__(self, base: SequenceFamily, g):
        g = np.asarray(g, dtype=complex)
        if np.abs(g.conj().T @ g - np.eye(base.n)).max() > 1e-12:
            raise ValueError("g is not unitary")
        limit = None if base.limit is None else g @ base.limit
        super().__init__(base.n, base.horizon, limit)
        self.base, self.g = base, g

    def _vectors(self, start, stop):
        return self.base.vectors(start, stop) @ self.g.T


GENERATORS = {
    "ThetaHarmonic": ThetaHarmonic,
    "InverseSqrt": InverseSqrt,
    "Geometric": Geometric,
    "Constant": Constant,
    "ExplicitList": ExplicitList,
}

PARAMETERS = {
    "ThetaHarmonic": {"n": "int >= 2 (default 2)"},
    "InverseSqrt": {"n": "int >= 2 (default 2)"},
    "Geometric": {"n": "int >= 2 (default 2)", "r": "float in (0, 1) (default 0.5)"},
    "Constant": {"h": "unit vector as list of [re, im] pairs"},
    "ExplicitList": {"vectors": "list of unit vectors", "limit": "optional unit vector"},
}


def make_sequence(name: str, **params) -> SequenceFamily:
    """Build a named family; unknown names raise KeyError listing the valid ones."""
    if name not in GENERATORS:
        raise KeyError(f"unknown generator {name!r}; valid names: {', '.join(sorted(GENERATORS))}")
    return GENERATORS[name](**params)
