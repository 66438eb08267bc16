"""Spectral probes: joint-eigenvector residuals, the Fourier recursion of the
nearest-neighbour composite, the n^-m matrix-element bound and Wold ranks.

The composite US used throughout is xi -> U (xi o sigma), where
U = sum_j T_j S_j^* is the transfer unitary from the Haar family S to the
nearest-neighbour family T, and xi o sigma is the level-raising map that
ignores the first coordinate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .cuntz_rep import IsometryFamily, NearestNeighbor, haar_family
from .lattice import (
    CylinderVector,
    MeasureSpec,
    all_words,
    character_vector,
    check_budget,
    embed_amplitudes,
    fourier_forward,
    word_index,
)
from .series import DEFAULT_HORIZONS, line_angle

# ------------------------------------------------------------- eigen residual


@dataclass
class EigenResidual:
    lam: np.ndarray
    level: int
    residual: float
    minimizer: CylinderVector


@dataclass
class EigenResidualCurve:
    lam: np.ndarray
    levels: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    minimizers: list = field(default_factory=list)


def adjoint_blocks(fam: IsometryFamily, m: int) -> list:
    """Matrices of T_j^* on level m, outputs re-embedded to level m."""
    check_budget(fam.n, m)
    eye = np.eye(fam.n**m, dtype=complex)
    out = []
    for j in range(fam.n):
        amps, lvl = fam.s_star_amplitudes(j, eye, m)
        if lvl < m:
            amps = embed_amplitudes(amps, fam.measure, m - lvl)
        out.append(amps.T)
    return out


def _check_lambda(lam, n):
    lam = np.asarray(lam, dtype=complex).reshape(-1)
    if lam.size != n:
        raise ValueError(f"lambda must have {n} entries")
    if abs(np.sum(np.abs(lam) ** 2) - 1) > 1e-10:
        raise ValueError("lambda must satisfy sum |lambda_i|^2 = 1")
    return lam


def _residual_form(blocks, lam):
    d = blocks[0].shape[0]
    Q = np.zeros((d, d), dtype=complex)
    for A, l in zip(blocks, lam):
        D = A - l * np.eye(d)
        Q += D.conj().T @ D
    return (Q + Q.conj().T) / 2


def _fix_phase(v):
    k = np.argmax(np.abs(v))
    return v * (abs(v[k]) / v[k])


def eigen_residual(fam: IsometryFamily, lam, m: int, blocks=None) -> EigenResidual:
    """min over unit xi at level m of sum_j |T_j^* xi - lam_j xi|^2."""
    lam = _check_lambda(lam, fam.n)
    fam._check_level(m)
    blocks = adjoint_blocks(fam, m) if blocks is None else blocks
    w, V = np.linalg.eigh(_residual_form(blocks, lam))
    xi = CylinderVector(_fix_phase(V[:, 0]), fam.measure)
    return EigenResidual(lam, m, max(float(w[0]), 0.0), xi)


def eigen_residual_curve(fam: IsometryFamily, lam, levels) -> EigenResidualCurve:
    curve = EigenResidualCurve(_check_lambda(lam, fam.n))
    for m in levels:
        r = eigen_residual(fam, lam, m)
        curve.levels.append(m)
        curve.residuals.append(r.residual)
        curve.minimizers.append(r.minimizer)
    return curve


def lambda_grid(n: int, resolution: float = 0.05) -> np.ndarray:
    """Unit vectors of C^n modulo global phase on a hyperspherical grid.

    The first entry is real and nonnegative; moduli come from n-1 angles in
    [0, pi/2] and the other entries carry phases in [0, 2 pi), both sampled
    at the given step.
    """
    angles = np.arange(0.0, np.pi / 2 + 1e-12, resolution)
    phases = np.arange(0.0, 2 * np.pi, resolution)
    out = []
    for ang in itertools.product(angles, repeat=n - 1):
        mod = np.ones(n)
        for p, a in enumerate(ang):
            mod[p] *= np.cos(a)
            mod[p + 1 :] *= np.sin(a)
        for ph in itertools.product(phases, repeat=n - 1):
            v = mod.astype(complex)
            v[1:] *= np.exp(1j * np.asarray(ph))
            out.append(v)
    return np.array(out)


def invariant_vector_search(
    fam: IsometryFamily,
    m: int,
    iterations: int = 50,
    grid_resolution: float = 0.05,
    max_grid: int = 20000,
    tol: float = 1e-10,
) -> dict:
    """Alternating search for a joint eigenvector of the T_j^* at level m.

    Starts from the uniform lambda, the basis vectors and the best point of
    a lambda grid; each step sets lambda_j = <xi, T_j^* xi> (normalised) and
    re-minimises xi.  The grid is coarsened until it has at most ``max_grid``
    points; the resolution actually used is reported.
    """
    if m < 1:
        raise ValueError("invariant_vector_search needs m >= 1")
    fam._check_level(m)
    n = fam.n
    blocks = adjoint_blocks(fam, m)
    res = grid_resolution
    while _grid_size(n, res) > max_grid:
        res *= 2
    grid = lambda_grid(n, res)
    grid_res = np.array([eigen_residual(fam, lam, m, blocks).residual for lam in grid])
    starts = [np.full(n, n**-0.5, dtype=complex)] + list(np.eye(n, dtype=complex))
    starts.append(grid[int(np.argmin(grid_res))])
    best = None
    for lam in starts:
        for _ in range(iterations):
            r = eigen_residual(fam, lam, m, blocks)
            if best is None or r.residual <= best.residual:
                best = r
            x = r.minimizer.amplitudes
            new = np.array([np.vdot(x, A @ x) for A in blocks])
            if np.linalg.norm(new) < 1e-14:
                break
            new /= np.linalg.norm(new)
            if np.abs(new - lam).max() < 1e-13:
                break
            lam = new
    return {
        "verdict": "found" if best.residual < tol else "none-found",
        "lam": best.lam,
        "xi": best.minimizer,
        "residual": best.residual,
        "grid_resolution": res,
        "grid_min_residual": float(grid_res.min()),
    }


def _grid_size(n, res):
    a = int(np.floor(np.pi / 2 / res + 1e-12)) + 1
    p = int(np.ceil(2 * np.pi / res - 1e-12))
    return (a * p) ** (n - 1)


# ------------------------------------------------------------ US composite


def sigma_compose(amps: np.ndarray, n: int) -> np.ndarray:
    """xi -> xi o sigma on absorbed Haar amplitudes (level m -> m+1)."""
    return np.repeat(amps[..., None, :], n, axis=-2).reshape(amps.shape[:-1] + (-1,)) / np.sqrt(n)


def us_apply(n: int, amps: np.ndarray, m: int):
    """(US) on level-m amplitudes; returns (amplitudes, level)."""
    S, T = haar_family(n), NearestNeighbor(n)
    g = sigma_compose(amps, n)
    out = 0
    lvl_out = m + 1
    for j in range(n):
        a, lvl = S.s_star_amplitudes(j, g, m + 1)
        if lvl < T.min_level:
            a, lvl = embed_amplitudes(a, S.measure, T.min_level - lvl), T.min_level
        out = out + T.s_amplitudes(j, a, lvl)
        lvl_out = lvl + 1
    return out, lvl_out


def us_matrix(n: int, m: int) -> np.ndarray:
    """Matrix of US from level m to level m+1 (m >= 1)."""
    if m < 1:
        raise ValueError("us_matrix needs m >= 1")
    check_budget(n, m + 1)
    amps, _ = us_apply(n, np.eye(n**m, dtype=complex), m)
    return amps.T


def character_basis(n: int, level: int) -> np.ndarray:
    """Columns are the absorbed character vectors e_lambda, ordered by word index."""
    check_budget(n, level)
    return np.array([character_vector(w, level, n).amplitudes for w in all_words(level, n)]).T


def fourier_recursion_matrix(n: int, m: int) -> np.ndarray:
    """Closed-form coefficient map of (US)^2 from level m to level m+2.

    Output coefficient at lambda = (l_0, ..., l_(m+1)) equals
    n^-1 conj<l_0, l_1> times the input coefficient at (l_2 - l_0, l_3, ..., l_(m+1)).
    """
    out_words = all_words(m + 2, n)
    R = np.zeros((n ** (m + 2), n**m), dtype=complex)
    for a, lam in enumerate(out_words):
        src = np.concatenate([[(lam[2] - lam[0]) % n], lam[3:]])
        phase = np.exp(-2j * np.pi * ((lam[0] * lam[1]) % n) / n)
        R[a, word_index(src, n)] = phase / n
    return R


def fourier_recursion_check(n: int, m: int) -> float:
    """Max entrywise defect between (US)^2 in the character basis and the closed form."""
    if m < 1:
        raise ValueError("fourier_recursion_check needs m >= 1")
    M = us_matrix(n, m + 1) @ us_matrix(n, m)
    C = character_basis(n, m + 2).conj().T @ M @ character_basis(n, m)
    return float(np.abs(C - fourier_recursion_matrix(n, m)).max())


def matrix_element_decay(xi: CylinderVector, M: int, probes=None) -> dict:
    """Table of max |<e_lambda, (US)^(2m) xi>| over probe characters, m = 0..M.

    ``probes`` is a list of words; each is padded with zeros (or the vector
    embedded) to a common level.  ``None`` probes every character.
    """
    n = xi.n
    if not xi.measure.is_haar:
        raise ValueError("matrix_element_decay needs the Haar measure")
    amps, lvl = xi.amplitudes, xi.level
    if lvl < 1:
        amps, lvl = embed_amplitudes(amps, xi.measure, 1 - lvl), 1
    check_budget(n, lvl + 2 * M, "vector")
    norm = xi.norm()
    values, bounds = [], []
    for m in range(M + 1):
        v = CylinderVector(amps, xi.measure)
        if probes is None:
            values.append(float(np.abs(fourier_forward(v)).max()))
        else:
            values.append(max(_probe(v, w) for w in probes))
        bounds.append(norm * float(n) ** -m)
        for _ in range(2):
            amps, lvl = us_apply(n, amps, lvl)
    values, bounds = np.array(values), np.array(bounds)
    return {
        "depths": list(range(M + 1)),
        "values": values,
        "bounds": bounds,
        "ok": bool(np.all(values <= bounds + 1e-10)),
    }


def _probe(v: CylinderVector, word) -> float:
    w = np.asarray(getattr(word, "digits", word), dtype=np.int64)
    if w.size > v.level:
        amps = embed_amplitudes(v.amplitudes, v.measure, w.size - v.level)
        v = CylinderVector(amps, v.measure)
    lam = np.zeros(v.level, dtype=np.int64)
    lam[: w.size] = w
    e = character_vector(lam, v.level, v.n)
    return float(abs(np.vdot(e.amplitudes, v.amplitudes)))


# --------------------------------------------------------------------- Wold


@dataclass
class LevelIsometry:
    """A map apply(amps, level) -> amplitudes at level + raise_by.

    The adjoint is assumed to map level L + raise_by back into level L,
    which holds for all maps built from the Cuntz families.
    """

    apply: object
    n: int
    measure: MeasureSpec
    raise_by: int = 1
    min_level: int = 0
    name: str = "T"

    def matrix(self, level: int) -> np.ndarray:
        check_budget(self.n, level + self.raise_by)
        eye = np.eye(self.n**level, dtype=complex)
        return np.asarray(self.apply(eye, level)).T


def us_isometry(n: int) -> LevelIsometry:
    return LevelIsometry(lambda a, m: us_apply(n, a, m)[0], n, MeasureSpec.haar(n), 1, 1, "US")


def sigma_isometry(n: int) -> LevelIsometry:
    return LevelIsometry(lambda a, m: sigma_compose(a, n), n, MeasureSpec.haar(n), 1, 0, "S")


@dataclass
class WoldReport:
    level: int
    depths: list
    unitary_rank: list
    kernel_codim: dict
    decay: list = None
    cutoff: float = 1e-9
    isometry_defect: float = 0.0

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "depths": self.depths,
            "unitary_rank": self.unitary_rank,
            "kernel_codim": {str(k): v for k, v in self.kernel_codim.items()},
            "decay": self.decay,
            "cutoff": self.cutoff,
            "isometry_defect": self.isometry_defect,
        }


def wold_decompose(T: LevelIsometry, K: int, m: int, cutoff: float = 1e-9, xi=None, tol: float = 1e-10) -> WoldReport:
    """Probe the Wold decomposition of T on the level-m subspace E_m.

    The unitary-part rank at depth k is the number of singular values of
    T^*k restricted to E_m that are at least 1 - cutoff: those directions lie
    in the range of T^k.  E_m is embedded to a level deep enough for k
    adjoint steps.  The kernel codimension at level l is n^l - rank(T: l - r -> l).
    """
    if T.raise_by not in (0, 1):
        raise ValueError("raise_by must be 0 or 1")
    r = T.raise_by
    top = max(m, T.min_level + r * K)
    levels = range(top - K, top) if r else [top]
    mats = {lvl: T.matrix(lvl) for lvl in levels}
    defect = max(float(np.abs(M.conj().T @ M - np.eye(M.shape[1])).max()) for M in mats.values())
    if defect > tol:
        raise ValueError(f"input is not isometric (defect {defect:.3g})")
    E = np.eye(T.n**m, dtype=complex)
    if top > m:
        E = embed_amplitudes(E, T.measure, top - m).T
    cur, lvl = E, top
    ranks = []
    for _ in range(K):
        src = lvl - r
        cur = mats[src if r else top].conj().T @ cur
        lvl = src
        s = np.linalg.svd(cur, compute_uv=False)
        ranks.append(int(np.sum(s >= 1 - cutoff)))
    codim = {}
    if r:
        for lvl, M in mats.items():
            codim[lvl + 1] = T.n ** (lvl + 1) - int(np.linalg.matrix_rank(M, tol=cutoff))
    decay = None
    if xi is not None:
        decay, amps, lv = [], xi.amplitudes, xi.level
        for k in range(K + 1):
            decay.append(float(np.abs(fourier_forward(CylinderVector(amps, T.measure))).max()))
            amps = T.apply(amps, lv)
            lv += r
    return WoldReport(m, list(range(1, K + 1)), ranks, codim, decay, cutoff, defect)


# ------------------------------------------------------------ series checks


def increment_partial_sums(family, horizons=DEFAULT_HORIZONS) -> np.ndarray:
    """Partial sums of sum_k |h_k - h_(k+1)| at each horizon (number of terms)."""
    H = horizons[-1]
    v = family.vectors(0, H + 1)
    c = np.cumsum(np.linalg.norm(v[:-1] - v[1:], axis=1))
    return c[np.asarray(horizons) - 1]


def angle_partial_sums(family, horizons=DEFAULT_HORIZONS) -> np.ndarray:
    """Partial sums of sum_k angle(h_k, limit)^2 at each horizon."""
    if family.limit is None:
        raise ValueError("family has no declared limit")
    H = horizons[-1]
    v = family.vectors(0, H)
    c = np.cumsum(line_angle(v, np.tile(family.limit, (H, 1))) ** 2)
    return c[np.asarray(horizons) - 1]


def harmonic_number(Q: int) -> float:
    return float(np.sum(1.0 / np.arange(1, Q + 1)))


def harmonic_crossing(threshold: float) -> tuple:
    """Smallest Q with H_Q > threshold and the term count Q (Q + 1) / 2 of that block end."""
    total, q = 0.0, 0
    while total <= threshold:
        q += 1
        total += 1.0 / q
    return q, q * (q + 1) // 2


def gauge_summability(U, count: int) -> dict:
    """Partial sums of |U_p - I|, |U_p - I|^2 and |(U_p - I) e_0|^2 over p < count."""
    return U.summability(count)
