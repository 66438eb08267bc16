"""Numerical verdicts on nonnegative series, and stable overlap helpers.

A finite computation cannot decide convergence.  The rule used here is
explicit and is stored in every verdict:

* ``converges`` when the terms of the last block are all below ``zero_tol``,
  or when the block sums between consecutive horizons, normalised per unit of
  log-width, contract by at least the safety factor 2 over the last two
  blocks (so the tail is dominated by a geometric series of block sums);
* ``diverges`` when the normalised block sums do not contract (last/previous
  ratio at least ``stall_ratio``, as for the harmonic series), or when the
  partial sum exceeds ``divergence_threshold``;
* ``undetermined`` otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_HORIZONS = (10, 100, 1000, 10000, 100000)


@dataclass(frozen=True)
class SeriesVerdict:
    verdict: str
    horizons: tuple
    partial_sums: tuple
    rule: str
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "horizons": list(self.horizons),
            "partial_sums": list(self.partial_sums),
            "rule": self.rule,
            "details": dict(self.details),
        }


def classify_series(
    terms,
    horizons=DEFAULT_HORIZONS,
    zero_tol: float = 1e-14,
    safety: float = 2.0,
    stall_ratio: float = 0.9,
    divergence_threshold: float = 1e6,
) -> SeriesVerdict:
    """Apply the block-sum comparison rule to the first max(horizons) terms."""
    terms = np.asarray(terms, dtype=float)
    horizons = tuple(int(h) for h in horizons)
    if any(h <= 0 for h in horizons) or list(horizons) != sorted(set(horizons)):
        raise ValueError("horizons must be positive and strictly increasing")
    if terms.size < horizons[-1]:
        raise ValueError(f"need {horizons[-1]} terms, got {terms.size}")
    if np.any(terms < 0):
        raise ValueError("series terms must be nonnegative")
    csum = np.cumsum(terms[: horizons[-1]])
    partial = tuple(float(csum[h - 1]) for h in horizons)

    def result(verdict, rule, **details):
        return SeriesVerdict(verdict, horizons, partial, rule, details)

    if partial[-1] > divergence_threshold:
        return result("diverges", f"partial sum exceeds {divergence_threshold:g}")
    if len(horizons) < 2:
        return result("undetermined", "need at least two horizons")
    last = terms[horizons[-2] : horizons[-1]]
    if last.max() <= zero_tol:
        return result("converges", f"terms of the last block are below {zero_tol:g}")
    if len(horizons) < 3:
        return result("undetermined", "need at least three horizons for a block comparison")
    blocks = []
    for a, b in zip(horizons[-3:-1], horizons[-2:]):
        s = float(csum[b - 1] - csum[a - 1])
        blocks.append(s / np.log(b / a))
    prev, cur = blocks
    ratio = cur / prev if prev > 0 else np.inf
    if ratio <= 1.0 / safety:
        tail = (partial[-1] - partial[-2]) * ratio / (1.0 - ratio)
        return result(
            "converges",
            f"log-normalised block sums contract by at least {safety:g}",
            block_ratio=float(ratio),
            tail_estimate=float(tail),
        )
    if ratio >= stall_ratio:
        return result(
            "diverges",
            f"log-normalised block sums do not contract (ratio >= {stall_ratio:g})",
            block_ratio=float(ratio),
        )
    return result("undetermined", "block ratio between thresholds", block_ratio=float(ratio))


def infidelity(a, b) -> np.ndarray:
    """1 - |<a, b>|^2 for unit vectors, rowwise, via the Lagrange identity.

    Accurate even when the vectors are nearly parallel, where the naive
    formula cancels catastrophically.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    na = np.sum(np.abs(a) ** 2, axis=-1)
    nb = np.sum(np.abs(b) ** 2, axis=-1)
    wedge = a[:, :, None] * b[:, None, :] - a[:, None, :] * b[:, :, None]
    val = 0.5 * np.sum(np.abs(wedge) ** 2, axis=(-2, -1)) / (na * nb)
    return np.clip(val, 0.0, 1.0)


def overlap_modulus(a, b) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    return np.abs(np.sum(np.conj(a) * b, axis=-1))


def one_minus_overlap(a, b) -> np.ndarray:
    """1 - |<a, b>| for unit vectors, rowwise, without cancellation."""
    return infidelity(a, b) / (1.0 + overlap_modulus(a, b))


def line_angle(a, b) -> np.ndarray:
    """Angle in [0, pi/2] between the lines spanned by unit vectors a and b."""
    return np.arctan2(np.sqrt(infidelity(a, b)), overlap_modulus(a, b))
