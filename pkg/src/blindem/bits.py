"""Seeded bit interleaving and PSK soft mapping.

Converts between the bit-probability domain used by the decoder and the
symbol-probability domain used by the channel estimator.  The PSK
constellation is the unit circle with Gray bit labels; for QPSK that is
1 -> 00, j -> 01, -1 -> 11, -j -> 10.
"""

from __future__ import annotations

import numpy as np

from .fec import PROB_FLOOR, clamp_probs
from .numerics import RngStream

_SUM_TOL = 1e-6


class Constellation:
    """Unit-circle PSK points with Gray bit labels.

    Point i sits at angle 2*pi*i/order and carries the Gray label
    ``i ^ (i >> 1)`` written MSB-first over log2(order) bits, which is a
    bijection between bit groups and points.
    """

    def __init__(self, order: int = 4):
        if order < 2 or order & (order - 1):
            raise ValueError(f"constellation order must be a power of two >= 2, got {order}")
        self.order = order
        self.bits_per_symbol = order.bit_length() - 1
        idx = np.arange(order)
        self.points = np.exp(2j * np.pi * idx / order)
        gray = idx ^ (idx >> 1)
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
        self.labels = (gray[:, None] >> shifts[None, :]) & 1
        self.index_of_label = np.empty(order, dtype=np.int64)
        self.index_of_label[gray] = idx

    def __repr__(self) -> str:  # pragma: no cover
        return f"Constellation(order={self.order})"


class Interleaver:
    """Bijection on sequence positions, reproducible from a seed.

    ``forward[i]`` is the input position that lands at output position i.
    """

    def __init__(self, permutation: np.ndarray, seed: int | None = None):
        perm = np.asarray(permutation, dtype=np.int64)
        if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ValueError("permutation must contain each index exactly once")
        self.forward = perm
        self.inverse = np.argsort(perm)
        self.length = perm.size
        self.seed = seed

    @classmethod
    def from_seed(cls, seed: int, length: int) -> "Interleaver":
        """Fisher-Yates shuffle of positions, drawn from a Philox stream."""
        return cls(RngStream(seed).permutation(length), seed=seed)

    @classmethod
    def identity(cls, length: int) -> "Interleaver":
        return cls(np.arange(length))


def interleave(seq: np.ndarray, il: Interleaver) -> np.ndarray:
    seq = np.asarray(seq)
    if seq.shape[0] != il.length:
        raise ValueError(f"sequence length {seq.shape[0]} != interleaver length {il.length}")
    return seq[il.forward]


def deinterleave(seq: np.ndarray, il: Interleaver) -> np.ndarray:
    seq = np.asarray(seq)
    if seq.shape[0] != il.length:
        raise ValueError(f"sequence length {seq.shape[0]} != interleaver length {il.length}")
    return seq[il.inverse]


def map_hard(bits, constellation: Constellation) -> np.ndarray:
    """Map bit groups to constellation points per the Gray labeling."""
    bits = np.asarray(bits, dtype=np.int64)
    bps = constellation.bits_per_symbol
    if bits.size % bps:
        raise ValueError(f"bit count {bits.size} not divisible by {bps}")
    groups = bits.reshape(-1, bps)
    weights = 1 << np.arange(bps - 1, -1, -1)
    values = groups @ weights
    return constellation.points[constellation.index_of_label[values]]


def demap_soft(symbol_probs: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Marginalize symbol probabilities to per-bit probabilities of 1.

    Input is (..., order) with each slice summing to 1; output is
    (..., bits_per_symbol), clamped away from 0 and 1.
    """
    p = np.asarray(symbol_probs, dtype=float)
    if p.shape[-1] != constellation.order:
        raise ValueError(f"last axis must have length {constellation.order}, got {p.shape[-1]}")
    sums = p.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > _SUM_TOL):
        raise ValueError("symbol probability slices must each sum to 1")
    return clamp_probs(p @ constellation.labels.astype(float))


def map_soft(bit_probs: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Combine per-bit probabilities into symbol probabilities.

    Bits are treated as independent: the mass of point i is the product
    of its label bits' probabilities, renormalized over the slice.
    """
    p = clamp_probs(np.asarray(bit_probs, dtype=float))
    bps = constellation.bits_per_symbol
    if p.shape[-1] != bps:
        raise ValueError(f"last axis must have length {bps}, got {p.shape[-1]}")
    label_is_one = constellation.labels.astype(bool)
    expanded = p[..., None, :]
    per_bit = np.where(label_is_one, expanded, 1.0 - expanded)
    raw = per_bit.prod(axis=-1)
    out = np.maximum(raw / raw.sum(axis=-1, keepdims=True), PROB_FLOOR)
    out /= out.sum(axis=-1, keepdims=True)
    return np.maximum(out, PROB_FLOOR)
