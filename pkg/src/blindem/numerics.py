"""Deterministic complex arithmetic: unitary DFT/IDFT and seeded complex Gaussian sampling.

The DFT convention is unitary (1/sqrt(M) on both directions) so that
energy is preserved and `idft(dft(v)) == v` exactly.  Randomness comes
from a counter-based Philox stream so that every run is reproducible
bit-for-bit from its integer seed on any platform.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """One round of the splitmix64 mixer (public-domain constants)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(*words: int) -> int:
    """Fold integer words into a single 64-bit seed, order-sensitively.

    Used to derive independent child streams, e.g. one per Monte Carlo
    run from (master seed, snr index, run index).
    """
    state = 0x6A09E667F3BCC908
    for w in words:
        state = _splitmix64(state ^ (int(w) & _MASK64))
    return state


class RngStream:
    """Counter-based (Philox) random stream.

    The same seed produces the same sample sequence on every platform.
    Streams are not shared across concurrent tasks; derive a child per
    task with :meth:`child`.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def child(self, *indices: int) -> "RngStream":
        """Independent stream derived from this stream's seed and indices."""
        return RngStream(derive_seed(self.seed, *indices))

    def bits(self, count: int) -> np.ndarray:
        return self._gen.integers(0, 2, size=count, dtype=np.int64)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return float(self._gen.uniform(low, high))

    def standard_normal(self, size) -> np.ndarray:
        return self._gen.standard_normal(size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.seed})"


def _check_transform_length(m: int) -> None:
    if m <= 0 or (m & (m - 1)) != 0:
        raise ValueError(f"transform length must be a positive power of two, got {m}")


def dft(v: np.ndarray, axis: int = 0) -> np.ndarray:
    """Unitary DFT along `axis`.  Length must be a power of two."""
    v = np.asarray(v)
    m = v.shape[axis]
    _check_transform_length(m)
    return np.fft.fft(v, axis=axis) / np.sqrt(m)


def idft(v: np.ndarray, axis: int = 0) -> np.ndarray:
    """Unitary inverse DFT; exact inverse of :func:`dft`."""
    v = np.asarray(v)
    m = v.shape[axis]
    _check_transform_length(m)
    return np.fft.ifft(v, axis=axis) * np.sqrt(m)


def sample_cgn(count: int, variance: float, rng: RngStream) -> np.ndarray:
    """Circularly symmetric complex Gaussian samples.

    Total variance per sample is `variance` (variance/2 per real and
    imaginary component).
    """
    if variance < 0:
        raise ValueError(f"noise variance must be nonnegative, got {variance}")
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal(count)
    im = rng.standard_normal(count)
    return scale * (re + 1j * im)
