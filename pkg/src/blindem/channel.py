"""Frequency-selective FIR channel with a global phase rotation and AWGN."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import RngStream, sample_cgn


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Ground-truth channel: FIR taps, one unknown phase, noise variance.

    The phase multiplies the whole impulse response (frame-wise
    constant), which is what makes the blind estimate ambiguous.
    """

    taps: np.ndarray
    phase: float = 0.0
    noise_variance: float = 0.0

    def __post_init__(self) -> None:
        taps = np.atleast_1d(np.asarray(self.taps, dtype=complex))
        if taps.size == 0:
            raise ValueError("channel needs at least one tap")
        if self.noise_variance < 0:
            raise ValueError(f"noise variance must be nonnegative, got {self.noise_variance}")
        object.__setattr__(self, "taps", taps)

    @property
    def length(self) -> int:
        return self.taps.size


def apply_channel(x: np.ndarray, spec: ChannelSpec, rng: RngStream) -> np.ndarray:
    """Convolve with the rotated taps (zero initial state) and add noise.

    The first length-1 output samples of the frame carry the start-up
    transient; the leading cyclic prefix absorbs it as long as the
    prefix covers the channel memory.
    """
    x = np.asarray(x)
    rotated = spec.taps * np.exp(1j * spec.phase)
    y = np.convolve(x, rotated)[: x.size]
    return y + sample_cgn(x.size, spec.noise_variance, rng)


def freq_response(spec: ChannelSpec, num_bins: int) -> np.ndarray:
    """Frequency response at num_bins uniformly spaced frequencies.

    Plain (unscaled) transform of the taps, so bin 0 is the tap sum;
    the phase rotation multiplies every bin.
    """
    if num_bins < spec.length:
        raise ValueError(f"need at least {spec.length} bins, got {num_bins}")
    return np.fft.fft(spec.taps, n=num_bins) * np.exp(1j * spec.phase)


def snr_to_noise_variance(snr_db: float) -> float:
    """Noise variance for unit-power PSK at the given SNR in dB."""
    return 10.0 ** (-snr_db / 10.0)
