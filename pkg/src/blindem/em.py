"""Per-subcarrier EM channel estimator.

The received grid decouples across subcarriers: each row m obeys
Y[m, n] = H[m] * X[m, n] + noise with the symbols hidden.  The E-step
computes symbol posteriors under the current estimate, the M-step is a
posterior-weighted least-squares update of H, and an optional
refinement projects the estimate onto responses of impulse length L by
zeroing the later time-domain samples.

Channel estimates are plain length-M complex vectors throughout.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .fec import PROB_FLOOR
from .numerics import dft, idft


def constellation_points(order: int) -> np.ndarray:
    """Unit-circle PSK points s_i = exp(2j*pi*i/order)."""
    return np.exp(2j * np.pi * np.arange(order) / order)


def uniform_priors(num_subcarriers: int, num_symbols: int, order: int) -> np.ndarray:
    return np.full((num_subcarriers, num_symbols, order), 1.0 / order)


def init_estimate(received: np.ndarray) -> np.ndarray:
    """Hard-decision initial estimate from the received grid alone.

    Each entry is sliced to +-1 or +-j by its dominant component, and
    the estimate is the per-row least-squares fit against those slices
    (their modulus is 1, so the normalizer is just the symbol count).
    """
    re = received.real
    im = received.imag
    sign_re = np.where(re >= 0, 1.0, -1.0)
    sign_im = np.where(im >= 0, 1.0, -1.0)
    hard = np.where(np.abs(re) >= np.abs(im), sign_re + 0j, 1j * sign_im)
    return (received * np.conj(hard)).mean(axis=1)


def e_step(
    received: np.ndarray,
    estimate: np.ndarray,
    priors: np.ndarray,
    noise_variance: float,
) -> np.ndarray:
    """Symbol posteriors given the current channel estimate.

    Computed in the log domain per (m, n) slice; output slices sum to 1
    with every entry at least the probability floor.
    """
    if noise_variance <= 0:
        raise ValueError(f"noise variance must be positive, got {noise_variance}")
    order = priors.shape[-1]
    points = constellation_points(order)
    delta = received[:, :, None] - estimate[:, None, None] * points[None, None, :]
    with np.errstate(divide="ignore"):
        logw = np.log(priors) - (delta.real**2 + delta.imag**2) / noise_variance
    logw -= logw.max(axis=-1, keepdims=True)
    w = np.exp(logw)
    w = np.maximum(w, PROB_FLOOR)
    w /= w.sum(axis=-1, keepdims=True)
    return np.maximum(w, PROB_FLOOR)


def m_step(received: np.ndarray, posteriors: np.ndarray) -> np.ndarray:
    """Weighted least-squares channel update from symbol posteriors.

    For unit-modulus PSK the denominator collapses to the symbol count,
    leaving the mean of Y times the conjugate posterior-mean symbol.
    """
    points = constellation_points(posteriors.shape[-1])
    soft_symbols = posteriors @ points
    return (received * np.conj(soft_symbols)).mean(axis=1)


def refine(estimate: np.ndarray, channel_len: int) -> np.ndarray:
    """Project the estimate onto frequency responses of L-tap channels.

    Transform to the time domain, zero every sample at index >= L,
    transform back.  Idempotent, and energy-nonexpansive because the
    transforms are unitary.
    """
    if not 1 <= channel_len <= estimate.size:
        raise ValueError(f"channel length {channel_len} outside [1, {estimate.size}]")
    impulse = idft(estimate)
    impulse[channel_len:] = 0.0
    return dft(impulse)


def em_run(
    received: np.ndarray,
    initial: np.ndarray,
    priors: np.ndarray,
    noise_variance: float,
    iters: int,
    channel_len: int | None = None,
    on_iteration: Callable[[int, np.ndarray], None] | None = None,
    stop_rel_change: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Iterate e_step -> m_step -> refine and return the final state.

    `channel_len` of None disables the refinement projection (used by
    the monotonicity tests).  Returns the final estimate and the symbol
    posteriors evaluated at it, so `iters=0` just scores `initial`.
    Iteration counts are fixed by default; `stop_rel_change` optionally
    ends the loop once the estimate moves less than that relative
    amount in one iteration.
    """
    if iters < 0:
        raise ValueError(f"iteration count must be nonnegative, got {iters}")
    estimate = np.asarray(initial, dtype=complex)
    for p in range(iters):
        posteriors = e_step(received, estimate, priors, noise_variance)
        updated = m_step(received, posteriors)
        if channel_len is not None:
            updated = refine(updated, channel_len)
        if on_iteration is not None:
            on_iteration(p, updated)
        converged = (
            stop_rel_change is not None
            and np.linalg.norm(estimate) > 0
            and np.linalg.norm(updated - estimate)
            < stop_rel_change * np.linalg.norm(estimate)
        )
        estimate = updated
        if converged:
            break
    return estimate, e_step(received, estimate, priors, noise_variance)


def incomplete_log_likelihood(
    received: np.ndarray,
    estimate: np.ndarray,
    priors: np.ndarray,
    noise_variance: float,
) -> float:
    """Log-likelihood of the received grid with symbols marginalized out.

    This is the objective EM ascends; without the refinement projection
    it is non-decreasing across iterations.
    """
    order = priors.shape[-1]
    points = constellation_points(order)
    delta = received[:, :, None] - estimate[:, None, None] * points[None, None, :]
    log_density = -np.log(np.pi * noise_variance) - (delta.real**2 + delta.imag**2) / noise_variance
    with np.errstate(divide="ignore"):
        terms = np.log(priors) + log_density
    peak = terms.max(axis=-1, keepdims=True)
    lse = peak[..., 0] + np.log(np.exp(terms - peak).sum(axis=-1))
    return float(lse.sum())
