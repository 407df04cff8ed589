"""Decoder-aided detection of the PSK phase ambiguity.

A blind estimator can converge to the true channel rotated by any
multiple of 2*pi/C, because the constellation maps onto itself under
those rotations.  The decoder breaks the tie: each of the C circularly
shifted symbol-probability candidates is demapped and decoded, the
frame log evidence ranks them, and the winning shift gives the phase
correction.  The correction is only applied when the winner's evidence
exceeds the runner-up by a confidence margin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fec
from .bits import Constellation, Interleaver, deinterleave, demap_soft
from .ofdm import FrameConfig, prob_tensor_to_symbol_major

# winner must be at least 10^3 times more likely than the runner-up
CONFIDENCE_GAP = float(np.log(1e3))


@dataclass(frozen=True)
class PhaseCandidate:
    """One shift hypothesis with its decode outputs."""

    shift: int
    log_evidence: float
    coded_posteriors: np.ndarray
    info_posteriors: np.ndarray


@dataclass(frozen=True)
class DetectionOutcome:
    """Selected shift and whether it clears the confidence margin."""

    shift: int
    phase: float
    confident: bool
    evidence_gap: float
    candidates: tuple[PhaseCandidate, ...]


def shift_candidates(ext: np.ndarray, order: int) -> list[np.ndarray]:
    """Re-index each probability slice by l positions, one candidate per l.

    Candidate l assigns the mass of point i to point (i + l) mod order;
    l = 0 is the identity.
    """
    return [np.roll(ext, l, axis=-1) for l in range(order)]


def select_shift(log_evidences: np.ndarray) -> tuple[int, float, bool]:
    """Argmax with smallest-index tie-break and the confidence-gap rule."""
    ev = np.asarray(log_evidences, dtype=float)
    best = int(np.argmax(ev))
    others = np.delete(ev, best)
    gap = float(ev[best] - others.max()) if others.size else float("inf")
    return best, gap, gap >= CONFIDENCE_GAP


def detect_phase(
    ext: np.ndarray,
    cfg: FrameConfig,
    code: fec.CodeSpec,
    il: Interleaver,
) -> DetectionOutcome:
    """Decode every shifted candidate and pick the most likely phase.

    `ext` is the demodulator's extrinsic symbol-probability tensor at
    the end of initialization.  All candidates decode from the same
    deinterleaved likelihood layout, batched through one decoder pass;
    the result is identical to decoding them one at a time.
    """
    order = cfg.mod_order
    constellation = Constellation(order)
    coded_probs = np.empty((order, cfg.coded_len))
    for shift, candidate in enumerate(shift_candidates(ext, order)):
        bit_probs = demap_soft(prob_tensor_to_symbol_major(candidate), constellation)
        coded_probs[shift] = deinterleave(bit_probs.reshape(-1), il)
    coded_probs = fec.clamp_probs(coded_probs)
    ll = np.stack([np.log1p(-coded_probs), np.log(coded_probs)], axis=-1)
    results = fec.bcjr_decode_batch(ll, None, code)

    evidences = np.array([r.log_evidence for r in results])
    shift, gap, confident = select_shift(evidences)
    candidates = tuple(
        PhaseCandidate(
            shift=l,
            log_evidence=r.log_evidence,
            coded_posteriors=r.coded_posteriors,
            info_posteriors=r.info_posteriors,
        )
        for l, r in enumerate(results)
    )
    return DetectionOutcome(
        shift=shift,
        phase=2.0 * np.pi * shift / order,
        confident=confident,
        evidence_gap=gap,
        candidates=candidates,
    )


def apply_phase(estimate: np.ndarray, outcome: DetectionOutcome) -> np.ndarray:
    """Back-rotate the estimate by the detected phase if confident."""
    if not outcome.confident:
        return estimate
    return estimate * np.exp(-1j * outcome.phase)
