"""Receiver orchestration over the initialization and turbo schedule.

Three modes share the same 20-iteration blind initialization:

* conventional: pure EM with uniform priors for the whole run;
* code-aided: after initialization, decoder feedback refreshes the
  symbol priors every `em_per_turbo` EM iterations;
* phase-aware: code-aided plus a one-shot phase-ambiguity detection and
  correction right after initialization.

Every EM iteration is recorded in an IterationTrace for the metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import em, fec, phase_detect
from .bits import Constellation, Interleaver, deinterleave, demap_soft, interleave, map_soft
from .channel import ChannelSpec, freq_response
from .ofdm import (
    FrameConfig,
    ofdm_demodulate,
    prob_tensor_to_symbol_major,
    symbol_major_to_prob_tensor,
)


class ReceiverMode(Enum):
    CONVENTIONAL = "conventional"
    CODE_AIDED = "code-aided"
    PHASE_AWARE = "phase-aware"


@dataclass
class IterationRecord:
    """Snapshot after one EM iteration (1-based index)."""

    index: int
    estimate: np.ndarray
    mse: float
    phase_corrected: bool = False
    turbo_feedback: bool = False


@dataclass
class IterationTrace:
    """Per-iteration history of one receiver run."""

    records: list[IterationRecord] = field(default_factory=list)
    detection: phase_detect.DetectionOutcome | None = None

    @property
    def mse_per_iteration(self) -> np.ndarray:
        return np.array([r.mse for r in self.records])

    @property
    def final_estimate(self) -> np.ndarray:
        return self.records[-1].estimate

    @property
    def final_mse(self) -> float:
        return self.records[-1].mse


def compute_mse(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Mean squared deviation between two frequency responses."""
    estimate = np.asarray(estimate)
    truth = np.asarray(truth)
    if estimate.shape != truth.shape:
        raise ValueError(f"shape mismatch: {estimate.shape} vs {truth.shape}")
    return float(np.mean(np.abs(estimate - truth) ** 2))


def demod_extrinsic(posteriors: np.ndarray, priors: np.ndarray) -> np.ndarray:
    """Extrinsic symbol information: posterior over prior, renormalized."""
    if posteriors.shape != priors.shape:
        raise ValueError(f"shape mismatch: {posteriors.shape} vs {priors.shape}")
    ratio = posteriors / np.maximum(priors, fec.PROB_FLOOR)
    ratio = np.maximum(ratio, fec.PROB_FLOOR)
    return ratio / ratio.sum(axis=-1, keepdims=True)


def turbo_round(
    received: np.ndarray,
    estimate: np.ndarray,
    priors: np.ndarray,
    cfg: FrameConfig,
    il: Interleaver,
    noise_variance: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One pass of decoder feedback.

    Demodulator extrinsics are demapped to bit likelihoods, decoded, and
    the decoder's own extrinsic information is mapped back into a fresh
    symbol prior tensor.  Returns (new priors, coded-bit posteriors).
    """
    constellation = Constellation(cfg.mod_order)
    posteriors = em.e_step(received, estimate, priors, noise_variance)
    ext = demod_extrinsic(posteriors, priors)
    bit_ext = demap_soft(prob_tensor_to_symbol_major(ext), constellation).reshape(-1)
    coded_in = deinterleave(bit_ext, il)
    decoded = fec.bcjr_decode(coded_in, None, cfg.code)
    # divide in the log-odds domain: confident decoder output must not
    # cancel against an equally confident input at the clamp boundary
    coded_out = fec.extrinsic_from_log_odds(decoded.coded_log_odds, coded_in)
    interleaved = interleave(coded_out, il)
    symbol_priors = map_soft(
        interleaved.reshape(-1, constellation.bits_per_symbol), constellation
    )
    new_priors = symbol_major_to_prob_tensor(symbol_priors, cfg)
    return new_priors, decoded.coded_posteriors


def run_receiver(
    samples: np.ndarray,
    truth: ChannelSpec,
    mode: ReceiverMode,
    cfg: FrameConfig,
    il: Interleaver,
) -> IterationTrace:
    """Demodulate one frame and run the selected receiver schedule.

    The noise variance is taken from `truth` (treated as known); the
    true frequency response is used only to score each iteration.
    In phase-aware mode the record at the last initialization iteration
    reflects the applied correction, which is where the failure-rate
    curves drop.
    """
    received = ofdm_demodulate(samples, cfg)
    truth_response = freq_response(truth, cfg.num_subcarriers)
    noise_variance = truth.noise_variance
    trace = IterationTrace()

    def recorder(turbo_feedback_first: bool = False):
        def record(_iter_idx: int, estimate: np.ndarray) -> None:
            trace.records.append(
                IterationRecord(
                    index=len(trace.records) + 1,
                    estimate=estimate,
                    mse=compute_mse(estimate, truth_response),
                    turbo_feedback=turbo_feedback_first and not record.seen,
                )
            )
            record.seen = True

        record.seen = False
        return record

    priors = em.uniform_priors(cfg.num_subcarriers, cfg.num_symbols, cfg.mod_order)
    estimate = em.init_estimate(received)
    estimate, posteriors = em.em_run(
        received,
        estimate,
        priors,
        noise_variance,
        cfg.init_iters,
        cfg.channel_len,
        recorder(),
        stop_rel_change=cfg.em_stop_rel_change,
    )

    if mode is ReceiverMode.PHASE_AWARE:
        ext = demod_extrinsic(posteriors, priors)
        outcome = phase_detect.detect_phase(ext, cfg, cfg.code, il)
        trace.detection = outcome
        if outcome.confident:
            estimate = phase_detect.apply_phase(estimate, outcome)
            trace.records[-1] = IterationRecord(
                index=trace.records[-1].index,
                estimate=estimate,
                mse=compute_mse(estimate, truth_response),
                phase_corrected=True,
            )

    if mode is ReceiverMode.CONVENTIONAL:
        estimate, _ = em.em_run(
            received,
            estimate,
            priors,
            noise_variance,
            cfg.em_per_turbo * cfg.turbo_iters,
            cfg.channel_len,
            recorder(),
            stop_rel_change=cfg.em_stop_rel_change,
        )
    else:
        for _ in range(cfg.turbo_iters):
            priors, _ = turbo_round(received, estimate, priors, cfg, il, noise_variance)
            estimate, _ = em.em_run(
                received,
                estimate,
                priors,
                noise_variance,
                cfg.em_per_turbo,
                cfg.channel_len,
                recorder(turbo_feedback_first=True),
                stop_rel_change=cfg.em_stop_rel_change,
            )
    return trace
