"""Blind EM channel estimation for PSK-modulated OFDM.

Link-level simulation library with a decoder-aided phase-ambiguity
detector, plus a Monte Carlo CLI that reports channel-estimate MSE and
failure-rate statistics.
"""

from .bits import Constellation, Interleaver
from .channel import ChannelSpec, freq_response, snr_to_noise_variance
from .fec import (
    CodeSpec,
    DecodeResult,
    bcjr_decode,
    conv_encode,
    extrinsic_divide,
    extrinsic_from_log_odds,
)
from .harness import (
    MetricsTable,
    RunRecord,
    SimConfig,
    dump_constellation,
    monte_carlo,
    replay_run,
    write_results_csv,
    write_summary_json,
)
from .numerics import RngStream, derive_seed
from .ofdm import FrameConfig, ofdm_demodulate, ofdm_modulate
from .phase_detect import DetectionOutcome, apply_phase, detect_phase, shift_candidates
from .receiver import IterationTrace, ReceiverMode, compute_mse, run_receiver, turbo_round

__version__ = "0.1.0"

__all__ = [
    "ChannelSpec",
    "CodeSpec",
    "Constellation",
    "DecodeResult",
    "DetectionOutcome",
    "FrameConfig",
    "Interleaver",
    "IterationTrace",
    "MetricsTable",
    "ReceiverMode",
    "RngStream",
    "RunRecord",
    "SimConfig",
    "apply_phase",
    "bcjr_decode",
    "compute_mse",
    "conv_encode",
    "derive_seed",
    "detect_phase",
    "dump_constellation",
    "extrinsic_divide",
    "extrinsic_from_log_odds",
    "freq_response",
    "monte_carlo",
    "ofdm_demodulate",
    "ofdm_modulate",
    "replay_run",
    "run_receiver",
    "shift_candidates",
    "snr_to_noise_variance",
    "turbo_round",
    "write_results_csv",
    "write_summary_json",
]
