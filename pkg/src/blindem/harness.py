"""Monte Carlo driver, metrics, and result serialization.

Every run is reproducible from a child seed derived from the master
seed, the SNR index, and the run index; the child seed is written to
the results CSV so any single run can be replayed.  Aggregation is an
order-independent reduction, so results are byte-identical regardless
of the worker count.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np

from .bits import Constellation, Interleaver, interleave, map_hard
from .channel import ChannelSpec, apply_channel, snr_to_noise_variance
from .fec import conv_encode
from .numerics import RngStream, derive_seed
from .ofdm import FrameConfig, ofdm_demodulate, ofdm_modulate, symbols_to_grid
from .receiver import IterationTrace, ReceiverMode, compute_mse, run_receiver

MSE_FAILURE_THRESHOLD = 0.1

RESULTS_COLUMNS = [
    "run_id",
    "snr_db",
    "mode",
    "iteration",
    "mse",
    "phase_corrected",
    "confident",
    "evidence_gap",
    "detected_l",
    "failed",
    "child_seed",
]


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Everything a Monte Carlo campaign needs, including its seed."""

    frame: FrameConfig = field(default_factory=FrameConfig)
    taps: tuple[complex, ...] = (0.5, 0.7, 0.5)
    snr_db: tuple[float, ...] = (12.0,)
    runs: int = 200
    mode: ReceiverMode = ReceiverMode.PHASE_AWARE
    seed: int = 42
    workers: int = 1

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError(f"runs must be at least 1, got {self.runs}")
        if not self.snr_db:
            raise ValueError("snr list must not be empty")
        if len(self.taps) > self.frame.cp_len + 1:
            raise ValueError(
                f"{len(self.taps)} taps exceed the cyclic prefix budget "
                f"{self.frame.cp_len + 1}"
            )
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")


@dataclass
class TxTruth:
    """Ground truth of one transmitted frame."""

    info_bits: np.ndarray
    coded_bits: np.ndarray
    grid: np.ndarray
    channel: ChannelSpec
    interleaver: Interleaver


@dataclass
class RunRecord:
    """Per-run trace: MSE per iteration plus the detection outcome."""

    run_id: int
    snr_db: float
    mode: str
    child_seed: int
    theta: float
    mse: tuple[float, ...]
    detected_shift: int | None = None
    phase: float | None = None
    evidence_gap: float | None = None
    confident: bool | None = None
    phase_corrected_iteration: int | None = None
    failed: bool = False
    error: str | None = None


@dataclass
class MetricsCell:
    """Aggregate statistics at one (snr, iteration) point."""

    mean_mse: float
    median_mse: float
    p15_mse: float
    p85_mse: float
    failure_rate: float


@dataclass
class MetricsTable:
    """Per-SNR, per-iteration aggregates over the non-errored runs."""

    mode: str
    runs: int
    cells: dict[float, list[MetricsCell]]
    errors: dict[float, int]

    def final_failure_rate(self, snr_db: float) -> float:
        return self.cells[snr_db][-1].failure_rate

    def failure_rate_at(self, snr_db: float, iteration: int) -> float:
        """Failure rate after the given 1-based EM iteration."""
        return self.cells[snr_db][iteration - 1].failure_rate


def child_seed(master_seed: int, snr_index: int, run_index: int) -> int:
    return derive_seed(master_seed, snr_index, run_index)


def run_transmitter(cfg: SimConfig, rng: RngStream, snr_db: float):
    """Generate one frame; returns (samples, truth bundle).

    Draw order from the stream is fixed: info bits, interleaver
    permutation, channel phase.  Channel noise is drawn later by
    `apply_channel` from the same stream.
    """
    frame = cfg.frame
    info = rng.bits(frame.info_len)
    coded = conv_encode(info, frame.code)
    il = Interleaver(rng.permutation(frame.coded_len))
    constellation = Constellation(frame.mod_order)
    grid = symbols_to_grid(map_hard(interleave(coded, il), constellation), frame)
    samples = ofdm_modulate(grid, frame)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    channel = ChannelSpec(
        np.asarray(cfg.taps, dtype=complex), theta, snr_to_noise_variance(snr_db)
    )
    return samples, TxTruth(info, coded, grid, channel, il)


def _simulate_frame(
    cfg: SimConfig, snr_db: float, seed: int, mode: ReceiverMode
) -> tuple[IterationTrace, TxTruth, np.ndarray]:
    rng = RngStream(seed)
    samples, truth = run_transmitter(cfg, rng, snr_db)
    rx = apply_channel(samples, truth.channel, rng)
    trace = run_receiver(rx, truth.channel, mode, cfg.frame, truth.interleaver)
    return trace, truth, rx


def execute_run(cfg: SimConfig, snr_index: int, run_index: int) -> RunRecord:
    """One Monte Carlo run, fully determined by (cfg.seed, indices)."""
    snr_db = cfg.snr_db[snr_index]
    seed = child_seed(cfg.seed, snr_index, run_index)
    try:
        trace, truth, _ = _simulate_frame(cfg, snr_db, seed, cfg.mode)
    except Exception as exc:  # recorded per-run, surfaced in aggregation
        return RunRecord(
            run_id=run_index,
            snr_db=snr_db,
            mode=cfg.mode.value,
            child_seed=seed,
            theta=float("nan"),
            mse=(),
            failed=True,
            error=f"{type(exc).__name__}: {exc}",
        )
    detection = trace.detection
    corrected = next((r.index for r in trace.records if r.phase_corrected), None)
    mse = tuple(float(r.mse) for r in trace.records)
    return RunRecord(
        run_id=run_index,
        snr_db=snr_db,
        mode=cfg.mode.value,
        child_seed=seed,
        theta=truth.channel.phase,
        mse=mse,
        detected_shift=detection.shift if detection else None,
        phase=detection.phase if detection else None,
        evidence_gap=detection.evidence_gap if detection else None,
        confident=detection.confident if detection else None,
        phase_corrected_iteration=corrected,
        failed=mse[-1] > MSE_FAILURE_THRESHOLD,
    )


def monte_carlo(cfg: SimConfig) -> tuple[MetricsTable, list[RunRecord]]:
    """Run the campaign; deterministic given cfg regardless of workers."""
    tasks = [
        (snr_index, run_index)
        for snr_index in range(len(cfg.snr_db))
        for run_index in range(cfg.runs)
    ]
    if cfg.workers == 1:
        records = [execute_run(cfg, si, ri) for si, ri in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(
                pool.map(
                    partial(execute_run, cfg),
                    [t[0] for t in tasks],
                    [t[1] for t in tasks],
                    chunksize=max(1, len(tasks) // (8 * cfg.workers)),
                )
            )
    return build_metrics(records, cfg), records


def build_metrics(records: list[RunRecord], cfg: SimConfig) -> MetricsTable:
    cells: dict[float, list[MetricsCell]] = {}
    errors: dict[float, int] = {}
    for snr_db in cfg.snr_db:
        group = [r for r in records if r.snr_db == snr_db]
        good = [r for r in group if r.error is None]
        errors[snr_db] = len(group) - len(good)
        if not good:
            cells[snr_db] = []
            continue
        mse = np.array([r.mse for r in good])
        p15, p50, p85 = np.percentile(mse, [15.0, 50.0, 85.0], axis=0)
        mean = mse.mean(axis=0)
        fr = (mse > MSE_FAILURE_THRESHOLD).mean(axis=0)
        cells[snr_db] = [
            MetricsCell(
                mean_mse=float(mean[i]),
                median_mse=float(p50[i]),
                p15_mse=float(p15[i]),
                p85_mse=float(p85[i]),
                failure_rate=float(fr[i]),
            )
            for i in range(mse.shape[1])
        ]
    return MetricsTable(
        mode=cfg.mode.value, runs=cfg.runs, cells=cells, errors=errors
    )


def _cell_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_results_csv(records: list[RunRecord], path) -> None:
    """One row per run per iteration, replayable via the child seed."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RESULTS_COLUMNS)
            for rec in records:
                if rec.error is not None:
                    continue
                for i, mse in enumerate(rec.mse, start=1):
                    writer.writerow(
                        [
                            rec.run_id,
                            _cell_value(float(rec.snr_db)),
                            rec.mode,
                            i,
                            _cell_value(mse),
                            _cell_value(i == rec.phase_corrected_iteration),
                            _cell_value(rec.confident),
                            _cell_value(rec.evidence_gap),
                            _cell_value(rec.detected_shift),
                            _cell_value(rec.failed),
                            rec.child_seed,
                        ]
                    )
    except OSError as exc:
        raise OSError(f"cannot write results CSV to {path}: {exc}") from exc


def summary_dict(table: MetricsTable, cfg: SimConfig) -> dict:
    frame = cfg.frame
    metrics = {}
    for snr_db, cells in table.cells.items():
        metrics[_cell_value(float(snr_db))] = {
            "mean_mse": [c.mean_mse for c in cells],
            "median_mse": [c.median_mse for c in cells],
            "p15_mse": [c.p15_mse for c in cells],
            "p85_mse": [c.p85_mse for c in cells],
            "failure_rate": [c.failure_rate for c in cells],
            "final_failure_rate": cells[-1].failure_rate if cells else None,
            "errors": table.errors[snr_db],
        }
    return {
        "mode": table.mode,
        "seed": cfg.seed,
        "runs": cfg.runs,
        "snr_db": list(cfg.snr_db),
        "taps": [[tap.real, tap.imag] for tap in np.asarray(cfg.taps, dtype=complex)],
        "frame": {
            "num_subcarriers": frame.num_subcarriers,
            "num_symbols": frame.num_symbols,
            "cp_len": frame.cp_len,
            "mod_order": frame.mod_order,
            "channel_len": frame.channel_len,
            "init_iters": frame.init_iters,
            "em_per_turbo": frame.em_per_turbo,
            "turbo_iters": frame.turbo_iters,
        },
        "metrics": metrics,
    }


def write_summary_json(table: MetricsTable, cfg: SimConfig, path) -> None:
    try:
        with open(path, "w") as fh:
            json.dump(summary_dict(table, cfg), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write summary JSON to {path}: {exc}") from exc


@dataclass
class ReplayResult:
    """Regenerated single run with the data needed for constellation dumps."""

    record: RunRecord
    trace: IterationTrace
    truth: TxTruth
    received_grid: np.ndarray
    equalized_grid: np.ndarray


def replay_run(
    cfg: SimConfig, snr_db: float, seed: int, mode: ReceiverMode
) -> ReplayResult:
    """Re-run one frame from its recorded child seed."""
    run_cfg = replace(cfg, snr_db=(snr_db,), mode=mode)
    trace, truth, rx = _simulate_frame(run_cfg, snr_db, seed, mode)
    received = ofdm_demodulate(rx, cfg.frame)
    equalized = received / trace.final_estimate[:, None]
    detection = trace.detection
    corrected = next((r.index for r in trace.records if r.phase_corrected), None)
    mse = tuple(float(r.mse) for r in trace.records)
    record = RunRecord(
        run_id=-1,
        snr_db=snr_db,
        mode=mode.value,
        child_seed=seed,
        theta=truth.channel.phase,
        mse=mse,
        detected_shift=detection.shift if detection else None,
        phase=detection.phase if detection else None,
        evidence_gap=detection.evidence_gap if detection else None,
        confident=detection.confident if detection else None,
        phase_corrected_iteration=corrected,
        failed=mse[-1] > MSE_FAILURE_THRESHOLD,
    )
    return ReplayResult(record, trace, truth, received, equalized)


def parse_result_row(line: str) -> dict:
    """Parse one data row of the results CSV into typed fields."""
    parts = [p.strip() for p in line.strip().split(",")]
    if len(parts) != len(RESULTS_COLUMNS):
        raise ValueError(
            f"expected {len(RESULTS_COLUMNS)} comma-separated fields "
            f"({','.join(RESULTS_COLUMNS)}), got {len(parts)}"
        )
    if parts[0] == RESULTS_COLUMNS[0]:
        raise ValueError("that is the CSV header; pass a data row")
    return {
        "run_id": int(parts[0]),
        "snr_db": float(parts[1]),
        "mode": ReceiverMode(parts[2]),
        "iteration": int(parts[3]),
        "mse": float(parts[4]),
        "child_seed": int(parts[10]),
    }


def dump_constellation(result: ReplayResult, path) -> int:
    """Write received and equalized grids as CSV points; returns row count."""
    grids = [("Y", result.received_grid), ("Y_eq", result.equalized_grid)]
    rows = 0
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "m", "n", "re", "im"])
            for kind, grid in grids:
                for n in range(grid.shape[1]):
                    for m in range(grid.shape[0]):
                        writer.writerow(
                            [kind, m, n, repr(float(grid[m, n].real)), repr(float(grid[m, n].imag))]
                        )
                        rows += 1
    except OSError as exc:
        raise OSError(f"cannot write constellation dump to {path}: {exc}") from exc
    return rows


def nearest_rotation(
    estimate: np.ndarray, truth_response: np.ndarray, order: int
) -> tuple[int, float]:
    """Rotation multiple of 2*pi/order that brings the estimate closest
    to the truth, with the residual MSE at that rotation."""
    mses = [
        compute_mse(estimate, truth_response * np.exp(2j * np.pi * l / order))
        for l in range(order)
    ]
    best = int(np.argmin(mses))
    return best, mses[best]


def match_rotation_by_labels(
    equalized: np.ndarray, true_grid: np.ndarray, order: int
) -> int:
    """Label-permutation matching of an equalized constellation.

    Hard-decides the equalized points under each candidate rotation and
    returns the rotation index with the most symbol agreements; a
    nonzero index means the run locked onto a rotated constellation.
    """
    points = np.exp(2j * np.pi * np.arange(order) / order)
    true_idx = np.argmin(
        np.abs(true_grid.reshape(-1, 1) - points[None, :]), axis=1
    )
    agreements = []
    for l in range(order):
        rotated = equalized.reshape(-1) * np.exp(2j * np.pi * l / order)
        idx = np.argmin(np.abs(rotated[:, None] - points[None, :]), axis=1)
        agreements.append(np.mean(idx == true_idx))
    return int(np.argmax(agreements))
