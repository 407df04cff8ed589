"""Headless matplotlib rendering of simulation reports.

Figures are written next to the delimited output: MSE trajectories with
percentile bands, failure-rate curves over EM iterations, and
received/equalized constellation panels.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import MetricsTable, ReplayResult


def render_mse_figure(table: MetricsTable, out_path) -> None:
    """Median MSE per iteration with the 15th-85th percentile band."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for snr_db in sorted(table.cells):
        cells = table.cells[snr_db]
        if not cells:
            continue
        iters = np.arange(1, len(cells) + 1)
        median = [c.median_mse for c in cells]
        lo = [c.p15_mse for c in cells]
        hi = [c.p85_mse for c in cells]
        (line,) = ax.plot(iters, median, label=f"{snr_db:g} dB")
        ax.fill_between(iters, lo, hi, alpha=0.2, color=line.get_color())
    ax.set_yscale("log")
    ax.set_xlabel("EM iteration")
    ax.set_ylabel("channel estimate MSE")
    ax.set_title(f"MSE, {table.mode} ({table.runs} runs)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_failure_rate_figure(table: MetricsTable, out_path) -> None:
    """Failure rate (MSE above 0.1) versus EM iteration, one line per SNR."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for snr_db in sorted(table.cells):
        cells = table.cells[snr_db]
        if not cells:
            continue
        iters = np.arange(1, len(cells) + 1)
        ax.plot(iters, [100.0 * c.failure_rate for c in cells], label=f"{snr_db:g} dB")
    ax.set_xlabel("EM iteration")
    ax.set_ylabel("failure rate [%]")
    ax.set_ylim(-2, 102)
    ax.set_title(f"Failure rate, {table.mode} ({table.runs} runs)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_constellation_figure(result: ReplayResult, out_path) -> None:
    """Received vs equalized scatter with the ideal points marked."""
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.4))
    panels = [
        ("received", result.received_grid),
        ("equalized", result.equalized_grid),
    ]
    ideal = np.unique(np.round(result.truth.grid.reshape(-1), 9))
    for ax, (label, grid) in zip(axes, panels):
        pts = grid.reshape(-1)
        ax.plot(pts.real, pts.imag, "x", markersize=2, alpha=0.4)
        ax.plot(ideal.real, ideal.imag, "s", markersize=8, markerfacecolor="none",
                markeredgecolor="red")
        # zero-forcing blows up weak subcarriers; keep axes on the bulk
        limit = max(2.0, 1.2 * float(np.percentile(np.abs(pts), 95)))
        ax.set_xlim(-limit, limit)
        ax.set_ylim(-limit, limit)
        ax.set_title(label)
        ax.set_xlabel("in-phase")
        ax.set_ylabel("quadrature")
        ax.set_aspect("equal")
        ax.grid(True, alpha=0.3)
    fig.suptitle(
        f"{result.record.mode}, {result.record.snr_db:g} dB, "
        f"final MSE {result.record.mse[-1]:.2e}"
    )
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
