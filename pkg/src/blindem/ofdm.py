"""OFDM framing: IDFT modulation, cyclic prefix handling, serialization.

Frequency grids are (num_subcarriers, num_symbols) complex matrices;
serialization is column-major, one OFDM symbol after another, each
preceded by its cyclic prefix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fec import CodeSpec
from .numerics import dft, idft


@dataclass(frozen=True)
class FrameConfig:
    """Frame-level constants shared by transmitter and receiver."""

    num_subcarriers: int = 256
    num_symbols: int = 10
    cp_len: int = 8
    mod_order: int = 4
    channel_len: int = 3
    init_iters: int = 20
    em_per_turbo: int = 5
    turbo_iters: int = 6
    # optional EM early stop on relative estimate change; None keeps the
    # fixed iteration schedule (and the fixed-length traces)
    em_stop_rel_change: float | None = None
    code: CodeSpec = field(default_factory=CodeSpec)

    def __post_init__(self) -> None:
        m = self.num_subcarriers
        if m <= 0 or m & (m - 1):
            raise ValueError(f"num_subcarriers must be a power of two, got {m}")
        if self.cp_len < self.channel_len - 1:
            raise ValueError(
                f"cyclic prefix {self.cp_len} shorter than channel memory "
                f"{self.channel_len - 1}; symbols would interfere"
            )
        if self.mod_order < 2 or self.mod_order & (self.mod_order - 1):
            raise ValueError(f"mod_order must be a power of two >= 2, got {self.mod_order}")
        for name in ("num_symbols", "init_iters", "em_per_turbo", "turbo_iters"):
            if getattr(self, name) < 0 or (name == "num_symbols" and self.num_symbols == 0):
                raise ValueError(f"{name} out of range")

    @property
    def bits_per_symbol(self) -> int:
        return self.mod_order.bit_length() - 1

    @property
    def symbols_per_frame(self) -> int:
        return self.num_subcarriers * self.num_symbols

    @property
    def coded_len(self) -> int:
        """Coded bits per frame: one PSK label per grid entry."""
        return self.symbols_per_frame * self.bits_per_symbol

    @property
    def info_len(self) -> int:
        """Info bits per frame, after reserving room for the code tail."""
        return self.coded_len // 2 - self.code.tail_len

    @property
    def samples_per_frame(self) -> int:
        return self.num_symbols * (self.num_subcarriers + self.cp_len)

    @property
    def total_em_iters(self) -> int:
        return self.init_iters + self.em_per_turbo * self.turbo_iters


def symbols_to_grid(symbols: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Reshape a serial symbol stream to a grid, first symbol block first."""
    if symbols.size != cfg.symbols_per_frame:
        raise ValueError(f"expected {cfg.symbols_per_frame} symbols, got {symbols.size}")
    return symbols.reshape(cfg.num_subcarriers, cfg.num_symbols, order="F")


def grid_to_symbols(grid: np.ndarray) -> np.ndarray:
    """Inverse of :func:`symbols_to_grid`."""
    return grid.flatten(order="F")


def prob_tensor_to_symbol_major(tensor: np.ndarray) -> np.ndarray:
    """Flatten an (M, N, C) probability tensor to (M*N, C) in symbol order.

    Symbol order matches :func:`grid_to_symbols`: subcarriers of the
    first OFDM symbol, then the second, and so on.
    """
    return tensor.transpose(1, 0, 2).reshape(-1, tensor.shape[2])


def symbol_major_to_prob_tensor(rows: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Inverse of :func:`prob_tensor_to_symbol_major`."""
    return rows.reshape(cfg.num_symbols, cfg.num_subcarriers, -1).transpose(1, 0, 2)


def ofdm_modulate(grid: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """IDFT each column, prepend its cyclic prefix, serialize.

    Output length is num_symbols * (num_subcarriers + cp_len).
    """
    grid = np.asarray(grid)
    if grid.shape != (cfg.num_subcarriers, cfg.num_symbols):
        raise ValueError(
            f"grid shape {grid.shape} != ({cfg.num_subcarriers}, {cfg.num_symbols})"
        )
    time_syms = idft(grid, axis=0)
    with_cp = np.concatenate([time_syms[-cfg.cp_len :, :], time_syms], axis=0)
    return with_cp.flatten(order="F")


def ofdm_demodulate(samples: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Drop each symbol's cyclic prefix and DFT back to a frequency grid."""
    samples = np.asarray(samples)
    if samples.size != cfg.samples_per_frame:
        raise ValueError(f"expected {cfg.samples_per_frame} samples, got {samples.size}")
    blocks = samples.reshape(cfg.num_subcarriers + cfg.cp_len, cfg.num_symbols, order="F")
    return dft(blocks[cfg.cp_len :, :], axis=0)
