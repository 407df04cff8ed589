"""OFDM framing tests: roundtrips, cyclic prefix, channel diagonalization."""

import numpy as np
import pytest

from blindem.bits import Constellation, map_hard
from blindem.channel import ChannelSpec, apply_channel, freq_response
from blindem.numerics import RngStream
from blindem.ofdm import (
    FrameConfig,
    grid_to_symbols,
    ofdm_demodulate,
    ofdm_modulate,
    prob_tensor_to_symbol_major,
    symbol_major_to_prob_tensor,
    symbols_to_grid,
)

CFG = FrameConfig(num_subcarriers=64, num_symbols=4, cp_len=8)


def random_grid(seed: int, cfg: FrameConfig = CFG) -> np.ndarray:
    rng = np.random.default_rng(seed)
    shape = (cfg.num_subcarriers, cfg.num_symbols)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_psk_grid(seed: int, cfg: FrameConfig = CFG) -> np.ndarray:
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, cfg.coded_len)
    return symbols_to_grid(map_hard(bits, Constellation(cfg.mod_order)), cfg)


class TestFrameConfig:
    def test_defaults(self):
        cfg = FrameConfig()
        assert cfg.coded_len == 256 * 10 * 2 == 5120
        assert cfg.info_len == 2558
        assert cfg.samples_per_frame == 10 * (256 + 8)
        assert cfg.total_em_iters == 50

    def test_non_power_of_two_subcarriers_rejected(self):
        with pytest.raises(ValueError, match="power of two"):
            FrameConfig(num_subcarriers=100)

    def test_short_prefix_rejected(self):
        with pytest.raises(ValueError, match="prefix"):
            FrameConfig(cp_len=1, channel_len=3)


class TestModulateDemodulate:
    def test_zero_grid_zero_samples(self):
        np.testing.assert_array_equal(
            ofdm_modulate(np.zeros((64, 4), dtype=complex), CFG), 0
        )

    def test_roundtrip_ideal_channel(self):
        grid = random_grid(0)
        np.testing.assert_allclose(
            ofdm_demodulate(ofdm_modulate(grid, CFG), CFG), grid, atol=1e-10
        )

    def test_cyclic_prefix_structure(self):
        samples = ofdm_modulate(random_grid(1), CFG)
        per_sym = CFG.num_subcarriers + CFG.cp_len
        for n in range(CFG.num_symbols):
            block = samples[n * per_sym : (n + 1) * per_sym]
            np.testing.assert_allclose(block[: CFG.cp_len], block[-CFG.cp_len :], atol=1e-14)

    def test_sample_count(self):
        assert ofdm_modulate(random_grid(2), CFG).size == CFG.samples_per_frame

    def test_wrong_shape_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            ofdm_modulate(np.zeros((63, 4), dtype=complex), CFG)
        with pytest.raises(ValueError, match="samples"):
            ofdm_demodulate(np.zeros(100, dtype=complex), CFG)


class TestChannelDiagonalization:
    def test_default_taps_noiseless_product(self):
        # time-domain convolution against the frequency-domain product
        grid = random_psk_grid(3)
        spec = ChannelSpec(np.array([0.5, 0.7, 0.5]), 0.0, 0.0)
        rx = apply_channel(ofdm_modulate(grid, CFG), spec, RngStream(0))
        received = ofdm_demodulate(rx, CFG)
        expected = freq_response(spec, CFG.num_subcarriers)[:, None] * grid
        np.testing.assert_allclose(received, expected, atol=1e-10)

    def test_pure_delay_shift_theorem(self):
        grid = random_psk_grid(4)
        spec = ChannelSpec(np.array([0.0, 1.0, 0.0]), 0.0, 0.0)
        rx = apply_channel(ofdm_modulate(grid, CFG), spec, RngStream(0))
        received = ofdm_demodulate(rx, CFG)
        m = np.arange(CFG.num_subcarriers)
        shift = np.exp(-2j * np.pi * m / CFG.num_subcarriers)
        np.testing.assert_allclose(received, shift[:, None] * grid, atol=1e-10)

    @pytest.mark.parametrize("taps_len", [1, 4, 9])
    def test_any_channel_within_prefix(self, taps_len):
        rng = np.random.default_rng(taps_len)
        taps = rng.standard_normal(taps_len) + 1j * rng.standard_normal(taps_len)
        grid = random_grid(taps_len + 10)
        spec = ChannelSpec(taps, 1.1, 0.0)
        rx = apply_channel(ofdm_modulate(grid, CFG), spec, RngStream(0))
        received = ofdm_demodulate(rx, CFG)
        expected = freq_response(spec, CFG.num_subcarriers)[:, None] * grid
        np.testing.assert_allclose(received, expected, atol=1e-9)

    def test_psk_grid_unit_power(self):
        grid = random_psk_grid(5)
        assert np.mean(np.abs(grid) ** 2) == pytest.approx(1.0, abs=1e-12)


class TestLayoutHelpers:
    def test_symbols_grid_roundtrip(self):
        rng = np.random.default_rng(6)
        symbols = rng.standard_normal(CFG.symbols_per_frame) * (1 + 1j)
        np.testing.assert_array_equal(
            grid_to_symbols(symbols_to_grid(symbols, CFG)), symbols
        )

    def test_serialization_is_symbol_major(self):
        symbols = np.arange(CFG.symbols_per_frame, dtype=complex)
        grid = symbols_to_grid(symbols, CFG)
        # symbol t lands at (m, n) = (t % M, t // M)
        assert grid[3, 0] == 3
        assert grid[0, 1] == CFG.num_subcarriers

    def test_prob_tensor_roundtrip(self):
        rng = np.random.default_rng(7)
        tensor = rng.uniform(size=(CFG.num_subcarriers, CFG.num_symbols, 4))
        rows = prob_tensor_to_symbol_major(tensor)
        assert rows.shape == (CFG.symbols_per_frame, 4)
        np.testing.assert_array_equal(symbol_major_to_prob_tensor(rows, CFG), tensor)

    def test_prob_tensor_symbol_order_matches_grid(self):
        tensor = np.zeros((CFG.num_subcarriers, CFG.num_symbols, 4))
        tensor[5, 2, :] = [1, 2, 3, 4]
        rows = prob_tensor_to_symbol_major(tensor)
        t = 2 * CFG.num_subcarriers + 5
        np.testing.assert_array_equal(rows[t], [1, 2, 3, 4])
