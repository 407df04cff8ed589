"""FIR channel, phase rotation, and SNR conversion tests."""

import numpy as np
import pytest

from blindem.channel import ChannelSpec, apply_channel, freq_response, snr_to_noise_variance
from blindem.numerics import RngStream

DEFAULT_TAPS = np.array([0.5, 0.7, 0.5])


class TestApplyChannel:
    def test_identity_channel(self):
        x = np.arange(10, dtype=complex)
        out = apply_channel(x, ChannelSpec(np.array([1.0])), RngStream(0))
        np.testing.assert_allclose(out, x, atol=1e-15)

    def test_impulse_response(self):
        x = np.zeros(8, dtype=complex)
        x[0] = 1.0
        out = apply_channel(x, ChannelSpec(DEFAULT_TAPS), RngStream(0))
        np.testing.assert_allclose(out, [0.5, 0.7, 0.5, 0, 0, 0, 0, 0], atol=1e-15)

    def test_phase_pi_negates(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        base = apply_channel(x, ChannelSpec(DEFAULT_TAPS, 0.0, 0.0), RngStream(5))
        flipped = apply_channel(x, ChannelSpec(DEFAULT_TAPS, np.pi, 0.0), RngStream(5))
        np.testing.assert_allclose(flipped, -base, atol=1e-12)

    def test_noise_power(self):
        x = np.zeros(10**5, dtype=complex)
        out = apply_channel(x, ChannelSpec(np.array([1.0]), 0.0, 0.25), RngStream(2))
        assert np.mean(np.abs(out) ** 2) == pytest.approx(0.25, rel=0.02)

    def test_empty_taps_rejected(self):
        with pytest.raises(ValueError, match="tap"):
            ChannelSpec(np.array([]))


class TestFreqResponse:
    def test_default_taps_four_bins(self):
        # direct summation: H_m = sum_l h_l exp(-2j pi m l / 4)
        response = freq_response(ChannelSpec(DEFAULT_TAPS), 4)
        np.testing.assert_allclose(response, [1.7, -0.7j, 0.3, 0.7j], atol=1e-12)

    def test_direct_summation_oracle(self):
        rng = np.random.default_rng(3)
        taps = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        m_bins = 16
        response = freq_response(ChannelSpec(taps, 0.4), m_bins)
        for m in range(m_bins):
            expected = np.exp(1j * 0.4) * sum(
                taps[l] * np.exp(-2j * np.pi * m * l / m_bins) for l in range(5)
            )
            assert abs(response[m] - expected) < 1e-12

    def test_quarter_turn_multiplies_by_j(self):
        base = freq_response(ChannelSpec(DEFAULT_TAPS, 0.0), 16)
        rotated = freq_response(ChannelSpec(DEFAULT_TAPS, np.pi / 2), 16)
        np.testing.assert_allclose(rotated, 1j * base, atol=1e-12)

    def test_flat_channel(self):
        np.testing.assert_allclose(
            freq_response(ChannelSpec(np.array([1.0, 0, 0])), 8), 1.0, atol=1e-15
        )

    def test_phase_wraps(self):
        a = freq_response(ChannelSpec(DEFAULT_TAPS, 1.0), 32)
        b = freq_response(ChannelSpec(DEFAULT_TAPS, 1.0 + 2 * np.pi), 32)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_default_tap_energy(self):
        assert np.sum(np.abs(DEFAULT_TAPS) ** 2) == pytest.approx(0.99, abs=1e-12)

    def test_too_few_bins_rejected(self):
        with pytest.raises(ValueError, match="bins"):
            freq_response(ChannelSpec(DEFAULT_TAPS), 2)


class TestSnrConversion:
    def test_zero_db(self):
        assert snr_to_noise_variance(0.0) == pytest.approx(1.0)

    def test_twenty_db(self):
        assert snr_to_noise_variance(20.0) == pytest.approx(0.01)

    def test_six_db(self):
        assert snr_to_noise_variance(6.0) == pytest.approx(10 ** (-0.6), abs=1e-12)
        assert snr_to_noise_variance(6.0) == pytest.approx(0.2512, abs=1e-4)

    def test_negative_variance_rejected_in_spec(self):
        with pytest.raises(ValueError, match="nonnegative"):
            ChannelSpec(DEFAULT_TAPS, 0.0, -1.0)
