"""Interleaver and PSK soft-mapping tests."""

import subprocess
import sys

import numpy as np
import pytest

from blindem.bits import (
    Constellation,
    Interleaver,
    deinterleave,
    demap_soft,
    interleave,
    map_hard,
    map_soft,
)

QPSK = Constellation(4)


class TestConstellation:
    def test_points_on_unit_circle(self):
        for order in (2, 4, 8, 16):
            np.testing.assert_allclose(np.abs(Constellation(order).points), 1.0, atol=1e-15)

    def test_qpsk_gray_labels(self):
        # 1 -> 00, j -> 01, -1 -> 11, -j -> 10
        np.testing.assert_array_equal(
            QPSK.labels, [[0, 0], [0, 1], [1, 1], [1, 0]]
        )
        np.testing.assert_allclose(QPSK.points, [1, 1j, -1, -1j], atol=1e-15)

    def test_labels_bijective(self):
        for order in (2, 4, 8):
            const = Constellation(order)
            values = {tuple(row) for row in const.labels}
            assert len(values) == order

    def test_bad_order_rejected(self):
        for order in (0, 1, 3, 6):
            with pytest.raises(ValueError, match="power of two"):
                Constellation(order)


class TestInterleaver:
    def test_identity_fixture_unchanged(self):
        il = Interleaver.identity(16)
        seq = np.arange(16) * 1.5
        np.testing.assert_array_equal(interleave(seq, il), seq)
        np.testing.assert_array_equal(deinterleave(seq, il), seq)

    def test_roundtrip_many_seeds(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            length = int(rng.integers(2, 64))
            seed = int(rng.integers(0, 2**63))
            il = Interleaver.from_seed(seed, length)
            seq = rng.standard_normal(length)
            np.testing.assert_array_equal(deinterleave(interleave(seq, il), il), seq)
            np.testing.assert_array_equal(interleave(deinterleave(seq, il), il), seq)

    def test_permutation_identical_across_processes(self):
        il = Interleaver.from_seed(42, 8)
        script = (
            "from blindem.bits import Interleaver; "
            "print(','.join(map(str, Interleaver.from_seed(42, 8).forward)))"
        )
        out = subprocess.run(
            [sys.executable, "-c", script], capture_output=True, text=True, check=True
        )
        other = [int(x) for x in out.stdout.strip().split(",")]
        np.testing.assert_array_equal(il.forward, other)

    def test_length_mismatch_rejected(self):
        il = Interleaver.identity(8)
        with pytest.raises(ValueError, match="length"):
            interleave(np.zeros(9), il)

    def test_invalid_permutation_rejected(self):
        with pytest.raises(ValueError, match="exactly once"):
            Interleaver(np.array([0, 0, 1]))


class TestMapHard:
    def test_point_one_is_j(self):
        # second constellation point lies at e^{j pi/2}
        assert QPSK.points[1] == pytest.approx(1j)
        np.testing.assert_allclose(map_hard([0, 1], QPSK), [1j], atol=1e-15)

    def test_all_zero_bits(self):
        np.testing.assert_allclose(map_hard([0] * 10, QPSK), np.ones(5), atol=1e-15)

    def test_hard_roundtrip_through_soft_demap(self):
        rng = np.random.default_rng(1)
        bits = rng.integers(0, 2, 50)
        symbols = map_hard(bits, QPSK)
        onehot = np.zeros((25, 4))
        for i, s in enumerate(symbols):
            onehot[i, np.argmin(np.abs(QPSK.points - s))] = 1.0
        recovered = demap_soft(onehot, QPSK).reshape(-1)
        np.testing.assert_allclose(recovered, bits, atol=1e-9)

    def test_bad_length_rejected(self):
        with pytest.raises(ValueError, match="divisible"):
            map_hard([0, 1, 0], QPSK)


class TestDemapSoft:
    def test_one_hot_recovers_label(self):
        probs = np.array([[1.0, 0, 0, 0]])
        np.testing.assert_allclose(demap_soft(probs, QPSK)[0], [0, 0], atol=1e-9)

    def test_uniform_gives_half(self):
        probs = np.full((7, 4), 0.25)
        np.testing.assert_allclose(demap_soft(probs, QPSK), 0.5, atol=1e-12)

    def test_marginal_sums(self):
        # labels 00,01,11,10: p(b1=1)=p2+p3, p(b2=1)=p1+p2
        probs = np.array([[0.7, 0.1, 0.1, 0.1]])
        np.testing.assert_allclose(demap_soft(probs, QPSK)[0], [0.2, 0.2], atol=1e-12)

    def test_non_normalized_rejected(self):
        with pytest.raises(ValueError, match="sum to 1"):
            demap_soft(np.array([[0.5, 0.1, 0.1, 0.1]]), QPSK)


class TestMapSoft:
    def test_uniform_bits_give_uniform_symbols(self):
        out = map_soft(np.full((3, 2), 0.5), QPSK)
        np.testing.assert_allclose(out, 0.25, atol=1e-12)

    def test_certain_bits_give_one_hot(self):
        out = map_soft(np.array([[1 - 1e-12, 1 - 1e-12]]), QPSK)
        assert out[0, 2] > 1 - 1e-9  # label 11 is point -1

    def test_product_rule(self):
        # bits (0.8, 0.5): s0=00 gets 0.2*0.5, s1=01 gets 0.2*0.5,
        # s2=11 gets 0.8*0.5, s3=10 gets 0.8*0.5
        out = map_soft(np.array([[0.8, 0.5]]), QPSK)
        np.testing.assert_allclose(out[0], [0.1, 0.1, 0.4, 0.4], atol=1e-12)

    def test_roundtrip_with_demap(self):
        # QPSK carries its two Gray bits on independent quadratures
        rng = np.random.default_rng(9)
        bit_probs = rng.uniform(0.05, 0.95, (40, 2))
        np.testing.assert_allclose(
            demap_soft(map_soft(bit_probs, QPSK), QPSK), bit_probs, atol=1e-9
        )

    def test_slices_sum_to_one(self):
        rng = np.random.default_rng(10)
        out = map_soft(rng.uniform(0.0, 1.0, (100, 2)), QPSK)
        np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-9)
