import math

import numpy as np
import pytest

from tcnoma.detectors import (QPSK_GRAY_BITS, ReceivedFrame, detect_user2_direct, joint_detect,
                              sic_detect_user1, superimposed_points, uncoded_ml_detect, viterbi)
from tcnoma.product import PowerPair, tensor_product
from tcnoma.trellis import build_ungerboeck_4state, encode, psk8, qpsk, trivial_trellis

import oracles

H = math.sqrt(2.0)
N_STEPS = 4


@pytest.fixture(scope="module")
def single_book():
    t = build_ungerboeck_4state()
    return t, oracles.codebook_single(t, N_STEPS, 2, psk8(), 0.8)


@pytest.fixture(scope="module")
def product_book():
    t = build_ungerboeck_4state()
    pp = PowerPair(0.3, 1.0)
    c1, c2 = psk8(math.pi / 8), psk8()
    book = oracles.codebook_product(t, t, N_STEPS, 2, c1, c2, pp.p1, pp.p2, H)
    return t, pp, c1, c2, book


class TestAgainstExhaustiveML:
    def test_single_trellis(self, single_book, backend):
        t, (frames, words) = single_book
        rng = np.random.default_rng(1)
        for _ in range(100):
            i = rng.integers(len(words))
            y = words[i] + 0.6 * (rng.normal(size=words.shape[1]) + 1j * rng.normal(size=words.shape[1]))
            j, metric = oracles.ml_search(words, y)
            res = viterbi(t, y, label_scale=0.8)
            assert res.path_metric == metric
            assert np.array_equal(res.bits_user1, frames[j])

    def test_product_trellis(self, product_book, backend):
        t, pp, c1, c2, (f1, f2, pairs, words) = product_book
        pt = tensor_product(t, t, pp, c1, c2)
        rng = np.random.default_rng(2)
        for _ in range(30):
            i = rng.integers(len(words))
            y = words[i] + 0.4 * (rng.normal(size=words.shape[1]) + 1j * rng.normal(size=words.shape[1]))
            j, metric = oracles.ml_search(words, y)
            res = joint_detect(pt, ReceivedFrame(y, channel_gain=H))
            a, b = pairs[j]
            assert res.path_metric == metric
            assert np.array_equal(res.bits_user1, f1[a])
            assert np.array_equal(res.bits_user2, f2[b])


class TestNoiseless:
    def test_product_recovers_both_users(self, t4, rng, backend):
        pp = PowerPair(0.2, 0.8)
        pt = tensor_product(t4, t4, pp)
        b1, b2 = rng.integers(0, 2, 40), rng.integers(0, 2, 40)
        s1, _ = encode(t4, b1, psk8())
        s2, _ = encode(t4, b2, psk8())
        y = H * (math.sqrt(pp.p1) * s1 + math.sqrt(pp.p2) * s2)
        res = joint_detect(pt, ReceivedFrame(y, channel_gain=H))
        assert np.array_equal(res.bits_user1, b1) and np.array_equal(res.bits_user2, b2)
        assert res.path_metric < 1e-20
        assert res.decoded_path[0] == 0 and res.decoded_path[-1] == 0

    def test_ties_are_deterministic(self, t4, backend):
        # all-zero input: every parallel pair is equidistant from 0, lowest indices win
        res = viterbi(t4, np.zeros(8, dtype=complex))
        assert np.array_equal(res.bits_user1, np.zeros(12, dtype=np.int8))
        again = viterbi(t4, np.zeros(8, dtype=complex))
        assert np.array_equal(res.decoded_path, again.decoded_path)

    def test_too_short_frame_rejected(self, t4):
        with pytest.raises(ValueError):
            viterbi(t4, np.zeros(1, dtype=complex))


def test_trivial_first_user_reduces_to_single_user(t4, c8, rng):
    pt = tensor_product(trivial_trellis(), t4, PowerPair(0.0, 1.0))
    bits = rng.integers(0, 2, 20)
    s, _ = encode(t4, bits, c8)
    y = s + 0.3 * (rng.normal(size=s.size) + 1j * rng.normal(size=s.size))
    a = viterbi(pt, y)
    b = viterbi(t4, y)
    assert a.bits_user1.size == 0
    assert np.array_equal(a.bits_user2, b.bits_user1)
    assert a.path_metric == b.path_metric
    assert np.array_equal(a.decoded_path, b.decoded_path)


class TestSIC:
    def _signal(self, t4, rng, pp):
        b1, b2 = rng.integers(0, 2, 30), rng.integers(0, 2, 30)
        s1, _ = encode(t4, b1, psk8())
        s2, _ = encode(t4, b2, psk8())
        return b1, b2, s1, s2

    def test_noiseless_cancellation(self, t4, rng, backend):
        pp = PowerPair(0.1, 1.0)
        b1, b2, s1, s2 = self._signal(t4, rng, pp)
        y = H * (math.sqrt(pp.p1) * s1 + math.sqrt(pp.p2) * s2)
        res = sic_detect_user1(t4, t4, ReceivedFrame(y, channel_gain=H), pp)
        assert np.array_equal(res.bits_user2, b2)
        assert np.array_equal(res.bits_user1, b1)
        assert np.allclose(res.residual, H * math.sqrt(pp.p1) * s1, atol=1e-12)

    def test_wrong_first_stage_leaves_offset(self, t4, c8):
        # a wrong user-2 decision leaves h*sqrt(p2)*(true - decoded) in the residual;
        # on the first symbol the two estimates are antipodal, an offset of 2*h*sqrt(p2)
        pp = PowerPair(0.1, 1.0)
        s_true, _ = encode(t4, np.array([0, 1, 0, 0]), c8)
        s_wrong, _ = encode(t4, np.array([0, 0, 0, 0]), c8)
        y = H * math.sqrt(pp.p2) * s_true
        res = sic_detect_user1(t4, t4, ReceivedFrame(y, channel_gain=H), pp)
        assert np.array_equal(res.bits_user2, [0, 1, 0, 0])
        assert np.allclose(res.residual, 0.0, atol=1e-12)
        offset = y - H * math.sqrt(pp.p2) * s_wrong
        assert math.isclose(abs(offset[0]), 2 * H * math.sqrt(pp.p2), rel_tol=1e-12)

    def test_user2_direct(self, t4, rng, backend):
        pp = PowerPair(0.05, 1.0)
        b1, b2, s1, s2 = self._signal(t4, rng, pp)
        y = math.sqrt(pp.p1) * s1 + math.sqrt(pp.p2) * s2
        res = detect_user2_direct(t4, ReceivedFrame(y), pp)
        assert res.bits_user1 is None
        assert np.array_equal(res.bits_user2, b2)


class TestUncoded:
    def test_gray_labels_differ_in_one_bit(self):
        for m in range(4):
            assert np.sum(QPSK_GRAY_BITS[m] != QPSK_GRAY_BITS[(m + 1) % 4]) == 1

    def test_against_per_symbol_search(self, rng):
        pp = PowerPair(0.2, 0.8)
        c = qpsk()
        y = rng.normal(size=200) + 1j * rng.normal(size=200)
        res = uncoded_ml_detect(ReceivedFrame(y, channel_gain=H), pp)
        for k, yk in enumerate(y):
            best = min(((u, v) for u in range(4) for v in range(4)),
                       key=lambda uv: abs(yk - H * (math.sqrt(pp.p1) * c[uv[0]] + math.sqrt(pp.p2) * c[uv[1]])))
            assert list(res.bits_user1[2 * k:2 * k + 2]) == list(QPSK_GRAY_BITS[best[0]])
            assert list(res.bits_user2[2 * k:2 * k + 2]) == list(QPSK_GRAY_BITS[best[1]])

    def test_noiseless(self, rng):
        pp = PowerPair(0.2, 0.8)
        u, v = rng.integers(0, 4, 50), rng.integers(0, 4, 50)
        y = math.sqrt(pp.p1) * qpsk().array[u] + math.sqrt(pp.p2) * qpsk().array[v]
        res = uncoded_ml_detect(ReceivedFrame(y), pp)
        assert np.array_equal(res.bits_user1, QPSK_GRAY_BITS[u].reshape(-1))
        assert np.array_equal(res.bits_user2, QPSK_GRAY_BITS[v].reshape(-1))

    def test_equal_power_points_collide(self):
        pts = superimposed_points(PowerPair(0.5, 0.5), qpsk(), qpsk())
        assert len(set(np.round(pts, 9))) < 16
        pts = superimposed_points(PowerPair(0.2, 0.8), qpsk(), qpsk())
        assert len(set(np.round(pts, 9))) == 16

    def test_rejects_non_qpsk(self):
        with pytest.raises(ValueError):
            uncoded_ml_detect(ReceivedFrame(np.zeros(2)), (0.2, 0.8), c1=psk8())


def test_metric_grows_with_noise(t4, c8, rng):
    bits = rng.integers(0, 2, 100)
    s, _ = encode(t4, bits, c8)
    n = rng.normal(size=s.size) + 1j * rng.normal(size=s.size)
    metrics = [viterbi(t4, s + a * n).path_metric for a in (0.0, 0.05, 0.1, 0.2)]
    assert metrics == sorted(metrics)
