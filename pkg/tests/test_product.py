import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcnoma.product import PowerPair, complexity_estimate, tensor_product
from tcnoma.trellis import build_ungerboeck_4state, encode, psk8, trivial_trellis

import oracles


@pytest.fixture
def pt(t4):
    return tensor_product(t4, t4, PowerPair(0.3, 1.0))


def test_sizes(pt):
    assert pt.num_states == 16
    assert pt.branches_per_state == 4
    assert pt.parallel == 4
    assert pt.labels.shape == (16, 4, 4)


def test_labels_are_superpositions(t4, c8, pt):
    p1, p2 = 0.3, 1.0
    for s, row in enumerate(pt.edges):
        s1, s2 = divmod(s, 4)
        for b, br in enumerate(row):
            for lab, (b1, m1, b2, m2) in zip(br.labels, br.refs):
                u = c8[t4.edges[s1][b1].labels[m1]]
                v = c8[t4.edges[s2][b2].labels[m2]]
                assert abs(lab - (math.sqrt(p1) * u + math.sqrt(p2) * v)) < 1e-15
            # parallel labels ordered by (T1 parallel index, T2 parallel index)
            assert [r[1] * 2 + r[3] for r in br.refs] == [0, 1, 2, 3]


def test_edge_exists_iff_both_constituents_do(t4, pt):
    trans1 = {(s, b.next_state) for s, bs in enumerate(t4.edges) for b in bs}
    for i, j, k, l in itertools.product(range(4), repeat=4):
        product_edge = any(pt.next_state[i * 4 + j, b] == k * 4 + l for b in range(4))
        assert product_edge == ((i, k) in trans1 and (j, l) in trans1)


def test_zero_user1_power_collapses_labels(t4):
    pt0 = tensor_product(t4, t4, PowerPair(0.0, 1.0))
    for s in range(16):
        for b in range(4):
            assert len(set(np.round(pt0.labels[s, b], 12))) == 2


def test_state_names(pt):
    assert pt.state_name(12) == "1100"
    assert pt.state_name(9) == "1001"
    assert pt.state_name(6) == "0110"


def test_bijective_paths(t4, c8):
    """Every pair of constituent paths is one product path and back (length <= 3)."""
    pt = tensor_product(t4, t4, PowerPair(0.2, 0.8))
    for n in (1, 2, 3):
        frames = oracles.all_bit_frames(2 * n)
        seen = set()
        for f1 in frames:
            _, st1 = encode(t4, f1, c8, tail=0)
            for f2 in frames:
                _, st2 = encode(t4, f2, c8, tail=0)
                prod = tuple(int(a) * 4 + int(b) for a, b in zip(st1, st2))
                # each step is a valid product transition
                for a, b in zip(prod[:-1], prod[1:]):
                    assert b in pt.next_state[a]
                key = (prod, tuple(f1), tuple(f2))
                assert key not in seen
                seen.add(key)
                s1, s2 = pt.split_state(np.array(prod))
                assert list(s1) == list(st1) and list(s2) == list(st2)
        assert len(seen) == len(frames) ** 2


def test_terminated_codewords_end_at_product_zero(t4, c8, rng):
    for _ in range(20):
        _, st1 = encode(t4, rng.integers(0, 2, 10), c8)
        _, st2 = encode(t4, rng.integers(0, 2, 10), c8)
        prod = st1 * 4 + st2
        assert prod[0] == 0 and prod[-1] == 0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.1, 10.0))
def test_power_scaling_scales_labels(ratio, alpha):
    t = build_ungerboeck_4state()
    pp = PowerPair.from_ratio(ratio)
    a = tensor_product(t, t, pp).labels
    b = tensor_product(t, t, pp.scaled(alpha)).labels
    assert np.allclose(b, math.sqrt(alpha) * a, atol=1e-12)


def test_trivial_factor(t4, c8):
    pt = tensor_product(trivial_trellis(), t4, PowerPair(0.0, 1.0))
    assert pt.num_states == 4
    assert np.allclose(pt.labels, c8.array[t4.label_index])


def test_dump_one_line_per_edge(pt):
    lines = pt.dump().splitlines()
    assert len(lines) == 16 * 4
    assert lines[0].startswith("  0  0 ->   0 :")


class TestPowerPair:
    def test_ordering(self):
        PowerPair(0.1, 1.0).require_ordered()
        for p in [(0.5, 0.5), (0.0, 1.0), (1.0, 0.5)]:
            with pytest.raises(ValueError):
                PowerPair(*p).require_ordered()

    @pytest.mark.parametrize("p1, p2, budget", [(-0.1, 1.0, None), (0.3, 0.9, 1.0), (float("nan"), 1, None)])
    def test_rejects(self, p1, p2, budget):
        with pytest.raises(ValueError):
            PowerPair(p1, p2, budget)

    def test_from_ratio(self):
        pp = PowerPair.from_ratio(0.25, 2.0)
        assert math.isclose(pp.ratio, 0.25) and math.isclose(pp.total, 2.0)


class TestComplexity:
    def test_joint(self, t4):
        assert complexity_estimate(t4, t4, 100, "joint") == 27200

    def test_separate(self, t4):
        assert complexity_estimate(t4, t4, 100, "separate") == 4000

    def test_zero_steps(self, t4):
        assert complexity_estimate(t4, t4, 0) == 0

    def test_bad_mode(self, t4):
        with pytest.raises(ValueError):
            complexity_estimate(t4, t4, 1, "both")
