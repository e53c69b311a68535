"""Maximum-likelihood sequence detection for trellis-coded NOMA.

All detectors minimise the squared Euclidean distance between the received
samples and the scaled codeword. Ties are broken toward the lowest branch
index, then the lowest parallel-label index, then the lowest predecessor
state, so results are reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .product import PowerPair, ProductTrellis, as_power_pair
from .trellis import Constellation, Trellis, encode_path, psk8, qpsk

__all__ = [
    "QPSK_GRAY_BITS",
    "DetectionResult",
    "ReceivedFrame",
    "detect_user2_direct",
    "joint_detect",
    "sic_detect_user1",
    "uncoded_ml_detect",
    "viterbi",
]

#: Gray bit labels of :func:`tcnoma.trellis.qpsk` point m (neighbours differ in one bit).
QPSK_GRAY_BITS = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.int8)


@dataclass(frozen=True)
class ReceivedFrame:
    samples: np.ndarray
    channel_gain: complex = 1.0
    noise_var: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.complex128).reshape(-1))

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class DetectionResult:
    """Decoded bits (tails excluded) and the winning path.

    For a single trellis the decoded bits are in ``bits_user1`` and
    ``bits_user2`` is None, unless a detector says otherwise.
    """

    bits_user1: np.ndarray | None
    bits_user2: np.ndarray | None
    path_metric: float
    decoded_path: np.ndarray
    residual: np.ndarray | None = None


def _label_table(trellis, label_scale: complex, constellation: Constellation | None):
    if isinstance(trellis, ProductTrellis):
        lab = trellis.labels
    else:
        c = psk8() if constellation is None else constellation
        lab = c.array[trellis.label_index]
    lab = lab * label_scale
    return np.ascontiguousarray(lab.real), np.ascontiguousarray(lab.imag)


def viterbi_path(trellis: Trellis | ProductTrellis, samples, label_scale: complex = 1.0,
                 constellation: Constellation | None = None, tail: int | None = None):
    """Run the Viterbi kernel; returns ``(metric, states, branches, parallel, n_info)``."""
    y = np.asarray(samples, dtype=np.complex128).reshape(-1)
    tail = trellis.termination_depth if tail is None else tail
    n_info = y.size - tail
    if n_info < 0:
        raise ValueError(f"{y.size} samples are shorter than the {tail}-step tail")
    lab_re, lab_im = _label_table(trellis, label_scale, constellation)
    metric, states, branches, parallel = kernels.viterbi(
        np.ascontiguousarray(y.real), np.ascontiguousarray(y.imag),
        np.ascontiguousarray(trellis.next_state), lab_re, lab_im,
        n_info, np.ascontiguousarray(trellis.tail_table(tail)),
    )
    return metric, states, branches, parallel, n_info


def viterbi(trellis: Trellis | ProductTrellis, rx: ReceivedFrame | np.ndarray, label_scale: complex = 1.0,
            constellation: Constellation | None = None, tail: int | None = None) -> DetectionResult:
    """Terminated-codeword MLSD over ``trellis``.

    Minimises ``sum |y(n) - label_scale * c(n)|^2``. ``constellation``
    applies to a plain :class:`Trellis` (8-PSK by default); a
    :class:`ProductTrellis` carries its own labels. During the ``tail``
    steps only the encoder's forced termination branches are admitted.
    """
    samples = rx.samples if isinstance(rx, ReceivedFrame) else rx
    metric, states, branches, parallel, n_info = viterbi_path(
        trellis, samples, label_scale, constellation, tail)
    st, br, pa = states[: n_info + 1], branches[:n_info], parallel[:n_info]
    if isinstance(trellis, ProductTrellis):
        s1, s2 = trellis.split_state(st)
        b1, b2 = trellis.split_branch(br)
        m1, m2 = trellis.split_parallel(pa)
        bits1 = trellis.t1.path_bits(s1, b1, m1)
        bits2 = trellis.t2.path_bits(s2, b2, m2)
        return DetectionResult(bits1, bits2, metric, states)
    return DetectionResult(trellis.path_bits(st, br, pa), None, metric, states)


def joint_detect(pt: ProductTrellis, rx: ReceivedFrame, tail: int | None = None) -> DetectionResult:
    """Detect both users at once on the product trellis."""
    return viterbi(pt, rx, label_scale=rx.channel_gain, tail=tail)


def _reencode(trellis: Trellis, bits, constellation: Constellation, tail: int, n_info: int) -> np.ndarray:
    states, branches, parallel = encode_path(trellis, bits, tail, n_steps=n_info)
    return constellation.array[trellis.symbol_indices(states, branches, parallel)]


def sic_detect_user1(t1: Trellis, t2: Trellis, rx: ReceivedFrame, powers,
                     c1: Constellation | None = None, c2: Constellation | None = None,
                     tail: int | None = None) -> DetectionResult:
    """Successive interference cancellation at the strong user.

    Decode User 2 with User 1 treated as noise, subtract the re-encoded
    User 2 signal, then decode User 1. ``bits_user2`` holds the stage-one
    estimate and ``residual`` the signal after cancellation.
    """
    powers = as_power_pair(powers)
    c1 = psk8() if c1 is None else c1
    c2 = psk8() if c2 is None else c2
    tail = max(t1.termination_depth, t2.termination_depth) if tail is None else tail
    h = rx.channel_gain
    scale2 = h * math.sqrt(powers.p2)
    stage1 = viterbi(t2, rx, label_scale=scale2, constellation=c2, tail=tail)
    a2_hat = _reencode(t2, stage1.bits_user1, c2, tail, rx.samples.size - tail)
    residual = rx.samples - scale2 * a2_hat
    stage2 = viterbi(t1, residual, label_scale=h * math.sqrt(powers.p1), constellation=c1, tail=tail)
    return DetectionResult(stage2.bits_user1, stage1.bits_user1, stage2.path_metric,
                           stage2.decoded_path, residual)


def detect_user2_direct(t2: Trellis, rx: ReceivedFrame, powers, c2: Constellation | None = None,
                        tail: int | None = None) -> DetectionResult:
    """Weak-user detection with User 1's signal left as interference."""
    powers = as_power_pair(powers)
    res = viterbi(t2, rx, label_scale=rx.channel_gain * math.sqrt(powers.p2), constellation=c2, tail=tail)
    return DetectionResult(None, res.bits_user1, res.path_metric, res.decoded_path)


def superimposed_points(powers: PowerPair, c1: Constellation, c2: Constellation) -> np.ndarray:
    """All ``sqrt(p1)*u + sqrt(p2)*v``, flattened with index ``u * len(c2) + v``."""
    powers = as_power_pair(powers)
    return (math.sqrt(powers.p1) * c1.array[:, None] + math.sqrt(powers.p2) * c2.array[None, :]).reshape(-1)


def uncoded_ml_detect(rx: ReceivedFrame, powers, c1: Constellation | None = None,
                      c2: Constellation | None = None) -> DetectionResult:
    """Symbol-by-symbol ML over the superimposed 4-PSK pair (Gray bits)."""
    c1 = qpsk() if c1 is None else c1
    c2 = qpsk() if c2 is None else c2
    if len(c1) != 4 or len(c2) != 4:
        raise ValueError("uncoded detection expects 4-PSK constellations")
    pts = rx.channel_gain * superimposed_points(powers, c1, c2)
    y = rx.samples
    d = (y.real[:, None] - pts.real[None, :]) ** 2 + (y.imag[:, None] - pts.imag[None, :]) ** 2
    idx = d.argmin(axis=1)
    u, v = np.divmod(idx, 4)
    metric = float(np.take_along_axis(d, idx[:, None], axis=1).sum())
    return DetectionResult(QPSK_GRAY_BITS[u].reshape(-1), QPSK_GRAY_BITS[v].reshape(-1), metric, idx)
