"""Monte-Carlo BER engine for trellis-coded and uncoded two-user NOMA.

Every frame draws its bits and noise from generators seeded with
``(seed, frame_index, stream)``, so results do not depend on how frames are
split across worker processes. The same frame realisations are reused at
every SNR point and for every scheme (common random numbers); only the
noise scale changes with SNR.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .detectors import (QPSK_GRAY_BITS, ReceivedFrame, detect_user2_direct, joint_detect,
                        sic_detect_user1, uncoded_ml_detect)
from .product import PowerPair, as_power_pair, tensor_product
from .trellis import Constellation, Trellis, build_ungerboeck_4state, common_tail, encode, psk8, qpsk

__all__ = [
    "SCHEMES",
    "BERRecord",
    "ChannelParams",
    "SchemeConfig",
    "apply_channel",
    "binomial_sigma",
    "records_to_csv",
    "run_ber",
    "transmit",
    "transmit_tcma",
    "write_csv",
]

SCHEMES = ("TC-NOMA-joint", "TC-NOMA-separate", "TC-NOMA-joint-rotate", "TCMA", "UC-NOMA")
ROTATE_SCHEMES = ("TC-NOMA-joint-rotate", "TCMA")
DEFAULT_ROTATION = math.pi / 8

CSV_FIELDS = ("scheme", "snr_db", "p1", "p2", "ber_user1", "ber_user2", "ber_avg", "frames", "seed",
              "ber_user_mean", "info_bits_per_user")

# (b0, b1) -> qpsk index, inverse of QPSK_GRAY_BITS
_GRAY_INDEX = np.zeros((2, 2), dtype=np.int64)
for _m, (_b0, _b1) in enumerate(QPSK_GRAY_BITS):
    _GRAY_INDEX[_b0, _b1] = _m


def transmit(a1, a2, powers) -> np.ndarray:
    """Superposition ``sqrt(p1)*a1 + sqrt(p2)*a2``."""
    a1, a2 = np.asarray(a1), np.asarray(a2)
    if a1.shape != a2.shape:
        raise ValueError(f"symbol streams differ in length: {a1.shape} vs {a2.shape}")
    pp = as_power_pair(powers)
    return math.sqrt(pp.p1) * a1 + math.sqrt(pp.p2) * a2


def transmit_tcma(a1, a2, powers) -> np.ndarray:
    """Equal-power superposition ``sqrt((p1 + p2)/2) * (a1 + a2)``."""
    a1, a2 = np.asarray(a1), np.asarray(a2)
    if a1.shape != a2.shape:
        raise ValueError(f"symbol streams differ in length: {a1.shape} vs {a2.shape}")
    pp = as_power_pair(powers)
    return math.sqrt(pp.total / 2) * (a1 + a2)


@dataclass(frozen=True)
class ChannelParams:
    h1: complex = math.sqrt(2.0)
    h2: complex = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if not abs(self.h1) ** 2 > abs(self.h2) ** 2:
            raise ValueError(f"need |h1|^2 > |h2|^2, got {abs(self.h1) ** 2} and {abs(self.h2) ** 2}")
        if not self.sigma2 > 0:
            raise ValueError(f"noise variance must be positive, got {self.sigma2}")

    def gain(self, user: int) -> complex:
        if user not in (1, 2):
            raise ValueError(f"user must be 1 or 2, got {user}")
        return self.h1 if user == 1 else self.h2

    def at_snr_db(self, snr_db: float) -> "ChannelParams":
        return replace(self, sigma2=10.0 ** (-snr_db / 10.0))


def apply_channel(x, params: ChannelParams, user: int, rng: np.random.Generator) -> ReceivedFrame:
    """``y = h_user * x + w`` with ``w ~ CN(0, sigma2)``."""
    x = np.asarray(x, dtype=np.complex128)
    h = params.gain(user)
    w = rng.standard_normal((2, x.size))
    noise = math.sqrt(params.sigma2 / 2) * (w[0] + 1j * w[1])
    return ReceivedFrame(h * x + noise, h, params.sigma2)


@dataclass(frozen=True)
class SchemeConfig:
    """One transmission/detection scheme.

    ``rotation`` turns User 1's constellation; it defaults to pi/8 for the
    rotate and TCMA schemes and must be 0 for the others.
    """

    scheme: str
    powers: PowerPair
    rotation: float | None = None
    trellis1: Trellis | None = None
    trellis2: Trellis | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        object.__setattr__(self, "powers", as_power_pair(self.powers).require_ordered())
        if self.rotation is None:
            object.__setattr__(self, "rotation", DEFAULT_ROTATION if self.scheme in ROTATE_SCHEMES else 0.0)
        elif self.rotation != 0 and self.scheme not in ROTATE_SCHEMES:
            raise ValueError(f"scheme {self.scheme} does not take a constellation rotation")
        if self.scheme == "UC-NOMA" and (self.trellis1 or self.trellis2):
            raise ValueError("UC-NOMA is uncoded and takes no trellis")
        if self.scheme != "UC-NOMA":
            t1 = self.trellis1 or build_ungerboeck_4state()
            object.__setattr__(self, "trellis1", t1)
            object.__setattr__(self, "trellis2", self.trellis2 or t1)

    @property
    def coded(self) -> bool:
        return self.scheme != "UC-NOMA"

    def constellations(self) -> tuple[Constellation, Constellation]:
        if self.coded:
            return psk8(self.rotation), psk8()
        return qpsk(), qpsk()

    def bits_per_frame(self, frame_len_steps: int) -> tuple[int, int]:
        if not self.coded:
            return 2 * frame_len_steps, 2 * frame_len_steps
        return (self.trellis1.bits_per_step * frame_len_steps, self.trellis2.bits_per_step * frame_len_steps)


@dataclass(frozen=True)
class BERRecord:
    scheme: str
    snr_db: float
    p1: float
    p2: float
    ber_user1: float
    ber_user2: float
    ber_avg: float
    frames: int
    info_bits_counted: int
    seed: int
    errors_user1: int = 0
    errors_user2: int = 0
    bits_user1: int = 0
    bits_user2: int = 0

    @property
    def ber_user_mean(self) -> float:
        return 0.5 * (self.ber_user1 + self.ber_user2)

    def as_row(self) -> dict:
        return {
            "scheme": self.scheme, "snr_db": repr(float(self.snr_db)),
            "p1": repr(self.p1), "p2": repr(self.p2),
            "ber_user1": repr(self.ber_user1), "ber_user2": repr(self.ber_user2),
            "ber_avg": repr(self.ber_avg), "frames": self.frames, "seed": self.seed,
            "ber_user_mean": repr(self.ber_user_mean), "info_bits_per_user": self.bits_user1,
        }


def binomial_sigma(ber: float, n: int) -> float:
    return math.sqrt(max(ber * (1 - ber), 0.0) / n) if n else math.inf


@dataclass
class _FrameJob:
    cfg: SchemeConfig
    channel: ChannelParams
    snrs: tuple[float, ...]
    frame_len: int
    seed: int
    frames: range = field(default_factory=lambda: range(0))


def _frame_rng(seed: int, frame: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, frame, stream]))


def _run_frames(job: _FrameJob) -> np.ndarray:
    """Error counts ``[snr, user]`` over ``job.frames``."""
    cfg = job.cfg
    c1, c2 = cfg.constellations()
    n = job.frame_len
    nb1, nb2 = cfg.bits_per_frame(n)
    chans = [job.channel.at_snr_db(s) for s in job.snrs]
    errors = np.zeros((len(job.snrs), 2), dtype=np.int64)
    pt = None
    if cfg.scheme in ("TC-NOMA-joint", "TC-NOMA-joint-rotate"):
        pt = tensor_product(cfg.trellis1, cfg.trellis2, cfg.powers, c1, c2)
    elif cfg.scheme == "TCMA":
        half = cfg.powers.total / 2
        pt = tensor_product(cfg.trellis1, cfg.trellis2, PowerPair(half, half), c1, c2)
    tail = common_tail(cfg.trellis1, cfg.trellis2) if cfg.coded else 0

    for f in job.frames:
        rng = _frame_rng(job.seed, f, 0)
        bits1 = rng.integers(0, 2, nb1, dtype=np.int8)
        bits2 = rng.integers(0, 2, nb2, dtype=np.int8)
        if cfg.coded:
            a1, _ = encode(cfg.trellis1, bits1, c1, tail)
            a2, _ = encode(cfg.trellis2, bits2, c2, tail)
        else:
            a1 = c1.array[_GRAY_INDEX[bits1[0::2], bits1[1::2]]]
            a2 = c2.array[_GRAY_INDEX[bits2[0::2], bits2[1::2]]]
        x = transmit_tcma(a1, a2, cfg.powers) if cfg.scheme == "TCMA" else transmit(a1, a2, cfg.powers)

        for k, ch in enumerate(chans):
            rx1 = apply_channel(x, ch, 1, _frame_rng(job.seed, f, 1))
            rx2 = apply_channel(x, ch, 2, _frame_rng(job.seed, f, 2))
            if pt is not None:
                hat1 = joint_detect(pt, rx1, tail).bits_user1
                hat2 = joint_detect(pt, rx2, tail).bits_user2
            elif cfg.scheme == "TC-NOMA-separate":
                hat1 = sic_detect_user1(cfg.trellis1, cfg.trellis2, rx1, cfg.powers, c1, c2, tail).bits_user1
                hat2 = detect_user2_direct(cfg.trellis2, rx2, cfg.powers, c2, tail).bits_user2
            else:
                hat1 = uncoded_ml_detect(rx1, cfg.powers, c1, c2).bits_user1
                hat2 = uncoded_ml_detect(rx2, cfg.powers, c1, c2).bits_user2
            errors[k, 0] += int(np.count_nonzero(hat1 != bits1))
            errors[k, 1] += int(np.count_nonzero(hat2 != bits2))
    return errors


def _chunks(frames: int, parts: int) -> list[range]:
    edges = np.linspace(0, frames, parts + 1).astype(int)
    return [range(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_ber(scheme: SchemeConfig, channel: ChannelParams, snr_list_db: Sequence[float], frames: int,
            frame_len_steps: int = 500, seed: int = 0, workers: int = 1) -> list[BERRecord]:
    """Measure per-user and pooled BER at each SNR (``SNR = 1/sigma^2``).

    ``channel.sigma2`` is ignored; the SNR list sets the noise level.
    Termination tail symbols are transmitted but never counted.
    """
    if frames < 1 or frame_len_steps < 1:
        raise ValueError("frames and frame_len_steps must be at least 1")
    snrs = tuple(float(s) for s in snr_list_db)
    if not snrs:
        raise ValueError("empty SNR list")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    job = _FrameJob(scheme, channel, snrs, frame_len_steps, seed)
    if workers > 1 and frames > 1:
        jobs = [replace(job, frames=r) for r in _chunks(frames, workers * 4)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            errors = sum(pool.map(_run_frames, jobs))
    else:
        errors = _run_frames(replace(job, frames=range(frames)))

    nb1, nb2 = scheme.bits_per_frame(frame_len_steps)
    n1, n2 = nb1 * frames, nb2 * frames
    out = []
    for k, snr in enumerate(snrs):
        e1, e2 = int(errors[k, 0]), int(errors[k, 1])
        out.append(BERRecord(
            scheme.scheme, snr, scheme.powers.p1, scheme.powers.p2,
            e1 / n1, e2 / n2, (e1 + e2) / (n1 + n2), frames, n1 + n2, seed,
            e1, e2, n1, n2,
        ))
    return out


def records_to_csv(records: Iterable[BERRecord]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.as_row())
    return buf.getvalue()


def write_csv(records: Iterable[BERRecord], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(records_to_csv(records))
    return path
