"""Constellations, regular trellises and TCM encoding with termination.

A :class:`Trellis` is a table of branches. Every state has the same number
of outgoing branches and every branch carries the same number of parallel
labels (constellation point indices). Per trellis step the encoder consumes
the branch input bits followed by the bits selecting the parallel label
(big-endian parallel index).

The tabular text format used by :func:`load_trellis` / :func:`dump_trellis`
has one branch per line::

    # state  input  next  labels...
    0        0      0     0 4
    0        1      1     2 6

``input`` is a string of 0/1 characters (``-`` for a branch without input
bits). Blank lines and ``#`` comments are ignored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels

__all__ = [
    "Branch",
    "Constellation",
    "InfoFrame",
    "Trellis",
    "build_ungerboeck_4state",
    "common_tail",
    "dump_trellis",
    "encode",
    "load_trellis",
    "psk",
    "psk8",
    "psk_point",
    "qpsk",
    "trivial_trellis",
]


def psk_point(m: int, rotation: float = 0.0) -> complex:
    """Return the 8-PSK point ``exp(j(m*pi/4 + rotation))``."""
    if not 0 <= int(m) <= 7 or int(m) != m:
        raise ValueError(f"8-PSK index must be an integer in 0..7, got {m!r}")
    return complex(np.exp(1j * (m * np.pi / 4 + rotation)))


@dataclass(frozen=True)
class Constellation:
    """Ordered unit-energy points; ``rotation`` is already applied to them."""

    points: tuple[complex, ...]
    rotation: float = 0.0
    name: str = ""

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValueError("constellation needs at least one point")
        for p in pts:
            if abs(abs(p) - 1.0) > 1e-12:
                raise ValueError(f"constellation point {p} does not have unit magnitude")
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if abs(pts[i] - pts[j]) < 1e-12:
                    raise ValueError(f"constellation points {i} and {j} coincide")

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, m: int) -> complex:
        return self.points[m]

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=np.complex128)


def psk(order: int, rotation: float = 0.0, offset: float = 0.0) -> Constellation:
    """M-PSK with point m at ``exp(j(offset + 2*pi*m/order + rotation))``."""
    pts = np.exp(1j * (offset + 2 * np.pi * np.arange(order) / order + rotation))
    return Constellation(tuple(pts), rotation=rotation, name=f"{order}-PSK")


def psk8(rotation: float = 0.0) -> Constellation:
    return Constellation(
        tuple(psk_point(m, rotation) for m in range(8)), rotation=rotation, name="8-PSK"
    )


def qpsk(rotation: float = 0.0) -> Constellation:
    """4-PSK on the diagonals, point m at ``exp(j(pi/4 + m*pi/2))``.

    Consecutive indices are adjacent on the circle; see
    :data:`tcnoma.detectors.QPSK_GRAY_BITS` for the bit labels.
    """
    c = psk(4, rotation=rotation, offset=np.pi / 4)
    return Constellation(c.points, rotation=rotation, name="4-PSK")


@dataclass(frozen=True)
class Branch:
    input_bits: tuple[int, ...]
    next_state: int
    labels: tuple[int, ...]

    @property
    def parallel_select_bits(self) -> int:
        return int(math.log2(len(self.labels)))


@dataclass(frozen=True)
class Trellis:
    """Regular trellis. ``edges[s]`` lists the branches leaving state ``s``."""

    num_states: int
    edges: tuple[tuple[Branch, ...], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        edges = tuple(tuple(bs) for bs in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.num_states < 1 or len(edges) != self.num_states:
            raise ValueError("edges must list the branches of every state")
        nb = len(edges[0])
        if nb == 0:
            raise ValueError("every state needs at least one branch")
        m = len(edges[0][0].labels)
        k = len(edges[0][0].input_bits)
        if m & (m - 1):
            raise ValueError("parallel multiplicity must be a power of two")
        if nb != 2**k:
            raise ValueError(f"{nb} branches per state do not match {k} input bits")
        for s, bs in enumerate(edges):
            if len(bs) != nb:
                raise ValueError(f"state {s} has {len(bs)} branches, expected {nb}")
            seen = set()
            for b in bs:
                if len(b.labels) != m or len(b.input_bits) != k:
                    raise ValueError(f"irregular branch at state {s}: {b}")
                if not 0 <= b.next_state < self.num_states:
                    raise ValueError(f"next state {b.next_state} out of range at state {s}")
                if any(bit not in (0, 1) for bit in b.input_bits):
                    raise ValueError(f"non-binary input bits at state {s}: {b.input_bits}")
                seen.add(b.input_bits)
            if len(seen) != nb:
                raise ValueError(f"state {s} has duplicate branch inputs")
        reach = self._reachable_from_zero()
        if len(reach) != self.num_states:
            raise ValueError(f"states {sorted(set(range(self.num_states)) - reach)} unreachable from 0")
        # raises if some state cannot be driven back to 0
        self.termination_depth  # noqa: B018

    def _reachable_from_zero(self) -> set[int]:
        seen, todo = {0}, [0]
        while todo:
            s = todo.pop()
            for b in self.edges[s]:
                if b.next_state not in seen:
                    seen.add(b.next_state)
                    todo.append(b.next_state)
        return seen

    @property
    def branches_per_state(self) -> int:
        return len(self.edges[0])

    @property
    def parallel(self) -> int:
        return len(self.edges[0][0].labels)

    @property
    def input_bits(self) -> int:
        return len(self.edges[0][0].input_bits)

    @property
    def parallel_select_bits(self) -> int:
        return self.edges[0][0].parallel_select_bits

    @property
    def bits_per_step(self) -> int:
        return self.input_bits + self.parallel_select_bits

    @property
    def num_edges(self) -> int:
        """Edge count including parallel transitions."""
        return self.num_states * self.branches_per_state * self.parallel

    @cached_property
    def next_state(self) -> np.ndarray:
        ns = np.array([[b.next_state for b in bs] for bs in self.edges], dtype=np.int32)
        ns.flags.writeable = False
        return ns

    @cached_property
    def label_index(self) -> np.ndarray:
        li = np.array([[b.labels for b in bs] for bs in self.edges], dtype=np.int64)
        li.flags.writeable = False
        return li

    @cached_property
    def branch_of_input(self) -> np.ndarray:
        """``[state, input_int]`` -> branch index (input bits read big-endian)."""
        out = np.empty((self.num_states, self.branches_per_state), dtype=np.int32)
        for s, bs in enumerate(self.edges):
            for i, b in enumerate(bs):
                out[s, _bits_to_int(b.input_bits)] = i
        out.flags.writeable = False
        return out

    @cached_property
    def branch_bits(self) -> np.ndarray:
        """``[state, branch, :]`` -> input bits of that branch."""
        out = np.zeros((self.num_states, self.branches_per_state, self.input_bits), dtype=np.int8)
        for s, bs in enumerate(self.edges):
            for i, b in enumerate(bs):
                out[s, i, :] = b.input_bits
        return out

    @cached_property
    def parallel_bits(self) -> np.ndarray:
        """``[parallel_index, :]`` -> bits selecting that parallel label."""
        k = self.parallel_select_bits
        return np.array(
            [[(m >> (k - 1 - j)) & 1 for j in range(k)] for m in range(self.parallel)],
            dtype=np.int8,
        ).reshape(self.parallel, k)

    def _exact_reach(self, steps: int) -> list[set[int]]:
        """``reach[k]``: states that reach state 0 in exactly k steps."""
        reach = [{0}]
        for _ in range(steps):
            prev = reach[-1]
            reach.append(
                {s for s in range(self.num_states) if any(b.next_state in prev for b in self.edges[s])}
            )
        return reach

    @cached_property
    def termination_depth(self) -> int:
        """Smallest tail length that drives every state to 0."""
        reach = self._exact_reach(self.num_states)
        for t, r in enumerate(reach):
            if len(r) == self.num_states:
                return t
        raise ValueError(f"trellis {self.name!r}: not every state can be driven to 0 "
                         f"in a common number of steps <= {self.num_states}")

    def tail_table(self, length: int) -> np.ndarray:
        """``[tail_step, state]`` -> branch forced during termination, -1 if none.

        The lowest-index branch that can still reach state 0 in the remaining
        number of steps is chosen; the parallel label is always index 0.
        """
        reach = self._exact_reach(length)
        out = np.full((length, self.num_states), -1, dtype=np.int32)
        for i in range(length):
            remaining = length - i
            for s in range(self.num_states):
                for bi, b in enumerate(self.edges[s]):
                    if b.next_state in reach[remaining - 1]:
                        out[i, s] = bi
                        break
        if length and (out[0] < 0).any():
            raise ValueError(f"tail of length {length} cannot terminate every state")
        return out

    def symbol_indices(self, states: np.ndarray, branches: np.ndarray, parallel: np.ndarray) -> np.ndarray:
        return self.label_index[states[:-1], branches, parallel]

    def path_bits(self, states: np.ndarray, branches: np.ndarray, parallel: np.ndarray) -> np.ndarray:
        """Information bits of a path, ``bits_per_step`` per step."""
        ib = self.branch_bits[states[: len(branches)], branches]
        pb = self.parallel_bits[parallel]
        return np.concatenate([ib, pb], axis=1).reshape(-1).astype(np.int8)


def _bits_to_int(bits: Sequence[int]) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


@dataclass(frozen=True)
class InfoFrame:
    """Information bits for ``length`` trellis steps."""

    bits: np.ndarray
    length: int

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.int8).reshape(-1)
        object.__setattr__(self, "bits", bits)
        if self.length < 1:
            raise ValueError("a frame needs at least one trellis step")
        if bits.size % self.length:
            raise ValueError(f"{bits.size} bits do not split into {self.length} steps")
        if ((bits != 0) & (bits != 1)).any():
            raise ValueError("frame bits must be 0/1")

    @classmethod
    def from_bits(cls, bits, bits_per_step: int) -> "InfoFrame":
        bits = np.asarray(bits, dtype=np.int8).reshape(-1)
        if bits.size == 0 or bits.size % bits_per_step:
            raise ValueError(f"{bits.size} bits is not a positive multiple of {bits_per_step}")
        return cls(bits, bits.size // bits_per_step)


def common_tail(*trellises: Trellis) -> int:
    return max(t.termination_depth for t in trellises)


def encode_path(trellis: Trellis, bits, tail: int | None = None, n_steps: int | None = None):
    """Walk the trellis for ``bits`` plus termination.

    Returns ``(states, branches, parallel)``; ``states`` has one more entry
    than the others and ends at 0. ``n_steps`` is only needed for a
    trellis that carries no bits.
    """
    if trellis.bits_per_step == 0:
        if n_steps is None:
            raise ValueError("a zero-bit trellis needs an explicit step count")
        frame = InfoFrame(np.zeros(0, dtype=np.int8), n_steps) if n_steps else None
    else:
        frame = bits if isinstance(bits, InfoFrame) else InfoFrame.from_bits(bits, trellis.bits_per_step)
        if frame.bits.size != frame.length * trellis.bits_per_step:
            raise ValueError(
                f"frame carries {frame.bits.size // frame.length} bits per step, "
                f"trellis consumes {trellis.bits_per_step}"
            )
        if n_steps is not None and n_steps != frame.length:
            raise ValueError(f"frame has {frame.length} steps, expected {n_steps}")
    tail = trellis.termination_depth if tail is None else tail
    length = frame.length if frame is not None else 0
    per_step = (frame.bits if frame is not None else np.zeros(0, np.int8)).reshape(
        length, trellis.bits_per_step).astype(np.int64)
    k = trellis.input_bits
    inputs = per_step[:, :k] @ (1 << np.arange(k - 1, -1, -1, dtype=np.int64))
    kp = trellis.parallel_select_bits
    par = (per_step[:, k:] @ (1 << np.arange(kp - 1, -1, -1, dtype=np.int64))).astype(np.int32)
    states, branches = kernels.walk(
        np.ascontiguousarray(trellis.branch_of_input),
        np.ascontiguousarray(trellis.next_state),
        np.ascontiguousarray(inputs, dtype=np.int32),
        np.ascontiguousarray(trellis.tail_table(tail)),
    )
    parallel = np.concatenate([par, np.zeros(tail, dtype=np.int32)])
    return states, branches, parallel


def encode(trellis: Trellis, frame, constellation: Constellation, tail: int | None = None):
    """TCM-encode a frame starting and ending at state 0.

    ``frame`` is an :class:`InfoFrame` or a flat 0/1 array. ``tail``
    defaults to the trellis termination depth; tail steps use the forced
    branch with parallel index 0. Returns ``(symbols, state_path)``.
    """
    states, branches, parallel = encode_path(trellis, frame, tail)
    idx = trellis.symbol_indices(states, branches, parallel)
    if idx.size and idx.max() >= len(constellation):
        raise ValueError("trellis labels exceed the constellation size")
    return constellation.array[idx], states


def build_ungerboeck_4state() -> Trellis:
    """The 4-state 8-PSK Ungerboeck code.

    Subsets A={0,4}, B={2,6}, C={1,5}, D={3,7}; the uncoded bit picks the
    lower index (0) or the antipodal one (1).
    """
    A, B, C, D = (0, 4), (2, 6), (1, 5), (3, 7)
    table = {
        0: ((0, A), (1, B)),
        1: ((2, C), (3, D)),
        2: ((0, B), (1, A)),
        3: ((2, D), (3, C)),
    }
    edges = tuple(
        tuple(Branch((x1,), nxt, labels) for x1, (nxt, labels) in enumerate(table[s]))
        for s in range(4)
    )
    return Trellis(4, edges, name="ungerboeck-4state-8psk")


def trivial_trellis() -> Trellis:
    """One state, one branch, one label (index 0); carries no bits."""
    return Trellis(1, ((Branch((), 0, (0,)),),), name="trivial")


def load_trellis(source: str | Path, name: str | None = None) -> Trellis:
    """Parse the tabular trellis format from a path or a text block."""
    if isinstance(source, Path) or ("\n" not in source and Path(source).exists()):
        path = Path(source)
        text = path.read_text()
        name = name or path.stem
    else:
        text = source
    rows: dict[int, list[Branch]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 4:
            raise ValueError(f"line {lineno}: expected 'state input next label...', got {raw!r}")
        try:
            state, nxt = int(parts[0]), int(parts[2])
            labels = tuple(int(p) for p in parts[3:])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        inp = "" if parts[1] == "-" else parts[1]
        if set(inp) - {"0", "1"}:
            raise ValueError(f"line {lineno}: input bits must be 0/1, got {parts[1]!r}")
        rows.setdefault(state, []).append(Branch(tuple(int(c) for c in inp), nxt, labels))
    if not rows:
        raise ValueError("no branches found")
    n = max(rows) + 1
    if sorted(rows) != list(range(n)):
        raise ValueError(f"states must be numbered 0..{n - 1}")
    edges = tuple(tuple(sorted(rows[s], key=lambda b: _bits_to_int(b.input_bits))) for s in range(n))
    return Trellis(n, edges, name=name or "")


def dump_trellis(trellis: Trellis) -> str:
    lines = ["# state  input  next  labels"]
    for s, bs in enumerate(trellis.edges):
        for b in bs:
            inp = "".join(map(str, b.input_bits)) or "-"
            lines.append(f"{s} {inp} {b.next_state} " + " ".join(map(str, b.labels)))
    return "\n".join(lines) + "\n"
