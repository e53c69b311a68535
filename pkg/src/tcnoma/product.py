"""Tensor product of two trellises with superimposed, power-weighted labels.

Product state ``s1 * r2 + s2``; product branch ``b1 * B2 + b2``; parallel
label ``m1 * M2 + m2``. Each product label is ``sqrt(p1)*c1[u] + sqrt(p2)*c2[v]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .trellis import Constellation, Trellis, psk8

__all__ = ["PowerPair", "ProductBranch", "ProductTrellis", "complexity_estimate", "tensor_product"]


@dataclass(frozen=True)
class PowerPair:
    """Transmit powers of User 1 (weak signal) and User 2.

    Non-negativity and the optional budget are always enforced. The NOMA
    ordering ``0 < p1 < p2`` is checked by :meth:`require_ordered`; sweep
    endpoints, the equal-power TCMA superposition and single-user
    degenerate cases need the relaxed form.
    """

    p1: float
    p2: float
    budget: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "p1", float(self.p1))
        object.__setattr__(self, "p2", float(self.p2))
        if not (math.isfinite(self.p1) and math.isfinite(self.p2)):
            raise ValueError("powers must be finite")
        if self.p1 < 0 or self.p2 < 0:
            raise ValueError(f"powers must be non-negative, got ({self.p1}, {self.p2})")
        if self.budget is not None and self.p1 + self.p2 > self.budget * (1 + 1e-12):
            raise ValueError(f"p1 + p2 = {self.p1 + self.p2} exceeds budget {self.budget}")

    def require_ordered(self) -> "PowerPair":
        if not 0 < self.p1 < self.p2:
            raise ValueError(f"NOMA powers need 0 < p1 < p2, got ({self.p1}, {self.p2})")
        return self

    @property
    def total(self) -> float:
        return self.p1 + self.p2

    @property
    def ratio(self) -> float:
        return self.p1 / self.p2

    def scaled(self, alpha: float) -> "PowerPair":
        return PowerPair(alpha * self.p1, alpha * self.p2)

    @classmethod
    def from_ratio(cls, ratio: float, budget: float = 1.0) -> "PowerPair":
        p1 = ratio / (1.0 + ratio) * budget
        return cls(p1, budget - p1)


def as_power_pair(powers) -> PowerPair:
    return powers if isinstance(powers, PowerPair) else PowerPair(*powers)


class ProductBranch(NamedTuple):
    next_state: int
    labels: tuple[complex, ...]
    # (b1, m1, b2, m2) for each label
    refs: tuple[tuple[int, int, int, int], ...]


@dataclass(frozen=True, eq=False)
class ProductTrellis:
    t1: Trellis
    t2: Trellis
    powers: PowerPair
    c1: Constellation
    c2: Constellation
    next_state: np.ndarray
    labels: np.ndarray

    @property
    def num_states(self) -> int:
        return self.t1.num_states * self.t2.num_states

    @property
    def branches_per_state(self) -> int:
        return self.t1.branches_per_state * self.t2.branches_per_state

    @property
    def parallel(self) -> int:
        return self.t1.parallel * self.t2.parallel

    @property
    def termination_depth(self) -> int:
        return max(self.t1.termination_depth, self.t2.termination_depth)

    def split_state(self, s):
        return np.divmod(s, self.t2.num_states)

    def split_branch(self, b):
        return np.divmod(b, self.t2.branches_per_state)

    def split_parallel(self, m):
        return np.divmod(m, self.t2.parallel)

    def tail_table(self, length: int) -> np.ndarray:
        tb1, tb2 = self.t1.tail_table(length), self.t2.tail_table(length)
        out = tb1[:, :, None] * self.t2.branches_per_state + tb2[:, None, :]
        out[(tb1[:, :, None] < 0) | (tb2[:, None, :] < 0)] = -1
        return np.ascontiguousarray(out.reshape(length, self.num_states), dtype=np.int32)

    @cached_property
    def edges(self) -> tuple[tuple[ProductBranch, ...], ...]:
        B2, M2 = self.t2.branches_per_state, self.t2.parallel
        out = []
        for s in range(self.num_states):
            row = []
            for b in range(self.branches_per_state):
                b1, b2 = divmod(b, B2)
                refs = tuple((b1, m // M2, b2, m % M2) for m in range(self.parallel))
                row.append(ProductBranch(int(self.next_state[s, b]),
                                         tuple(complex(v) for v in self.labels[s, b]), refs))
            out.append(tuple(row))
        return tuple(out)

    def state_name(self, s: int) -> str:
        """Binary name: T1 state bits then T2 state bits (``"1100"`` = (3, 0))."""
        w1 = max(1, (self.t1.num_states - 1).bit_length())
        w2 = max(1, (self.t2.num_states - 1).bit_length())
        s1, s2 = divmod(int(s), self.t2.num_states)
        return f"{s1:0{w1}b}{s2:0{w2}b}"

    def dump(self) -> str:
        """One line per product edge, for golden files."""
        lines = []
        for s, row in enumerate(self.edges):
            for b, br in enumerate(row):
                labs = " ".join(f"{v.real:+.6f}{v.imag:+.6f}j" for v in br.labels)
                lines.append(f"{s:>3} {b:>2} -> {br.next_state:>3} : {labs}")
        return "\n".join(lines) + "\n"


def tensor_product(t1: Trellis, t2: Trellis, powers, c1: Constellation | None = None,
                   c2: Constellation | None = None) -> ProductTrellis:
    """Build ``t1 (x) t2`` with labels ``sqrt(p1)*u + sqrt(p2)*v``."""
    powers = as_power_pair(powers)
    c1 = psk8() if c1 is None else c1
    c2 = psk8() if c2 is None else c2
    if t1.label_index.max() >= len(c1) or t2.label_index.max() >= len(c2):
        raise ValueError("trellis labels exceed the constellation size")
    r1, r2 = t1.num_states, t2.num_states
    B1, B2 = t1.branches_per_state, t2.branches_per_state
    M1, M2 = t1.parallel, t2.parallel
    ns1, ns2 = t1.next_state, t2.next_state
    # [s1, s2, b1, b2]
    ns = ns1[:, None, :, None] * r2 + ns2[None, :, None, :]
    next_state = np.ascontiguousarray(ns.reshape(r1 * r2, B1 * B2), dtype=np.int32)

    u = math.sqrt(powers.p1) * c1.array[t1.label_index]  # [s1, b1, m1]
    v = math.sqrt(powers.p2) * c2.array[t2.label_index]  # [s2, b2, m2]
    lab = u[:, None, :, None, :, None] + v[None, :, None, :, None, :]  # [s1,s2,b1,b2,m1,m2]
    labels = np.ascontiguousarray(lab.reshape(r1 * r2, B1 * B2, M1 * M2))
    next_state.flags.writeable = False
    labels.flags.writeable = False
    return ProductTrellis(t1, t2, powers, c1, c2, next_state, labels)


def complexity_estimate(t1: Trellis, t2: Trellis, n: int, mode: str = "joint") -> int:
    """Operation count ``N(K1K2 + L1L2)`` (joint) or ``N(K1+K2+L1+L2)`` (separate).

    ``L`` counts every edge including parallel transitions.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    k1, k2 = t1.num_states, t2.num_states
    l1, l2 = t1.num_edges, t2.num_edges
    if mode == "joint":
        return n * (k1 * k2 + l1 * l2)
    if mode == "separate":
        return n * (k1 + k2 + l1 + l2)
    raise ValueError(f"mode must be 'joint' or 'separate', got {mode!r}")
