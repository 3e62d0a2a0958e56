"""Replay storage: uniform ring buffer and TD-error prioritized buffer.

Sampled indices are global insertion counters, so a priority update that
arrives after the slot was overwritten can be recognised and skipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractViolation

PRIORITY_FLOOR = 1e-6


@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    done: bool
    mask_next: np.ndarray | None = None


class UniformBuffer:
    """FIFO ring buffer with uniform sampling with replacement."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ContractViolation("capacity must be >= 1")
        self.capacity = int(capacity)
        self.size = 0
        self.inserted = 0
        self._data = None
        self._stamp = np.full(self.capacity, -1, dtype=np.int64)

    def __len__(self):
        return self.size

    def _alloc(self, t: Transition):
        cap = self.capacity
        d = {
            "s": np.zeros((cap, len(t.s))),
            "a": np.zeros((cap, len(t.a))),
            "r": np.zeros(cap),
            "s_next": np.zeros((cap, len(t.s_next))),
            "done": np.zeros(cap),
        }
        if t.mask_next is not None:
            d["mask_next"] = np.zeros((cap, len(t.mask_next)), dtype=bool)
        self._data = d

    def _write(self, t: Transition) -> int:
        if self._data is None:
            self._alloc(t)
        slot = self.inserted % self.capacity
        d = self._data
        d["s"][slot] = t.s
        d["a"][slot] = t.a
        d["r"][slot] = t.r
        d["s_next"][slot] = t.s_next
        d["done"][slot] = float(t.done)
        if "mask_next" in d:
            d["mask_next"][slot] = t.mask_next
        self._stamp[slot] = self.inserted
        self.inserted += 1
        self.size = min(self.size + 1, self.capacity)
        return slot

    def push(self, t: Transition, abs_delta: float | None = None) -> None:
        self._write(t)

    def _gather(self, slots):
        batch = {k: v[slots] for k, v in self._data.items()}
        return batch, self._stamp[slots].copy()

    def _check_nonempty(self):
        if self.size == 0:
            raise ContractViolation("cannot sample from an empty buffer")

    def sample(self, batch: int, rng):
        self._check_nonempty()
        u = rng.random(batch)
        slots = (u * self.size).astype(np.int64)
        np.minimum(slots, self.size - 1, out=slots)
        return self._gather(slots)

    def update_priorities(self, ids, abs_deltas) -> int:
        return 0

    def _live_slot(self, gid) -> int | None:
        slot = int(gid) % self.capacity
        if gid < 0 or self._stamp[slot] != gid:
            return None
        return slot


class PrioritizedBuffer(UniformBuffer):
    """Proportional prioritization: Pr(i) = b_i / sum_j b_j, b_i = max(|delta_i|^alpha, floor)."""

    def __init__(self, capacity: int, alpha: float = 2.0, floor: float = PRIORITY_FLOOR):
        super().__init__(capacity)
        if alpha < 0:
            raise ContractViolation("alpha must be >= 0")
        self.alpha = float(alpha)
        self.floor = float(floor)
        leaves = 1
        while leaves < self.capacity:
            leaves *= 2
        self._leaf_offset = leaves
        self._tree = np.zeros(2 * leaves, dtype=np.float64)

    def priority_of(self, abs_delta: float) -> float:
        return max(abs(float(abs_delta)) ** self.alpha, self.floor)

    def push(self, t: Transition, abs_delta: float | None = None) -> None:
        if abs_delta is None:
            prio = self.max_priority()
        else:
            prio = self.priority_of(abs_delta)
        slot = self._write(t)
        kernels.tree_set(self._tree, self._leaf_offset, slot, prio)

    def max_priority(self) -> float:
        if self.size == 0:
            return 1.0
        return float(self._tree[self._leaf_offset:self._leaf_offset + self.size].max())

    @property
    def total(self) -> float:
        return float(self._tree[1])

    def priorities(self) -> np.ndarray:
        return self._tree[self._leaf_offset:self._leaf_offset + self.size].copy()

    def probabilities(self) -> np.ndarray:
        p = self.priorities()
        return p / p.sum()

    def sample(self, batch: int, rng):
        self._check_nonempty()
        u = rng.random(batch)
        slots = kernels.tree_find(self._tree, self._leaf_offset, u * self._tree[1], self.size)
        return self._gather(slots)

    def update_priorities(self, ids, abs_deltas) -> int:
        """Refresh priorities; returns how many ids were stale and skipped."""
        stale = 0
        for gid, delta in zip(np.asarray(ids).tolist(), np.asarray(abs_deltas, dtype=float).tolist()):
            slot = self._live_slot(gid)
            if slot is None:
                stale += 1
                continue
            kernels.tree_set(self._tree, self._leaf_offset, slot, self.priority_of(delta))
        return stale
