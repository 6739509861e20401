"""Finite unions of closed intervals stored as sorted, disjoint endpoint arrays."""
from __future__ import annotations

import math

import numpy as np


class IntervalSet:
    """Sorted disjoint closed intervals; touching or overlapping inputs are merged."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo=(), hi=(), *, normalized: bool = False):
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError("endpoint arrays differ in length")
        if np.any(hi < lo):
            raise ValueError("interval with right end below left end")
        if not normalized:
            lo, hi = _normalize(lo, hi)
        self.lo = lo
        self.hi = hi

    @classmethod
    def from_pairs(cls, pairs) -> "IntervalSet":
        pairs = list(pairs)
        if not pairs:
            return cls()
        a = np.asarray(pairs, dtype=float)
        return cls(a[:, 0], a[:, 1])

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls()

    def __len__(self):
        return len(self.lo)

    def __iter__(self):
        return iter(zip(self.lo.tolist(), self.hi.tolist()))

    def __repr__(self):
        head = ", ".join(f"[{a:.6g}, {b:.6g}]" for a, b in list(self)[:4])
        more = "" if len(self) <= 4 else f", ... ({len(self)} intervals)"
        return f"IntervalSet({head}{more})"

    def __eq__(self, other):
        return (isinstance(other, IntervalSet) and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi))

    @property
    def measure(self) -> float:
        return math.fsum((self.hi - self.lo).tolist())

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(np.concatenate([self.lo, other.lo]), np.concatenate([self.hi, other.hi]))

    __or__ = union

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        """Two-pointer sweep over both sorted lists."""
        a_lo, a_hi, b_lo, b_hi = self.lo, self.hi, other.lo, other.hi
        out_lo, out_hi = [], []
        i = j = 0
        while i < len(a_lo) and j < len(b_lo):
            lo = max(a_lo[i], b_lo[j])
            hi = min(a_hi[i], b_hi[j])
            if lo <= hi:
                out_lo.append(lo)
                out_hi.append(hi)
            if a_hi[i] < b_hi[j]:
                i += 1
            else:
                j += 1
        return IntervalSet(out_lo, out_hi)

    __and__ = intersection

    def clip(self, lo: float, hi: float) -> "IntervalSet":
        a = np.maximum(self.lo, lo)
        b = np.minimum(self.hi, hi)
        keep = b >= a
        return IntervalSet(a[keep], b[keep], normalized=True)

    def contains(self, x: float) -> bool:
        k = np.searchsorted(self.lo, x, side="right") - 1
        return bool(k >= 0 and x <= self.hi[k])

    def cells_meeting(self, eps: float, anchor: float, end: float) -> int:
        """Number of cells [anchor + k eps, anchor + (k+1) eps) inside [anchor, end] meeting the set."""
        s = self.clip(anchor, end)
        if len(s) == 0:
            return 0
        ncell = int(math.ceil((end - anchor) / eps - 1e-12))
        first = np.clip(np.floor((s.lo - anchor) / eps).astype(np.int64), 0, ncell - 1)
        last = np.clip(np.floor((s.hi - anchor) / eps).astype(np.int64), 0, ncell - 1)
        # count the union of integer ranges [first, last]
        total = 0
        cur_a, cur_b = int(first[0]), int(last[0])
        for a, b in zip(first[1:].tolist(), last[1:].tolist()):
            if a <= cur_b + 0:
                cur_b = max(cur_b, b)
            else:
                total += cur_b - cur_a + 1
                cur_a, cur_b = a, b
        total += cur_b - cur_a + 1
        return total

    def to_list(self) -> list:
        return list(self)


def _normalize(lo: np.ndarray, hi: np.ndarray):
    if len(lo) == 0:
        return lo.copy(), hi.copy()
    order = np.argsort(lo, kind="stable")
    lo = lo[order]
    hi = hi[order]
    run_hi = np.maximum.accumulate(hi)
    start = np.ones(len(lo), dtype=bool)
    start[1:] = lo[1:] > run_hi[:-1]
    idx = np.nonzero(start)[0]
    ends = np.append(idx[1:] - 1, len(lo) - 1)
    return lo[idx], run_hi[ends]


def union_intersect_measure(balls, J: tuple) -> IntervalSet:
    """(union of closed balls [c - r, c + r]) intersected with J, merged by a sorted sweep."""
    b = np.asarray(list(balls), dtype=float).reshape(-1, 2)
    if np.any(b[:, 1] < 0):
        raise ValueError("negative radius")
    return IntervalSet(b[:, 0] - b[:, 1], b[:, 0] + b[:, 1]).clip(float(J[0]), float(J[1]))
