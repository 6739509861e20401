"""numpy-facing driver for the compiled level-set kernels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import kernels as kn
from .elementary import term_table
from .errors import BudgetError
from .forms import DEFAULT_BUDGET
from .funcspace import CurveSystem, as_shift, sup_abs

GRID_K = 32
MULTIPLE_SLOPE = 1e-5   # roots with a smaller relative |G'| are checked for multiplicity
SNAP_RADIUS = 1e-3      # relative to |I|


@dataclass
class Pieces:
    """Sub-intervals [left, right] of the domain, each tied to a row of ``coeffs``."""

    coeffs: np.ndarray
    rows: np.ndarray
    left: np.ndarray
    right: np.ndarray
    cont: np.ndarray  # left end continues the previous piece of the same row

    def __len__(self):
        return len(self.rows)

    def select(self, mask) -> "Pieces":
        return Pieces(self.coeffs, self.rows[mask], self.left[mask], self.right[mask], self.cont[mask])


@dataclass
class Roots:
    coeffs: np.ndarray
    rows: np.ndarray
    levels: np.ndarray
    x: np.ndarray

    def __len__(self):
        return len(self.x)

    def forms(self) -> np.ndarray:
        """Integer coefficient matrix (a0, a1, .., an); a0 = -level."""
        out = np.empty((len(self.x), self.coeffs.shape[1] + 1), dtype=np.int64)
        out[:, 0] = -self.levels
        out[:, 1:] = self.coeffs[self.rows].astype(np.int64)
        return out

    def heights(self) -> np.ndarray:
        return np.abs(self.coeffs[self.rows]).max(axis=1).astype(np.int64)


@dataclass
class Bands:
    coeffs: np.ndarray
    rows: np.ndarray
    levels: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __len__(self):
        return len(self.left)

    def forms(self) -> np.ndarray:
        out = np.empty((len(self.left), self.coeffs.shape[1] + 1), dtype=np.int64)
        out[:, 0] = -self.levels
        out[:, 1:] = self.coeffs[self.rows].astype(np.int64)
        return out

    def heights(self) -> np.ndarray:
        return np.abs(self.coeffs[self.rows]).max(axis=1).astype(np.int64)


class Family:
    """All forms sharing a curve and shift; rows of (a1..an) are supplied by callers."""

    def __init__(self, curve: CurveSystem, lam=None, homogeneous: bool = False, K: int = GRID_K):
        self.curve = curve
        self.lam = as_shift(lam)
        self.lam_w = 0.0 if homogeneous else 1.0
        self.homogeneous = homogeneous
        lam_el = self.lam.elementary
        if lam_el is None:
            raise TypeError("batch kernels need an elementary shift")
        self.table = term_table(curve.components, lam_el)
        self.K = int(K)
        self.n = curve.n
        lo, hi = curve.domain
        self.lam2_sup = 0.0 if homogeneous or self.lam.is_zero else sup_abs(self.lam, 2, lo, hi)
        self.curv_lo = curve.inf(2, 2) if self.n == 2 else 0.0
        self.has_shift = not (homogeneous or self.lam.is_zero)

    # pieces ---------------------------------------------------------------
    def pieces(self, coeffs: np.ndarray, lo: float | None = None, hi: float | None = None) -> Pieces:
        coeffs = np.ascontiguousarray(coeffs, dtype=float)
        dlo, dhi = self.curve.domain
        lo = dlo if lo is None else lo
        hi = dhi if hi is None else hi
        if self.n == 2:
            skip = np.abs(coeffs[:, 1]) * self.curv_lo * (1 - 1e-9) > self.lam_w * self.lam2_sup
        else:
            skip = np.zeros(len(coeffs), dtype=bool)
        bp, cnt, overflow = kn.breakpoints(*self.table, coeffs, self.lam_w, lo, hi, self.K, skip)
        if overflow:
            raise RuntimeError("too many monotone pieces for one row; refine the curve model")
        rows, left, right = kn.pieces_from_breaks(bp, cnt, lo, hi)
        cont = np.zeros(len(rows), dtype=bool)
        if len(rows) > 1:
            cont[1:] = (rows[1:] == rows[:-1]) & (left[1:] == right[:-1])
        return Pieces(coeffs, rows, left, right, cont)

    def clip(self, p: Pieces, lo: float, hi: float) -> Pieces:
        left = np.maximum(p.left, lo)
        right = np.minimum(p.right, hi)
        keep = right > left
        cont = p.cont & (p.left >= lo)
        return Pieces(p.coeffs, p.rows[keep], left[keep], right[keep], cont[keep])

    def restrict_derivative(self, p: Pieces, dlo=-1.0, dhi=np.inf) -> Pieces:
        """Keep the part of each piece where dlo < |P'| <= dhi (bounds per piece or scalar)."""
        m = len(p)
        dlo = np.broadcast_to(np.asarray(dlo, dtype=float), (m,)).copy()
        dhi = np.broadcast_to(np.asarray(dhi, dtype=float), (m,)).copy()
        nl, nr = kn.derivative_window(*self.table, p.coeffs, self.lam_w, p.rows, p.left, p.right, dlo, dhi)
        keep = nr >= nl
        cont = p.cont & (nl == p.left)
        return Pieces(p.coeffs, p.rows[keep], nl[keep], nr[keep], cont[keep])

    def values(self, p: Pieces, order: int = 0):
        pl = kn.eval_at(*self.table, p.coeffs, self.lam_w, p.rows, p.left, order)
        pr = kn.eval_at(*self.table, p.coeffs, self.lam_w, p.rows, p.right, order)
        return pl, pr

    def evaluate(self, coeffs, rows, xs, order: int = 0):
        return kn.eval_at(*self.table, np.ascontiguousarray(coeffs, dtype=float), self.lam_w,
                          np.asarray(rows, dtype=np.int64), np.asarray(xs, dtype=float), order)

    def _zero_rows(self, coeffs):
        return ~np.any(coeffs != 0, axis=1)

    # levels ---------------------------------------------------------------
    def root_levels(self, p: Pieces, pl, pr):
        lo_v = np.minimum(pl, pr)
        hi_v = np.maximum(pl, pr)
        kfirst = np.ceil(lo_v)
        klast = np.floor(hi_v)
        # a level hit exactly at a shared breakpoint belongs to the earlier piece
        inc = pr >= pl
        dup = p.cont & (pl == np.round(pl))
        kfirst = np.where(dup & inc & (kfirst == pl), kfirst + 1, kfirst)
        klast = np.where(dup & ~inc & (klast == pl), klast - 1, klast)
        count = np.maximum(klast - kfirst + 1, 0)
        return kfirst.astype(np.int64), count.astype(np.int64)

    def band_levels(self, pl, pr, h, k_clip: int | None = None):
        lo_v = np.minimum(pl, pr)
        hi_v = np.maximum(pl, pr)
        kfirst = np.floor(lo_v - h) + 1
        klast = np.ceil(hi_v + h) - 1
        if k_clip is not None:
            kfirst = np.maximum(kfirst, -k_clip)
            klast = np.minimum(klast, k_clip)
        count = np.maximum(klast - kfirst + 1, 0)
        return kfirst.astype(np.int64), count.astype(np.int64)

    def roots(self, p: Pieces, budget: int = DEFAULT_BUDGET) -> Roots:
        pl, pr = self.values(p)
        kfirst, count = self.root_levels(p, pl, pr)
        offsets = np.zeros(len(p) + 1, dtype=np.int64)
        np.cumsum(count, out=offsets[1:])
        if offsets[-1] > budget:
            raise BudgetError(int(offsets[-1]), budget)
        rs, ks, xs = kn.level_roots(*self.table, p.coeffs, self.lam_w, p.rows, p.left, p.right,
                                    pl, pr, kfirst, count, offsets)
        zero = self._zero_rows(p.coeffs)
        if zero.any():
            keep = ~(zero[rs] & (ks == 0))
            rs, ks, xs = rs[keep], ks[keep], xs[keep]
        rs, ks, xs = self._snap_multiple(p.coeffs, rs, ks, xs)
        return Roots(p.coeffs, rs, ks, xs)

    def _snap_multiple(self, coeffs, rs, ks, xs):
        """Move low-slope roots onto the nearby zero of P' (or P''), when P - k vanishes there.

        Sign tests on P - k only place a root of multiplicity m to about eps^(1/m);
        the same point is a simple root of the (m-1)-th derivative.
        """
        if not len(xs):
            return rs, ks, xs
        scale = np.abs(ks) + np.abs(coeffs[rs]).sum(axis=1) + 1.0
        flat = np.nonzero(np.abs(self.evaluate(coeffs, rs, xs, 1)) <= MULTIPLE_SLOPE * scale)[0]
        if not len(flat):
            return rs, ks, xs
        xs = xs.copy()
        lo, hi = self.curve.domain
        r = SNAP_RADIUS * (hi - lo)
        for i in flat:
            row = rs[i:i + 1]
            tol = 1e-12 * scale[i]

            def g(y, k):
                v = float(self.evaluate(coeffs, row, np.array([y]), k)[0])
                return v - ks[i] if k == 0 else v

            best = float(xs[i])
            for k in range(1, self.n + 1):
                a, b = max(lo, best - r), min(hi, best + r)
                ga, gb = g(a, k), g(b, k)
                if ga * gb > 0:
                    ends = [e for e, ge in ((a, ga), (b, gb)) if abs(ge) <= tol]
                    if not ends:
                        break
                    y = ends[0]
                else:
                    y = brentq(lambda z: g(z, k), a, b, xtol=1e-15, rtol=1e-15)
                if any(abs(g(y, j)) > tol for j in range(k)):
                    break
                best = y
                if abs(g(y, k + 1)) > MULTIPLE_SLOPE * scale[i]:
                    break
            xs[i] = best
        # two brackets of one multiple root collapse onto the same point; both were flagged
        order = flat[np.lexsort((xs[flat], ks[flat], rs[flat]))]
        same = ((rs[order[1:]] == rs[order[:-1]]) & (ks[order[1:]] == ks[order[:-1]])
                & (xs[order[1:]] - xs[order[:-1]] <= 1e-12 * (hi - lo)))
        keep = np.ones(len(xs), dtype=bool)
        keep[order[1:][same]] = False
        return rs[keep], ks[keep], xs[keep]

    def bands(self, p: Pieces, h_row, k_clip: int | None = None,
              budget: int = DEFAULT_BUDGET, merge: bool = True) -> Bands:
        """Intervals where |P - k| < h for integer k; ``h_row`` is indexed by coefficient row."""
        pl, pr = self.values(p)
        h = np.broadcast_to(np.asarray(h_row, dtype=float), (len(p.coeffs),))[p.rows]
        h = np.ascontiguousarray(h)
        kfirst, count = self.band_levels(pl, pr, h, k_clip)
        offsets = np.zeros(len(p) + 1, dtype=np.int64)
        np.cumsum(count, out=offsets[1:])
        if offsets[-1] > budget:
            raise BudgetError(int(offsets[-1]), budget)
        rs, ks, xl, xr = kn.level_bands(*self.table, p.coeffs, self.lam_w, p.rows, p.left, p.right,
                                        pl, pr, h, kfirst, count, offsets)
        zero = self._zero_rows(p.coeffs)
        if zero.any():
            keep = ~(zero[rs] & (ks == 0))
            rs, ks, xl, xr = rs[keep], ks[keep], xl[keep], xr[keep]
        if merge and len(rs):
            order = np.lexsort((xl, ks, rs))
            rs, ks, xl, xr = rs[order], ks[order], xl[order], xr[order]
            keep, xr2 = kn.merge_sorted_bands(rs, ks, xl, xr)
            rs, ks, xl, xr = rs[keep], ks[keep], xl[keep], xr2[keep]
        return Bands(p.coeffs, rs, ks, xl, xr)


def canonical_rows(coeffs: np.ndarray) -> np.ndarray:
    """Rows whose last nonzero entry is positive; F and -F share level sets when there is no shift."""
    c = np.asarray(coeffs)
    nz = c != 0
    last = c.shape[1] - 1 - np.argmax(nz[:, ::-1], axis=1)
    lead = c[np.arange(len(c)), last]
    return c[lead > 0]


def level_count_estimate(fam: Family, p: Pieces) -> int:
    pl, pr = fam.values(p)
    return int(np.sum(np.abs(pr - pl) + 1.0))


def buckets(fam: Family, p: Pieces, lo: float, hi: float, per_bucket: int = 4_000_000,
            estimate: int | None = None):
    """Split [lo, hi] into equal buckets holding about ``per_bucket`` levels; yield (b0, b1, pieces)."""
    p = fam.clip(p, lo, hi)
    est = level_count_estimate(fam, p) if estimate is None else estimate
    nb = max(1, int(np.ceil(est / per_bucket)))
    edges = np.linspace(lo, hi, nb + 1)
    for b0, b1 in zip(edges[:-1], edges[1:]):
        yield float(b0), float(b1), fam.clip(p, b0, b1)
