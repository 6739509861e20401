"""Brute-force counts and measures for the small-value bounds on forms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import kernels as kn
from .engine import Family, buckets, canonical_rows
from .errors import BoxTooSmallError, BudgetError, DegenerateCurveError
from .forms import DEFAULT_BUDGET, coefficient_rows
from .funcspace import CurveSystem, as_shift, inf_abs
from .intervals import IntervalSet

HEIGHT_CONVENTIONS = ("exact", "as_printed")


def _rows(n: int, h_lo: int, h_hi: int, canonical: bool = False) -> np.ndarray:
    blocks = list(coefficient_rows(n, h_lo, h_hi))
    if not blocks:
        return np.zeros((0, n))
    rows = np.vstack(blocks)
    return canonical_rows(rows) if canonical else rows


# small values of homogeneous forms -------------------------------------------

def phi_contains(curve: CurveSystem, Q: float, delta: float, x: float) -> bool:
    """Is there F with height <= Q and |F(x)| < delta Q^-n (no shift)?"""
    H = int(math.floor(Q))
    if H < 1:
        return False
    curve.check_point(x)
    rows = _rows(curve.n, 1, H, canonical=True)
    f = np.array([float(curve.component(i, x)) for i in range(1, curve.n + 1)])
    p = rows @ f
    return bool(np.any(np.abs(p - np.round(p)) < delta * Q ** (-curve.n)))


def phi_measure(curve: CurveSystem, Q: int, delta: float, J: tuple | None = None,
                keep_set: bool = True, budget: int = DEFAULT_BUDGET,
                per_bucket: int = 4_000_000):
    """(set, measure) of {x in J : |F(x)| < delta Q^-n for some F of height <= Q}.

    The shift plays no role here.  Work is streamed over buckets of x so the
    full union never has to sit in memory; pass ``keep_set=False`` to skip
    building the IntervalSet on large runs (the set comes back as None).
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    lo, hi = curve.domain if J is None else (float(J[0]), float(J[1]))
    if lo < curve.domain[0] or hi > curve.domain[1] or hi <= lo:
        raise ValueError(f"J = {J} must be a subinterval of the domain")
    fam = Family(curve, None, homogeneous=True)
    rows = _rows(curve.n, 1, int(Q), canonical=True)
    p = fam.pieces(rows)
    h = delta * float(Q) ** (-curve.n)
    est = level_count_estimate_h(fam, fam.clip(p, lo, hi))
    if est > budget:
        raise BudgetError(est, budget)
    total = 0.0
    parts_lo, parts_hi = [], []
    for b0, b1, pb in buckets(fam, p, lo, hi, per_bucket, est):
        bd = fam.bands(pb, h, merge=False)
        order = np.argsort(bd.left, kind="stable")
        l, r = bd.left[order], bd.right[order]
        total += kn.union_length_sorted(l, r, b0, b1)
        if keep_set and len(l):
            s = IntervalSet(np.maximum(l, b0), np.minimum(r, b1))
            parts_lo.append(s.lo)
            parts_hi.append(s.hi)
    if not keep_set:
        return None, total
    if parts_lo:
        s = IntervalSet(np.concatenate(parts_lo), np.concatenate(parts_hi))
    else:
        s = IntervalSet()
    return s, s.measure


def level_count_estimate_h(fam: Family, p) -> int:
    pl, pr = fam.values(p)
    return int(np.sum(np.abs(pr - pl) + 2.0))


def largest_passing_delta(curve: CurveSystem, Q: int, J: tuple,
                          deltas=(1e-1, 1e-2, 1e-3)) -> tuple:
    """Largest delta in the sweep with |Phi(Q, delta) & J| < |J|/2, and all measures."""
    out = {}
    for d in sorted(deltas, reverse=True):
        out[d] = phi_measure(curve, Q, d, J, keep_set=False)[1]
    half = (J[1] - J[0]) / 2
    passing = [d for d, m in out.items() if m < half]
    return (max(passing) if passing else None), out


# counting triples with a small value and a small slope -----------------------

@dataclass
class CountReport:
    H: int
    delta: float
    v: float
    convention: str
    count: int                 # lower-bound style: undecided cases excluded
    count_upper: int           # undecided cases included
    ratio: float               # count / H^(1+delta)
    ratio_upper: float
    examined: int
    meta: dict = field(default_factory=dict)


def count_N(curve: CurveSystem, lam, H: int, delta: float, v: float,
            convention: str = "as_printed", budget: int = DEFAULT_BUDGET,
            rel_tol: float = 1e-9) -> CountReport:
    """Count triples (a0, a1, a2), |a0| <= H, for which some x in I has
    |G(x)| <= H^-v and |G'(x)| <= H^delta.

    ``convention`` "exact" counts triples with max(|a1|, |a2|) = H; "as_printed"
    counts every triple with max(|a0|, |a1|, |a2|) <= H.  Both report a lower
    count (tolerance shrinks both thresholds) and an upper count (tolerance
    widens them).
    """
    if curve.n != 2:
        raise ValueError("the triple count is defined for planar curves")
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0, 1]")
    if H < 2 or v <= 0:
        raise ValueError("need H >= 2 and v > 0")
    if convention not in HEIGHT_CONVENTIONS:
        raise ValueError(f"convention must be one of {HEIGHT_CONVENTIONS}")
    fam = Family(curve, lam)
    h_lo = H if convention == "exact" else 1
    rows = _rows(2, h_lo, H)
    if convention == "as_printed" and fam.has_shift:
        rows = np.vstack([np.zeros((1, 2)), rows])
    examined = len(rows) * (2 * H + 1)
    if examined > budget:
        raise BudgetError(examined, budget, "triples")
    p = fam.pieces(rows)
    h = float(H) ** (-v)
    slope = float(H) ** delta
    counts = []
    for sgn in (-1.0, 1.0):
        f = 1.0 + sgn * rel_tol
        q = fam.restrict_derivative(p, -1.0, slope * f)
        pl, pr = fam.values(q)
        hh = h * f + (1e-13 * (1 + H) if sgn > 0 else 0.0)
        a = np.minimum(pl, pr) - hh
        b = np.maximum(pl, pr) + hh
        kf = np.maximum(np.ceil(a), -H).astype(np.int64)
        kl = np.minimum(np.floor(b), H).astype(np.int64)
        if sgn < 0:
            # open-interval reading for the lower count
            kf = np.where(np.ceil(a) == a, kf + 1, kf)
            kl = np.where(np.floor(b) == b, kl - 1, kl)
        ok = kl >= kf
        r, kf, kl = q.rows[ok], kf[ok], kl[ok]
        zero = ~np.any(rows[r] != 0, axis=1)
        if zero.any():
            # the zero row only carries forms with a0 != 0
            parts = [(r[~zero], kf[~zero], kl[~zero])]
            zr, zf, zl = r[zero], kf[zero], kl[zero]
            neg = zf <= -1
            parts.append((zr[neg], zf[neg], np.minimum(zl[neg], -1)))
            pos = zl >= 1
            parts.append((zr[pos], np.maximum(zf[pos], 1), zl[pos]))
            r = np.concatenate([x[0] for x in parts])
            kf = np.concatenate([x[1] for x in parts])
            kl = np.concatenate([x[2] for x in parts])
        order = np.lexsort((kf, r))
        counts.append(int(kn.count_range_union(r[order], kf[order], kl[order])))
    lower, upper = counts
    norm = float(H) ** (1 + delta)
    return CountReport(H, delta, v, convention, lower, upper, lower / norm, upper / norm,
                       examined, {"rows": int(len(rows)), "pieces": int(len(p))})


# the Pyartly-type small-value estimate ----------------------------------------

@dataclass
class PyartlyReport:
    measure: float
    bound: float
    c: float
    derivative_floor: float


def _monotone_breaks(phi, lo: float, hi: float, grid: int) -> list:
    xs = np.linspace(lo, hi, grid)
    d = np.asarray(phi(xs, 1), dtype=float)
    pts = [lo]
    for i in np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]:
        pts.append(brentq(lambda x: float(phi(x, 1)), xs[i], xs[i + 1], xtol=1e-15))
    for i in np.nonzero(d == 0)[0]:
        pts.append(float(xs[i]))
    pts.append(hi)
    return sorted(set(pts))


def small_value_measure(phi, nu: float, lo: float, hi: float, grid: int = 4097) -> float:
    """|{x in [lo, hi] : |phi(x)| < nu}| solved exactly on monotone pieces."""
    total = 0.0
    br = _monotone_breaks(phi, lo, hi, grid)
    for u, w in zip(br[:-1], br[1:]):
        fu, fw = float(phi(u)), float(phi(w))
        inc = fw >= fu
        a, b = min(fu, fw), max(fu, fw)
        lo_v, hi_v = max(a, -nu), min(b, nu)
        if hi_v <= lo_v:
            continue

        def at(c):
            if c <= a:
                return u if inc else w
            if c >= b:
                return w if inc else u
            return brentq(lambda x: float(phi(x)) - c, u, w, xtol=1e-15, rtol=1e-15)

        total += abs(at(hi_v) - at(lo_v))
    return total


def pyartly_check(phi, nu: float, n: int, J: tuple, delta: float,
                  grid: int = 10_000) -> PyartlyReport:
    """Measure of {|phi| < nu} on J against the shape (nu/delta)^(1/n)."""
    if nu <= 0 or delta <= 0:
        raise ValueError("nu and delta must be positive")
    lo, hi = map(float, J)
    floor = inf_abs(phi, n, lo, hi, grid)
    if not floor > delta:
        raise DegenerateCurveError(f"|phi^({n})| drops to {floor:.3g}, not above {delta:g}")
    m = small_value_measure(phi, nu, lo, hi)
    bound = (nu / delta) ** (1.0 / n)
    return PyartlyReport(m, bound, m / bound, floor)


# the first/second derivative dichotomy ---------------------------------------

@dataclass
class DichotomyReport:
    C1: float                   # empirical constant: min over forms and cells
    per_height: dict
    worst_form: tuple
    worst_cell: tuple
    violations: int
    floor: float


def dichotomy_check(curve: CurveSystem, lam, H_range, subinterval_len: float,
                    points_per_cell: int = 64, floor: float = 0.0) -> DichotomyReport:
    """For every form of each height H, and every cell of length <= subinterval_len,
    the larger of min|G'| and min|G''| over the cell, divided by H.

    The reported C1 is the minimum over everything sampled; ``violations``
    counts (form, cell) pairs at or below ``floor``.
    """
    if curve.n != 2:
        raise ValueError("the dichotomy is stated for planar curves")
    lo, hi = curve.domain
    ncell = max(1, int(math.ceil((hi - lo) / subinterval_len)))
    edges = np.linspace(lo, hi, ncell + 1)
    xs = np.concatenate([np.linspace(a, b, points_per_cell) for a, b in zip(edges[:-1], edges[1:])])
    fam = Family(curve, lam)
    best, worst_form, worst_cell = np.inf, None, None
    per_h = {}
    viol = 0
    for H in H_range:
        rows = _rows(2, H, H)
        m = len(rows)
        rid = np.repeat(np.arange(m), len(xs))
        xx = np.tile(xs, m)
        d1 = np.abs(fam.evaluate(rows, rid, xx, 1)).reshape(m, ncell, points_per_cell).min(axis=2)
        d2 = np.abs(fam.evaluate(rows, rid, xx, 2)).reshape(m, ncell, points_per_cell).min(axis=2)
        ratio = np.maximum(d1, d2) / H
        k = np.unravel_index(np.argmin(ratio), ratio.shape)
        per_h[int(H)] = float(ratio[k])
        viol += int(np.sum(ratio <= floor))
        if ratio[k] < best:
            best = float(ratio[k])
            worst_form = tuple(int(a) for a in rows[k[0]])
            worst_cell = (float(edges[k[1]]), float(edges[k[1] + 1]))
    return DichotomyReport(best, per_h, worst_form, worst_cell, viol, floor)


# triangles on integer planes -------------------------------------------------

@dataclass
class TriangleResult:
    area: float
    bound: float
    witness: tuple
    points: int
    holds: bool


def plane_points(A: int, B: int, C: int, D: int, r: int) -> np.ndarray:
    g = np.arange(-r, r + 1)
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    on = A * X + B * Y + C * Z == D
    return np.stack([X[on], Y[on], Z[on]], axis=1).astype(np.int64)


def min_triangle_area(A: int, B: int, C: int, D: int, box_radius: int) -> TriangleResult:
    """Smallest area of a triangle with integer vertices on Ax + By + Cz = D inside the box."""
    if math.gcd(math.gcd(A, B), C) != 1:
        raise ValueError("(A, B, C) must be coprime")
    pts = plane_points(A, B, C, D, box_radius)
    if len(pts) < 3:
        raise BoxTooSmallError(f"only {len(pts)} lattice points of the plane in the box")
    q, i, j, k, ntri = kn.triangle_min_cross(pts.astype(np.float64))
    if ntri == 0:
        raise BoxTooSmallError("all lattice points in the box are collinear")
    area = 0.5 * math.sqrt(q)
    bound = 0.5 * math.sqrt(A * A + B * B + C * C)
    wit = tuple(tuple(int(c) for c in pts[m]) for m in (i, j, k))
    return TriangleResult(area, bound, wit, len(pts), area >= bound - 1e-9)


def coprime_planes(max_coef: int = 10, max_d: int = 5):
    """All (A, B, C, D) with gcd(A, B, C) = 1, |A|, |B|, |C| <= max_coef, |D| <= max_d."""
    r = range(-max_coef, max_coef + 1)
    for A in r:
        for B in r:
            for C in r:
                if math.gcd(math.gcd(A, B), C) != 1:
                    continue
                for D in range(-max_d, max_d + 1):
                    yield A, B, C, D
