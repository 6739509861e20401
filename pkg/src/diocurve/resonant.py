"""Zeros of G = F + lambda over integer forms, with minimal-height attribution."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .engine import Family
from .errors import DomainError
from .forms import DEFAULT_BUDGET, IntegerForm, coefficient_rows
from .funcspace import CurveSystem, as_shift

ROOT_WIDTH = 1e-13      # bracket width, relative to |I|
DEDUP_TOL = 1e-12       # relative to |I|
TANGENT_SLOPE = 1e-9    # |G'| below this (relative to the form scale) marks a root tangential


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    certified: bool
    tangential: bool = False

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)


def default_resolution(curve: CurveSystem, Q: int) -> float:
    return min(1e-3 * curve.length, Q ** (-(curve.n + 1)) / 10.0)


def _scale(form: IntegerForm, curve: CurveSystem, lam, x) -> np.ndarray:
    """Size of the terms summed in G(x); sets the rounding floor."""
    s = abs(form.a0) + np.abs(np.asarray(lam(x, 0), dtype=float))
    for i, a in enumerate(form.coeffs[1:], start=1):
        if a:
            s = s + abs(a) * np.abs(curve.component(i, x, 0))
    return s


def isolate_roots(form: IntegerForm, curve: CurveSystem, lam=None,
                  resolution: float | None = None) -> list:
    """Sorted disjoint brackets around the zeros of G on the curve's domain.

    Sign changes between grid points are bisected down to ROOT_WIDTH * |I|
    and are certified.  Grid points where |G| sits below the rounding floor
    are reported too; they are certified only when |G'| is clearly nonzero.
    Between grid points where G' changes sign but G does not, the critical
    point is located and reported as a tangential root if |G| vanishes there.
    """
    lam = as_shift(lam)
    lo, hi = curve.domain
    if resolution is None:
        resolution = default_resolution(curve, max(form.height, 1))
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    npts = max(2, int(math.ceil(curve.length / resolution)) + 1)
    xs = np.linspace(lo, hi, npts)

    def G(x, order=0):
        return form.value(curve, x, order) + np.asarray(lam(x, order), dtype=float)

    g = G(xs)
    tol = 64 * np.finfo(float).eps * _scale(form, curve, lam, xs)
    small = np.abs(g) <= tol
    width = ROOT_WIDTH * curve.length
    out = []

    def slope_ok(x):
        d = abs(float(G(x, 1)))
        return d > TANGENT_SLOPE * max(1.0, float(_scale(form, curve, lam, x)))

    for i in np.nonzero(small)[0]:
        x = float(xs[i])
        left_sign = np.sign(g[i - 1]) if i > 0 and not small[i - 1] else 0
        right_sign = np.sign(g[i + 1]) if i + 1 < npts and not small[i + 1] else 0
        crossing = left_sign * right_sign < 0
        simple = slope_ok(x)
        out.append(RootBracket(x, x, bool(crossing or simple), not simple))

    nz = ~small
    change = np.nonzero(nz[:-1] & nz[1:] & (np.sign(g[:-1]) != np.sign(g[1:])))[0]
    for i in change:
        a, b = float(xs[i]), float(xs[i + 1])
        ga = float(g[i])
        while b - a > width:
            m = 0.5 * (a + b)
            gm = float(G(m))
            if gm == 0.0:
                a = b = m
                break
            if (gm > 0) == (ga > 0):
                a, ga = m, gm
            else:
                b = m
        out.append(RootBracket(a, b, True, False))

    # tangential zeros strictly between grid points
    if curve.n >= 1:
        d = G(xs, 1)
        flips = np.nonzero(nz[:-1] & nz[1:] & (np.sign(g[:-1]) == np.sign(g[1:]))
                           & (np.sign(d[:-1]) * np.sign(d[1:]) < 0))[0]
        for i in flips:
            a, b = float(xs[i]), float(xs[i + 1])
            da = float(d[i])
            while b - a > width:
                m = 0.5 * (a + b)
                dm = float(G(m, 1))
                if (dm > 0) == (da > 0):
                    a, da = m, dm
                else:
                    b = m
            m = 0.5 * (a + b)
            if abs(float(G(m))) <= 64 * np.finfo(float).eps * float(_scale(form, curve, lam, m)):
                out.append(RootBracket(a, b, False, True))

    out.sort(key=lambda r: (r.lo, r.hi))
    merged = []
    for r in out:
        if merged and r.lo <= merged[-1].hi:
            p = merged[-1]
            merged[-1] = RootBracket(p.lo, max(p.hi, r.hi), p.certified or r.certified,
                                     p.tangential and r.tangential)
        else:
            merged.append(r)
    return merged


@dataclass(frozen=True)
class ResonantPoint:
    alpha: float
    lo: float
    hi: float
    height: int
    witness: IntegerForm
    tangential: bool = False


class ResonantSet:
    """Resonant points sorted by position, held as parallel arrays."""

    def __init__(self, alpha, lo, hi, height, forms, tangential, length: float):
        self.alpha = np.asarray(alpha, dtype=float)
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.height = np.asarray(height, dtype=np.int64)
        self.forms = np.asarray(forms, dtype=np.int64)
        self.tangential = np.asarray(tangential, dtype=bool)
        self.length = length

    def __len__(self):
        return len(self.alpha)

    def __getitem__(self, i) -> ResonantPoint:
        return ResonantPoint(float(self.alpha[i]), float(self.lo[i]), float(self.hi[i]),
                             int(self.height[i]), IntegerForm(tuple(self.forms[i].tolist())),
                             bool(self.tangential[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def with_height_at_most(self, Q: int) -> "ResonantSet":
        m = self.height <= Q
        return ResonantSet(self.alpha[m], self.lo[m], self.hi[m], self.height[m], self.forms[m],
                           self.tangential[m], self.length)

    def contains(self, x: float, tol: float = DEDUP_TOL) -> bool:
        if not len(self):
            return False
        return nearest_resonant(self.alpha, x)[1] <= tol * self.length

    def write_csv(self, path, header_line: str | None = None) -> None:
        n = self.forms.shape[1] - 1
        with open(path, "w", newline="") as fh:
            if header_line:
                fh.write(header_line + "\n")
            w = csv.writer(fh)
            w.writerow(["alpha_lo", "alpha_hi", "height"] + [f"a{i}" for i in range(n + 1)])
            for i in range(len(self)):
                w.writerow([f"{self.lo[i]:.6g}", f"{self.hi[i]:.6g}", int(self.height[i])]
                           + self.forms[i].tolist())

    def write_jsonl(self, path, header: dict | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            if header is not None:
                fh.write(json.dumps(header, sort_keys=True) + "\n")
            for i in range(len(self)):
                rec = {"alpha": float(f"{self.alpha[i]:.17g}"), "alpha_lo": float(f"{self.lo[i]:.17g}"),
                       "alpha_hi": float(f"{self.hi[i]:.17g}"), "height": int(self.height[i]),
                       "witness": self.forms[i].tolist(), "tangential": bool(self.tangential[i])}
                fh.write(json.dumps(rec) + "\n")


def resonant_roots(curve: CurveSystem, lam, Q: int, budget: int = DEFAULT_BUDGET,
                   family: Family | None = None):
    """Every root of every form of height <= Q, undeduplicated, as engine Roots."""
    if Q < 1:
        raise ValueError("Q must be >= 1")
    fam = family or Family(curve, lam)
    rows = np.vstack(list(coefficient_rows(curve.n, 1, Q, include_zero=fam.has_shift)))
    p = fam.pieces(rows)
    return fam, fam.roots(p, budget=budget)


def enumerate_resonant(curve: CurveSystem, lam=None, Q: int = 1, budget: int = DEFAULT_BUDGET,
                       dedup_tol: float = DEDUP_TOL) -> ResonantSet:
    """Distinct zeros of F + lambda over forms of height <= Q, each with its least-height witness."""
    fam, r = resonant_roots(curve, lam, Q, budget)
    forms = r.forms()
    heights = r.heights()
    x = r.x
    if len(x) == 0:
        n = curve.n
        return ResonantSet([], [], [], [], np.zeros((0, n + 1)), [], curve.length)
    order = np.argsort(x, kind="stable")
    x, forms, heights, rows = x[order], forms[order], heights[order], r.rows[order]
    tol = dedup_tol * curve.length
    start = np.ones(len(x), dtype=bool)
    start[1:] = np.diff(x) > tol
    gid = np.cumsum(start) - 1
    ngroups = int(gid[-1]) + 1
    # witness: least height, then least |a0|, then lexicographic coefficients
    keys = [forms[:, j] for j in range(forms.shape[1] - 1, -1, -1)]
    pick = np.lexsort(keys + [np.abs(forms[:, 0]), heights, gid])
    first = np.ones(len(pick), dtype=bool)
    first[1:] = gid[pick][1:] != gid[pick][:-1]
    w = pick[first]
    glo = np.minimum.reduceat(x, np.nonzero(start)[0])
    ghi = np.maximum.reduceat(x, np.nonzero(start)[0])
    half = 0.5 * ROOT_WIDTH * curve.length
    slope = fam.evaluate(r.coeffs, rows[w], x[w], 1)
    scale = np.abs(forms[w, 0]) + np.abs(forms[w, 1:]).sum(axis=1) + 1.0
    tangential = np.abs(slope) <= TANGENT_SLOPE * scale
    assert len(w) == ngroups
    return ResonantSet(x[w], glo - half, ghi + half, heights[w], forms[w], tangential, curve.length)


def nearest_resonant(points, x: float) -> tuple:
    """(alpha, |x - alpha|) for the closest point; ties go to the smaller alpha."""
    if isinstance(points, ResonantSet):
        arr = points.alpha
    else:
        arr = np.asarray([p.alpha if isinstance(p, ResonantPoint) else p for p in points], dtype=float)
    if arr.size == 0:
        raise DomainError("no resonant points to search")
    arr = np.sort(arr)
    k = int(np.searchsorted(arr, x))
    best = None
    for j in (k - 1, k):
        if 0 <= j < len(arr):
            d = abs(x - float(arr[j]))
            if best is None or d < best[1] or (d == best[1] and arr[j] < best[0]):
                best = (float(arr[j]), d)
    return best

