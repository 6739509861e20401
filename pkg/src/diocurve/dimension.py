"""Finite stages of the planar limsup set: solution intervals, derivative classes,
cell partitions with incidence diagnostics, s-volume sums and box counts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as kn
from .engine import Family, buckets
from .errors import BudgetError, InvalidFormError
from .forms import DEFAULT_BUDGET, IntegerForm, coefficient_rows
from .funcspace import CurveSystem
from .intervals import IntervalSet
from .resonant import enumerate_resonant

PER_BUCKET = 4_000_000
HIST_BINS_PER_OCTAVE = 256
HIST_MIN_LOG2 = -400.0

CLASS_A1, CLASS_A2, CLASS_A3 = 1, 2, 3


def dimension_target(v: float, n: int = 2) -> float:
    """(n + 1) / (v + 1); for n = 2 this is the exact dimension 3/(v+1)."""
    return (n + 1) / (v + 1)


def _check_v(v: float) -> None:
    if not v > 2:
        raise ValueError(f"v = {v} must exceed 2")


def _check_eps1(v: float, eps1: float) -> None:
    if not eps1 > 0:
        raise ValueError("epsilon1 must be positive")
    if not v > 2 + 3 * eps1:
        raise ValueError(f"need v > 2 + 3*epsilon1 (v = {v}, epsilon1 = {eps1})")


# single forms -------------------------------------------------------------

def solution_intervals(form: IntegerForm, curve: CurveSystem, lam, v: float) -> IntervalSet:
    """{x in I : |F(x) + lambda(x)| < H^-v}, solved on the monotone pieces of G."""
    H = form.height
    if H < 1:
        raise InvalidFormError("solution intervals need a form of height >= 1")
    if form.n != curve.n:
        raise InvalidFormError("form and curve dimensions differ")
    fam = Family(curve, lam)
    p = fam.pieces(np.asarray([form.coeffs[1:]], dtype=float))
    b = fam.bands(p, float(H) ** (-v))
    keep = b.levels == -form.a0
    return IntervalSet(b.left[keep], b.right[keep])


# stages -------------------------------------------------------------------

def _log_hist(lengths: np.ndarray) -> np.ndarray:
    nb = int(-HIST_MIN_LOG2 * HIST_BINS_PER_OCTAVE) + 1
    with np.errstate(divide="ignore"):
        lg = np.log2(lengths[lengths > 0])
    idx = np.clip(np.floor((lg - HIST_MIN_LOG2) * HIST_BINS_PER_OCTAVE).astype(np.int64), 0, nb - 1)
    return np.bincount(idx, minlength=nb)


def _hist_centers() -> np.ndarray:
    nb = int(-HIST_MIN_LOG2 * HIST_BINS_PER_OCTAVE) + 1
    return HIST_MIN_LOG2 + (np.arange(nb) + 0.5) / HIST_BINS_PER_OCTAVE


@dataclass
class SolutionStage:
    """Solution intervals of every form with H_lo <= H <= H_hi.

    When ``kept`` is false only the summaries (count, union measure and a
    log-length histogram) survive; the interval arrays are empty.
    """

    curve: CurveSystem
    lam: object
    v: float
    t: int | None
    H_lo: int
    H_hi: int
    slope_window: tuple | None
    forms: np.ndarray
    left: np.ndarray
    right: np.ndarray
    count: int
    measure: float
    length_hist: np.ndarray = field(repr=False)
    kept: bool = True

    @property
    def heights(self) -> np.ndarray:
        return np.abs(self.forms[:, 1:]).max(axis=1) if len(self.forms) else np.zeros(0, dtype=np.int64)

    def union(self) -> IntervalSet:
        if not self.kept:
            raise ValueError("stage was built without keeping its intervals")
        return IntervalSet(self.left, self.right)

    def s_sum(self, s: float) -> float:
        """sum |d|^s over the stage's intervals (from the length histogram)."""
        return float(np.sum(self.length_hist * np.exp2(s * _hist_centers())))

    @property
    def min_width(self) -> float:
        nz = np.nonzero(self.length_hist)[0]
        if not len(nz):
            return 0.0
        return float(2.0 ** (HIST_MIN_LOG2 + nz[0] / HIST_BINS_PER_OCTAVE))


def _stage_family(curve: CurveSystem, lam, H_lo: int, H_hi: int):
    fam = Family(curve, lam)
    rows = np.vstack(list(coefficient_rows(curve.n, H_lo, H_hi)))
    p = fam.pieces(rows)
    H = np.abs(rows).max(axis=1)
    return fam, p, H


def _window(H_piece: np.ndarray, window):
    e_lo, e_hi = window
    Hf = H_piece.astype(float)
    dlo = -np.ones_like(Hf) if e_lo is None else Hf**e_lo
    dhi = np.full_like(Hf, np.inf) if e_hi is None else Hf**e_hi
    return dlo, dhi


def _band_estimate(fam: Family, p, h) -> int:
    pl, pr = fam.values(p)
    return int(np.sum(np.abs(pr - pl) + 1.0 + 2.0 * h[p.rows]))


def build_stage(curve: CurveSystem, lam, v: float, t: int | None = None,
                H_range: tuple | None = None, slope_window: tuple | None = None,
                keep: bool = True, budget: int = DEFAULT_BUDGET,
                per_bucket: int = PER_BUCKET) -> SolutionStage:
    """Union of solution intervals over forms with 2^(t-1) <= H < 2^t (or ``H_range``).

    ``slope_window`` = (e_lo, e_hi) keeps only the part where
    H^e_lo < |G'| <= H^e_hi; either exponent may be None.  Work is streamed in
    x-buckets; bands cut by a bucket edge are glued back together.
    """
    _check_v(v)
    if H_range is None:
        if t is None or t < 2:
            raise ValueError("t must be an integer >= 2")
        H_lo, H_hi = 2 ** (t - 1), 2**t - 1
    else:
        H_lo, H_hi = int(H_range[0]), int(H_range[1])
        if H_lo < 1 or H_hi < H_lo:
            raise ValueError("need 1 <= H_lo <= H_hi")
    fam, p, Hrow = _stage_family(curve, lam, H_lo, H_hi)
    h = Hrow.astype(float) ** (-v)
    if slope_window is not None:
        dlo, dhi = _window(Hrow[p.rows], slope_window)
        p = fam.restrict_derivative(p, dlo, dhi)
    est = _band_estimate(fam, p, h)
    if est > budget:
        raise BudgetError(est, budget, "solution intervals")
    lo, hi = curve.domain
    keep_parts = []
    hist = np.zeros(int(-HIST_MIN_LOG2 * HIST_BINS_PER_OCTAVE) + 1, dtype=np.int64)
    count = 0
    measure = 0.0
    pending = {}   # (row, level) -> left end, for bands reaching the bucket's right edge

    def flush(rs, ks, xl, xr):
        nonlocal hist, count
        if not len(rs):
            return
        hist += _log_hist(xr - xl)
        count += len(rs)
        if keep:
            keep_parts.append((rs, ks, xl, xr))

    for b0, b1, pb in buckets(fam, p, lo, hi, per_bucket, est):
        bd = fam.bands(pb, h, budget=np.iinfo(np.int64).max)
        rs, ks, xl, xr = bd.rows, bd.levels, bd.left, bd.right
        if len(rs):
            order = np.argsort(xl, kind="stable")
            measure += kn.union_length_sorted(xl[order], xr[order], b0, b1)
        # glue bands continuing from the previous bucket
        if pending and len(rs):
            at_edge = np.nonzero(xl == b0)[0]
            for i in at_edge.tolist():
                key = (int(rs[i]), int(ks[i]))
                if key in pending:
                    xl[i] = pending.pop(key)
        if pending:
            # bands that stopped exactly at the edge
            rs_p = np.array([k[0] for k in pending], dtype=np.int64)
            ks_p = np.array([k[1] for k in pending], dtype=np.int64)
            xl_p = np.array(list(pending.values()))
            flush(rs_p, ks_p, xl_p, np.full(len(rs_p), b0))
            pending = {}
        if b1 < hi and len(rs):
            edge = xr == b1
            for i in np.nonzero(edge)[0].tolist():
                pending[(int(rs[i]), int(ks[i]))] = float(xl[i])
            rs, ks, xl, xr = rs[~edge], ks[~edge], xl[~edge], xr[~edge]
        flush(rs, ks, xl, xr)
    if pending:
        rs_p = np.array([k[0] for k in pending], dtype=np.int64)
        ks_p = np.array([k[1] for k in pending], dtype=np.int64)
        flush(rs_p, ks_p, np.array(list(pending.values())), np.full(len(rs_p), hi))

    n = curve.n
    if keep and keep_parts:
        rs = np.concatenate([q[0] for q in keep_parts])
        ks = np.concatenate([q[1] for q in keep_parts])
        xl = np.concatenate([q[2] for q in keep_parts])
        xr = np.concatenate([q[3] for q in keep_parts])
        forms = np.empty((len(rs), n + 1), dtype=np.int64)
        forms[:, 0] = -ks
        forms[:, 1:] = p.coeffs[rs].astype(np.int64)
        # coefficients break ties so the order does not depend on the bucketing
        order = np.lexsort(tuple(forms[:, j] for j in range(n, -1, -1)) + (xr, xl))
        forms, xl, xr = forms[order], xl[order], xr[order]
    else:
        forms = np.zeros((0, n + 1), dtype=np.int64)
        xl = xr = np.zeros(0)
    return SolutionStage(curve, lam, v, t, H_lo, H_hi, slope_window, forms, xl, xr,
                         count, measure, hist, keep)


# derivative classes -------------------------------------------------------

def delta_ladder(v: float, epsilon: float) -> list:
    """delta_1 = epsilon, delta_(i+1) = k delta_i with k = (v+1)/3, stopping at the
    last value <= 1; the closing value 1 is appended."""
    _check_v(v)
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    k = (v + 1) / 3
    out = [float(epsilon)]
    while out[-1] * k <= 1:
        out.append(out[-1] * k)
    return out + [1.0]


def class_thresholds(v: float, epsilon: float) -> dict:
    """Exponents e with class boundaries |G'| = H^e."""
    return {"A1_A2": 1 - epsilon, "A2_A3": (2 - v) / 3}


@dataclass(frozen=True)
class ClassificationRecord:
    form: tuple
    cls: int              # 1, 2 or 3
    stratum: int          # ladder index (1-based) for class 2, else 0
    left: float
    right: float


@dataclass
class Classification:
    """Class pieces of every solution interval of a stage, as parallel arrays."""

    v: float
    epsilon: float
    epsilon1: float
    ladder: list
    forms: np.ndarray
    cls: np.ndarray
    stratum: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: dict
    measures: dict
    partition_error: float

    def records(self):
        for i in range(len(self.cls)):
            yield ClassificationRecord(tuple(self.forms[i].tolist()), int(self.cls[i]),
                                       int(self.stratum[i]), float(self.left[i]), float(self.right[i]))

    def of_class(self, c: int):
        m = self.cls == c
        return self.forms[m], self.left[m], self.right[m]


def _form_keys(forms: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(forms).view(np.dtype((np.void, forms.dtype.itemsize * forms.shape[1]))).ravel()


def classify(stage: SolutionStage, epsilon: float = 0.1, epsilon1: float = 0.05) -> Classification:
    """Split each solution interval of ``stage`` at the |G'| class thresholds.

    A2 pieces are further tagged by the delta-ladder stratum
    H^(1 - k delta_i) < |G'| <= H^(1 - delta_i).
    """
    v = stage.v
    _check_eps1(v, epsilon1)
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if not stage.kept:
        raise ValueError("classification needs a stage with kept intervals")
    ladder = delta_ladder(v, epsilon)
    k = (v + 1) / 3
    e12 = 1 - epsilon
    e23 = (2 - v) / 3
    fam, p, Hrow = _stage_family(stage.curve, stage.lam, stage.H_lo, stage.H_hi)
    if stage.slope_window is not None:
        dlo, dhi = _window(Hrow[p.rows], stage.slope_window)
        p = fam.restrict_derivative(p, dlo, dhi)
    h = Hrow.astype(float) ** (-v)
    Hp = Hrow[p.rows]
    windows = [(CLASS_A1, 0, e12, None), (CLASS_A3, 0, None, e23)]
    for i, d in enumerate(ladder[:-1], start=1):
        lo_e = max(1 - k * d, e23)
        hi_e = min(1 - d, e12)
        if hi_e > lo_e:
            windows.append((CLASS_A2, i, lo_e, hi_e))
    parts = []
    for c, s, e_lo, e_hi in windows:
        dlo, dhi = _window(Hp, (e_lo, e_hi))
        q = fam.restrict_derivative(p, dlo, dhi)
        b = fam.bands(q, h)
        m = len(b)
        parts.append((b.forms(), np.full(m, c, dtype=np.int8), np.full(m, s, dtype=np.int16), b.left, b.right))
    forms = np.concatenate([x[0] for x in parts])
    cls = np.concatenate([x[1] for x in parts])
    strat = np.concatenate([x[2] for x in parts])
    left = np.concatenate([x[3] for x in parts])
    right = np.concatenate([x[4] for x in parts])
    order = np.lexsort((right, left))
    forms, cls, strat, left, right = forms[order], cls[order], strat[order], left[order], right[order]
    counts = {c: int(np.sum(cls == c)) for c in (CLASS_A1, CLASS_A2, CLASS_A3)}
    measures = {c: math.fsum((right[cls == c] - left[cls == c]).tolist()) for c in (CLASS_A1, CLASS_A2, CLASS_A3)}
    err = _partition_error(stage, forms, right - left)
    return Classification(v, epsilon, epsilon1, ladder, forms, cls, strat, left, right,
                          counts, measures, err)


def _partition_error(stage: SolutionStage, forms: np.ndarray, widths: np.ndarray) -> float:
    """Largest |sum of class-piece lengths - solution-set length| over forms."""
    if not len(stage.forms) and not len(forms):
        return 0.0
    allf = np.concatenate([stage.forms, forms])
    w = np.concatenate([stage.right - stage.left, -widths])
    _, inv = np.unique(_form_keys(allf), return_inverse=True)
    tot = np.zeros(int(inv.max()) + 1)
    np.add.at(tot, inv, w)
    return float(np.max(np.abs(tot))) if len(tot) else 0.0


# class I / class II cells ---------------------------------------------------

@dataclass
class CellPartition:
    t: int
    c: float
    ncells: int
    width: float
    anchor: float
    threshold: float
    segment_counts: np.ndarray
    class_II: np.ndarray                   # cell indices
    incident: dict = field(repr=False)     # class-II cell -> forms (m, 3) meeting it

    @property
    def class_I(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.ncells), self.class_II)

    def cell(self, j: int) -> tuple:
        return (self.anchor + j * self.width, self.anchor + (j + 1) * self.width)


def class_II_partition(forms: np.ndarray, left: np.ndarray, right: np.ndarray, domain: tuple,
                       t: int, epsilon1: float, threshold_constant: float = 1.0) -> CellPartition:
    """Cut the domain into ceil(2^(ct)) equal cells (c = 1 + epsilon1) and tag as class II
    every cell met by more than threshold_constant * 2^(t(3/2 - c)) small-derivative segments."""
    if not epsilon1 > 0:
        raise ValueError("epsilon1 must be positive")
    c = 1 + epsilon1
    ncells = int(math.ceil(2.0 ** (c * t) - 1e-9))
    lo, hi = float(domain[0]), float(domain[1])
    width = (hi - lo) / ncells
    threshold = threshold_constant * 2.0 ** (t * (1.5 - c))
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    first = np.clip(np.floor((left - lo) / width).astype(np.int64), 0, ncells - 1)
    last = np.clip(np.floor((right - lo) / width).astype(np.int64), 0, ncells - 1)
    diff = np.zeros(ncells + 1, dtype=np.int64)
    np.add.at(diff, first, 1)
    np.add.at(diff, last + 1, -1)
    counts = np.cumsum(diff[:-1])
    class_II = np.nonzero(counts > threshold)[0]
    incident = {}
    if len(class_II):
        is_II = np.zeros(ncells, dtype=bool)
        is_II[class_II] = True
        for j in range(len(first)):
            for cell in range(int(first[j]), int(last[j]) + 1):
                if is_II[cell]:
                    incident.setdefault(cell, []).append(j)
        incident = {cell: np.unique(forms[idx], axis=0) for cell, idx in incident.items()}
    return CellPartition(t, c, ncells, width, lo, threshold, counts, class_II, incident)


# incidence geometry -----------------------------------------------------------

def _primitive(vec) -> tuple:
    g = 0
    for x in vec:
        g = math.gcd(g, int(x))
    out = tuple(int(x) // g for x in vec) if g else tuple(int(x) for x in vec)
    for x in out:
        if x:
            return out if x > 0 else tuple(-y for y in out)
    return out


@dataclass
class IncidenceDiagnostics:
    cell: tuple
    count: int
    case: str                         # empty / point / line / plane / violation
    plane: tuple | None = None        # (A, B, C, D): A a0 + B a1 + C a2 = D
    line_point: tuple | None = None
    line_direction: tuple | None = None
    quadruple: tuple | None = None    # four affinely independent triples, if any
    x: float = float("nan")
    slope_gap: float = float("nan")   # |B - A x|
    curve_gap: float = float("nan")   # |C - A f(x)|
    T: float = float("nan")           # f'(x)(B - A x) - (C - A f(x))
    bounds: dict = field(default_factory=dict)

    @property
    def violation(self) -> bool:
        return self.case == "violation"


def incidence_analysis(cell: tuple, triples, curve: CurveSystem | None = None,
                       t: int | None = None, c: float | None = None) -> IncidenceDiagnostics:
    """Exact integer fit of the affine hull of the coefficient triples met in ``cell``."""
    pts = np.unique(np.asarray(triples, dtype=np.int64).reshape(-1, 3), axis=0)
    m = len(pts)
    diag = IncidenceDiagnostics(tuple(map(float, cell)), m, "empty")
    if m == 0:
        return diag
    diag.case = "point"
    if m == 1:
        return diag
    p0 = pts[0]
    d = pts[1:] - p0
    nz = np.nonzero(np.any(d != 0, axis=1))[0]
    d1 = d[nz[0]]
    cr = np.cross(d1, d)
    indep = np.nonzero(np.any(cr != 0, axis=1))[0]
    if not len(indep):
        beta = _primitive(d1)
        diag.case = "line"
        diag.line_point = tuple(int(x) for x in p0)
        diag.line_direction = beta
        if t is not None and c is not None:
            cap = 2.0 ** (t * (c - 0.5))
            diag.bounds = {"direction_cap": cap,
                           "direction_ok": all(abs(b) <= cap for b in beta)}
        return diag
    j2 = indep[0]
    normal = cr[j2]
    off = d @ normal
    bad = np.nonzero(off != 0)[0]
    if len(bad):
        diag.case = "violation"
        q = (p0, p0 + d1, p0 + d[j2], p0 + d[bad[0]])
        diag.quadruple = tuple(tuple(int(x) for x in r) for r in q)
        return diag
    A, B, C = _primitive(normal)
    D = int(A * p0[0] + B * p0[1] + C * p0[2])
    assert np.all(pts @ np.array([A, B, C]) == D)
    diag.case = "plane"
    diag.plane = (A, B, C, D)
    if curve is not None:
        x = 0.5 * (cell[0] + cell[1])
        f = float(curve.component(2, x, 0))
        fp = float(curve.component(2, x, 1))
        diag.x = x
        diag.slope_gap = abs(B - A * x)
        diag.curve_gap = abs(C - A * f)
        diag.T = fp * (B - A * x) - (C - A * f)
        if t is not None and c is not None:
            with np.errstate(divide="ignore"):
                diag.bounds = {
                    "by_slope_gap": 2.0 ** (t * (2 - 2 * c)) / diag.slope_gap if diag.slope_gap else math.inf,
                    "by_T": 2.0 ** (t * (2 - 3 * c)) / abs(diag.T) if diag.T else math.inf,
                    "by_A": 2.0 ** (t * (2 - c)) / abs(A) if A else math.inf,
                }
    return diag


@dataclass
class IncidenceReport:
    t: int
    v: float
    epsilon1: float
    threshold_constant: float
    ncells: int
    class_II: int
    segments: int
    cases: dict
    violations: list
    diagnostics: list = field(repr=False)
    direction_counts: dict = field(default_factory=dict)   # |beta_2| -> number of line cells


def incidence_run(curve: CurveSystem, lam, v: float, t: int, epsilon1: float = 0.05,
                  threshold_constant: float = 1.0, budget: int = DEFAULT_BUDGET) -> IncidenceReport:
    """Small-derivative segments of stage t, their class-II cells, and a plane fit per cell."""
    _check_eps1(v, epsilon1)
    st = build_stage(curve, lam, v, t, slope_window=(None, (2 - v) / 3), budget=budget)
    part = class_II_partition(st.forms, st.left, st.right, curve.domain, t, epsilon1, threshold_constant)
    cases = {"empty": 0, "point": 0, "line": 0, "plane": 0, "violation": 0}
    diags, viol = [], []
    dirs = {}
    for cell in part.class_II.tolist():
        dg = incidence_analysis(part.cell(cell), part.incident.get(cell, np.zeros((0, 3))), curve, t, part.c)
        cases[dg.case] += 1
        diags.append(dg)
        if dg.violation:
            viol.append(dg)
        if dg.case == "line":
            b2 = abs(dg.line_direction[2])
            dirs[b2] = dirs.get(b2, 0) + 1
    return IncidenceReport(t, v, epsilon1, threshold_constant, part.ncells, len(part.class_II),
                           len(st.forms), cases, viol, diags, dict(sorted(dirs.items())))


# s-volume sums ------------------------------------------------------------------

@dataclass
class SVolumeReport:
    s_star: float
    target: float
    ts: list
    grid: list            # dicts: s, per-stage sums, tail sums, slope, decreasing
    slope_at: object = field(repr=False, default=None)


def svolume_critical_exponent(stages: list, s_grid=None, tol: float = 1e-6) -> SVolumeReport:
    """Smallest s at which the per-stage sums sum |d|^s decay across t.

    The trend is the least-squares slope of log2 of the stage sums against t;
    a negative slope means the tail sums fall geometrically.  s* is the zero
    of the slope, located by bisection on [0, 1].
    """
    if len(stages) < 3:
        raise ValueError("need at least three stages")
    stages = sorted(stages, key=lambda s: s.H_lo)
    ts = [s.t if s.t is not None else math.log2(s.H_hi + 1) for s in stages]
    if s_grid is None:
        s_grid = [i / 20 for i in range(21)]

    def sums(s):
        return np.array([st.s_sum(s) for st in stages])

    def slope(s):
        y = sums(s)
        if np.any(y <= 0):
            return -math.inf
        return float(np.polyfit(ts, np.log2(y), 1)[0])

    rows = []
    for s in s_grid:
        y = sums(s)
        tails = np.cumsum(y[::-1])[::-1]
        sl = slope(s)
        rows.append({"s": float(s), "sums": y.tolist(), "tails": tails.tolist(),
                     "slope": sl, "decreasing": sl < 0})
    lo, hi = 0.0, 1.0
    if slope(hi) >= 0:
        s_star = 1.0
    elif slope(lo) < 0:
        s_star = 0.0
    else:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if slope(mid) < 0:
                hi = mid
            else:
                lo = mid
        s_star = hi
    return SVolumeReport(s_star, dimension_target(stages[0].v, stages[0].curve.n), ts, rows, slope)


# box counting -------------------------------------------------------------------

def default_scales(k_lo: int = 6, k_hi: int = 14) -> list:
    return [2.0**-k for k in range(k_lo, k_hi + 1)]


@dataclass
class DimensionEstimate:
    v: float
    mode: str
    scales: list
    counts: list
    slope: float
    intercept: float
    residual: float
    target: float
    lower_target: float
    zero_counts: bool
    monotone: bool
    s_star: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def error(self) -> float:
        return self.slope - self.target


def _check_scales(scales, domain, finest: float = 0.0) -> np.ndarray:
    sc = np.asarray(sorted(scales, reverse=True), dtype=float)
    if len(sc) < 3:
        raise ValueError("box counting needs at least three scales")
    if np.any(sc <= 0):
        raise ValueError("scales must be positive")
    r = sc[1:] / sc[:-1]
    if np.max(np.abs(r / r[0] - 1)) > 1e-9:
        raise ValueError("scales must form a geometric sequence")
    L = domain[1] - domain[0]
    if sc[0] > L / 10 * (1 + 1e-12):
        raise ValueError("largest scale exceeds |I|/10")
    if sc[-1] < finest:
        raise ValueError("smallest scale lies below the finest stage width")
    return sc


def cell_count_points(points: np.ndarray, eps: float, domain: tuple) -> int:
    """Half-open eps-cells anchored at the left end of the domain that contain a point."""
    lo, hi = domain
    if not len(points):
        return 0
    ncell = int(math.ceil((hi - lo) / eps - 1e-12))
    idx = np.clip(np.floor((np.asarray(points) - lo) / eps).astype(np.int64), 0, ncell - 1)
    return int(len(np.unique(idx)))


def fit_box_slope(scales, counts) -> tuple:
    """(slope, intercept, rms residual, zero_counts) of log N against log(1/eps)."""
    x = np.log(1.0 / np.asarray(scales, dtype=float))
    n = np.asarray(counts, dtype=float)
    if np.any(n <= 0):
        if np.all(n <= 0):
            return 0.0, 0.0, 0.0, True
        keep = n > 0
        if keep.sum() < 2:
            return 0.0, 0.0, 0.0, True
        x, n = x[keep], n[keep]
        zero = True
    else:
        zero = False
    y = np.log(n)
    slope, icpt = np.polyfit(x, y, 1)
    res = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    return float(slope), float(icpt), res, zero


def estimate_from_sets(sets, scales, domain, v: float, n: int = 2, mode: str = "sets") -> DimensionEstimate:
    """Box counts of one IntervalSet per scale (or one set for all scales)."""
    sc = _check_scales(scales, domain)
    if isinstance(sets, IntervalSet):
        sets = [sets] * len(sc)
    counts = [s.cells_meeting(e, domain[0], domain[1]) for s, e in zip(sets, sc)]
    return _estimate(v, n, mode, sc, counts)


def _estimate(v, n, mode, sc, counts, meta=None) -> DimensionEstimate:
    slope, icpt, res, zero = fit_box_slope(sc, counts)
    mono = all(a <= b for a, b in zip(counts, counts[1:]))
    return DimensionEstimate(v, mode, [float(e) for e in sc], [int(c) for c in counts], slope, icpt, res,
                             dimension_target(v, 2), dimension_target(v, n), zero, mono,
                             meta=meta or {})


def matched_height(eps: float, v: float) -> int:
    """Nearest integer to eps^(-1/(v+1)): the height whose intervals have size about eps."""
    return int(math.floor(eps ** (-1.0 / (v + 1)) + 0.5))


def survivor_set(stages: list, m: int = 3) -> IntervalSet:
    """Points lying in the unions of at least ``m`` of the given stages."""
    if m < 1:
        raise ValueError("m must be >= 1")
    ev_x, ev_d = [], []
    for st in stages:
        u = st.union()
        ev_x += [u.lo, u.hi]
        ev_d += [np.ones(len(u)), -np.ones(len(u))]
    if not ev_x:
        return IntervalSet()
    x = np.concatenate(ev_x)
    d = np.concatenate(ev_d)
    order = np.lexsort((-d, x))          # openings before closings at equal x
    x, d = x[order], d[order]
    depth = np.cumsum(d)
    lo_, hi_ = [], []
    inside = False
    for i in range(len(x)):
        if not inside and depth[i] >= m:
            inside = True
            start = x[i]
        elif inside and depth[i] < m:
            inside = False
            lo_.append(start)
            hi_.append(x[i])
    return IntervalSet(lo_, hi_)


def box_dimension(curve: CurveSystem, lam, v: float, scales=None, mode: str = "shell",
                  stages: list | None = None, survivors: int = 3,
                  budget: int = DEFAULT_BUDGET) -> DimensionEstimate:
    """Box-counting slope of a finite proxy for the limsup set, compared with 3/(v+1).

    mode "shell": at scale eps, the cells holding resonant points whose least
    height lies in (H/2, H] with H = matched_height(eps, v); these are the
    points whose solution intervals have length about eps.
    mode "survivor": cells meeting the points covered by at least ``survivors``
    of the supplied stages.
    """
    _check_v(v)
    scales = default_scales() if scales is None else scales
    if mode == "shell":
        sc = _check_scales(scales, curve.domain)
        Hmax = max(matched_height(float(e), v) for e in sc)
        if Hmax < 1:
            raise ValueError("scales too coarse for any height")
        pts = enumerate_resonant(curve, lam, Hmax, budget)
        counts, heights = [], []
        for e in sc:
            H = matched_height(float(e), v)
            sel = (pts.height > H // 2) & (pts.height <= H)
            counts.append(cell_count_points(pts.alpha[sel], float(e), curve.domain))
            heights.append(H)
        return _estimate(v, curve.n, mode, sc, counts, {"heights": heights, "points": len(pts)})
    if mode == "survivor":
        if not stages:
            raise ValueError("survivor mode needs stages")
        finest = min(st.min_width for st in stages if st.count) if any(st.count for st in stages) else 0.0
        sc = _check_scales(scales, curve.domain, 0.0)
        surv = survivor_set(stages, survivors)
        counts = [surv.cells_meeting(float(e), curve.domain[0], curve.domain[1]) for e in sc]
        return _estimate(v, curve.n, mode, sc, counts, {"survivors": survivors, "finest_width": finest,
                                                      "survivor_measure": surv.measure})
    raise ValueError(f"unknown mode {mode!r}")


def shift_robustness(curve: CurveSystem, v: float, lam_a=None, lam_b=None, **kw) -> tuple:
    """(estimate for lam_a, estimate for lam_b, |slope difference|)."""
    from .funcspace import shift_constant
    lam_b = shift_constant(0.5) if lam_b is None else lam_b
    ea = box_dimension(curve, lam_a, v, **kw)
    eb = box_dimension(curve, lam_b, v, **kw)
    return ea, eb, abs(ea.slope - eb.slope)
