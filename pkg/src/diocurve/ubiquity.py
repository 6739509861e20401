"""Coverage of intervals by balls around resonant points, and the divergence-sum test."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as kn
from .engine import Family, buckets, canonical_rows
from .forms import DEFAULT_BUDGET, coefficient_rows
from .funcspace import ApproxFunction, CurveSystem
from .intervals import IntervalSet, union_intersect_measure  # noqa: F401  (re-exported)

PER_BUCKET = 4_000_000


def default_J_list(curve: CurveSystem, seed: int = 0, lengths=(0.1, 0.01), per_length: int = 4) -> list:
    """The whole domain plus random subintervals of the given lengths."""
    lo, hi = curve.domain
    rng = np.random.default_rng(seed)
    out = [(lo, hi)]
    for L in lengths:
        L = L * (hi - lo)
        for _ in range(per_length):
            a = float(rng.uniform(lo, hi - L))
            out.append((a, a + L))
    return out


class RootStream:
    """All roots of forms of height <= Q, produced bucket by bucket in increasing x."""

    def __init__(self, curve: CurveSystem, lam, Q: int, budget: int = DEFAULT_BUDGET,
                 per_bucket: int = PER_BUCKET):
        self.curve = curve
        self.Q = int(Q)
        self.fam = Family(curve, lam)
        rows = np.vstack(list(coefficient_rows(curve.n, 1, self.Q, include_zero=self.fam.has_shift)))
        if not self.fam.has_shift:
            rows = canonical_rows(rows)
        self.pieces = self.fam.pieces(rows)
        pl, pr = self.fam.values(self.pieces)
        self.estimate = int(np.sum(np.abs(pr - pl) + 1.0))
        if self.estimate > budget:
            from .errors import BudgetError
            raise BudgetError(self.estimate, budget)
        self.per_bucket = per_bucket

    def __iter__(self):
        lo, hi = self.curve.domain
        for b0, b1, pb in buckets(self.fam, self.pieces, lo, hi, self.per_bucket, self.estimate):
            r = self.fam.roots(pb, budget=np.iinfo(np.int64).max)
            yield b0, b1, np.sort(r.x)

    def sorted_roots(self) -> np.ndarray:
        parts = [x for _, _, x in self]
        return np.concatenate(parts) if parts else np.zeros(0)


def coverage(stream: RootStream, radius: float, J_list: list) -> list:
    """|union of balls(alpha, radius) & J| for every J, in one pass over the stream."""
    covered = [0.0] * len(J_list)
    prev = -np.inf
    for b0, b1, xs in stream:
        if len(xs) == 0:
            continue
        for j, (a, b) in enumerate(J_list):
            if b < b0 - radius or a > b1 + radius:
                continue
            covered[j] += kn.ball_union_length(xs, radius, a, b, prev)
        prev = float(xs[-1])
    return covered


def coverage_of_points(points: np.ndarray, radius: float, J: tuple) -> float:
    return kn.ball_union_length(np.sort(points), radius, J[0], J[1], -np.inf)


def calibrate_kappa(points: np.ndarray, n: int, Q: int, J: tuple, target: float = 0.5,
                    iters: int = 100) -> float:
    """kappa with coverage ratio equal to ``target`` at radius kappa Q^-(n+1) (bisection)."""
    pts = np.sort(points)
    L = J[1] - J[0]
    scale = float(Q) ** (-(n + 1))
    lo, hi = 0.0, 1.0
    while coverage_of_points(pts, hi * scale, J) / L < target:
        hi *= 2.0
        if hi > 1e18:
            raise ValueError("no kappa reaches the target coverage")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if coverage_of_points(pts, mid * scale, J) / L < target:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass
class UbiquityReport:
    kappa: float
    calibration_t: int | None
    records: list = field(default_factory=list)   # dicts: t, Q, kappa, radius, J_lo, J_hi, covered, ratio
    min_ratio_by_J: dict = field(default_factory=dict)
    liminf_proxy: float = float("nan")            # minimum over the tested t range
    rho_regular: bool = True

    def ratios(self, t: int | None = None) -> list:
        return [r["ratio"] for r in self.records if t is None or r["t"] == t]


def coverage_sweep(curve: CurveSystem, lam, t_range, J_list: list | None = None,
                   kappa: float | None = None, calibration_t: int | None = None,
                   target: float = 0.5, budget: int = DEFAULT_BUDGET,
                   per_bucket: int = PER_BUCKET, progress=None) -> UbiquityReport:
    """Coverage ratios of balls of radius kappa 2^-t(n+1) around resonant points of height <= 2^t.

    With ``kappa`` None it is calibrated on the whole domain at ``calibration_t``
    (default: the smallest t) so the ratio there equals ``target``, then frozen.
    """
    t_range = sorted(int(t) for t in t_range)
    if not t_range:
        raise ValueError("empty t range")
    n = curve.n
    J_list = [curve.domain] if J_list is None else [tuple(map(float, J)) for J in J_list]
    for a, b in J_list:
        if a < curve.domain[0] or b > curve.domain[1] or b <= a:
            raise ValueError(f"J = ({a}, {b}) is not a subinterval of the domain")
    if kappa is None:
        ct = t_range[0] if calibration_t is None else int(calibration_t)
        pts = RootStream(curve, lam, 2**ct, budget, per_bucket).sorted_roots()
        kappa = calibrate_kappa(pts, n, 2**ct, curve.domain, target)
    else:
        ct = None
        if kappa <= 0:
            raise ValueError("kappa must be positive")
    rep = UbiquityReport(kappa, ct)
    for t in t_range:
        Q = 2**t
        radius = kappa * 2.0 ** (-t * (n + 1))
        stream = RootStream(curve, lam, Q, budget, per_bucket)
        cov = coverage(stream, radius, J_list)
        for (a, b), c in zip(J_list, cov):
            ratio = min(1.0, max(0.0, c / (b - a)))
            rep.records.append({"t": t, "Q": Q, "kappa": kappa, "radius": radius,
                                "J_lo": a, "J_hi": b, "covered": c, "ratio": ratio})
        if progress:
            progress(t, cov)
    for a, b in J_list:
        rep.min_ratio_by_J[(a, b)] = min(r["ratio"] for r in rep.records
                                         if r["J_lo"] == a and r["J_hi"] == b)
    rep.liminf_proxy = min(rep.min_ratio_by_J.values())
    # rho(q) = q^-(n+1) shrinks by exactly 2^-(n+1) per dyadic step
    rep.rho_regular = all(2.0 ** (-(t + 1) * (n + 1)) <= 2.0 ** (-(n + 1)) * 2.0 ** (-t * (n + 1)) * (1 + 1e-15)
                          for t in t_range)
    return rep


# divergence of the Hausdorff-measure sum --------------------------------------

@dataclass
class DivergenceReport:
    classification: str           # divergent / convergent / inconclusive
    exact: str | None             # threshold verdict for power laws
    numeric: str                  # block-sum trend verdict
    slope: float                  # fitted log2 growth of dyadic block sums
    exponent: float | None        # summand exponent n - s(v+1) for power laws
    threshold: float | None       # (n+1)/(v+1) for power laws
    checkpoints: list
    partial_sums: list


def divergence_diagnostic(psi: ApproxFunction, s: float, n: int, q_max: int = 2**20,
                          div_slope: float = -0.01, conv_slope: float = -0.05) -> DivergenceReport:
    """Does sum_q (psi(q)/q)^s q^n diverge?

    Partial sums are taken at powers of two.  The numeric verdict fits the
    log2 of dyadic block sums against the block index: slope >= ``div_slope``
    reads as divergent, slope <= ``conv_slope`` as convergent.  For power laws
    the exact comparison of s with (n+1)/(v+1) decides.
    """
    if not 0 < s <= 1:
        raise ValueError("s must lie in (0, 1]")
    if q_max < 2**10:
        raise ValueError("q_max must be at least 2^10")
    K = int(math.floor(math.log2(q_max)))
    q = np.arange(1, 2**K + 1, dtype=float)
    terms = (psi(q) / q) ** s * q**n
    csum = np.cumsum(terms)
    checkpoints = [2**k for k in range(0, K + 1)]
    partial = [float(csum[c - 1]) for c in checkpoints]
    blocks = np.array([csum[2 ** (k + 1) - 1] - csum[2**k - 1] for k in range(K)])
    ks = np.arange(K)
    use = ks >= K // 2
    with np.errstate(divide="ignore"):
        lb = np.log2(blocks[use])
    slope = float(np.polyfit(ks[use], lb, 1)[0]) if np.all(np.isfinite(lb)) else -np.inf
    if slope >= div_slope:
        numeric = "divergent"
    elif slope <= conv_slope:
        numeric = "convergent"
    else:
        numeric = "inconclusive"
    exact = exponent = threshold = None
    if psi.is_power:
        v = psi.exponent
        exponent = n - s * (v + 1)
        threshold = (n + 1) / (v + 1)
        exact = "divergent" if s <= threshold else "convergent"
    return DivergenceReport(exact or numeric, exact, numeric, slope, exponent, threshold,
                            checkpoints, partial)
