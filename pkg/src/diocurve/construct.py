"""Nearby-root construction: successive minima, rounding, and root localization.

Given xi and Q, the body {|a0 + sum a_i f_i(xi)| < Q^-n, |a_i| <= Q} is mapped
to the unit sup-norm cube by y0 = Q^n (a0 + sum a_i f_i(xi)), y_i = a_i / Q.
The image lattice has determinant one, so its sup-norm successive minima are
the minima of the body.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import BudgetError, ConstructionError, DomainError
from .forms import IntegerForm
from .funcspace import CurveSystem, as_shift, bound_constant, sup_abs

LLL_DELTA = 0.75
ENUM_LIMIT = 2_000_000


# lattice helpers -------------------------------------------------------------

def body_map(curve: CurveSystem, xi: float, Q: float) -> np.ndarray:
    """Matrix T with y = T @ (a0, a1, .., an)."""
    n = curve.n
    T = np.zeros((n + 1, n + 1))
    T[0, 0] = Q**n
    for i in range(1, n + 1):
        T[0, i] = Q**n * float(curve.component(i, xi))
        T[i, i] = 1.0 / Q
    return T


def lll_reduce(basis: np.ndarray, coeffs: np.ndarray, delta: float = LLL_DELTA):
    """LLL on the rows of ``basis``; ``coeffs`` (integer rows) follow the same moves."""
    b = basis.astype(float).copy()
    c = coeffs.astype(np.int64).copy()
    m = len(b)

    def gso(b):
        bs = np.zeros_like(b)
        mu = np.zeros((m, m))
        for i in range(m):
            v = b[i].copy()
            for j in range(i):
                mu[i, j] = b[i] @ bs[j] / (bs[j] @ bs[j])
                v -= mu[i, j] * bs[j]
            bs[i] = v
        return bs, mu

    bs, mu = gso(b)
    k = 1
    guard = 0
    while k < m:
        guard += 1
        if guard > 100_000:
            raise ConstructionError("lattice", "LLL did not terminate")
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                b[k] -= q * b[j]
                c[k] -= q * c[j]
                bs, mu = gso(b)
        if bs[k] @ bs[k] >= (delta - mu[k, k - 1] ** 2) * (bs[k - 1] @ bs[k - 1]):
            k += 1
        else:
            b[[k, k - 1]] = b[[k - 1, k]]
            c[[k, k - 1]] = c[[k - 1, k]]
            bs, mu = gso(b)
            k = max(k - 1, 1)
    return b, c


def enumerate_short(b: np.ndarray, radius: float, limit: int = ENUM_LIMIT) -> np.ndarray:
    """Integer combination vectors u with |sum u_i b_i|_2 <= radius (Fincke-Pohst)."""
    m = len(b)
    bs = np.zeros_like(b)
    mu = np.zeros((m, m))
    for i in range(m):
        v = b[i].copy()
        for j in range(i):
            mu[i, j] = b[i] @ bs[j] / (bs[j] @ bs[j])
            v -= mu[i, j] * bs[j]
        bs[i] = v
    norms = np.einsum("ij,ij->i", bs, bs)
    r2 = radius * radius * (1 + 1e-12)
    out = []
    u = [0] * m

    def rec(i, partial):
        if len(out) > limit:
            raise BudgetError(len(out), limit, "lattice points")
        c = -sum(u[j] * mu[j, i] for j in range(i + 1, m))
        room = (r2 - partial) / norms[i]
        if room < 0:
            return
        w = math.sqrt(room)
        for ui in range(math.ceil(c - w), math.floor(c + w) + 1):
            u[i] = ui
            p = partial + (ui - c) ** 2 * norms[i]
            if i == 0:
                out.append(tuple(u))
            else:
                rec(i - 1, p)
        u[i] = 0

    rec(m - 1, 0.0)
    return np.array(out, dtype=np.int64).reshape(-1, m)


def _rank(rows) -> int:
    if not len(rows):
        return 0
    return int(np.linalg.matrix_rank(np.asarray(rows, dtype=float)))


@dataclass
class ShortVectors:
    vectors: np.ndarray        # row j is (a0, .., an) of the j-th form
    minima: tuple
    C2: float
    product: float


def successive_minima(curve: CurveSystem, xi: float, Q: float,
                      limit: int = ENUM_LIMIT) -> ShortVectors:
    """Exact sup-norm successive minima of the body and vectors attaining them."""
    curve.check_point(xi)
    n1 = curve.n + 1
    T = body_map(curve, xi, Q)
    eye = np.eye(n1, dtype=np.int64)
    b, c = lll_reduce((T @ eye).T, eye)
    # the reduced basis gives an upper bound for the last minimum
    R = float(np.abs(b).max(axis=1).min())
    while True:
        us = enumerate_short(b, R * math.sqrt(n1), limit)
        cand = us @ c
        cand = cand[np.any(cand != 0, axis=1)]
        ys = cand @ T.T
        sup = np.abs(ys).max(axis=1)
        keep = sup <= R * (1 + 1e-12)
        cand, sup = cand[keep], sup[keep]
        # canonical sign: first nonzero coefficient positive; drop the mirror copies
        first = cand[np.arange(len(cand)), np.argmax(cand != 0, axis=1)]
        pos = first > 0
        cand, sup = cand[pos], sup[pos]
        order = np.lexsort(tuple(cand[:, j] for j in range(n1 - 1, -1, -1)) + (np.round(sup, 12),))
        chosen, minima = [], []
        for k in order:
            if _rank(chosen + [cand[k]]) > len(chosen):
                chosen.append(cand[k])
                minima.append(float(sup[k]))
                if len(chosen) == n1:
                    break
        if len(chosen) == n1:
            vecs = np.array(chosen, dtype=np.int64)
            return ShortVectors(vecs, tuple(minima), max(minima), float(np.prod(minima)))
        R *= 2.0


# rounding system -------------------------------------------------------------

@dataclass
class PaperConstants:
    C: float
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    C6: float
    C7: float
    M: float

    @property
    def K1(self) -> float:
        return self.C7

    @property
    def K2(self) -> float:
        return 2.0 * self.C3


def paper_constants(n: int, C: float, C2: float, delta: float) -> PaperConstants:
    """Constants of the construction expressed through C2 and the derivative bound C (Q >= 1)."""
    C1 = delta ** (1.0 / (n + 1))
    C3 = (n + 1) * C2
    C4 = 1.0 + 2.0 * (n + 1) ** 2 * C2 * C
    C5 = (n + 1) * C2
    C6 = C4 + (n - 1) * (n + 1) * C2 * C + C
    C7 = C3 + (n - 1) * (n + 1) * C2 * C + C6 * C + C
    return PaperConstants(C, C1, C2, C3, C4, C5, C6, C7, n * C)


@dataclass
class RoundingResult:
    theta: np.ndarray
    t: np.ndarray
    form: IntegerForm | None
    value: float               # G(xi)
    slope: float               # G'(xi)
    target_slope: float
    checks: dict
    variant: str

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def solve_rounding_system(vectors: np.ndarray, xi: float, curve: CurveSystem, lam, Q: float,
                          C2: float, delta: float = 1e-2, variant: str = "printed",
                          C: float | None = None) -> RoundingResult:
    """Solve the linear system for theta, round to the nearest integers, and check the bounds.

    ``variant`` picks the slope target: "printed" sums |F_i'(xi)| over the
    first n vectors, "n+1" over all of them.
    """
    lam = as_shift(lam)
    V = np.asarray(vectors, dtype=np.int64)
    n = curve.n
    if V.shape != (n + 1, n + 1):
        raise ConstructionError("rounding", f"need {n + 1} vectors of length {n + 1}")
    f = np.array([1.0] + [float(curve.component(i, xi)) for i in range(1, n + 1)])
    df = np.array([0.0] + [float(curve.component(i, xi, 1)) for i in range(1, n + 1)])
    Fv = V @ f
    dF = V @ df
    terms = np.abs(dF[:n]) if variant == "printed" else np.abs(dF)
    if variant not in ("printed", "n+1"):
        raise ValueError("variant must be 'printed' or 'n+1'")
    target = Q + math.fsum(terms.tolist())
    A = np.zeros((n + 1, n + 1))
    rhs = np.zeros(n + 1)
    A[0] = Fv
    rhs[0] = -float(lam(xi, 0))
    A[1] = dF
    rhs[1] = target - float(lam(xi, 1))
    for j in range(2, n + 1):
        A[j] = V[:, j]
    if round(np.linalg.det(V.astype(float))) == 0:
        raise ConstructionError("degenerate-vectors", "the coefficient matrix is singular")
    theta = np.linalg.solve(A, rhs)
    t = np.round(theta).astype(np.int64)
    x = t @ V
    C = bound_constant(curve, lam) if C is None else C
    K = paper_constants(n, C, C2, delta)
    form = IntegerForm(tuple(x.tolist())) if np.any(x != 0) else None
    if form is None:
        return RoundingResult(theta, t, None, float("nan"), float("nan"), target,
                              {"nonzero": False}, variant)
    value = float(form.value(curve, xi)) + float(lam(xi, 0))
    slope = float(form.value(curve, xi, 1)) + float(lam(xi, 1))
    checks = {
        "value": abs(value) <= K.C3 * Q ** (-n),
        "slope_low": abs(slope) >= Q,
        "slope_high": abs(slope) <= K.C4 * Q,
        "height": form.height <= K.C7 * Q,
    }
    return RoundingResult(theta, t, form, value, slope, target, checks, variant)


# localization ----------------------------------------------------------------

@dataclass
class Localization:
    alpha: float | None
    radius: float
    paper_hypothesis: bool
    realized_hypothesis: bool
    curvature_bound: float
    sign_preserved: bool
    ok: bool
    note: str = ""


def curvature_bound(form: IntegerForm, curve: CurveSystem, lam) -> float:
    """sup |F'' + lambda''| over the domain, bounded termwise."""
    lam = as_shift(lam)
    lo, hi = curve.domain
    s = sup_abs(lam, 2, lo, hi, curve.grid_points)
    for i, a in enumerate(form.coeffs[1:], start=1):
        if a:
            s += abs(a) * curve.sup(i, 2)
    return s


def localize_root(form: IntegerForm, curve: CurveSystem, lam, x0: float, Q: float, C3: float,
                  C: float | None = None, C7: float | None = None) -> Localization:
    """Root of G within 2 C3 Q^-(n+1) of x0 via the endpoint sign change.

    The localization needs |G''| * radius <= |G'(x0)| / 2 on the interval.
    That condition is checked with the realized bound on |G''|; the
    condition written with the constants C and C7 is reported alongside.
    """
    lam = as_shift(lam)
    n = curve.n
    lo, hi = curve.domain
    r = 2.0 * C3 * Q ** (-n - 1)
    if x0 - r < lo or x0 + r > hi:
        raise DomainError(f"x0 = {x0} is within {r:.3g} of the domain boundary")

    def G(x, order=0):
        return float(form.value(curve, x, order)) + float(lam(x, order))

    g1 = G(x0, 1)
    M2 = curvature_bound(form, curve, lam)
    realized = M2 * r <= abs(g1) / 2
    paper = None
    if C is not None and C7 is not None:
        paper = (n * C * C7 * Q + C) * r + C <= Q / 2
    if not realized:
        raise ConstructionError("q-too-small",
                                f"|G''| r = {M2 * r:.3g} exceeds |G'(x0)|/2 = {abs(g1) / 2:.3g}")
    xs = np.linspace(x0 - r, x0 + r, 12)[1:-1]
    d = np.array([G(x, 1) for x in xs])
    same_sign = bool(np.all(np.sign(d) == np.sign(g1)))
    ga, gb = G(x0 - r), G(x0 + r)
    if ga == 0.0:
        alpha = x0 - r
    elif gb == 0.0:
        alpha = x0 + r
    elif (ga > 0) == (gb > 0):
        return Localization(None, r, bool(paper), realized, M2, same_sign, False,
                            "no sign change at the interval ends")
    else:
        alpha = brentq(G, x0 - r, x0 + r, xtol=1e-15 * max(1.0, abs(x0)), rtol=1e-15)
    return Localization(alpha, r, bool(paper), realized, M2, same_sign, same_sign)


# composition -----------------------------------------------------------------

@dataclass
class ConstructionTrace:
    xi: float
    Q: float
    delta: float
    variant: str
    exceptional: bool
    minima: tuple = ()
    vectors: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    theta: list = field(default_factory=list)
    t: list = field(default_factory=list)
    form: list | None = None
    value: float | None = None
    slope: float | None = None
    checks: dict = field(default_factory=dict)
    alpha: float | None = None
    height: int | None = None
    distance: float | None = None
    realized_K1: float | None = None
    realized_K2: float | None = None
    paper_hypothesis: bool | None = None
    sign_preserved: bool | None = None
    satisfies_target: bool = False
    failure: str | None = None

    def to_record(self) -> dict:
        return asdict(self)


def nearby_resonant(xi: float, curve: CurveSystem, lam=None, Q: float = 16, delta: float = 1e-2,
                    variant: str = "printed", C: float | None = None,
                    check_exceptional: bool = True) -> ConstructionTrace:
    """Build a form with a root alpha near xi with H(alpha) <= K1 Q and |xi - alpha| <= K2 Q^-(n+1).

    Points of the exceptional set get a trace with ``exceptional`` set and no
    construction.  Failures along the way are recorded in ``failure``.
    """
    from .counting import phi_contains

    lam = as_shift(lam)
    n = curve.n
    curve.check_point(xi)
    C = bound_constant(curve, lam) if C is None else C
    C1 = delta ** (1.0 / (n + 1))
    trace = ConstructionTrace(float(xi), float(Q), delta, variant, False)
    if check_exceptional and phi_contains(curve, C1 * Q, delta, xi):
        trace.exceptional = True
        return trace
    sv = successive_minima(curve, xi, Q)
    K = paper_constants(n, C, sv.C2, delta)
    trace.minima = tuple(sv.minima)
    trace.vectors = sv.vectors.tolist()
    trace.constants = asdict(K) | {"K1": K.K1, "K2": K.K2}
    try:
        rr = solve_rounding_system(sv.vectors, xi, curve, lam, Q, sv.C2, delta, variant, C)
    except ConstructionError as e:
        trace.failure = str(e)
        return trace
    trace.theta = rr.theta.tolist()
    trace.t = rr.t.tolist()
    trace.checks = dict(rr.checks)
    if rr.form is None:
        trace.failure = "rounded form is zero"
        return trace
    trace.form = list(rr.form.coeffs)
    trace.value = rr.value
    trace.slope = rr.slope
    if not rr.ok:
        trace.failure = "bounds violated: " + ",".join(k for k, v in rr.checks.items() if not v)
        return trace
    try:
        loc = localize_root(rr.form, curve, lam, xi, Q, K.C3, C, K.C7)
    except (ConstructionError, DomainError) as e:
        trace.failure = str(e)
        return trace
    trace.paper_hypothesis = loc.paper_hypothesis
    trace.sign_preserved = loc.sign_preserved
    if not loc.ok:
        trace.failure = loc.note or "sign of G' not preserved"
        return trace
    trace.alpha = loc.alpha
    trace.height = rr.form.height
    trace.distance = abs(xi - loc.alpha)
    trace.realized_K1 = rr.form.height / Q
    trace.realized_K2 = trace.distance * Q ** (n + 1)
    trace.satisfies_target = (rr.form.height <= K.K1 * Q
                              and trace.distance <= K.K2 * Q ** (-n - 1))
    return trace
