"""Curves, inhomogeneous shifts and approximation functions.

A curve is a list of component functions f_1..f_n on a closed interval with
f_1(x) = x.  Components are either :class:`~diocurve.elementary.Elementary`
term sums (usable by the batch kernels) or callables ``f(x, order)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import elementary as el
from .errors import (DegenerateCurveError, DerivativeMismatchError, DomainError,
                     NormalizationError)

GRID_POINTS = 10_000
RICHARDSON_POINTS = 33
RICHARDSON_RTOL = 1e-6


def _eval(f, x, order=0):
    return np.asarray(f(np.asarray(x, dtype=float), order), dtype=float)


def sup_abs(f, order: int, lo: float, hi: float, grid_points: int = GRID_POINTS) -> float:
    """sup |f^(order)| on [lo, hi]: grid maximum refined at interior critical points."""
    xs = np.linspace(lo, hi, grid_points)
    vals = np.abs(_eval(f, xs, order))
    best = float(vals.max())
    try:
        d = _eval(f, xs, order + 1)
    except Exception:
        return best
    flips = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]
    for i in flips:
        g = lambda x: float(_eval(f, x, order + 1))
        xc = brentq(g, xs[i], xs[i + 1], xtol=1e-15)
        best = max(best, abs(float(_eval(f, xc, order))))
    return best


def inf_abs(f, order: int, lo: float, hi: float, grid_points: int = GRID_POINTS) -> float:
    """inf |f^(order)| on [lo, hi]; zero whenever the derivative changes sign."""
    xs = np.linspace(lo, hi, grid_points)
    vals = _eval(f, xs, order)
    if np.any(vals == 0) or np.any(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        return 0.0
    best = float(np.abs(vals).min())
    try:
        d = _eval(f, xs, order + 1)
    except Exception:
        return best
    flips = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]
    for i in flips:
        g = lambda x: float(_eval(f, x, order + 1))
        xc = brentq(g, xs[i], xs[i + 1], xtol=1e-15)
        best = min(best, abs(float(_eval(f, xc, order))))
    return best


def richardson_check(f, max_order: int, lo: float, hi: float, label: str = "f",
                     points: int = RICHARDSON_POINTS, rtol: float = RICHARDSON_RTOL) -> float:
    """Compare f^(j+1) with an extrapolated central difference of f^(j).

    Returns the worst relative mismatch; raises if it exceeds ``rtol``.
    """
    width = hi - lo
    h = width * 1e-3
    xs = np.linspace(lo + 2 * h, hi - 2 * h, points)
    worst = 0.0
    for j in range(max_order):
        d1 = (_eval(f, xs + h, j) - _eval(f, xs - h, j)) / (2 * h)
        d2 = (_eval(f, xs + h / 2, j) - _eval(f, xs - h / 2, j)) / h
        approx = (4 * d2 - d1) / 3
        exact = _eval(f, xs, j + 1)
        scale = max(1.0, float(np.abs(exact).max()))
        err = float(np.abs(approx - exact).max()) / scale
        worst = max(worst, err)
        if err > rtol:
            raise DerivativeMismatchError(
                f"{label}: derivative of order {j + 1} mismatches finite differences (rel err {err:.3g})")
    return worst


@dataclass(frozen=True)
class ApproxFunction:
    """Monotone non-increasing positive approximation function psi(q)."""

    fn: Callable | None = None
    exponent: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.fn is None and self.exponent is None:
            raise ValueError("need a callable or a power-law exponent")
        probe = np.geomspace(1.0, 2.0**30, 301)
        vals = np.asarray(self(probe), dtype=float)
        if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
            raise ValueError("psi must be positive and finite")
        if np.any(np.diff(vals) > 1e-15 * vals[:-1]):
            raise ValueError("psi must be non-increasing")

    @classmethod
    def power(cls, v: float) -> "ApproxFunction":
        return cls(exponent=float(v), name=f"q^-{v:g}")

    @property
    def is_power(self) -> bool:
        return self.fn is None

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        if self.fn is None:
            return q ** (-self.exponent)
        return np.asarray(self.fn(q), dtype=float)


def lower_order(psi: ApproxFunction, q_max: float = 2.0**20, q_min: float = 16.0,
                grid_points: int = 400) -> float:
    """liminf of -log psi(q) / log q, read as a minimum over a geometric grid."""
    if psi.is_power:
        return psi.exponent
    if q_max <= q_min:
        raise ValueError("q_max must exceed q_min")
    qs = np.geomspace(q_min, q_max, grid_points)
    return float(np.min(-np.log(psi(qs)) / np.log(qs)))


@dataclass(frozen=True)
class InhomFunction:
    """The inhomogeneous shift lambda; needs derivatives up to order two."""

    fn: object
    name: str = ""

    def __call__(self, x, order: int = 0):
        return self.fn(x, order)

    @property
    def elementary(self) -> el.Elementary | None:
        return self.fn if isinstance(self.fn, el.Elementary) else None

    @property
    def is_zero(self) -> bool:
        e = self.elementary
        return e is not None and e.is_zero


def as_shift(lam) -> InhomFunction:
    if lam is None:
        return InhomFunction(el.zero(), "0")
    if isinstance(lam, InhomFunction):
        return lam
    if isinstance(lam, el.Elementary):
        return InhomFunction(lam, lam.name or lam.describe())
    return InhomFunction(lam, getattr(lam, "__name__", "lambda"))


@dataclass(frozen=True)
class NondegeneracyReport:
    min_abs: float
    argmin: float
    bad_intervals: tuple
    bad_measure: float
    grid_points: int
    floor: float

    @property
    def nondegenerate(self) -> bool:
        return not self.bad_intervals


@dataclass
class CurveSystem:
    components: list
    domain: tuple
    name: str = "curve"
    strict: bool = False
    grid_points: int = GRID_POINTS
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        lo, hi = map(float, self.domain)
        if not hi > lo:
            raise DomainError(f"empty domain {self.domain}")
        self.domain = (lo, hi)
        if not self.components:
            raise ValueError("a curve needs at least one component")
        xs = np.linspace(lo, hi, 257)
        f1 = _eval(self.components[0], xs, 0)
        d1 = _eval(self.components[0], xs, 1)
        tol = 1e-12 * (1.0 + np.abs(xs))
        if np.any(np.abs(f1 - xs) > tol) or np.any(np.abs(d1 - 1.0) > 1e-12):
            raise NormalizationError(
                "first component must be f1(x) = x; use CurveSystem.reparameterized()")
        for i, f in enumerate(self.components):
            if not isinstance(f, el.Elementary):
                richardson_check(f, self.n, lo, hi, label=f"f{i + 1}")
        if self.strict:
            rep = certify_nondegenerate(self)
            if not rep.nondegenerate:
                raise DegenerateCurveError(
                    f"Wronskian below {rep.floor:g} on {rep.bad_intervals[:3]}")

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    @property
    def is_elementary(self) -> bool:
        return all(isinstance(f, el.Elementary) for f in self.components)

    def check_point(self, x: float) -> None:
        lo, hi = self.domain
        if not lo <= x <= hi:
            raise DomainError(f"x = {x} outside domain [{lo}, {hi}]")

    def component(self, i: int, x, order: int = 0):
        """f_i^(order)(x) with 1-based component index."""
        return _eval(self.components[i - 1], x, order)

    def sup(self, i: int, order: int) -> float:
        key = ("sup", i, order)
        if key not in self._cache:
            self._cache[key] = sup_abs(self.components[i - 1], order, *self.domain, self.grid_points)
        return self._cache[key]

    def inf(self, i: int, order: int) -> float:
        key = ("inf", i, order)
        if key not in self._cache:
            self._cache[key] = inf_abs(self.components[i - 1], order, *self.domain, self.grid_points)
        return self._cache[key]

    @property
    def C(self) -> float:
        """max sup |f_i^(j)| over components and 0 <= j <= n."""
        return max(self.sup(i, j) for i in range(1, self.n + 1) for j in range(self.n + 1))

    def curvature_bounds(self) -> tuple:
        """(min |f_2''|, max |f_2''|) for planar curves."""
        if self.n != 2:
            raise ValueError("curvature bounds are defined for n = 2")
        return self.inf(2, 2), self.sup(2, 2)

    @classmethod
    def reparameterized(cls, components: list, domain: tuple, name: str = "curve",
                        **kw) -> "CurveSystem":
        """Build a curve whose first coordinate becomes the parameter.

        Affine f1 keeps every component elementary.  A general strictly monotone
        f1 is inverted numerically; derivatives up to order three are carried
        through the inverse function rule.
        """
        lo, hi = map(float, domain)
        f1 = components[0]
        if isinstance(f1, el.Elementary) and all(
                t.kind == el.POW and t.p1 <= 1 for t in f1.terms):
            scale = float(f1(0.0, 1))
            shift = float(f1(0.0, 0))
            if scale == 0:
                raise NormalizationError("first component is constant")
            comps = [f.substitute_affine(scale, shift) for f in components]
            ends = sorted((scale * lo + shift, scale * hi + shift))
            comps[0] = el.power(1)
            return cls(comps, tuple(ends), name, **kw)
        xs = np.linspace(lo, hi, 2001)
        d = _eval(f1, xs, 1)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise NormalizationError("first component is not strictly monotone")
        ulo, uhi = sorted((float(_eval(f1, lo)), float(_eval(f1, hi))))

        def inverse(u):
            return brentq(lambda x: float(_eval(f1, x)) - u, lo, hi, xtol=1e-15, rtol=1e-15)

        def make(f):
            def g(u, order=0):
                u = np.asarray(u, dtype=float)
                flat = np.atleast_1d(u)
                out = np.empty_like(flat)
                for k, uu in enumerate(flat):
                    x = inverse(min(max(uu, ulo), uhi))
                    a1, a2, a3 = (float(_eval(f1, x, j)) for j in (1, 2, 3))
                    p1 = 1.0 / a1
                    p2 = -a2 * p1**3
                    p3 = -a3 * p1**4 + 3 * a2**2 * p1**5
                    b = [float(_eval(f, x, j)) for j in range(min(order, 3) + 1)]
                    if order == 0:
                        out[k] = b[0]
                    elif order == 1:
                        out[k] = b[1] * p1
                    elif order == 2:
                        out[k] = b[2] * p1**2 + b[1] * p2
                    elif order == 3:
                        out[k] = b[3] * p1**3 + 3 * b[2] * p1 * p2 + b[1] * p3
                    else:
                        raise NotImplementedError("re-parameterized derivatives above order 3")
                return out.reshape(u.shape) if u.ndim else float(out[0])
            return g

        comps = [el.power(1)] + [make(f) for f in components[1:]]
        return cls(comps, (ulo, uhi), name, **kw)


def bound_constant(curve: CurveSystem, lam=None) -> float:
    """The shared constant C bounding curve derivatives and |lambda^(k)|, k <= 2."""
    lam = as_shift(lam)
    lo, hi = curve.domain
    lam_sup = max(sup_abs(lam, k, lo, hi, curve.grid_points) for k in range(3))
    return max(curve.C, lam_sup)


def wronskian(curve: CurveSystem, x: float) -> float:
    """det [f_i^(j)(x)] for 1 <= i, j <= n."""
    curve.check_point(x)
    n = curve.n
    m = np.array([[float(curve.component(i, x, j)) for j in range(1, n + 1)]
                  for i in range(1, n + 1)])
    return float(np.linalg.det(m))


def wronskian_grid(curve: CurveSystem, xs: np.ndarray) -> np.ndarray:
    n = curve.n
    m = np.empty((len(xs), n, n))
    for i in range(n):
        for j in range(n):
            m[:, i, j] = curve.component(i + 1, xs, j + 1)
    return np.linalg.det(m)


def certify_nondegenerate(curve: CurveSystem, grid_points: int = GRID_POINTS,
                          floor: float = 1e-8) -> NondegeneracyReport:
    """Scan the Wronskian; report subintervals where it is small or changes sign."""
    lo, hi = curve.domain
    xs = np.linspace(lo, hi, grid_points)
    w = wronskian_grid(curve, xs)
    aw = np.abs(w)
    k = int(np.argmin(aw))
    bad_cell = np.zeros(grid_points - 1, dtype=bool)
    small = aw < floor
    bad_cell |= small[:-1] | small[1:]
    bad_cell |= np.sign(w[:-1]) * np.sign(w[1:]) < 0
    intervals = []
    i = 0
    while i < len(bad_cell):
        if bad_cell[i]:
            j = i
            while j + 1 < len(bad_cell) and bad_cell[j + 1]:
                j += 1
            intervals.append((float(xs[i]), float(xs[j + 1])))
            i = j + 1
        else:
            i += 1
    measure = math.fsum(b - a for a, b in intervals)
    return NondegeneracyReport(float(aw[k]), float(xs[k]), tuple(intervals), measure,
                               grid_points, floor)


# built-in curves and shifts

def veronese(n: int, domain=(0.0, 1.0)) -> CurveSystem:
    if n < 1:
        raise ValueError("n >= 1")
    return CurveSystem([el.power(k) for k in range(1, n + 1)], tuple(domain), f"veronese{n}")


def parabola(domain=(0.0, 1.0)) -> CurveSystem:
    c = veronese(2, domain)
    c.name = "parabola"
    return c


def cubic_curve(domain=(0.0, 1.0)) -> CurveSystem:
    return CurveSystem([el.power(1), el.power(3)], tuple(domain), "cubic")


def sine_curve(domain=(0.0, 1.0)) -> CurveSystem:
    return CurveSystem([el.power(1), el.sine()], tuple(domain), "sine")


def exp_curve(domain=(0.0, 1.0)) -> CurveSystem:
    return CurveSystem([el.power(1), el.exponential()], tuple(domain), "exp")


CURVES = {
    "veronese": veronese,
    "parabola": lambda domain=(0.0, 1.0): parabola(domain),
    "cubic": lambda domain=(0.0, 1.0): cubic_curve(domain),
    "sine": lambda domain=(0.0, 1.0): sine_curve(domain),
    "exp": lambda domain=(0.0, 1.0): exp_curve(domain),
}


def shift_zero() -> InhomFunction:
    return InhomFunction(el.zero(), "0")


def shift_constant(c: float) -> InhomFunction:
    return InhomFunction(el.constant(c), f"{c:g}")


def shift_power(k: int, coef: float = 1.0) -> InhomFunction:
    return InhomFunction(el.power(k, coef), f"x^{k}" if coef == 1 else f"{coef:g}x^{k}")


def shift_sine(w: float = 1.0, coef: float = 1.0) -> InhomFunction:
    return InhomFunction(el.sine(w, coef=coef), f"{coef:g}sin({w:g}x)")
