"""Integer linear forms a0 + a1 f1 + ... + an fn and their enumeration."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, InvalidFormError
from .funcspace import CurveSystem, as_shift, sup_abs

DEFAULT_BUDGET = 10**9


@dataclass(frozen=True, order=True)
class IntegerForm:
    coeffs: tuple

    def __post_init__(self):
        c = tuple(int(a) for a in self.coeffs)
        if len(c) < 2:
            raise InvalidFormError("a form needs a0 and at least one a_i")
        if all(a == 0 for a in c):
            raise InvalidFormError("the all-zero form is excluded")
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        return len(self.coeffs) - 1

    @property
    def a0(self) -> int:
        return self.coeffs[0]

    @property
    def height(self) -> int:
        """max |a_i| over i >= 1; the constant term does not count."""
        return max(abs(a) for a in self.coeffs[1:])

    def value(self, curve: CurveSystem, x, order: int = 0):
        """F^(order)(x) without the shift."""
        if curve.n != self.n:
            raise InvalidFormError(f"form has n={self.n}, curve has n={curve.n}")
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x) + (self.a0 if order == 0 else 0.0)
        for i, a in enumerate(self.coeffs[1:], start=1):
            if a:
                out = out + a * curve.component(i, x, order)
        return out


def height(form: IntegerForm) -> int:
    return form.height


@dataclass(frozen=True)
class EvaluatedForm:
    """G = F + lambda on a curve."""

    form: IntegerForm
    curve: CurveSystem
    lam: object = None

    def __call__(self, x, order: int = 0):
        lam = as_shift(self.lam)
        return self.form.value(self.curve, x, order) + np.asarray(lam(np.asarray(x, float), order))

    @property
    def height(self) -> int:
        return self.form.height


def a0_bound(curve: CurveSystem, lam, H: int) -> int:
    """ceil(H * sum sup|f_i| + sup|lambda|) + 1; larger |a0| cannot give a root."""
    if H < 0:
        raise InvalidFormError("height must be non-negative")
    lam = as_shift(lam)
    s = math.fsum(curve.sup(i, 0) for i in range(1, curve.n + 1))
    ls = sup_abs(lam, 0, *curve.domain, curve.grid_points)
    return int(math.ceil(H * s + ls)) + 1


def count_forms(n: int, H: int, b0: int) -> int:
    if H < 1:
        raise InvalidFormError("height bound must be >= 1")
    return (2 * b0 + 1) * (2 * H + 1) ** n - 1


def enumerate_forms(curve: CurveSystem, lam, H: int, budget: int = DEFAULT_BUDGET,
                    outer: int | None = None):
    """All nonzero forms with height <= H and |a0| <= a0_bound.

    Order: a_n outermost, then a_(n-1), ..., a_1, with a0 innermost.  Passing
    ``outer`` restricts to one value of a_n, which partitions the stream for
    parallel workers.
    """
    if H < 1:
        raise InvalidFormError("height bound must be >= 1")
    n = curve.n
    b0 = a0_bound(curve, lam, H)
    total = count_forms(n, H, b0)
    if total > budget:
        raise BudgetError(total, budget)
    rng = range(-H, H + 1)
    outers = rng if outer is None else [outer]
    for an in outers:
        for mid in itertools.product(rng, repeat=n - 1):
            tail = tuple(reversed(mid)) + (an,)
            for a0 in range(-b0, b0 + 1):
                if a0 == 0 and an == 0 and not any(mid):
                    continue
                yield IntegerForm((a0,) + tail)


def coefficient_rows(n: int, h_lo: int, h_hi: int, include_zero: bool = False,
                     chunk: int = 200_000):
    """Yield float arrays of (a1..an) with h_lo <= max|a_i| <= h_hi, chunked by a_n.

    The all-zero row is yielded first when ``include_zero`` is set.
    """
    h_lo = max(int(h_lo), 1)
    if include_zero:
        yield np.zeros((1, n))
    if h_hi < h_lo:
        return
    vals = np.arange(-h_hi, h_hi + 1, dtype=np.int64)
    if n == 1:
        yield vals[np.abs(vals) >= h_lo].reshape(-1, 1).astype(float)
        return
    inner = np.array(list(itertools.product(vals, repeat=n - 1)), dtype=np.int64).reshape(-1, n - 1)
    inner = inner[:, ::-1]
    inner_h = np.abs(inner).max(axis=1)
    buf, size = [], 0
    for an in vals:
        h = np.maximum(inner_h, abs(an))
        sel = inner[(h >= h_lo) & (h <= h_hi)]
        if len(sel) == 0:
            continue
        block = np.empty((len(sel), n), dtype=np.int64)
        block[:, :-1] = sel
        block[:, -1] = an
        buf.append(block)
        size += len(block)
        if size >= chunk:
            yield np.vstack(buf).astype(float)
            buf, size = [], 0
    if buf:
        yield np.vstack(buf).astype(float)


def count_rows(n: int, h_lo: int, h_hi: int) -> int:
    inside = (2 * h_hi + 1) ** n
    below = (2 * (h_lo - 1) + 1) ** n if h_lo >= 1 else 0
    return inside - below
