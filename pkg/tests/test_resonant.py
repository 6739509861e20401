import itertools
import math

import numpy as np
import pytest
import sympy

from diocurve import engine as en
from diocurve import forms
from diocurve import funcspace as fs
from diocurve import resonant as rs
from diocurve.forms import IntegerForm


def brute_resonant(Q, cubic_shift):
    """(root, least height) over all forms of height <= Q from exact real roots."""
    X = sympy.Symbol("x")
    b0 = forms.a0_bound(fs.veronese(2), fs.shift_power(3) if cubic_shift else None, Q)
    found = []
    for a0, a1, a2 in itertools.product(range(-b0, b0 + 1), range(-Q, Q + 1), range(-Q, Q + 1)):
        if (a0, a1, a2) == (0, 0, 0):
            continue
        poly = sympy.Poly((X**3 if cubic_shift else 0) + a2 * X**2 + a1 * X + a0, X)
        if poly.degree() < 1:
            continue
        for r in set(poly.real_roots()):
            if 0 <= r <= 1:
                found.append((float(sympy.N(r, 20)), max(abs(a1), abs(a2))))
    found.sort()
    out = []
    for x, h in found:
        if out and x - out[-1][0] < 1e-12:
            out[-1] = (out[-1][0], min(out[-1][1], h))
        else:
            out.append((x, h))
    return out


@pytest.mark.parametrize("Q", [1, 2, 3])
@pytest.mark.parametrize("cubic_shift", [False, True])
def test_enumeration_against_companion_roots(Q, cubic_shift):
    lam = fs.shift_power(3) if cubic_shift else None
    got = rs.enumerate_resonant(fs.veronese(2), lam, Q)
    want = brute_resonant(Q, cubic_shift)
    assert len(got.alpha) == len(want)
    for a, h, (x, hw) in zip(got.alpha, got.height, want):
        assert a == pytest.approx(x, abs=1e-6)
        assert h == hw


def test_q1_list():
    s = rs.enumerate_resonant(fs.veronese(2), None, 1)
    assert np.allclose(s.alpha, [0.0, (math.sqrt(5) - 1) / 2, 1.0])
    # 1/2 needs 2x - 1 (height 2); sqrt(2) - 1 needs x^2 + 2x - 1 (height 2)
    assert not s.contains(0.5)
    assert rs.enumerate_resonant(fs.veronese(2), None, 2).contains(math.sqrt(2) - 1)
    k = int(np.argmin(np.abs(s.alpha - 1.0)))
    assert s.height[k] == 1


def test_isolate_examples():
    v = fs.veronese(2)
    r = rs.isolate_roots(IntegerForm((0, -1, 1)), v)
    assert [b.mid for b in r] == pytest.approx([0.0, 1.0])
    r = rs.isolate_roots(IntegerForm((-1, 1, 1)), v)
    assert len(r) == 1 and r[0].mid == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-12)
    r = rs.isolate_roots(IntegerForm((0, 0, 1)), v, fs.shift_power(3))
    assert len(r) == 1 and r[0].mid == pytest.approx(0.0) and r[0].tangential


def test_nearest():
    assert rs.nearest_resonant(np.array([0.0, 1.0]), 0.3) == pytest.approx((0.0, 0.3))
    assert rs.nearest_resonant(np.array([0.0, 1.0]), 0.5) == pytest.approx((0.0, 0.5))
    s = rs.enumerate_resonant(fs.veronese(2), None, 1)
    a, d = rs.nearest_resonant(s, 0.6)
    assert a == pytest.approx((math.sqrt(5) - 1) / 2)
    assert d == pytest.approx(0.018, abs=1e-3)
    with pytest.raises(ValueError):
        rs.nearest_resonant(np.array([]), 0.5)


@pytest.mark.parametrize("curve,lam", [
    (fs.sine_curve(), None),
    (fs.exp_curve(), fs.shift_sine(3.0, 0.5)),
    (fs.parabola(), fs.shift_power(3)),
])
def test_batch_roots_match_scalar_route(curve, lam):
    """Compiled batch roots against per-form bracketing and bisection."""
    rng = np.random.default_rng(7)
    rows = rng.integers(-6, 7, size=(40, 2)).astype(float)
    rows = rows[np.abs(rows).max(axis=1) > 0]
    fam = en.Family(curve, lam)
    r = fam.roots(fam.pieces(rows))
    batch = sorted(zip(map(tuple, r.forms().tolist()), r.x.tolist()))
    scalar = []
    b0 = forms.a0_bound(curve, lam, 6)
    for row in rows.astype(int):
        for a0 in range(-b0, b0 + 1):
            f = IntegerForm((a0, *row))
            for b in rs.isolate_roots(f, curve, lam):
                scalar.append((f.coeffs, b.mid, b.tangential))
    scalar.sort()
    assert [f for f, _ in batch] == [f for f, _, _ in scalar]
    for (_, xb), (_, xs, tangential) in zip(batch, scalar):
        # a root of multiplicity m is only resolved to about eps^(1/m)
        assert abs(xb - xs) <= (1e-4 if tangential else 1e-9)
