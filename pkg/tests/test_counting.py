import itertools
import math

import numpy as np
import pytest

from diocurve import counting as ct
from diocurve import elementary as el
from diocurve import funcspace as fs
from diocurve.errors import BoxTooSmallError


def min_abs_quadratic(a0, a1, a2, lo, hi):
    """min |a0 + a1 x + a2 x^2| over [lo, hi]."""
    g = lambda x: a0 + a1 * x + a2 * x * x
    xs = [lo, hi]
    if a2 != 0:
        xv = -a1 / (2 * a2)
        if lo < xv < hi:
            xs.append(xv)
    vals = [g(x) for x in xs]
    if min(vals) <= 0 <= max(vals):
        return 0.0
    return min(abs(v) for v in vals)


def brute_count(H, delta, v, convention):
    slope = H ** delta
    n = 0
    for a0, a1, a2 in itertools.product(range(-H, H + 1), repeat=3):
        top = max(abs(a1), abs(a2))
        if top == 0 or (convention == "exact" and top != H):
            continue
        # |G'(x)| = |a1 + 2 a2 x| <= slope is an interval in x
        if a2 == 0:
            lo, hi = (0.0, 1.0) if abs(a1) <= slope else (1.0, 0.0)
        else:
            e1, e2 = (-slope - a1) / (2 * a2), (slope - a1) / (2 * a2)
            lo, hi = max(0.0, min(e1, e2)), min(1.0, max(e1, e2))
        if lo <= hi and min_abs_quadratic(a0, a1, a2, lo, hi) <= H ** -v:
            n += 1
    return n


@pytest.mark.parametrize("convention", ["as_printed", "exact"])
@pytest.mark.parametrize("H", [2, 3, 4, 6])
@pytest.mark.parametrize("delta", [0.0, 0.5, 1.0])
def test_count_against_closed_form(H, delta, convention):
    r = ct.count_N(fs.parabola(), None, H, delta, 3.0, convention)
    want = brute_count(H, delta, 3.0, convention)
    assert r.count <= want <= r.count_upper
    assert r.ratio == pytest.approx(r.count / H ** (1 + delta))


def test_count_sign_symmetry():
    # without a shift, F and -F solve the same inequalities, so the count is even
    for H in (5, 8):
        r = ct.count_N(fs.parabola(), None, H, 0.5, 3.0)
        assert r.count % 2 == 0 and r.count_upper % 2 == 0


def test_as_printed_contains_exact():
    c = fs.parabola()
    for H in (4, 7):
        wide = ct.count_N(c, None, H, 0.5, 3.0, "as_printed")
        shell = ct.count_N(c, None, H, 0.5, 3.0, "exact")
        below = ct.count_N(c, None, H - 1, 0.5, 3.0, "as_printed")
        assert wide.convention == "as_printed"
        # the wide count is the exact shell plus everything of lower height,
        # except that a0 may now reach H where the lower run stopped at H - 1
        assert wide.count >= shell.count + below.count


def test_count_rejects_bad_arguments():
    with pytest.raises(ValueError):
        ct.count_N(fs.parabola(), None, 1, 0.5, 3.0)
    with pytest.raises(ValueError):
        ct.count_N(fs.parabola(), None, 8, 1.5, 3.0)
    with pytest.raises(ValueError):
        ct.count_N(fs.parabola(), None, 8, 0.5, 3.0, convention="other")


def grid_phi_measure(Q, delta, lo, hi, m=200_000):
    xs = lo + (hi - lo) * (np.arange(m) + 0.5) / m
    hit = np.zeros(m, dtype=bool)
    for a1, a2 in itertools.product(range(-Q, Q + 1), repeat=2):
        if a1 == 0 and a2 == 0:
            continue
        p = a1 * xs + a2 * xs * xs
        hit |= np.abs(p - np.round(p)) < delta * Q ** -2.0
    return (hi - lo) * hit.mean()


@pytest.mark.parametrize("Q,delta,J", [(1, 1.0, (0.0, 1.0)), (4, 0.1, (0.0, 1.0)),
                                       (8, 0.05, (0.3, 0.5))])
def test_phi_measure_against_grid(Q, delta, J):
    s, m = ct.phi_measure(fs.parabola(), Q, delta, J)
    assert m == pytest.approx(grid_phi_measure(Q, delta, *J), abs=2e-4)
    assert m <= J[1] - J[0]
    assert s.measure == pytest.approx(m, abs=1e-12)


def test_phi_measure_tiny_delta():
    assert ct.phi_measure(fs.parabola(), 1, 1e-6)[1] < 1e-2


def test_phi_measure_q64():
    assert ct.phi_measure(fs.parabola(), 64, 1e-2, keep_set=False)[1] < 0.5


def test_phi_contains_agrees_with_set():
    c = fs.parabola()
    s, _ = ct.phi_measure(c, 8, 0.05)
    for x in np.linspace(0.013, 0.987, 41):
        assert ct.phi_contains(c, 8, 0.05, float(x)) == s.contains(float(x))


def test_pyartly_examples():
    r = ct.pyartly_check(el.power(1), 0.1, 1, (0.0, 1.0), 0.5)
    assert r.measure == pytest.approx(0.1)
    assert r.c == pytest.approx(0.5)
    r = ct.pyartly_check(el.power(2), 0.01, 2, (-1.0, 1.0), 1.0)
    assert r.measure == pytest.approx(0.2)
    assert r.c == pytest.approx(2.0)


def test_pyartly_random_quadratics_bounded():
    rng = np.random.default_rng(5)
    cs = []
    for _ in range(20):
        a = rng.integers(-9, 10, size=3)
        if a[2] == 0:
            a[2] = 1
        phi = el.constant(float(a[0])) + el.power(1, float(a[1])) + el.power(2, float(a[2]))
        cs.append(ct.pyartly_check(phi, 0.05, 2, (0.0, 1.0), 1.0).c)
    assert max(cs) < 10


def test_dichotomy_positive_floor():
    r = ct.dichotomy_check(fs.parabola(), fs.shift_power(3), range(4, 9), 0.25)
    assert r.C1 > 0 and r.violations == 0


def brute_min_area(A, B, C, D, r):
    pts = [p for p in itertools.product(range(-r, r + 1), repeat=3)
           if A * p[0] + B * p[1] + C * p[2] == D]
    best = math.inf
    for p, q, s in itertools.combinations(pts, 3):
        u = np.subtract(q, p)
        w = np.subtract(s, p)
        a = 0.5 * float(np.linalg.norm(np.cross(u, w)))
        if a > 1e-12:
            best = min(best, a)
    return best


@pytest.mark.parametrize("plane,r", [((1, 1, 1, 0), 2), ((0, 0, 1, 0), 1), ((2, 3, 6, 1), 6),
                                     ((1, 2, 0, 1), 3)])
def test_triangle_against_brute(plane, r):
    got = ct.min_triangle_area(*plane, r)
    assert got.area == pytest.approx(brute_min_area(*plane, r))
    assert got.holds


def test_triangle_examples():
    assert ct.min_triangle_area(1, 1, 1, 0, 2).area == pytest.approx(math.sqrt(3) / 2)
    assert ct.min_triangle_area(0, 0, 1, 0, 1).area == pytest.approx(0.5)
    assert ct.min_triangle_area(2, 3, 6, 1, 6).area >= 3.5 - 1e-12


def test_triangle_box_too_small():
    with pytest.raises(BoxTooSmallError):
        ct.min_triangle_area(7, 9, 10, 5, 1)


def test_coprime_planes_small():
    planes = list(ct.coprime_planes(2, 1))
    assert all(math.gcd(math.gcd(abs(a), abs(b)), abs(c)) == 1 for a, b, c, _ in planes)
    assert (1, 1, 1, 0) in planes or (-1, -1, -1, 0) in planes
