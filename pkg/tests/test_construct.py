import itertools
import math

import numpy as np
import pytest

from diocurve import construct as cs
from diocurve import funcspace as fs
from diocurve import resonant as rs
from diocurve.errors import ConstructionError, DomainError
from diocurve.forms import IntegerForm


def shell_minima(curve, xi, Q, reach=3.0):
    """Sup-norm successive minima by scanning every integer vector in a box."""
    T = cs.body_map(curve, xi, Q)
    B = int(math.ceil(reach * Q))
    cands = []
    f = [float(curve.component(i, xi)) for i in range(1, curve.n + 1)]
    for a in itertools.product(range(-B, B + 1), repeat=curve.n):
        s = sum(ai * fi for ai, fi in zip(a, f))
        for a0 in range(math.floor(-s) - 2, math.ceil(-s) + 3):
            v = (a0, *a)
            if any(v):
                cands.append((float(np.abs(T @ np.array(v, float)).max()), v))
    cands.sort()
    chosen, minima = [], []
    for sup, v in cands:
        if np.linalg.matrix_rank(np.array(chosen + [v], float)) > len(chosen):
            chosen.append(v)
            minima.append(sup)
            if len(chosen) == curve.n + 1:
                break
    return minima


@pytest.mark.parametrize("xi,Q", [(1 / 3, 4), (0.3, 8), (0.71, 5), (1 / math.pi, 16)])
def test_minima_against_shell_search(xi, Q):
    c = fs.parabola()
    sv = cs.successive_minima(c, xi, Q)
    assert list(sv.minima) == pytest.approx(shell_minima(c, xi, Q), rel=1e-12)
    assert round(abs(np.linalg.det(sv.vectors.astype(float)))) >= 1
    # Minkowski: 1/(n+1)! <= product <= 1 for a determinant-one lattice and the unit cube
    assert 1 / 6 - 1e-12 <= sv.product <= 1 + 1e-12


def test_minima_example():
    sv = cs.successive_minima(fs.parabola(), 1 / 3, 4)
    assert sv.minima == pytest.approx((0.75, 0.75, 16 / 9))
    assert sv.C2 == pytest.approx(16 / 9)


def test_q1_succeeds():
    sv = cs.successive_minima(fs.parabola(), 0.42, 1)
    assert len(sv.minima) == 3 and np.isfinite(sv.C2)


def test_lll_tracks_coefficients():
    rng = np.random.default_rng(3)
    basis = rng.normal(size=(3, 3)) * [1, 10, 100]
    b, c = cs.lll_reduce(basis, np.eye(3, dtype=np.int64))
    assert np.allclose(c @ basis, b)
    assert round(abs(np.linalg.det(c.astype(float)))) == 1


def test_degenerate_vectors():
    V = np.array([[1, 2, 3], [2, 4, 6], [0, 0, 1]])
    with pytest.raises(ConstructionError):
        cs.solve_rounding_system(V, 0.3, fs.parabola(), None, 8, 1.0)


def test_localize_linear():
    x0, e = 0.5, 1e-9
    loc = cs.localize_root(IntegerForm((0, 1, 0)), fs.parabola(), fs.shift_constant(-x0 + e),
                           x0, 64, 3.0)
    assert loc.ok
    assert loc.alpha == pytest.approx(x0 - e, abs=1e-15)


def test_localize_near_boundary():
    with pytest.raises(DomainError):
        cs.localize_root(IntegerForm((0, 1, 0)), fs.parabola(), fs.shift_constant(-1e-7),
                         1e-7, 64, 3.0)


def test_printed_example_trace():
    c = fs.parabola()
    t = cs.nearby_resonant(0.3, c, None, 8)
    rec = t.to_record()
    assert set(rec["checks"]) == {"value", "slope_low", "slope_high", "height"}
    for k in ("C1", "C2", "C3", "C4", "C7", "K1", "K2"):
        assert rec["constants"][k] > 0


def test_reciprocal_pi():
    c = fs.parabola()
    Q = 64
    t = cs.nearby_resonant(1 / math.pi, c, None, Q)
    assert not t.exceptional and t.satisfies_target
    K1, K2 = t.constants["K1"], t.constants["K2"]
    assert t.height <= K1 * Q
    assert t.distance <= K2 * Q ** -3
    # independent check: alpha is a root of the returned form
    roots = [b.mid for b in rs.isolate_roots(IntegerForm(tuple(t.form)), c)]
    assert min(abs(r - t.alpha) for r in roots) < 1e-12


def test_resonant_xi_runs():
    xi = (math.sqrt(5) - 1) / 2
    t = cs.nearby_resonant(xi, fs.parabola(), None, 16, check_exceptional=False)
    assert t.failure is None or isinstance(t.failure, str)


def test_exceptional_flag_near_low_height_point():
    t = cs.nearby_resonant(0.5 + 1e-9, fs.parabola(), None, 16)
    assert t.exceptional


def test_random_batch_localizes():
    c = fs.parabola()
    Q = 64
    rng = np.random.default_rng(1)
    rounded = 0
    for xi in rng.uniform(0.05, 0.95, 100):
        t = cs.nearby_resonant(float(xi), c, None, Q)
        if t.exceptional or not t.checks or not all(t.checks.values()):
            continue
        rounded += 1
        assert t.alpha is not None, t.failure
        assert t.distance <= 2 * t.constants["C3"] * Q ** -3
    assert rounded >= 80
