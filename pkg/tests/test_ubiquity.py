import numpy as np
import pytest

from diocurve import funcspace as fs
from diocurve import resonant as rs
from diocurve import ubiquity as ub
from diocurve.intervals import union_intersect_measure


@pytest.mark.parametrize("lam", [None, fs.shift_power(3)])
def test_stream_roots_match_enumeration(lam):
    c = fs.veronese(2)
    xs = ub.RootStream(c, lam, 8, per_bucket=500).sorted_roots()
    assert np.all(np.diff(xs) >= 0)
    uniq = xs[np.concatenate([[True], np.diff(xs) > 1e-9])]
    want = rs.enumerate_resonant(c, lam, 8).alpha
    assert len(uniq) == len(want)
    assert np.allclose(uniq, want, atol=1e-7)


def test_bucketed_coverage_matches_direct_union():
    c = fs.veronese(2)
    Js = ub.default_J_list(c, seed=3)
    stream = ub.RootStream(c, None, 16, per_bucket=2000)
    pts = stream.sorted_roots()
    r = 0.3 * 16.0**-3
    got = ub.coverage(stream, r, Js)
    for J, g in zip(Js, got):
        direct = union_intersect_measure([(p, r) for p in pts], J).measure
        assert g == pytest.approx(direct, abs=1e-12)
        assert g == pytest.approx(ub.coverage_of_points(pts, r, J), abs=1e-12)


def test_calibration_hits_target():
    c = fs.veronese(2)
    pts = ub.RootStream(c, None, 16).sorted_roots()
    k = ub.calibrate_kappa(pts, 2, 16, (0.0, 1.0), 0.5)
    assert ub.coverage_of_points(pts, k * 16.0**-3, (0.0, 1.0)) == pytest.approx(0.5, abs=1e-6)


def test_monotone_in_kappa():
    c = fs.veronese(2)
    Js = ub.default_J_list(c, seed=1)
    prev = None
    for kappa in (0.05, 0.2, 1.0, 5.0):
        rep = ub.coverage_sweep(c, None, [5], Js, kappa=kappa)
        r = np.array(rep.ratios())
        if prev is not None:
            assert np.all(r >= prev - 1e-15)
        prev = r


def test_huge_kappa_covers():
    rep = ub.coverage_sweep(fs.veronese(2), None, [3, 4], kappa=1e6)
    assert rep.liminf_proxy == 1.0


def test_sweep_records_and_errors():
    c = fs.veronese(2)
    rep = ub.coverage_sweep(c, fs.shift_power(3), [3, 4, 5], calibration_t=3)
    assert rep.calibration_t == 3
    assert rep.ratios(3)[0] == pytest.approx(0.5, abs=1e-6)
    assert {r["t"] for r in rep.records} == {3, 4, 5}
    with pytest.raises(ValueError):
        ub.coverage_sweep(c, None, [3], J_list=[(0.5, 1.5)])
    with pytest.raises(ValueError):
        ub.coverage_sweep(c, None, [3], kappa=-1.0)


def test_default_J_list_seeded():
    c = fs.veronese(2)
    a = ub.default_J_list(c, seed=9)
    assert a == ub.default_J_list(c, seed=9)
    assert a[0] == (0.0, 1.0) and len(a) == 9
    assert all(0.0 <= lo < hi <= 1.0 for lo, hi in a)


@pytest.mark.parametrize("s,verdict", [(0.75, "divergent"), (0.8, "convergent"), (0.7, "divergent")])
def test_divergence_examples(s, verdict):
    r = ub.divergence_diagnostic(fs.ApproxFunction.power(3), s, 2)
    assert r.exact == verdict
    assert r.numeric == verdict
    assert r.classification == verdict


def test_divergence_boundary_exponent():
    r = ub.divergence_diagnostic(fs.ApproxFunction.power(3), 0.75, 2)
    assert r.exponent == pytest.approx(-1.0)
    assert r.threshold == pytest.approx(0.75)


def test_divergence_non_power_uses_trend():
    psi = fs.ApproxFunction(lambda q: q**-3.0 * (1 + 1 / q))
    assert ub.divergence_diagnostic(psi, 0.5, 2).classification == "divergent"
    assert ub.divergence_diagnostic(psi, 0.95, 2).classification == "convergent"


def test_divergence_rejects_bad_s():
    with pytest.raises(ValueError):
        ub.divergence_diagnostic(fs.ApproxFunction.power(3), 0.0, 2)
    with pytest.raises(ValueError):
        ub.divergence_diagnostic(fs.ApproxFunction.power(3), 1.2, 2)
