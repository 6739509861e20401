import itertools

import numpy as np
import pytest

from diocurve import forms
from diocurve import funcspace as fs
from diocurve.errors import BudgetError, InvalidFormError


@pytest.mark.parametrize("coeffs,h", [((3, 2, -5), 5), ((10**6, 1, 0), 1), ((0, 0, 7), 7)])
def test_height(coeffs, h):
    assert forms.height(forms.IntegerForm(coeffs)) == h


def test_zero_form_rejected():
    with pytest.raises(InvalidFormError):
        forms.IntegerForm((0, 0, 0))


def test_a0_bound_examples():
    v = fs.veronese(2)
    assert forms.a0_bound(v, None, 1) == 3
    assert forms.a0_bound(v, None, 10) == 21
    assert forms.a0_bound(v, fs.shift_power(3), 1) == 4


def test_count_forms_examples():
    assert forms.count_forms(2, 1, 3) == 62
    assert forms.count_forms(1, 1, 2) == 14
    with pytest.raises(InvalidFormError):
        forms.count_forms(2, 0, 3)


def test_enumeration_matches_count_and_is_unique():
    v = fs.veronese(2)
    got = list(forms.enumerate_forms(v, None, 1))
    assert len(got) == 62 == len(set(got))
    assert all(f.height <= 1 and abs(f.a0) <= 3 for f in got)
    with pytest.raises(InvalidFormError):
        list(forms.enumerate_forms(v, None, 0))


def test_enumeration_partitions_by_outer():
    v = fs.veronese(2)
    whole = set(forms.enumerate_forms(v, None, 2))
    parts = [set(forms.enumerate_forms(v, None, 2, outer=a)) for a in range(-2, 3)]
    assert set().union(*parts) == whole
    assert sum(map(len, parts)) == len(whole)


def test_budget_error_carries_count():
    with pytest.raises(BudgetError) as e:
        list(forms.enumerate_forms(fs.veronese(2), None, 5, budget=10))
    assert str(forms.count_forms(2, 5, forms.a0_bound(fs.veronese(2), None, 5))) in str(e.value)


def test_coefficient_rows_shell():
    rows = np.vstack(list(forms.coefficient_rows(2, 3, 4)))
    brute = [r for r in itertools.product(range(-4, 5), repeat=2) if 3 <= max(map(abs, r)) <= 4]
    assert sorted(map(tuple, rows.astype(int))) == sorted(brute)
    assert forms.count_rows(2, 3, 4) == len(brute)


def test_evaluated_form_with_shift():
    g = forms.EvaluatedForm(forms.IntegerForm((1, -2, 3)), fs.veronese(2), fs.shift_power(3))
    x = 0.4
    assert float(g(x)) == pytest.approx(1 - 2 * x + 3 * x**2 + x**3)
    assert float(g(x, 1)) == pytest.approx(-2 + 6 * x + 3 * x**2)
    assert g.height == 3
