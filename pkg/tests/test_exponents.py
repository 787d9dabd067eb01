import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from kakeya_lab import exponents as ex


def test_maps_are_exact_on_rationals():
    assert ex.basic_map(Fraction(3, 2)) == Fraction(5, 3)
    b = Fraction(3, 2)
    assert ex.advanced_map(b) == (3 * b * b + 2 * b - 2) / (b * b + 3 * b - 2)
    assert isinstance(ex.advanced_map(2), Fraction)


@pytest.mark.parametrize("bad", [1, 0, Fraction(5, 2), 3.0])
def test_map_domain(bad):
    with pytest.raises(ex.ExponentError):
        ex.basic_map(bad)
    with pytest.raises(ex.ExponentError):
        ex.advanced_map(bad)


@given(st.fractions(min_value=Fraction(101, 100), max_value=2))
def test_maps_improve_and_stay_in_range(b):
    for f, fixed in ((ex.basic_map, ex.basic_fixed()), (ex.advanced_map, ex.advanced_fixed())):
        v = f(b)
        assert 1 < v <= 2
        # above the fixed point the map strictly improves, below it strictly worsens
        if b > Fraction(fixed):
            assert v < b
        elif b < Fraction(fixed):
            assert v > b


def test_fixed_points_against_brentq():
    assert abs(ex.basic_fixed() - brentq(lambda x: float(ex.basic_map(x)) - x, 1.2, 1.9, xtol=1e-15)) < 1e-12
    assert abs(ex.hausdorff_fixed() - brentq(lambda a: (a * a + 2) / 4 - a, 0, 1, xtol=1e-15)) < 1e-12
    assert abs(ex.hausdorff_fixed() - (2 - math.sqrt(2))) < 1e-12


def test_iterating_the_advanced_map_converges():
    b = Fraction(2)
    for _ in range(12):
        b = ex.advanced_map(b)
    assert abs(float(b) - ex.advanced_fixed()) < 1e-6


def test_hausdorff_iteration_from_start():
    it = ex.hausdorff_iterate(steps=200)
    assert it[0] == (1, 0)
    assert it[1] == (Fraction(3, 4), Fraction(0))
    assert abs(float(it[-1][0]) - (2 - math.sqrt(2))) < 1e-9


def test_kakeya_recursion():
    assert ex.kakeya_recursion(3, Fraction(5, 2), 2) == Fraction(9, 4)
    with pytest.raises(ex.ExponentError):
        ex.kakeya_recursion(3, 3, 2)


def test_table_and_csv():
    rows = ex.comparison_table(2, 24)
    assert len(rows) == 23
    lines = ex.table_csv(rows).strip().splitlines()
    assert lines[0] == ",".join(ex.CSV_COLUMNS)
    assert len(lines) == 24
    j = ex.table_json(rows)
    assert 22.6 <= j["crossover_hausdorff_minkowski"] <= 22.8


def test_row_for_n7():
    r = ex.dimension_bounds(7)
    assert abs(r.minkowski - 4.5818) < 1e-4
    assert abs(r.hausdorff - 4.7574) < 1e-4
    assert r.maximal_p == Fraction(31, 7) and r.maximal_q == Fraction(31, 4)
    assert r.minkowski_new and r.hausdorff_new and not r.maximal_new


def test_bad_n():
    with pytest.raises(ex.ExponentError):
        ex.dimension_bounds(1)
