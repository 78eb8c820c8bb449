import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sheetapprox.errors import DomainError, StructuralError
from sheetapprox.geometry import (EvalGrid, MultiIndex, ParamPoint, Rect, as_point, check_box,
                                  increment_points, leq, meet, rect_increment)

coord = st.floats(0.0, 5.0, allow_nan=False)


def points(d):
    return st.tuples(*[coord] * d)


def test_param_point_rejects_negative_and_nan():
    with pytest.raises(DomainError):
        ParamPoint((0.5, -0.1))
    with pytest.raises(DomainError):
        ParamPoint((math.nan,))


def test_param_point_accepts_generators():
    assert ParamPoint(x for x in (1, 2)) == (1.0, 2.0)


def test_multi_index_is_one_based():
    with pytest.raises(DomainError):
        MultiIndex((0, 1))
    assert MultiIndex((1, 3)) == (1, 3)


def test_as_point_dimension_check():
    with pytest.raises(StructuralError):
        as_point((1.0, 2.0), dim=3)


@given(st.integers(1, 3).flatmap(lambda d: st.tuples(points(d), points(d))))
def test_meet_is_componentwise_min_and_lower_bound(pair):
    a, b = pair
    m = meet(a, b)
    assert leq(m, a) and leq(m, b)
    assert meet(a, a) == as_point(a)


def test_increment_points_order_d2():
    r = Rect((0.2, 0.3), (0.5, 0.7))
    got = increment_points(r)
    assert got == [((0.5, 0.7), 1), ((0.2, 0.7), -1), ((0.5, 0.3), -1), ((0.2, 0.3), 1)]


@given(st.integers(1, 3).flatmap(lambda d: st.tuples(points(d), points(d))))
def test_increment_of_product_cdf_is_volume(pair):
    a, b = pair
    lo = tuple(min(x, y) for x, y in zip(a, b))
    hi = tuple(max(x, y) for x, y in zip(a, b))
    r = Rect(lo, hi)
    assert rect_increment(lambda t: math.prod(t), r) == pytest.approx(r.volume, abs=1e-9)


def test_rect_half_open_and_intersection():
    r = Rect((0.0, 0.0), (1.0, 1.0))
    assert r.contains((1.0, 1.0)) and not r.contains((0.0, 0.5))
    s = r.intersect(Rect((2.0, 2.0), (3.0, 3.0)))
    assert s.is_empty and s.volume == 0.0
    with pytest.raises(DomainError):
        Rect((1.0,), (0.5,))


def test_eval_grid():
    g = EvalGrid.uniform((1.0, 2.0), 4)
    assert g.shape == (4, 4)
    assert g.box == (1.0, 2.0)
    assert g.cell_volumes().sum() == pytest.approx(2.0)
    assert g.midpoints().shape == (16, 2)
    with pytest.raises(DomainError):
        EvalGrid(([0.0, 0.5, 0.5],))


def test_check_box():
    with pytest.raises(DomainError):
        check_box((1.0, 0.0))
    with pytest.raises(DomainError):
        check_box((1.0,) * 5)
