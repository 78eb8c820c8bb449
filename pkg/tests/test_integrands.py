import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sheetapprox.errors import DomainError, StructuralError
from sheetapprox.geometry import EvalGrid, Rect
from sheetapprox.integrands import (SimpleFunction, indicator_combo, linear_combination, lp_norm,
                                    multiply, parse_terms, restrict, sq_norm)


@st.composite
def simple_functions(draw, d=None):
    """Random simple functions on a random grid of [0, 1]^d."""
    d = d or draw(st.integers(1, 2))
    axes = []
    for _ in range(d):
        k = draw(st.integers(1, 4))
        cuts = sorted(set(draw(st.lists(st.sampled_from([0.125 * i for i in range(1, 8)]),
                                        min_size=k - 1, max_size=k - 1))))
        axes.append(np.array([0.0, *cuts, 1.0]))
    shape = tuple(a.size - 1 for a in axes)
    vals = draw(st.lists(st.integers(-3, 3), min_size=math.prod(shape), max_size=math.prod(shape)))
    return SimpleFunction.from_grid(axes, np.reshape(np.array(vals, float), shape), (1.0,) * d)


def brute_norm(f, p, cells=64):
    grid = EvalGrid.uniform(f.box, cells)
    v = f.evaluate(grid.midpoints())
    return float(np.sum(np.abs(v) ** p * grid.cell_volumes().ravel())) ** (1 / p)


def test_lp_norm_examples():
    assert lp_norm(SimpleFunction.constant(1.0, (1.0, 1.0)), 2) == pytest.approx(1.0)
    f = SimpleFunction(((2.0, Rect((0.0,), (0.5,))), (-1.0, Rect((0.5,), (1.0,)))), (1.0,))
    assert lp_norm(f, 2) == pytest.approx(math.sqrt(2.5), abs=1e-15)


@given(simple_functions(), st.floats(-4, 4), st.sampled_from([1.0, 2.0, 3.0, 4.0]))
def test_lp_norm_homogeneous_and_matches_brute_force(f, c, p):
    assert lp_norm(f.scale(c), p) == pytest.approx(abs(c) * lp_norm(f, p), rel=1e-12, abs=1e-14)
    # grid cuts are multiples of 1/8, so a 64-cell midpoint rule is exact
    assert lp_norm(f, p) == pytest.approx(brute_norm(f, p), rel=1e-12, abs=1e-14)


def test_overlapping_supports_rejected():
    with pytest.raises(DomainError):
        SimpleFunction(((1.0, Rect((0.0,), (0.6,))), (1.0, Rect((0.5,), (1.0,)))), (1.0,))
    with pytest.raises(DomainError):
        SimpleFunction(((1.0, Rect((0.0,), (2.0,))),), (1.0,))


def test_indicator_combo_examples():
    f = indicator_combo([1.0], [(1.0, 1.0)])
    assert len(f.terms) == 1 and f.terms[0] == (1.0, Rect((0.0, 0.0), (1.0, 1.0)))
    g = indicator_combo([1.0, -1.0], [(0.5,), (1.0,)])
    assert g.terms == ((-1.0, Rect((0.5,), (1.0,))),)
    assert g(0.25) == 0.0 and g(0.75) == -1.0
    assert indicator_combo([0.0, 0.0], [(0.5,), (1.0,)]).is_zero()


@given(st.integers(1, 3).flatmap(lambda k: st.tuples(
    st.lists(st.floats(-2, 2), min_size=k, max_size=k),
    st.lists(st.tuples(st.floats(0.05, 1.0), st.floats(0.05, 1.0)), min_size=k, max_size=k))))
def test_indicator_combo_pointwise(args):
    coeffs, corners = args
    f = indicator_combo(coeffs, corners, box=(1.0, 1.0))
    rng = np.random.default_rng(0)
    xs = rng.uniform(0, 1, (200, 2))
    want = sum(a * np.all(xs <= np.array(t), axis=1) for a, t in zip(coeffs, corners))
    assert np.allclose(f.evaluate(xs), want, atol=1e-12)


def test_restrict_examples():
    f = SimpleFunction.constant(1.0, (1.0, 1.0))
    q = restrict(f, Rect((0.0, 0.0), (0.5, 0.5)))
    assert q.terms == ((1.0, Rect((0.0, 0.0), (0.5, 0.5))),)
    assert restrict(f, Rect((0.2, 0.2), (0.2, 0.7))).is_zero()


@given(simple_functions(d=2), st.sampled_from([0.25, 0.5, 0.625]), st.sampled_from([0.125, 0.75]))
def test_restrict_partition_adds_up(f, a, b):
    parts = [Rect((0, 0), (a, b)), Rect((a, 0), (1, b)), Rect((0, b), (a, 1)), Rect((a, b), (1, 1))]
    total = math.fsum(sq_norm(restrict(f, r)) for r in parts)
    assert total == pytest.approx(sq_norm(f), rel=1e-12, abs=1e-14)


@given(simple_functions(d=1), simple_functions(d=1), st.floats(-2, 2), st.floats(-2, 2))
def test_linear_combination_and_product_pointwise(f, g, a, b):
    xs = np.linspace(0.01, 0.99, 97).reshape(-1, 1)
    h = linear_combination([f, g], [a, b])
    assert np.allclose(h.evaluate(xs), a * f.evaluate(xs) + b * g.evaluate(xs), atol=1e-12)
    assert np.allclose(multiply(f, g).evaluate(xs), f.evaluate(xs) * g.evaluate(xs), atol=1e-12)


@given(simple_functions())
def test_text_round_trip(f):
    g = parse_terms(f.to_text(), f.box)
    assert g.terms == f.terms


def test_parse_terms_errors_and_comments():
    f = parse_terms("# header\n2 0 0.5  # left\n-1, 0.5, 1\n", (1.0,))
    assert f.coefficients.tolist() == [2.0, -1.0]
    with pytest.raises(StructuralError):
        parse_terms("1 0 0.5 0.5\n", (1.0,))


def test_from_callable_midpoint_sampling():
    f = SimpleFunction.from_callable(lambda x: x[:, 0] + x[:, 1], EvalGrid.uniform((1.0, 1.0), 2))
    assert f((0.1, 0.1)) == pytest.approx(0.5)
    assert f((0.9, 0.9)) == pytest.approx(1.5)
