import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sheetapprox.errors import DomainError, NumericError
from sheetapprox.geometry import Rect
from sheetapprox.integrands import SimpleFunction
from sheetapprox.streams import StreamKey
from sheetapprox.wiener import FddSpec, covariance, factorize, limit_moment, sample_fdd

pt2 = st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 1.0))


@given(st.lists(pt2, min_size=1, max_size=5))
def test_covariance_of_constant_is_sheet_covariance(pts):
    C = covariance(FddSpec(SimpleFunction.constant(1.0, (1.0, 1.0)), pts))
    for i, a in enumerate(pts):
        for j, b in enumerate(pts):
            assert C[i, j] == pytest.approx(math.prod(map(min, a, b)), abs=1e-14)
    assert np.allclose(C, C.T)
    assert np.linalg.eigvalsh(C).min() >= -1e-10 * max(np.trace(C), 1e-300)


def test_covariance_of_rectangle_indicator():
    f = SimpleFunction.indicator(Rect((0.2, 0.1), (0.7, 0.5)), (1.0, 1.0))
    assert covariance(FddSpec(f, [(1.0, 1.0)]))[0, 0] == pytest.approx(0.5 * 0.4)


def test_covariance_diagonal_term_by_term():
    f = SimpleFunction(((2.0, Rect((0.0, 0.0), (0.5, 0.5))), (-3.0, Rect((0.5, 0.0), (1.0, 1.0)))),
                       (1.0, 1.0))
    C = covariance(FddSpec(f, [(0.75, 0.4), (1.0, 1.0)]))
    assert C[0, 0] == pytest.approx(4 * 0.5 * 0.4 + 9 * 0.25 * 0.4, abs=1e-12)
    assert C[1, 1] == pytest.approx(4 * 0.25 + 9 * 0.5, abs=1e-12)


def test_points_outside_box_rejected():
    with pytest.raises(DomainError):
        FddSpec(SimpleFunction.constant(1.0, (1.0,)), [(1.5,)])


def test_factorize_jitter_and_failure():
    C = np.array([[1.0, 1.0], [1.0, 1.0]])
    L = factorize(C)
    assert np.allclose(L @ L.T, C, atol=1e-9)
    with pytest.raises(NumericError):
        factorize(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert np.array_equal(factorize(np.zeros((2, 2))), np.zeros((2, 2)))


def test_zero_function_gives_zero_samples():
    x = sample_fdd(FddSpec(SimpleFunction.zero((1.0,)), [(0.5,), (1.0,)]), StreamKey(0), 100)
    assert np.all(x == 0.0)


def test_variance_of_endpoint():
    T = 2.0
    x = sample_fdd(FddSpec(SimpleFunction.constant(1.0, (T,)), [(T,)]), StreamKey(1), 10**5)[:, 0]
    assert abs(np.var(x) - T) <= 3 * T * math.sqrt(2 / 10**5)


def test_nested_increments_uncorrelated_and_covariance_converges():
    spec = FddSpec(SimpleFunction.constant(1.0, (1.0,)), [(0.3,), (0.8,)])
    x = sample_fdd(spec, StreamKey(2), 10**5)
    inc = x[:, 1] - x[:, 0]
    prod = inc * x[:, 0]
    assert abs(prod.mean()) <= 3 * prod.std() / math.sqrt(prod.size)
    C = covariance(spec)
    for i in range(2):
        for j in range(2):
            y = x[:, i] * x[:, j]
            assert abs(y.mean() - C[i, j]) <= 3.5 * y.std() / math.sqrt(y.size)


def test_sampling_is_deterministic_in_key():
    spec = FddSpec(SimpleFunction.constant(1.0, (1.0,)), [(0.5,)])
    assert np.array_equal(sample_fdd(spec, StreamKey(4), 50), sample_fdd(spec, StreamKey(4), 50))


@pytest.mark.parametrize("m", [2, 4, 6, 8])
@pytest.mark.parametrize("s2", [0.0, 0.5, 2.0])
def test_limit_moment_is_double_factorial(m, s2):
    assert limit_moment(m, s2) == pytest.approx(math.prod(range(m - 1, 0, -2)) * s2 ** (m / 2))


def test_limit_moment_examples_and_errors():
    assert limit_moment(2, 0.7) == 0.7
    assert limit_moment(4, 1.0) == 3.0
    with pytest.raises(DomainError):
        limit_moment(3, 1.0)
