import math

import numpy as np
import pytest

from covlab import functions as fn
from covlab.ioutil import ConfigError
from covlab.measures import Discrete, Gaussian, ProductMeasure, Uniform
from covlab.quadrature import (
    DEFAULT_SPEC,
    DIM_CAP,
    CovarianceEngine,
    MeasureGrid1D,
    QuadratureSpec,
    TensorGrid,
)


def test_spec_json_round_trip():
    spec = QuadratureSpec(order=20, panels=3, mc_samples=1000, seed=7,
                          trunc_eps=1e-8)
    again = QuadratureSpec.from_json(spec.to_json())
    assert again == spec


def test_spec_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        QuadratureSpec.from_json({"order": 8, "nodes": 2})


def test_axis_rule_scales_with_dimension():
    """The default rule spends fewer nodes per axis as dimension grows."""
    spec = DEFAULT_SPEC
    orders = [spec.axis_rule(d)[0] for d in range(1, DIM_CAP + 1)]
    assert orders == sorted(orders, reverse=True)
    # an explicit rule is used verbatim for every dimension
    fixed = QuadratureSpec(order=10, panels=2)
    assert fixed.axis_rule(1) == (10, 2)
    assert fixed.axis_rule(3) == (10, 2)


def test_halved_spec_halves_order_only():
    spec = QuadratureSpec(order=12, panels=4)
    half = spec.halved()
    assert half.axis_rule(1) == (6, 4)
    assert half.halved().axis_rule(1) == (3, 4)
    # the error-estimation state never leaks into serialized configs
    assert "half_steps" not in half.to_json()
    # the dimension-adaptive default still adapts after halving
    assert DEFAULT_SPEC.halved().axis_rule(3)[0] == DEFAULT_SPEC.axis_rule(3)[0] // 2


def test_gauss_rule_is_polynomially_exact():
    mu = ProductMeasure([Uniform(0.0, 1.0)])
    grid = TensorGrid(mu, QuadratureSpec(order=8, panels=1))
    x2 = fn.polynomial1d([0.0, 0.0, 1.0])
    assert grid.expectation(x2) == pytest.approx(1.0 / 3.0, abs=1e-15)
    x7 = fn.polynomial1d([0.0] * 7 + [1.0])
    assert grid.expectation(x7) == pytest.approx(1.0 / 8.0, abs=1e-14)


def test_gaussian_moments_on_grid():
    mu = ProductMeasure([Gaussian(0.0, 1.0)])
    grid = TensorGrid(mu, DEFAULT_SPEC)
    x = fn.polynomial1d([0.0, 1.0])
    x2 = fn.polynomial1d([0.0, 0.0, 1.0])
    x4 = fn.polynomial1d([0.0, 0.0, 0.0, 0.0, 1.0])
    assert grid.expectation(x) == pytest.approx(0.0, abs=1e-9)
    # the support truncation at mass 1e-9 costs ~1e-7 in the tail moments
    assert grid.expectation(x2) == pytest.approx(1.0, abs=5e-7)
    assert grid.expectation(x4) == pytest.approx(3.0, abs=1e-5)


def test_discrete_grid_is_exact():
    mu = ProductMeasure([Discrete([-1.0, 0.0, 1.0], [1, 1, 1])])
    grid = TensorGrid(mu, DEFAULT_SPEC)
    x2 = fn.polynomial1d([0.0, 0.0, 1.0])
    assert grid.expectation(x2) == pytest.approx(2.0 / 3.0, abs=1e-15)
    # Var(x^2) = E x^4 - (E x^2)^2 = 2/3 - 4/9
    assert grid.covariance(x2, x2) == pytest.approx(2.0 / 9.0, abs=1e-15)


def test_tensor_grid_product_factorizes():
    mu = ProductMeasure([Uniform(0.0, 1.0), Gaussian(0.0, 1.0)])
    grid = TensorGrid(mu, DEFAULT_SPEC)
    x1x2 = fn.quadratic([[0.0, 1.0], [1.0, 0.0]])
    assert grid.expectation(x1x2) == pytest.approx(0.0, abs=1e-9)
    assert grid.pw.sum() == pytest.approx(1.0, abs=1e-9)
    assert grid.points.shape[1] == 2


def test_engine_covariance_and_error():
    eng = CovarianceEngine(ProductMeasure([Uniform(0.0, 1.0)]), DEFAULT_SPEC)
    x = fn.polynomial1d([0.0, 1.0])
    val, err = eng.covariance(x, x)
    assert val == pytest.approx(1.0 / 12.0, abs=1e-12)
    assert 0 <= err < 1e-10


def test_engine_coordinate_functions():
    eng = CovarianceEngine(ProductMeasure([Gaussian(), Gaussian()]),
                           DEFAULT_SPEC)
    c0, c1 = eng.coord_fns
    pts = np.array([[0.3, -1.2], [2.0, 0.5]])
    np.testing.assert_allclose(c0(pts), pts[:, 0])
    np.testing.assert_allclose(c1(pts), pts[:, 1])


def test_measure_grid_mass():
    grid = MeasureGrid1D(Gaussian(0.0, 1.0), DEFAULT_SPEC)
    assert grid.pweights.sum() == pytest.approx(1.0, abs=1e-9)
    assert grid.nodes[0] < -5 and grid.nodes[-1] > 5


def test_values_cache_keyed_by_object():
    mu = ProductMeasure([Uniform(0.0, 1.0)])
    grid = TensorGrid(mu, QuadratureSpec(order=8, panels=1))
    x2 = fn.polynomial1d([0.0, 0.0, 1.0])
    first = grid.values(x2)
    assert grid.values(x2) is first
    other = fn.polynomial1d([0.0, 0.0, 1.0])
    assert grid.values(other) is not first
    np.testing.assert_allclose(grid.values(other), first)


def test_dimension_cap():
    mu = ProductMeasure([Gaussian() for _ in range(DIM_CAP + 1)])
    with pytest.raises(ValueError):
        TensorGrid(mu, DEFAULT_SPEC)


def test_non_finite_integrand_is_reported():
    mu = ProductMeasure([Gaussian(0.0, 1.0)])
    grid = TensorGrid(mu, DEFAULT_SPEC)
    bad = fn.FunctionSpec(1, lambda p: np.full(len(p), np.nan))
    with pytest.raises((ValueError, FloatingPointError)):
        grid.expectation(bad)
