import numpy as np
import pytest

from covlab import functions as fn
from covlab.measures import (Gaussian, Logistic, ProductMeasure, Uniform,
                             unit_weight)
from covlab.product_identities import (
    duplication_covariance,
    marginalize,
    orthogonalize,
    product_hoeffding,
    product_relation,
    tensorization_terms,
)
from covlab.quadrature import CovarianceEngine, DEFAULT_SPEC


def unit_square():
    return ProductMeasure([Uniform(0.0, 1.0), Uniform(0.0, 1.0)])


def x1x2():
    return fn.quadratic([[0.0, 1.0], [1.0, 0.0]])


def test_marginalize_product_function():
    """E[x1 x2 | x1] = x1 E[x2] = x1/2 on the unit square."""
    marg = marginalize(unit_square(), x1x2(), keep=1)
    xs = np.array([[0.0], [0.25], [1.0]])
    np.testing.assert_allclose(marg(xs), xs[:, 0] / 2.0, atol=1e-12)


def test_marginalize_keep_range():
    with pytest.raises(ValueError):
        marginalize(unit_square(), x1x2(), keep=2)


def test_tensorization_x1x2():
    """Var(x1 x2) = E[x1^2]E[x2^2] - (E[x1]E[x2])^2 = 1/9 - 1/16 = 7/144."""
    rep = tensorization_terms(unit_square(), x1x2(), x1x2())
    assert rep.passed, (rep.residual, rep.tolerance)
    assert rep.cov == pytest.approx(7.0 / 144.0, abs=1e-12)
    assert sum(rep.terms) == pytest.approx(rep.total, abs=1e-14)


def test_tensorization_three_dims():
    mu = ProductMeasure([Gaussian(), Uniform(0, 1), Gaussian(0.2, 0.8)])
    f = fn.quadratic(np.eye(3), b=[0.5, -0.2, 0.1])
    g = fn.softplus([0.4, 0.4, 0.4])
    rep = tensorization_terms(mu, f, g)
    assert rep.passed
    assert len(rep.terms) == 3


def test_duplication_x1px2_terms():
    """f = g = x1 + x2 splits into independent coordinates, so each
    duplication term is one uniform variance, 1/12."""
    f = fn.linear([1.0, 1.0])
    rep = duplication_covariance(unit_square(), f, f, n_samples=200_000,
                                 seed=5)
    assert rep.passed
    for term in rep.terms:
        assert term == pytest.approx(1.0 / 12.0, abs=4 * rep.se + 1e-3)
    assert rep.total == pytest.approx(2.0 / 12.0, abs=4 * rep.se)


def test_duplication_matches_quadrature():
    mu = ProductMeasure([Gaussian(0.0, 1.0), Uniform(-1.0, 1.0)])
    f = fn.quadratic([[1.0, 0.3], [0.3, 0.5]])
    g = fn.softplus([0.6, 0.6])
    rep = duplication_covariance(mu, f, g, n_samples=200_000, seed=7)
    exact, _ = CovarianceEngine(mu, DEFAULT_SPEC).covariance(f, g)
    assert abs(rep.total - exact) <= 4 * (rep.se + rep.cov_se)


def test_product_hoeffding_two_dims():
    f = fn.linear([1.0, 1.0])
    rep = product_hoeffding(unit_square(), f, f)
    assert rep.passed, (rep.residual, rep.err)
    assert rep.lhs == pytest.approx(2.0 / 12.0, abs=1e-10)
    np.testing.assert_allclose(rep.terms, [1.0 / 12.0] * 2, atol=1e-9)


def test_product_hoeffding_one_dim_reduces():
    mu = ProductMeasure([Gaussian(0.0, 1.0)])
    f = fn.polynomial1d([0.0, 1.0, 0.5])
    g = fn.softplus([1.0])
    rep = product_hoeffding(mu, f, g)
    assert rep.passed
    assert len(rep.terms) == 1


@pytest.mark.parametrize("variant", [1, 2, 3])
def test_product_relation_variants(variant):
    # a mildly asymmetric second factor keeps the cross terms non-trivial
    mu = ProductMeasure([Gaussian(0.0, 1.0), Logistic(0.2, 0.5)])
    f = fn.exp_neg_quadratic(0.5 * np.eye(2))
    g = fn.exp_neg_quadratic(0.3 * np.eye(2), b=[0.1, -0.1])
    rep = product_relation(mu, f, g, variant=variant)
    assert rep.passed, (variant, rep.residual, rep.tolerance)
    assert len(rep.terms) == 2


def test_orthogonalize_kills_coordinate_covariances():
    mu = ProductMeasure([Gaussian(0.0, 1.0), Gaussian(0.3, 1.2)])
    f = fn.quadratic([[1.0, 0.4], [0.4, 0.8]], b=[0.7, -0.3])
    res = orthogonalize(mu, f)
    eng = CovarianceEngine(mu, DEFAULT_SPEC)
    weights = [unit_weight(m) for m in mu.factors]
    for w_obj, coord in zip(weights, eng.coord_fns):
        val, err = eng.covariance(res.fn, coord)
        assert abs(val) <= 1e-8 + 5 * err
