import math

import numpy as np
import pytest

from covlab import functions as fn
from covlab.measures import (
    Exponential,
    Gaussian,
    GaussianScaleMixture,
    Logistic,
    Uniform,
    centered_primitive,
)
from covlab.relations1d import (
    InducedMeasure2D,
    hoeffding_residual,
    induced_convex_covariance,
    relation_residual,
)

MEASURES = [
    Gaussian(0.0, 1.0),
    Uniform(0.0, 1.0),
    Exponential(1.2),
    Logistic(0.1, 0.5),
    GaussianScaleMixture([(0.8, 0.5), (1.4, 0.5)]),
]


@pytest.mark.parametrize("mu", MEASURES, ids=lambda m: type(m).__name__)
def test_hoeffding_residual_smooth_pairs(mu):
    f = fn.polynomial1d([0.0, 1.0, 0.4])
    g = fn.softplus([1.0])
    rep = hoeffding_residual(mu, f, g)
    assert rep.passed, (rep.residual, rep.err)


def test_hoeffding_uniform_linear_is_exact():
    rep = hoeffding_residual(Uniform(0.0, 1.0), fn.polynomial1d([0.0, 1.0]),
                             fn.polynomial1d([0.0, 1.0]))
    assert rep.lhs == pytest.approx(1.0 / 12.0, abs=1e-12)
    assert abs(rep.residual) <= 1e-12


def test_relation_variant1_gaussian_squares():
    """For the standard Gaussian and f = g = x^2 the displaced term vanishes
    (odd moment), so Cov(f,g)/Var = Cov_induced(f', g') = 4 Cov_nu(x, y),
    which makes the induced covariance of the derivatives equal to 2."""
    mu = Gaussian(0.0, 1.0)
    x2 = fn.polynomial1d([0.0, 0.0, 1.0])
    rep = relation_residual(mu, x2, x2, variant=1)
    assert rep.passed, (rep.residual, rep.tolerance)
    assert rep.induced_cov == pytest.approx(2.0, abs=1e-5)
    assert rep.middle == pytest.approx(0.0, abs=1e-6)
    assert rep.z_direct == pytest.approx(1.0, abs=1e-6)  # Z = Var(mu)


@pytest.mark.parametrize("variant", [1, 2, 3])
@pytest.mark.parametrize("mu", MEASURES, ids=lambda m: type(m).__name__)
def test_relation_variants_close(mu, variant):
    # variants 2 and 3 divide by f (and g), so keep both strictly positive
    f = fn.exp_neg_quadratic([[0.6]], b=[0.1])
    g = fn.exp_neg_quadratic([[0.4]], b=[-0.2])
    rep = relation_residual(mu, f, g, variant=variant)
    assert rep.passed, (variant, rep.residual, rep.tolerance)


def test_relation_normalizer_closed_form():
    """For f = g = e^{-x} on uniform(0,1) the pair normalizer is the
    variance of the primitive: Z = Var(e^{-x}) = (1-e^{-2})/2 - (1-e^{-1})^2."""
    mu = Uniform(0.0, 1.0)
    f = fn.exp_linear([-1.0])
    rep = relation_residual(mu, f, f, variant=3)
    want = (1 - math.exp(-2)) / 2 - (1 - math.exp(-1)) ** 2
    assert want == pytest.approx(0.03275595748789447, abs=1e-12)
    assert rep.z_cov == pytest.approx(want, abs=1e-9)
    assert abs(rep.z_residual) <= 1e-8


def test_relation_weighted():
    mu = Gaussian(0.0, 1.0)
    w = centered_primitive(mu, lambda x: 1.0 + 0.5 * x * x)
    f = fn.polynomial1d([0.0, 1.0, 0.3])
    g = fn.softplus([0.8])
    rep = relation_residual(mu, f, g, variant=1, weight=w)
    assert rep.passed, (rep.residual, rep.tolerance)


def test_relation_formula_det_agrees():
    """Variant 1 doubles as a 2x2 determinant identity; the report carries
    that residual when the weight is trivial."""
    mu = Logistic(0.0, 0.6)
    f = fn.polynomial1d([0.0, 0.5, 1.0])
    g = fn.polynomial1d([1.0, -0.5, 0.7])
    rep = relation_residual(mu, f, g, variant=1)
    assert rep.formula_det_residual is not None
    assert abs(rep.formula_det_residual) <= rep.tolerance


def test_relation_rejects_bad_variant():
    with pytest.raises(ValueError):
        relation_residual(Gaussian(), fn.polynomial1d([0.0, 1.0]),
                          fn.polynomial1d([0.0, 1.0]), variant=4)


def test_induced_measure_normalizer():
    """The unweighted plane density integrates to the kernel mass Var(mu)."""
    nu = InducedMeasure2D(Uniform(0.0, 1.0))
    assert nu.z_mass == pytest.approx(1.0 / 12.0, rel=1e-9)
    assert nu.expectation() == pytest.approx(1.0, rel=1e-12)


def test_induced_convex_covariance_nonnegative():
    """Convex f, g have nondecreasing derivatives, and the induced plane
    measure is positively associated."""
    for mu in (Gaussian(0.0, 1.0), Uniform(-1.0, 2.0)):
        f = fn.polynomial1d([0.0, -1.0, 1.5])
        g = fn.softplus([1.3])
        rep = induced_convex_covariance(mu, f, g)
        assert rep.cov >= -rep.tolerance
