import numpy as np
import pytest

from covlab import functions as fn
from covlab.determinantal import (
    andreev_residual,
    assumption_c_check,
    chebyshev_certify,
    cov_ratio_check,
    det_cov_matrix,
    minors_check,
    monotone_pair_check,
)
from covlab.measures import Exponential, Gaussian, Logistic, Uniform


def poly(coeffs):
    return fn.polynomial1d(coeffs)


def test_monomials_form_chebyshev_system():
    members = [poly([1.0]), poly([0.0, 1.0]), poly([0.0, 0.0, 1.0])]
    cert = chebyshev_certify(members, -1.0, 1.0, seed=0)
    assert cert.passed


def test_quintic_breaks_the_system():
    """x^5 - c x has three roots in (-1, 1), one too many for a triple."""
    members = [poly([1.0]), poly([0.0, 1.0]),
               poly([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])]
    cert = chebyshev_certify(members, -1.0, 1.0, seed=0)
    assert not cert.passed


def test_exponentials_form_chebyshev_system():
    members = [fn.exp_linear([r]) for r in (0.0, 0.7, 1.5)]
    cert = chebyshev_certify(members, -2.0, 2.0, seed=1)
    assert cert.passed


def test_assumption_c_for_convexity():
    """(1, x, f) is a Chebyshev system exactly when f is convex."""
    ok = assumption_c_check(poly([0.0, 1.0]), poly([0.0, 0.0, 1.0]),
                            -2.0, 2.0, seed=0)
    assert ok.passed
    bad = assumption_c_check(poly([0.0, 1.0]), poly([0.0, 0.0, 0.0, 1.0]),
                             -2.0, 2.0, seed=0)
    assert not bad.passed


def test_minors_check_reports_witness():
    members = [poly([1.0]), poly([0.0, 0.0, 0.0, 1.0])]  # (1, x^3)
    res = minors_check(members, -1.0, 1.0, seed=3)
    assert res.passed  # x^3 is increasing, all 2x2 minors nonnegative
    dec = minors_check([poly([1.0]), poly([0.0, -1.0])], -1.0, 1.0, seed=3)
    assert not dec.passed
    assert dec.witness is not None


def test_andreev_residual_continuous():
    mu = Uniform(0.0, 1.0)
    fs = [poly([1.0]), poly([0.0, 1.0])]
    gs = [poly([1.0]), poly([0.0, 0.0, 1.0])]
    res = andreev_residual(mu, fs, gs)
    # det [[1, 1/3], [1/2, 1/4]] = 1/4 - 1/6
    assert res.lhs == pytest.approx(1.0 / 12.0, abs=1e-12)
    assert abs(res.residual) <= 1e-10


@pytest.mark.parametrize("mu", [Gaussian(0.2, 0.9), Logistic(0.0, 0.5),
                                Exponential(1.1)],
                         ids=lambda m: type(m).__name__)
def test_andreev_residual_families(mu):
    fs = [poly([0.0, 1.0]), poly([1.0, 0.0, 0.5]), fn.softplus([1.0])]
    gs = [poly([1.0, 1.0]), poly([0.0, 0.0, 1.0]), fn.exp_linear([0.3])]
    res = andreev_residual(mu, fs, gs)
    assert abs(res.residual) <= 1e-8 * (1 + abs(res.lhs))


def test_det_cov_matrix_uniform_cubic():
    """Cov matrix of (x, x^3) against itself on uniform(-1, 1):
    det = Var(x) Var(x^3) - Cov(x, x^3)^2 = 1/21 - 1/25."""
    mu = Uniform(-1.0, 1.0)
    fs = [poly([0.0, 1.0]), poly([0.0, 0.0, 0.0, 1.0])]
    res = det_cov_matrix(mu, fs, fs)
    assert res.det == pytest.approx(1.0 / 21.0 - 1.0 / 25.0, abs=1e-12)
    assert res.consistent
    assert abs(res.residual) <= res.tolerance


def test_det_cov_matrix_is_gram_for_equal_members():
    mu = Gaussian(0.0, 1.0)
    fs = [poly([0.0, 1.0]), fn.softplus([0.8])]
    res = det_cov_matrix(mu, fs, fs)
    # a Gram determinant of independent members is strictly positive
    assert res.det > 0
    assert res.consistent


def test_cov_ratio_check():
    mu = Uniform(-1.0, 1.0)
    x = poly([0.0, 1.0])
    x3 = poly([0.0, 0.0, 0.0, 1.0])
    res = cov_ratio_check(mu, x, x3, x, x3)
    # margin = Var(x^3) Var(x) - Cov(x, x^3)^2 = 4/525 here
    assert res.margin == pytest.approx(4.0 / 525.0, abs=1e-12)
    assert abs(res.residual) <= 1e-12  # agrees with the bordered determinant


def test_monotone_pair_check():
    mu = Logistic(0.0, 0.6)
    inc1 = poly([0.0, 1.0, 0.0, 0.1])
    inc2 = fn.softplus([1.2])
    res = monotone_pair_check(mu, inc1, inc2)
    assert res.passed
    assert res.cov >= -1e-10
    dec = poly([0.0, -1.0])
    res2 = monotone_pair_check(mu, inc1, dec)
    assert res2.cov <= 1e-10
