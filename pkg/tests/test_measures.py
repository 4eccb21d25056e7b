import numpy as np
import pytest

from covlab.ioutil import ConfigError
from covlab.measures import (
    Discrete,
    Exponential,
    Gaussian,
    GaussianScaleMixture,
    GridDensity,
    Logistic,
    ProductMeasure,
    Uniform,
    as_product,
    centered_primitive,
    measure_from_json,
    unit_weight,
)

FAMILIES = [
    Gaussian(0.3, 1.1),
    Uniform(-0.5, 1.5),
    Exponential(1.3),
    Logistic(0.2, 0.6),
    GaussianScaleMixture([(0.7, 0.4), (1.3, 0.6)]),
    GridDensity([-1.0, -0.2, 0.4, 1.2], [0.5, 1.3, 0.9, 0.4]),
    Discrete([-1.0, 0.0, 0.5, 2.0], [0.2, 0.3, 0.4, 0.1]),
]


@pytest.mark.parametrize("mu", FAMILIES, ids=lambda m: type(m).__name__)
def test_cdf_quantile_round_trip(mu):
    us = np.linspace(0.01, 0.99, 41)
    xs = mu.quantile(us)
    assert np.all(np.diff(xs) >= -1e-12)
    if isinstance(mu, Discrete):
        # quantile of a step cdf lands on atoms; cdf jumps back above u
        assert np.all(mu.cdf(xs) >= us - 1e-12)
    else:
        np.testing.assert_allclose(mu.cdf(xs), us, atol=1e-8)


@pytest.mark.parametrize("mu", FAMILIES, ids=lambda m: type(m).__name__)
def test_moments_match_sampling(mu):
    x = mu.sample(200_000, seed=11)
    se = np.std(x) / np.sqrt(len(x))
    assert abs(np.mean(x) - mu.mean()) < 6 * se + 1e-3
    assert abs(np.var(x) - mu.var()) < 0.05 * (1 + mu.var())


def test_continuous_pdf_normalization():
    for mu in FAMILIES:
        if isinstance(mu, Discrete):
            continue
        lo, hi = mu.truncated_support(1e-12)
        xs = np.linspace(lo, hi, 20001)
        total = np.trapezoid(mu.pdf(xs), xs)
        assert abs(total - 1.0) < 1e-5, type(mu).__name__


def test_uniform_closed_form():
    mu = Uniform(0.0, 1.0)
    assert mu.mean() == pytest.approx(0.5)
    assert mu.var() == pytest.approx(1.0 / 12.0)
    assert mu.support() == (0.0, 1.0)


def test_evenness_flags():
    assert Gaussian(0.0, 1.0).is_even()
    assert not Gaussian(0.1, 1.0).is_even()
    assert Uniform(-2.0, 2.0).is_even()
    assert not Uniform(0.0, 1.0).is_even()
    assert not Exponential(1.0).is_even()
    assert GaussianScaleMixture([(1.0, 0.5), (2.0, 0.5)]).is_even()


def test_gaussian_potential_derivatives():
    """V = x^2/2 for the standard Gaussian, so V' = x and V'' = 1."""
    mu = Gaussian(0.0, 1.0)
    xs = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(mu.potential_d1(xs), xs, atol=1e-12)
    np.testing.assert_allclose(mu.potential_d2(xs), np.ones_like(xs),
                               atol=1e-12)


def test_discrete_atoms():
    mu = Discrete([-1.0, 0.0, 1.0], [1.0, 1.0, 1.0])
    np.testing.assert_allclose(mu.probs.sum(), 1.0)
    assert mu.mean() == pytest.approx(0.0)
    assert mu.var() == pytest.approx(2.0 / 3.0)
    assert mu.is_even()


def test_product_measure_dims():
    pm = ProductMeasure([Gaussian(), Uniform(0, 1)])
    assert pm.dim == 2
    assert len(pm.factors) == 2
    assert as_product(Gaussian()).dim == 1
    assert as_product(pm) is pm


@pytest.mark.parametrize("mu", FAMILIES, ids=lambda m: type(m).__name__)
def test_unit_weight_centering(mu):
    """The unit weight's primitive is x shifted to zero mean."""
    w = unit_weight(mu)
    xs = np.linspace(*mu.truncated_support(1e-9), 9)
    np.testing.assert_allclose(w.a(xs), np.ones_like(xs))
    np.testing.assert_allclose(w.A(xs) - w.A(0 * xs), xs, atol=1e-9)
    x = mu.sample(400_000, seed=3)
    assert abs(np.mean(w.A(x))) < 0.02


def test_centered_primitive_matches_weight():
    mu = Gaussian(0.0, 1.0)
    w = centered_primitive(mu, lambda x: 1.0 + x * x)
    xs = np.linspace(-2, 2, 201)
    # A' = a by construction: compare against the analytic primitive
    exact = xs + xs ** 3 / 3.0
    shift = w.A(np.array([0.0]))[0]
    np.testing.assert_allclose(w.A(xs), exact + shift, atol=1e-8)
    # centered: E[A] vanishes on the quadrature grid
    x = mu.sample(400_000, seed=8)
    assert abs(np.mean(w.A(x))) < 0.05


def test_centered_primitive_rejects_nonpositive():
    with pytest.raises(ValueError):
        centered_primitive(Gaussian(), lambda x: x)


def test_measure_from_json_round_trip():
    for mu in FAMILIES:
        pm = measure_from_json(mu.to_json())
        assert pm.dim == 1
        rebuilt = pm.factors[0]
        assert type(rebuilt) is type(mu)
        assert rebuilt.mean() == pytest.approx(mu.mean(), abs=1e-12)
        assert rebuilt.var() == pytest.approx(mu.var(), abs=1e-12)


def test_measure_from_json_product():
    pm = measure_from_json({"product": [
        {"family": "gaussian"},
        {"family": "uniform", "params": {"lo": -1.0, "hi": 1.0}},
    ]})
    assert pm.dim == 2
    assert isinstance(pm.factors[1], Uniform)


def test_measure_from_json_errors():
    with pytest.raises(ConfigError):
        measure_from_json({"family": "cauchy"})
    with pytest.raises(ConfigError):
        measure_from_json({"family": "gaussian", "bogus": 1})
    with pytest.raises(ConfigError):
        measure_from_json({"family": "uniform", "params": {"lo": 1.0, "hi": 0.0}})
