"""Exact finite-atom reference computations.

Everything here is rational arithmetic over probability vectors; residuals
are only limited by float roundoff, so tolerances sit at 1e-12 and below.
"""

import numpy as np
import pytest

from covlab import oracle
from covlab.measures import Discrete


def three_point():
    return Discrete([-1.0, 0.0, 1.0], [1.0, 1.0, 1.0])


def test_exact_mean_and_covariance():
    dp = oracle.DiscreteProduct([three_point()])
    sq = lambda p: p[:, 0] ** 2
    ident = lambda p: p[:, 0]
    assert oracle.exact_mean(dp, sq) == pytest.approx(2.0 / 3.0, abs=1e-15)
    # Var(x^2) = E x^4 - (E x^2)^2 = 2/3 - 4/9 = 2/9
    assert oracle.exact_covariance(dp, sq, sq) == pytest.approx(2.0 / 9.0,
                                                               abs=1e-15)
    assert oracle.exact_covariance(dp, sq, ident) == pytest.approx(0.0,
                                                                   abs=1e-15)


def test_exact_hoeffding_identity():
    rng = np.random.default_rng(1)
    for _ in range(20):
        mu = oracle.random_discrete(rng)
        f = oracle.random_polynomial_fn(rng, 1)
        g = oracle.random_polynomial_fn(rng, 1)
        lhs, rhs = oracle.exact_hoeffding(mu, f, g)
        assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


def test_exact_andreev_identity():
    rng = np.random.default_rng(2)
    for n in (2, 3, 4):
        mu = oracle.random_discrete(rng)
        fs = [oracle.random_polynomial_fn(rng, 1, degree=2) for _ in range(n)]
        gs = [oracle.random_polynomial_fn(rng, 1, degree=2) for _ in range(n)]
        lhs, rhs = oracle.exact_andreev(mu, fs, gs)
        assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


def test_andreev_two_by_two_closed_form():
    """fs = (1, x), gs = (1, x^2) on uniform atoms approximating [0,1] is a
    plain moment determinant; on the exact continuous measure it equals
    E[x^3]E[1] - E[x]E[x^2] = 1/4 - 1/6 = 1/12."""
    n = 800
    atoms = (np.arange(n) + 0.5) / n
    mu = Discrete(atoms, np.ones(n))
    fs = [lambda p: np.ones(len(p)), lambda p: p[:, 0]]
    gs = [lambda p: np.ones(len(p)), lambda p: p[:, 0] ** 2]
    lhs, rhs = oracle.exact_andreev(mu, fs, gs)
    assert lhs == pytest.approx(1.0 / 12.0, abs=1e-5)
    assert abs(lhs - rhs) <= 1e-12


def test_duplication_and_tensorization_agree():
    rng = np.random.default_rng(3)
    for d in (1, 2, 3):
        dp = oracle.DiscreteProduct(
            [oracle.random_discrete(rng, n_atoms=3) for _ in range(d)])
        f = oracle.random_polynomial_fn(rng, d, degree=2)
        g = oracle.random_polynomial_fn(rng, d, degree=2)
        t_terms, t_total, cov = oracle.exact_tensorization(dp, f, g)
        d_terms, d_total, cov2 = oracle.exact_duplication(dp, f, g)
        assert len(t_terms) == len(d_terms) == d
        assert abs(t_total - cov) <= 1e-12 * (1 + abs(cov))
        assert abs(d_total - cov) <= 1e-12 * (1 + abs(cov))
        assert cov == pytest.approx(cov2, abs=1e-15)


def test_product_hoeffding_identity():
    rng = np.random.default_rng(4)
    for d in (1, 2):
        dp = oracle.DiscreteProduct(
            [oracle.random_discrete(rng, n_atoms=4) for _ in range(d)])
        f = oracle.random_polynomial_fn(rng, d, degree=2)
        g = oracle.random_polynomial_fn(rng, d, degree=2)
        terms, total, cov = oracle.exact_product_hoeffding(dp, f, g)
        assert abs(total - cov) <= 1e-12 * (1 + abs(cov))


def test_discrete_product_weights():
    dp = oracle.DiscreteProduct([three_point(), three_point()])
    assert dp.dim == 2
    assert dp.n_total == 9
    assert dp.weights.sum() == pytest.approx(1.0, abs=1e-15)


def test_random_discrete_is_seed_stable():
    a = oracle.random_discrete(np.random.default_rng(9))
    b = oracle.random_discrete(np.random.default_rng(9))
    np.testing.assert_array_equal(a.atoms, b.atoms)
    np.testing.assert_array_equal(a.probs, b.probs)


def test_identity_battery_smoke():
    out = oracle.identity_battery(seed=123, instances=40)
    assert out["verdict"] == "PASS"
    assert out["max_residual"] <= out["tolerance"] == 1e-12
    assert set(out["residuals"]) == {
        "hoeffding", "andreev", "tensorization", "duplication",
        "product_hoeffding"}
    again = oracle.identity_battery(seed=123, instances=40)
    assert again == out
