import numpy as np
import pytest

from covlab.kernels import (
    HoeffdingKernel,
    holley_check,
    kernel_mass,
    log_kernel,
    mass_identity_check,
    sample_ordered_tuple,
    tp_minor_check,
)
from covlab.measures import (
    Discrete,
    Exponential,
    Gaussian,
    GaussianScaleMixture,
    GridDensity,
    Logistic,
    Uniform,
)
from covlab.quadrature import DEFAULT_SPEC

FAMILIES = [
    Gaussian(0.3, 1.1),
    Uniform(-0.5, 1.5),
    Exponential(1.3),
    Logistic(0.2, 0.6),
    GaussianScaleMixture([(0.7, 0.4), (1.3, 0.6)]),
    GridDensity([-1.0, -0.2, 0.4, 1.2], [0.5, 1.3, 0.9, 0.4]),
    Discrete([-1.0, 0.0, 0.5, 2.0], [0.2, 0.3, 0.4, 0.1]),
]


def test_uniform_kernel_values():
    """k(x,y) = min(x,y) - xy on the unit interval."""
    kern = HoeffdingKernel(Uniform(0.0, 1.0))
    assert kern(0.5, 0.5) == pytest.approx(0.25, abs=1e-12)
    assert kern(0.2, 0.7) == pytest.approx(0.2 - 0.14, abs=1e-12)
    assert kern(0.0, 0.4) == pytest.approx(0.0, abs=1e-12)
    assert kern(1.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_kernel_symmetry_and_sign():
    kern = HoeffdingKernel(Gaussian(0.0, 1.0))
    rng = np.random.default_rng(0)
    x = rng.normal(size=200)
    y = rng.normal(size=200)
    np.testing.assert_allclose(kern(x, y), kern(y, x), atol=1e-14)
    assert np.all(kern(x, y) >= 0)


def test_kernel_grid_shape():
    kern = HoeffdingKernel(Uniform(0.0, 1.0))
    xs, ys, values = kern.grid(3)
    np.testing.assert_allclose(xs, [0.0, 0.5, 1.0])
    assert values.shape == (3, 3)
    assert values[1, 1] == pytest.approx(0.25, abs=1e-12)


def test_uniform_kernel_mass_exact():
    """The double integral of min(x,y) - xy over the square is 1/12."""
    kern = HoeffdingKernel(Uniform(0.0, 1.0))
    mass, err = kernel_mass(kern, DEFAULT_SPEC)
    assert mass == pytest.approx(1.0 / 12.0, abs=1e-12)
    assert err < 1e-10


def test_mass_identity_symmetric_bernoulli():
    # two atoms at 0 and 1 with probability 1/2: Var = 1/4 and the kernel
    # puts the whole mass on the single off-diagonal cell pair
    mu = Discrete([0.0, 1.0], [1.0, 1.0])
    res = mass_identity_check(mu)
    assert res.passed
    assert res.mass == pytest.approx(0.25, abs=1e-14)


@pytest.mark.parametrize("mu", FAMILIES, ids=lambda m: type(m).__name__)
def test_mass_identity_all_families(mu):
    res = mass_identity_check(mu)
    assert res.passed, (res.residual, res.err)
    assert abs(res.variance - mu.var()) < 1e-6 * (1 + mu.var())


@pytest.mark.parametrize("n", [2, 3, 4])
def test_total_positivity_minors(n):
    kern = HoeffdingKernel(Logistic(0.1, 0.5))
    res = tp_minor_check(kern, n, trials=400, seed=1)
    assert res.passed, res.witness
    assert res.worst_minor >= -1e-10 * res.worst_scale


def test_sample_ordered_tuple():
    rng = np.random.default_rng(5)
    for _ in range(50):
        t = sample_ordered_tuple(rng, -1.0, 3.0, 4)
        assert np.all(np.diff(t) > 0)
        assert t[0] >= -1.0 and t[-1] <= 3.0


def test_log_kernel_is_supermodular():
    """ln k satisfies the Holley condition inside the support; this is the
    lattice form of total positivity for order-2 minors."""
    kern = HoeffdingKernel(Gaussian(0.0, 1.0))
    H = log_kernel(kern)
    res = holley_check(H, [(-2.0, 2.0), (-2.0, 2.0)], trials=500, seed=2)
    assert res.passed, res.witness


def test_holley_check_flags_violations():
    def H(pts):
        # strictly submodular: the mixed partial of -xy is negative
        return -pts[:, 0] * pts[:, 1]

    res = holley_check(H, [(0.0, 1.0), (0.0, 1.0)], trials=500, seed=3)
    assert not res.passed
    assert res.witness is not None


def test_one_sided_weights():
    mu = Uniform(0.0, 1.0)
    plain = HoeffdingKernel(mu)
    weighted = HoeffdingKernel(mu, a=lambda x: 1.0 + x, b=lambda y: 2.0 - y)
    x, y = 0.3, 0.6
    want = plain(x, y) * (1.0 + x) * (2.0 - y)
    assert weighted(x, y) == pytest.approx(want, abs=1e-12)
