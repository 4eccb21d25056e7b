import math

import numpy as np
import pytest

from covlab import functions as fn
from covlab.ioutil import ConfigError
from covlab.measures import Gaussian, Uniform, centered_primitive, unit_weight

BOX1 = [(-2.0, 2.0)]
BOX2 = [(-2.0, 2.0), (-2.0, 2.0)]


def test_quadratic_values_and_derivatives():
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    b = np.array([0.3, -0.1])
    f = fn.quadratic(Q, b, c=0.7)
    pts = np.array([[1.0, -1.0], [0.2, 0.4]])
    want = 0.5 * np.einsum("ni,ij,nj->n", pts, Q, pts) + pts @ b + 0.7
    np.testing.assert_allclose(f(pts), want)
    np.testing.assert_allclose(f.gradient(pts), pts @ Q + b, atol=1e-7)
    np.testing.assert_allclose(f.hessian(pts), np.broadcast_to(Q, (2, 2, 2)),
                               atol=1e-5)


def test_polynomial_and_linear():
    p = fn.polynomial1d([1.0, -2.0, 3.0])
    x = np.array([[0.5], [2.0]])
    np.testing.assert_allclose(p(x), [1 - 1 + 0.75, 1 - 4 + 12])
    lin = fn.linear([2.0, -1.0], c=0.5)
    pts = np.array([[1.0, 1.0]])
    np.testing.assert_allclose(lin(pts), [1.5])
    np.testing.assert_allclose(lin.hessian(pts), 0.0, atol=1e-8)


def test_fd_derivatives_match_analytic():
    f = fn.FunctionSpec(2, lambda p: np.sin(p[:, 0]) * np.cos(p[:, 1]))
    pts = np.array([[0.3, 1.1], [-0.7, 0.2]])
    grad = fn.fd_gradient(f, pts)
    want = np.stack([np.cos(pts[:, 0]) * np.cos(pts[:, 1]),
                     -np.sin(pts[:, 0]) * np.sin(pts[:, 1])], axis=1)
    np.testing.assert_allclose(grad, want, atol=1e-7)


@pytest.mark.parametrize("prop,builder,expect", [
    ("convex", lambda: fn.quadratic([[1.0, 0.2], [0.2, 2.0]]), True),
    ("convex", lambda: fn.quadratic([[-1.0, 0.0], [0.0, 1.0]]), False),
    ("even", lambda: fn.abs_power(2.4, dim=2), True),
    ("even", lambda: fn.linear([1.0, 0.0]), False),
    ("unconditional", lambda: fn.prod_bump([1.0, 1.5]), True),
    ("unconditional", lambda: fn.quadratic([[1.0, 0.5], [0.5, 1.0]]), False),
    ("quasi_concave", lambda: fn.inverse_quadratic_bump([1.0, 1.0]), True),
    ("coordinatewise_convex", lambda: fn.softplus([1.0, 0.7]), True),
    ("coordinatewise_quasi_concave", lambda: fn.sech_prod([0.8, 1.2]), True),
    ("positive", lambda: fn.exp_neg_quadratic([[1.0, 0.0], [0.0, 1.0]]), True),
    ("log_concave", lambda: fn.exp_neg_quadratic([[1.0, 0.3], [0.3, 1.0]]), True),
])
def test_certify(prop, builder, expect):
    res = fn.certify(builder(), prop, BOX2, seed=0)
    assert res.passed is expect
    if not expect:
        assert res.witness is not None


def test_certify_cubic_is_not_convex():
    res = fn.certify(fn.polynomial1d([0.0, 0.0, 0.0, 1.0]), "convex", BOX1)
    assert not res.passed


def test_neg_log_is_exact_for_exponential_families():
    """exp builders carry their exponent so tails never hit underflow."""
    Q = np.array([[1.5, 0.2], [0.2, 1.0]])
    f = fn.exp_neg_quadratic(Q, b=[0.1, -0.2], c=0.3)
    phi = fn.neg_log(f)
    pts = np.array([[30.0, -28.0], [0.5, 0.1]])
    want = 0.5 * np.einsum("ni,ij,nj->n", pts, Q, pts) + pts @ [0.1, -0.2] + 0.3
    np.testing.assert_allclose(phi(pts), want, rtol=1e-12)
    assert f(pts[:1])[0] == 0.0  # underflows, but phi above stays finite

    g = fn.exp_linear([0.5], c0=2.0)
    psi = fn.neg_log(g)
    x = np.array([[1.0], [-3.0]])
    np.testing.assert_allclose(psi(x), -0.5 * x[:, 0] - math.log(2.0),
                               rtol=1e-12)


def test_neg_log_survives_scaling_and_substitution():
    f = fn.exp_neg_quadratic([[1.0]])
    scaled = fn.scale_output(f, 3.0)
    x = np.array([[40.0]])
    assert scaled.neg_log_form is not None
    np.testing.assert_allclose(scaled.neg_log_form(x),
                               0.5 * 1600.0 - math.log(3.0), rtol=1e-12)
    w = [unit_weight(Gaussian())]
    sub = fn.coordinate_substitution(f, w)
    assert sub.neg_log_form is not None


def test_coordinate_substitution_with_unit_weights():
    """Unit weights substitute A(x) = x - E[x], a pure shift per axis."""
    mu = Gaussian(0.4, 1.0)
    w = unit_weight(mu)
    outer = fn.quadratic([[1.0]])
    sub = fn.coordinate_substitution(outer, [w])
    x = np.array([[0.4], [1.4]])
    shift = float(w.A(np.array([0.0]))[0])
    np.testing.assert_allclose(sub(x), 0.5 * (x[:, 0] + shift) ** 2, atol=1e-9)
    np.testing.assert_allclose(sub.gradient(x)[:, 0], x[:, 0] + shift,
                               atol=1e-7)


def test_layer_cake_reconstruction():
    f = fn.inverse_quadratic_bump([1.0])
    lc = fn.layer_cake_decompose(f, (-4.0, 4.0), levels=64)
    xs = np.linspace(-4, 4, 401)
    err = np.max(np.abs(lc.reconstruct(xs) - f(xs[:, None])))
    assert lc.sup_error <= 2.0 * 1.0 / 64
    assert err <= lc.sup_error + 1e-12


def test_layer_cake_rejects_non_unimodal():
    wiggly = fn.FunctionSpec(1, lambda p: np.cos(3 * p[:, 0]) + 1.1)
    with pytest.raises(ValueError):
        fn.layer_cake_decompose(wiggly, (-3.0, 3.0), levels=16)


def test_sign_condition_ids_are_stable():
    ids = fn.condition_ids()
    assert "cond-l2-fg" in ids
    assert "cond-l2-fg-mod" in ids
    assert len(ids) == len(set(ids))


def test_check_sign_condition_quadratic():
    # nonnegative mixed partials on both sides satisfy the plain condition
    f = fn.quadratic([[1.0, 0.5], [0.5, 1.0]])
    g = fn.quadratic([[2.0, 0.1], [0.1, 0.5]])
    rep = fn.check_sign_condition(f, g, None, "cond-l2-fg", BOX2)
    assert rep.passed
    h = fn.quadratic([[1.0, -0.5], [-0.5, 1.0]])
    rep2 = fn.check_sign_condition(h, g, None, "cond-l2-fg", BOX2)
    assert not rep2.passed
    assert rep2.failures


def test_check_sign_condition_unknown_id():
    f = fn.quadratic([[1.0]])
    with pytest.raises(ValueError):
        fn.check_sign_condition(f, f, None, "cond-nope", BOX1)


def test_function_from_json_builtins():
    f = fn.function_from_json(
        {"builtin": "quadratic", "params": {"Q": [[0.0, 1.0], [1.0, 0.0]]}}, 2)
    pts = np.array([[2.0, 3.0]])
    np.testing.assert_allclose(f(pts), [6.0])
    g = fn.function_from_json(
        {"builtin": "softplus", "params": {"b": [1.0]},
         "declared": ["convex"]}, 1)
    assert "convex" in g.declared


def test_function_from_json_expression():
    f = fn.function_from_json({"expr": "x1**2 + exp(x2)"}, 2)
    pts = np.array([[2.0, 0.0]])
    np.testing.assert_allclose(f(pts), [5.0])


def test_function_from_json_errors():
    with pytest.raises(ConfigError):
        fn.function_from_json({"builtin": "nope"}, 1)
    with pytest.raises(ConfigError):
        fn.function_from_json({"builtin": "quadratic"}, 2)  # Q is required
    with pytest.raises(ConfigError):
        fn.function_from_json({"expr": "__import__('os')"}, 1)


def test_certify_declared():
    f = fn.softplus([1.0]).with_declared("convex", "positive")
    results = fn.certify_declared(f, BOX1)
    assert {r.prop for r in results} >= {"convex", "positive"}
    assert all(r.passed for r in results)
