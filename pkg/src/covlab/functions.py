"""Scalar test functions on R^d: evaluation, derivatives, property
certification, sign conditions on mixed partials, and the layer-cake
decomposition for quasi-concave functions.

Builtins carry analytic gradients and Hessians; expression-defined functions
fall back to central finite differences. Certification is numerical with
witnesses, never a proof.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit, logsumexp
from scipy.stats import qmc

from .ioutil import ConfigError
from .measures import Weight

_EPS = float(np.finfo(float).eps)
H_GRAD = _EPS ** (1.0 / 3.0)
H_HESS = _EPS ** 0.25

PROPERTIES = frozenset({
    "convex", "log_concave", "quasi_concave", "even", "unconditional",
    "coordinatewise_convex", "coordinatewise_quasi_concave", "positive",
})


def _as_points(x, dim: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        if dim == 1:
            pts = pts[:, None]
        else:
            pts = pts[None, :]
    if pts.shape[1] != dim:
        raise ValueError(f"expected points with {dim} columns, got {pts.shape}")
    return pts


class FunctionSpec:
    """A scalar function with optional analytic derivatives.

    ``fn`` maps an (N, d) array to an (N,) array. Missing gradient/Hessian
    evaluators are replaced by central finite differences with the standard
    cube-root / fourth-root steps.
    """

    def __init__(self, dim: int, fn: Callable, grad: Callable | None = None,
                 hess: Callable | None = None,
                 declared: Sequence[str] = (), name: str = "f"):
        declared = frozenset(declared)
        unknown = declared - PROPERTIES
        if unknown:
            raise ConfigError("declared", f"unknown property {sorted(unknown)[0]!r}")
        self.dim = dim
        self._fn = fn
        self._grad = grad
        self._hess = hess
        self.declared = declared
        self.name = name
        # exact -ln f attached by exp-family builders; keeps log-space
        # work away from underflowing tail values
        self.neg_log_form: "FunctionSpec | None" = None

    def __call__(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        return np.asarray(self._fn(pts), dtype=float).reshape(len(pts))

    def gradient(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        if self._grad is not None:
            return np.asarray(self._grad(pts), dtype=float).reshape(pts.shape)
        return fd_gradient(self.__call__, pts)

    def hessian(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        n, d = pts.shape
        if self._hess is not None:
            return np.asarray(self._hess(pts), dtype=float).reshape(n, d, d)
        return fd_hessian(self.__call__, pts)

    def partial(self, x, i: int) -> np.ndarray:
        return self.gradient(x)[:, i]

    def with_declared(self, *props: str) -> "FunctionSpec":
        out = FunctionSpec(self.dim, self._fn, self._grad, self._hess,
                           self.declared | frozenset(props), self.name)
        out.neg_log_form = self.neg_log_form
        return out

    def __repr__(self):
        return f"FunctionSpec({self.name}, dim={self.dim})"


def fd_gradient(fn: Callable, pts: np.ndarray) -> np.ndarray:
    n, d = pts.shape
    out = np.empty((n, d))
    for i in range(d):
        h = H_GRAD * (1.0 + np.abs(pts[:, i]))
        up = pts.copy()
        dn = pts.copy()
        up[:, i] += h
        dn[:, i] -= h
        out[:, i] = (np.asarray(fn(up)) - np.asarray(fn(dn))) / (2.0 * h)
    return out


def fd_hessian(fn: Callable, pts: np.ndarray) -> np.ndarray:
    n, d = pts.shape
    f0 = np.asarray(fn(pts), dtype=float)
    out = np.empty((n, d, d))
    steps = [H_HESS * (1.0 + np.abs(pts[:, i])) for i in range(d)]
    for i in range(d):
        hi = steps[i]
        up = pts.copy()
        dn = pts.copy()
        up[:, i] += hi
        dn[:, i] -= hi
        out[:, i, i] = (np.asarray(fn(up)) - 2.0 * f0 + np.asarray(fn(dn))) / hi ** 2
        for j in range(i + 1, d):
            hj = steps[j]
            pp = pts.copy()
            pm = pts.copy()
            mp = pts.copy()
            mm = pts.copy()
            pp[:, i] += hi
            pp[:, j] += hj
            pm[:, i] += hi
            pm[:, j] -= hj
            mp[:, i] -= hi
            mp[:, j] += hj
            mm[:, i] -= hi
            mm[:, j] -= hj
            mixed = (np.asarray(fn(pp)) - np.asarray(fn(pm))
                     - np.asarray(fn(mp)) + np.asarray(fn(mm))) / (4.0 * hi * hj)
            out[:, i, j] = mixed
            out[:, j, i] = mixed
    return out


# --- builtin families -------------------------------------------------------

def linear(b, c: float = 0.0, name: str | None = None) -> FunctionSpec:
    b = np.atleast_1d(np.asarray(b, dtype=float))
    d = len(b)
    return FunctionSpec(
        d,
        fn=lambda p: p @ b + c,
        grad=lambda p: np.broadcast_to(b, p.shape).copy(),
        hess=lambda p: np.zeros((len(p), d, d)),
        declared={"convex", "coordinatewise_convex"},
        name=name or "linear",
    )


def quadratic(Q, b=None, c: float = 0.0, name: str | None = None) -> FunctionSpec:
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    Q = 0.5 * (Q + Q.T)
    d = Q.shape[0]
    b = np.zeros(d) if b is None else np.asarray(b, dtype=float)
    declared = set()
    if float(np.linalg.eigvalsh(Q).min()) >= -1e-12:
        declared.add("convex")
    if float(np.diag(Q).min()) >= -1e-12:
        declared.add("coordinatewise_convex")
    if np.all(b == 0.0):
        declared.add("even")
        if np.allclose(Q, np.diag(np.diag(Q))):
            declared.add("unconditional")
    return FunctionSpec(
        d,
        fn=lambda p: 0.5 * np.einsum("ni,ij,nj->n", p, Q, p) + p @ b + c,
        grad=lambda p: p @ Q + b,
        hess=lambda p: np.broadcast_to(Q, (len(p), d, d)).copy(),
        declared=declared,
        name=name or "quadratic",
    )


def polynomial1d(coeffs, name: str | None = None) -> FunctionSpec:
    coeffs = np.asarray(coeffs, dtype=float)
    d1 = np.polynomial.polynomial.polyder(coeffs)
    d2 = np.polynomial.polynomial.polyder(coeffs, 2)
    pv = np.polynomial.polynomial.polyval
    return FunctionSpec(
        1,
        fn=lambda p: pv(p[:, 0], coeffs),
        grad=lambda p: pv(p[:, 0], d1)[:, None],
        hess=lambda p: pv(p[:, 0], d2)[:, None, None],
        name=name or "poly",
    )


def abs_power(p_exp: float, scale: float = 1.0, dim: int = 1) -> FunctionSpec:
    """scale * sum_i |x_i|^p; convex for p >= 1, even, unconditional."""
    if p_exp < 1:
        raise ValueError("abs_power needs p >= 1 for the convex family")

    def val(p):
        return scale * (np.abs(p) ** p_exp).sum(axis=1)

    def grad(p):
        return scale * p_exp * np.sign(p) * np.abs(p) ** (p_exp - 1.0)

    def hess(p):
        n, d = p.shape
        out = np.zeros((n, d, d))
        if p_exp >= 2:
            diag = scale * p_exp * (p_exp - 1.0) * np.abs(p) ** (p_exp - 2.0)
        else:
            safe = np.maximum(np.abs(p), 1e-8)
            diag = scale * p_exp * (p_exp - 1.0) * safe ** (p_exp - 2.0)
        for i in range(d):
            out[:, i, i] = diag[:, i]
        return out

    declared = {"even", "unconditional"}
    if scale >= 0:
        declared |= {"convex", "coordinatewise_convex"}
    return FunctionSpec(dim, val, grad, hess, declared, name=f"|x|^{p_exp}")


def exp_linear(b, c0: float = 1.0) -> FunctionSpec:
    b = np.atleast_1d(np.asarray(b, dtype=float))
    d = len(b)
    if c0 <= 0:
        raise ValueError("exp_linear needs a positive prefactor")

    def val(p):
        return c0 * np.exp(p @ b)

    spec = FunctionSpec(
        d,
        fn=val,
        grad=lambda p: val(p)[:, None] * b,
        hess=lambda p: val(p)[:, None, None] * np.outer(b, b),
        declared={"convex", "coordinatewise_convex", "positive", "log_concave",
                  "quasi_concave"},
        name="exp_linear",
    )
    spec.neg_log_form = linear(-b, -math.log(c0))
    return spec


def exp_neg_quadratic(Q, b=None, c: float = 0.0) -> FunctionSpec:
    """exp(-(x'Qx/2 + b'x + c)); log-concave when Q is PSD."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    Q = 0.5 * (Q + Q.T)
    d = Q.shape[0]
    b = np.zeros(d) if b is None else np.asarray(b, dtype=float)
    psd = float(np.linalg.eigvalsh(Q).min()) >= -1e-12

    def phi_grad(p):
        return p @ Q + b

    def val(p):
        return np.exp(-(0.5 * np.einsum("ni,ij,nj->n", p, Q, p) + p @ b + c))

    def grad(p):
        return -val(p)[:, None] * phi_grad(p)

    def hess(p):
        v = val(p)
        gp = phi_grad(p)
        return v[:, None, None] * (np.einsum("ni,nj->nij", gp, gp) - Q)

    declared = {"positive", "even"} if np.all(b == 0.0) else {"positive"}
    if psd:
        declared |= {"log_concave", "quasi_concave"}
    if np.all(b == 0.0) and np.allclose(Q, np.diag(np.diag(Q))):
        declared.add("unconditional")
    spec = FunctionSpec(d, val, grad, hess, declared, name="exp_neg_quadratic")
    spec.neg_log_form = quadratic(Q, b, c)
    return spec


def even_exp_quartic(a, b) -> FunctionSpec:
    """exp(-(sum_i a_i x_i^2 + b_i x_i^4)); log-concave, even, unconditional
    for non-negative coefficients."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    d = len(a)

    def phi_grad(p):
        return 2.0 * a * p + 4.0 * b * p ** 3

    def val(p):
        return np.exp(-((a * p ** 2 + b * p ** 4).sum(axis=1)))

    def grad(p):
        return -val(p)[:, None] * phi_grad(p)

    def hess(p):
        v = val(p)
        gp = phi_grad(p)
        out = np.einsum("n,ni,nj->nij", v, gp, gp)
        diag = v[:, None] * (2.0 * a + 12.0 * b * p ** 2)
        for i in range(d):
            out[:, i, i] -= diag[:, i]
        return out

    declared = {"positive", "even", "unconditional"}
    if np.all(a >= 0) and np.all(b >= 0):
        declared |= {"log_concave", "quasi_concave",
                     "coordinatewise_quasi_concave"}
    spec = FunctionSpec(d, val, grad, hess, declared, name="even_exp_quartic")

    def phi_hess(p):
        n = len(p)
        out = np.zeros((n, d, d))
        diag = 2.0 * a + 12.0 * b * p ** 2
        for i in range(d):
            out[:, i, i] = diag[:, i]
        return out

    spec.neg_log_form = FunctionSpec(
        d,
        fn=lambda p: (a * p ** 2 + b * p ** 4).sum(axis=1),
        grad=phi_grad,
        hess=phi_hess,
        declared={"even", "unconditional"},
        name="quartic_potential",
    )
    return spec


def softmax_free_energy(beta: float, dim: int) -> FunctionSpec:
    """(1/beta) log sum_i exp(beta x_i): the smooth max."""
    if beta <= 0:
        raise ValueError("softmax free energy needs beta > 0")

    def val(p):
        return logsumexp(beta * p, axis=1) / beta

    def softmax(p):
        z = beta * p
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def grad(p):
        return softmax(p)

    def hess(p):
        s = softmax(p)
        out = -beta * np.einsum("ni,nj->nij", s, s)
        for i in range(dim):
            out[:, i, i] += beta * s[:, i]
        return out

    return FunctionSpec(dim, val, grad, hess,
                        declared={"convex", "coordinatewise_convex"},
                        name=f"softmax(beta={beta})")


def softplus(b, c: float = 0.0) -> FunctionSpec:
    b = np.atleast_1d(np.asarray(b, dtype=float))
    d = len(b)

    def val(p):
        z = p @ b + c
        return np.logaddexp(0.0, z)

    def sig(p):
        return expit(p @ b + c)

    def grad(p):
        return sig(p)[:, None] * b

    def hess(p):
        s = sig(p)
        return (s * (1.0 - s))[:, None, None] * np.outer(b, b)

    return FunctionSpec(d, val, grad, hess,
                        declared={"convex", "coordinatewise_convex", "positive"},
                        name="softplus")


def tent(slopes) -> FunctionSpec:
    """max(0, 1 - sum c_i |x_i|): even, unconditional, quasi-concave."""
    slopes = np.atleast_1d(np.asarray(slopes, dtype=float))
    if np.any(slopes <= 0):
        raise ValueError("tent slopes must be positive")
    d = len(slopes)

    def val(p):
        return np.maximum(0.0, 1.0 - (np.abs(p) * slopes).sum(axis=1))

    return FunctionSpec(d, val, declared={"even", "unconditional",
                                          "quasi_concave",
                                          "coordinatewise_quasi_concave"},
                        name="tent")


def prod_bump(c) -> FunctionSpec:
    """prod_i 1/(1+c_i x_i^2): positive, even, unconditional, coordinatewise
    quasi-concave (c_i >= 0). Not jointly quasi-concave for d >= 2: the
    level sets of the product are not convex far from the origin."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if np.any(c < 0):
        raise ValueError("prod_bump coefficients must be >= 0")
    d = len(c)

    def val(p):
        return np.prod(1.0 / (1.0 + c * p ** 2), axis=1)

    def grad(p):
        v = val(p)
        g = -2.0 * c * p / (1.0 + c * p ** 2)
        return v[:, None] * g

    def hess(p):
        v = val(p)
        u = 1.0 + c * p ** 2
        g = -2.0 * c * p / u
        dg = -2.0 * c * (1.0 - c * p ** 2) / u ** 2
        out = np.einsum("n,ni,nj->nij", v, g, g)
        for i in range(d):
            out[:, i, i] += v * dg[:, i]
        return out

    declared = {"positive", "even", "unconditional",
                "coordinatewise_quasi_concave"}
    if d == 1:
        declared.add("quasi_concave")
    return FunctionSpec(d, val, grad, hess, declared, name="prod_bump")


def inverse_quadratic_bump(c, dim: int | None = None) -> FunctionSpec:
    """1/(1 + sum c_i x_i^2): quasi-concave with ellipsoidal level sets."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if np.any(c < 0):
        raise ValueError("bump coefficients must be >= 0")
    d = dim or len(c)

    def u(p):
        return 1.0 + (c * p ** 2).sum(axis=1)

    def val(p):
        return 1.0 / u(p)

    def grad(p):
        return -2.0 * (c * p) / u(p)[:, None] ** 2

    def hess(p):
        uu = u(p)
        cp = c * p
        out = 8.0 * np.einsum("n,ni,nj->nij", 1.0 / uu ** 3, cp, cp)
        for i in range(d):
            out[:, i, i] -= 2.0 * c[i] / uu ** 2
        return out

    return FunctionSpec(d, val, grad, hess,
                        declared={"positive", "even", "unconditional",
                                  "quasi_concave",
                                  "coordinatewise_quasi_concave"},
                        name="inv_quad_bump")


def sech_prod(c) -> FunctionSpec:
    """prod_i sech(c_i x_i): positive, even, unconditional, log-concave."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if np.any(c < 0):
        raise ValueError("sech_prod coefficients must be >= 0")
    d = len(c)

    def val(p):
        return np.exp(-np.log(np.cosh(c * p)).sum(axis=1))

    def t(p):
        return -c * np.tanh(c * p)

    def grad(p):
        return val(p)[:, None] * t(p)

    def hess(p):
        v = val(p)
        tv = t(p)
        out = np.einsum("n,ni,nj->nij", v, tv, tv)
        diag = c ** 2 / np.cosh(c * p) ** 2
        for i in range(d):
            out[:, i, i] -= v * diag[:, i]
        return out

    return FunctionSpec(d, val, grad, hess,
                        declared={"positive", "even", "unconditional",
                                  "log_concave", "quasi_concave",
                                  "coordinatewise_quasi_concave"},
                        name="sech_prod")


# --- combinators ------------------------------------------------------------

def neg_log(f: FunctionSpec) -> FunctionSpec:
    """phi = -ln f for positive f; derivatives from f's when available."""
    if f.neg_log_form is not None:
        return f.neg_log_form

    def val(p):
        v = f(p)
        if np.any(v <= 0):
            raise ValueError(f"{f.name} is not positive; cannot take -ln")
        return -np.log(v)

    def grad(p):
        return -f.gradient(p) / f(p)[:, None]

    def hess(p):
        v = f(p)[:, None, None]
        g = f.gradient(p)
        return -f.hessian(p) / v + np.einsum("ni,nj->nij", g, g) / v ** 2

    declared = {"convex"} if "log_concave" in f.declared else set()
    if "even" in f.declared:
        declared.add("even")
    if "unconditional" in f.declared:
        declared.add("unconditional")
    return FunctionSpec(f.dim, val, grad, hess, declared, name=f"-ln({f.name})")


def compose_scalar(h: Callable, h1: Callable, h2: Callable,
                   inner: FunctionSpec, declared=(), name=None) -> FunctionSpec:
    """f(x) = h(u(x)) with scalar chain-rule derivatives."""

    def val(p):
        return h(inner(p))

    def grad(p):
        return h1(inner(p))[:, None] * inner.gradient(p)

    def hess(p):
        u = inner(p)
        gu = inner.gradient(p)
        return (h2(u)[:, None, None] * np.einsum("ni,nj->nij", gu, gu)
                + h1(u)[:, None, None] * inner.hessian(p))

    return FunctionSpec(inner.dim, val, grad, hess, declared,
                        name=name or f"h({inner.name})")


def _weight_deriv(w: Weight) -> Callable:
    if w.a_d1 is not None:
        return w.a_d1

    def fd(x):
        x = np.asarray(x, dtype=float)
        h = H_GRAD * (1.0 + np.abs(x))
        return (np.asarray(w.a(x + h)) - np.asarray(w.a(x - h))) / (2.0 * h)

    return fd


def coordinate_substitution(outer: FunctionSpec,
                            weights: Sequence[Weight],
                            declared=(), name=None) -> FunctionSpec:
    """f(x) = B(A_1(x_1), ..., A_d(x_d)) for centered primitives A_i.

    Mixed partials inherit B's sign pattern because
    d_ij f = B_ij a_i a_j with a_i > 0, plus a diagonal B_i a_i' term.
    """
    d = outer.dim
    if len(weights) != d:
        raise ValueError("need one weight per coordinate")
    derivs = [_weight_deriv(w) for w in weights]

    def sub(p):
        return np.column_stack([w.A(p[:, i]) for i, w in enumerate(weights)])

    def val(p):
        return outer(sub(p))

    def grad(p):
        a_vals = np.column_stack([w.a(p[:, i]) for i, w in enumerate(weights)])
        return outer.gradient(sub(p)) * a_vals

    def hess(p):
        y = sub(p)
        a_vals = np.column_stack([w.a(p[:, i]) for i, w in enumerate(weights)])
        gB = outer.gradient(y)
        HB = outer.hessian(y)
        out = HB * np.einsum("ni,nj->nij", a_vals, a_vals)
        for i in range(d):
            out[:, i, i] += gB[:, i] * derivs[i](p[:, i])
        return out

    spec = FunctionSpec(d, val, grad, hess, declared,
                        name=name or f"{outer.name}∘A")
    if outer.neg_log_form is not None:
        spec.neg_log_form = coordinate_substitution(outer.neg_log_form,
                                                    weights)
    return spec


def linear_combination(specs: Sequence[FunctionSpec], coeffs,
                       declared=(), name=None) -> FunctionSpec:
    coeffs = np.asarray(coeffs, dtype=float)
    d = specs[0].dim

    def val(p):
        return sum(c * s(p) for c, s in zip(coeffs, specs))

    def grad(p):
        return sum(c * s.gradient(p) for c, s in zip(coeffs, specs))

    def hess(p):
        return sum(c * s.hessian(p) for c, s in zip(coeffs, specs))

    return FunctionSpec(d, val, grad, hess, declared, name=name or "lincomb")


def add_linear(spec: FunctionSpec, b, c: float = 0.0) -> FunctionSpec:
    b = np.asarray(b, dtype=float)

    def val(p):
        return spec(p) + p @ b + c

    def grad(p):
        return spec.gradient(p) + b

    keep = spec.declared & {"convex", "coordinatewise_convex"}
    return FunctionSpec(spec.dim, val, grad, spec.hessian, keep,
                        name=f"{spec.name}+lin")


def rescale_inputs(spec: FunctionSpec, c: float) -> FunctionSpec:
    """x -> f(c x); preserves every certified property for c > 0."""
    if c <= 0:
        raise ValueError("rescale factor must be positive")

    def val(p):
        return spec(c * p)

    def grad(p):
        return c * spec.gradient(c * p)

    def hess(p):
        return c * c * spec.hessian(c * p)

    return FunctionSpec(spec.dim, val, grad, hess, spec.declared,
                        name=f"{spec.name}(cx)")


def scale_output(spec: FunctionSpec, c: float) -> FunctionSpec:
    if c <= 0:
        raise ValueError("output scale must be positive")

    def val(p):
        return c * spec(p)

    def grad(p):
        return c * spec.gradient(p)

    def hess(p):
        return c * spec.hessian(p)

    out = FunctionSpec(spec.dim, val, grad, hess, spec.declared,
                       name=f"{c}*{spec.name}")
    nl = spec.neg_log_form
    if nl is not None:
        shift = math.log(c)
        out.neg_log_form = FunctionSpec(
            nl.dim, lambda p: nl(p) - shift, nl.gradient, nl.hessian,
            nl.declared, name=nl.name)
    return out


# --- expression trees -------------------------------------------------------

def _min_reduce(*args):
    return reduce(np.minimum, args)


def _max_reduce(*args):
    return reduce(np.maximum, args)


_EXPR_FUNCS: dict[str, Callable] = {
    "exp": np.exp,
    "ln": np.log,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "min": _min_reduce,
    "max": _max_reduce,
}

_EXPR_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
    ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub,
    ast.UAdd,
)


def compile_expression(expr: str, dim: int) -> Callable:
    """Compile an expression in x1..xd with + - * / ^ and exp/ln/abs/min/max."""
    try:
        tree = ast.parse(expr.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ConfigError("expr", f"syntax error: {exc.msg}") from None
    coord_names = {f"x{k}" for k in range(1, dim + 1)}
    for node in ast.walk(tree):
        if not isinstance(node, _EXPR_NODES):
            raise ConfigError("expr", f"disallowed syntax: {type(node).__name__}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _EXPR_FUNCS:
                got = getattr(node.func, "id", "<expr>")
                raise ConfigError("expr", f"unknown function {got!r}")
            if node.keywords:
                raise ConfigError("expr", "keyword arguments are not allowed")
        elif isinstance(node, ast.Name):
            if node.id not in coord_names and node.id not in _EXPR_FUNCS:
                raise ConfigError("expr", f"unknown name {node.id!r} (use x1..x{dim})")
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)):
                raise ConfigError("expr", f"disallowed constant {node.value!r}")
    code = compile(tree, "<expr>", "eval")

    def fn(points):
        pts = np.asarray(points, dtype=float)
        env = {f"x{k + 1}": pts[:, k] for k in range(dim)}
        env.update(_EXPR_FUNCS)
        result = eval(code, {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(result, dtype=float), (len(pts),)).copy()

    return fn


_BUILTIN_FACTORIES: dict[str, Callable] = {}


def _register(name):
    def wrap(factory):
        _BUILTIN_FACTORIES[name] = factory
        return factory
    return wrap


@_register("linear")
def _mk_linear(dim, params):
    b = params.get("b", [1.0] * dim)
    return linear(b, params.get("c", 0.0))


@_register("quadratic")
def _mk_quadratic(dim, params):
    Q = params.get("Q")
    if Q is None:
        raise ConfigError("params.Q", "quadratic needs a matrix Q")
    return quadratic(Q, params.get("b"), params.get("c", 0.0))


@_register("polynomial")
def _mk_polynomial(dim, params):
    if dim != 1:
        raise ConfigError("builtin", "polynomial is one-dimensional")
    if "coeffs" not in params:
        raise ConfigError("params.coeffs", "polynomial needs coefficients")
    return polynomial1d(params["coeffs"])


@_register("abs_power")
def _mk_abs_power(dim, params):
    return abs_power(params.get("p", 2.0), params.get("scale", 1.0), dim)


@_register("exp_linear")
def _mk_exp_linear(dim, params):
    return exp_linear(params.get("b", [1.0] * dim), params.get("c0", 1.0))


@_register("exp_neg_quadratic")
def _mk_exp_neg_quadratic(dim, params):
    Q = params.get("Q")
    if Q is None:
        raise ConfigError("params.Q", "exp_neg_quadratic needs a matrix Q")
    return exp_neg_quadratic(Q, params.get("b"), params.get("c", 0.0))


@_register("even_exp_quartic")
def _mk_even_exp_quartic(dim, params):
    return even_exp_quartic(params.get("a", [1.0] * dim),
                            params.get("b", [0.0] * dim))


@_register("softmax_free_energy")
def _mk_softmax(dim, params):
    return softmax_free_energy(params.get("beta", 1.0), dim)


@_register("softplus")
def _mk_softplus(dim, params):
    return softplus(params.get("b", [1.0] * dim), params.get("c", 0.0))


@_register("tent")
def _mk_tent(dim, params):
    return tent(params.get("slopes", [1.0] * dim))


@_register("prod_bump")
def _mk_prod_bump(dim, params):
    return prod_bump(params.get("c", [1.0] * dim))


@_register("inverse_quadratic_bump")
def _mk_inv_quad(dim, params):
    return inverse_quadratic_bump(params.get("c", [1.0] * dim))


@_register("sech_prod")
def _mk_sech(dim, params):
    return sech_prod(params.get("c", [1.0] * dim))


def function_from_json(obj, dim: int, context: str = "function") -> FunctionSpec:
    if not isinstance(obj, dict):
        raise ConfigError(context, "expected an object")
    if "builtin" in obj:
        extra = set(obj) - {"builtin", "params", "declared"}
        if extra:
            raise ConfigError(f"{context}.{sorted(extra)[0]}", "unexpected field")
        name = obj["builtin"]
        factory = _BUILTIN_FACTORIES.get(name)
        if factory is None:
            raise ConfigError(f"{context}.builtin", f"unknown builtin {name!r}")
        spec = factory(dim, obj.get("params", {}))
        if spec.dim != dim:
            raise ConfigError(f"{context}.builtin",
                              f"{name} has dim {spec.dim}, measure has dim {dim}")
        extra_props = frozenset(obj.get("declared", []))
        if extra_props - PROPERTIES:
            bad = sorted(extra_props - PROPERTIES)[0]
            raise ConfigError(f"{context}.declared", f"unknown property {bad!r}")
        return spec.with_declared(*extra_props) if extra_props else spec
    if "expr" in obj:
        extra = set(obj) - {"expr", "declared"}
        if extra:
            raise ConfigError(f"{context}.{sorted(extra)[0]}", "unexpected field")
        declared = obj.get("declared", [])
        bad = frozenset(declared) - PROPERTIES
        if bad:
            raise ConfigError(f"{context}.declared",
                              f"unknown property {sorted(bad)[0]!r}")
        fn = compile_expression(obj["expr"], dim)
        return FunctionSpec(dim, fn, declared=declared, name=obj["expr"])
    raise ConfigError(context, "need either 'builtin' or 'expr'")


# --- probe sets -------------------------------------------------------------

def probe_points(box: Sequence[tuple[float, float]], n_axis: int = 21,
                 n_sobol: int = 4096) -> np.ndarray:
    """Deterministic probe coverage: tensor grid up to d=3, Sobol beyond."""
    d = len(box)
    if d <= 3:
        axes = [np.linspace(lo, hi, n_axis) for lo, hi in box]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])
    sampler = qmc.Sobol(d=d, scramble=False)
    m = max(1, int(math.ceil(math.log2(n_sobol))))
    raw = sampler.random_base2(m=m)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return lo + raw * (hi - lo)


# --- certification ----------------------------------------------------------

@dataclass
class CertifyResult:
    prop: str
    passed: bool
    witness: tuple | None = None
    detail: str = ""

    def __bool__(self):
        return self.passed


def _lex_smallest(points: np.ndarray) -> tuple:
    order = np.lexsort(points.T[::-1])
    return tuple(float(v) for v in points[order[0]])


def _tau(scale: float) -> float:
    return 1e-7 * (1.0 + abs(scale))


def certify(f: FunctionSpec, prop: str,
            box: Sequence[tuple[float, float]],
            seed: int = 0, n_axis: int = 21, trials: int = 300) -> CertifyResult:
    """Numerically certify one structural property of f on a box."""
    if prop not in PROPERTIES:
        raise ValueError(f"unknown property {prop!r}")
    probe_box = list(box)
    if prop in ("even", "unconditional"):
        # reflections must stay inside the probed region; truncation leaves
        # the box asymmetric at roundoff level, so probe its symmetric core
        core = [(-min(hi, -lo), min(hi, -lo)) for lo, hi in box]
        if all(hi > 0 for _, hi in core):
            probe_box = core
    pts = probe_points(probe_box, n_axis=n_axis)
    vals = f(pts)
    if not np.all(np.isfinite(vals)):
        bad = pts[~np.isfinite(vals)]
        return CertifyResult(prop, False, _lex_smallest(bad),
                             "non-finite value at probe")
    scale = float(np.max(np.abs(vals)))
    rng = np.random.default_rng(seed)

    if prop == "positive":
        bad = pts[vals <= 0]
        if len(bad) and f.neg_log_form is not None:
            # exp(-phi) underflows in far tails but stays positive wherever
            # phi is finite
            if np.all(np.isfinite(f.neg_log_form(bad))):
                return CertifyResult(prop, True)
        if len(bad):
            return CertifyResult(prop, False, _lex_smallest(bad), "f <= 0")
        return CertifyResult(prop, True)

    if prop == "even":
        diff = np.abs(vals - f(-pts))
        tol = 1e-9 * (1.0 + scale)
        bad = pts[diff > tol]
        if len(bad):
            return CertifyResult(prop, False, _lex_smallest(bad),
                                 "f(x) != f(-x)")
        return CertifyResult(prop, True)

    if prop == "unconditional":
        d = f.dim
        tol = 1e-9 * (1.0 + scale)
        if d <= 10:
            flips = [np.array(bits) for bits in np.ndindex(*([2] * d))]
        else:
            flips = [rng.integers(0, 2, size=d) for _ in range(64)]
        for bits in flips:
            eps = np.where(np.asarray(bits) == 1, -1.0, 1.0)
            diff = np.abs(vals - f(pts * eps))
            bad = pts[diff > tol]
            if len(bad):
                return CertifyResult(prop, False, _lex_smallest(bad),
                                     f"sign flip {eps.astype(int).tolist()} changes f")
        return CertifyResult(prop, True)

    if prop == "convex":
        hess = f.hessian(pts)
        eigmin = np.linalg.eigvalsh(hess)[:, 0]
        hscale = np.abs(hess).reshape(len(pts), -1).max(axis=1)
        # the second term absorbs finite-difference noise, which grows with
        # the function scale rather than the Hessian scale
        tol = 1e-7 * (1.0 + hscale) + 1e-7 * f.dim * (1.0 + scale)
        bad = pts[eigmin < -tol]
        if len(bad):
            return CertifyResult(prop, False, _lex_smallest(bad),
                                 "Hessian has a negative eigenvalue")
        verdict = _segment_convexity(f, pts, rng, trials, scale)
        if verdict is not None:
            return CertifyResult(prop, False, verdict,
                                 "slope determinant negative on a segment")
        return CertifyResult(prop, True)

    if prop == "log_concave":
        pos = certify(f, "positive", box, seed=seed, n_axis=n_axis)
        if not pos.passed:
            return CertifyResult(prop, False, pos.witness,
                                 "not positive, -ln f undefined")
        inner = certify(neg_log(f), "convex", box, seed=seed,
                        n_axis=n_axis, trials=trials)
        return CertifyResult(prop, inner.passed, inner.witness, inner.detail)

    if prop == "quasi_concave":
        tol = _tau(scale)
        for _ in range(trials):
            i, j = rng.integers(0, len(pts), size=2)
            x, y = pts[i], pts[j]
            t = rng.random()
            z = x + t * (y - x)
            fz = f(z[None, :])[0]
            if fz < min(vals[i], vals[j]) - tol:
                return CertifyResult(prop, False, tuple(float(v) for v in z),
                                     "min-inequality fails on a segment")
        return CertifyResult(prop, True)

    if prop == "coordinatewise_convex":
        verdict = _axis_convexity(f, pts, box, rng, trials, scale)
        if verdict is not None:
            return CertifyResult(prop, False, verdict,
                                 "negative second difference along an axis")
        return CertifyResult(prop, True)

    if prop == "coordinatewise_quasi_concave":
        tol = _tau(scale)
        d = f.dim
        for _ in range(trials):
            base = pts[rng.integers(0, len(pts))].copy()
            axis = int(rng.integers(0, d))
            lo, hi = box[axis]
            u, v = np.sort(rng.uniform(lo, hi, size=2))
            t = rng.random()
            a = base.copy()
            b = base.copy()
            z = base.copy()
            a[axis], b[axis] = u, v
            z[axis] = u + t * (v - u)
            fa, fb, fz = f(np.vstack([a, b, z]))
            if fz < min(fa, fb) - tol:
                return CertifyResult(prop, False, tuple(float(q) for q in z),
                                     f"axis {axis} min-inequality fails")
        return CertifyResult(prop, True)

    raise AssertionError("unreachable")


def _segment_convexity(f, pts, rng, trials, scale):
    """Slope-determinant test on random segments; None when it passes."""
    n = len(pts)
    for _ in range(trials):
        i, j = rng.integers(0, n, size=2)
        x, y = pts[i], pts[j]
        if np.allclose(x, y):
            continue
        ts = np.sort(rng.random(3))
        if ts[1] - ts[0] < 1e-3 or ts[2] - ts[1] < 1e-3:
            continue
        seg = x[None, :] + ts[:, None] * (y - x)[None, :]
        fv = f(seg)
        det = ((ts[1] * fv[2] - ts[2] * fv[1])
               - (ts[0] * fv[2] - ts[2] * fv[0])
               + (ts[0] * fv[1] - ts[1] * fv[0]))
        vand = (ts[1] - ts[0]) * (ts[2] - ts[0]) * (ts[2] - ts[1])
        if det < -_tau(scale) * max(vand, 1e-9):
            return tuple(float(v) for v in seg[1])
    return None


def _axis_convexity(f, pts, box, rng, trials, scale):
    d = f.dim
    for _ in range(trials):
        base = pts[rng.integers(0, len(pts))].copy()
        axis = int(rng.integers(0, d))
        lo, hi = box[axis]
        ts = np.sort(rng.uniform(lo, hi, size=3))
        if ts[1] - ts[0] < 1e-6 or ts[2] - ts[1] < 1e-6:
            continue
        seg = np.repeat(base[None, :], 3, axis=0)
        seg[:, axis] = ts
        fv = f(seg)
        lam = (ts[1] - ts[0]) / (ts[2] - ts[0])
        interp = (1 - lam) * fv[0] + lam * fv[2]
        if fv[1] > interp + _tau(scale):
            return tuple(float(v) for v in seg[1])
    return None


def certify_declared(f: FunctionSpec, box, seed: int = 0,
                     props: Sequence[str] | None = None) -> list[CertifyResult]:
    """Certify every declared (or requested) property; order is fixed."""
    wanted = sorted(props if props is not None else f.declared)
    return [certify(f, prop, box, seed=seed) for prop in wanted]


# --- sign conditions --------------------------------------------------------

@dataclass
class SignConditionReport:
    condition: str
    pairs: list
    signs_left: dict
    signs_right: dict
    passed: bool
    failures: list = field(default_factory=list)
    probe_description: str = ""

    def to_json(self):
        def fmt(d):
            return {f"{i},{j}": s for (i, j), s in d.items()}
        return {
            "condition": self.condition,
            "signs_left": fmt(self.signs_left),
            "signs_right": fmt(self.signs_right),
            "passed": self.passed,
            "failures": list(self.failures),
            "probes": self.probe_description,
        }


def _classify(vals: np.ndarray) -> str:
    tol = _tau(float(np.max(np.abs(vals))) if len(vals) else 0.0)
    has_pos = bool(np.any(vals > tol))
    has_neg = bool(np.any(vals < -tol))
    if has_pos and has_neg:
        return "mixed"
    if has_pos:
        return "+"
    if has_neg:
        return "-"
    return "zero"


def _signs_compatible(sa: str, sb: str) -> bool:
    if "mixed" in (sa, sb):
        return False
    return sa == sb or sa == "zero" or sb == "zero"


def _sign_allows(s: str, required: str) -> bool:
    """required is '+' (>= 0) or '-' (<= 0)."""
    return s in (required, "zero")


def _plain_mixed(spec: FunctionSpec, pts, pairs):
    hess = spec.hessian(pts)
    return {(i, j): hess[:, i, j] for (i, j) in pairs}


def _quotient_mixed(spec: FunctionSpec, pts, pairs, weights):
    """d_j (d_i spec / a_i) by central differences of the gradient quotient."""
    need_j = sorted({j for (_, j) in pairs})
    out = {}
    shifted = {}
    for j in need_j:
        h = H_HESS * (1.0 + np.abs(pts[:, j]))
        up = pts.copy()
        dn = pts.copy()
        up[:, j] += h
        dn[:, j] -= h
        g_up = spec.gradient(up)
        g_dn = spec.gradient(dn)
        shifted[j] = (up, dn, g_up, g_dn, h)
    for (i, j) in pairs:
        up, dn, g_up, g_dn, h = shifted[j]
        a_up = np.asarray(weights[i].a(up[:, i]), dtype=float)
        a_dn = np.asarray(weights[i].a(dn[:, i]), dtype=float)
        out[(i, j)] = (g_up[:, i] / a_up - g_dn[:, i] / a_dn) / (2.0 * h)
    return out


def _ratio_primitive_over_potential(weight: Weight):
    """x -> A(x)/V'(x) with the a/V'' limit where V' vanishes."""
    m = weight.measure

    def ratio(x):
        x = np.asarray(x, dtype=float)
        v1 = np.asarray(m.potential_d1(x), dtype=float)
        A = np.asarray(weight.A(x), dtype=float)
        small = np.abs(v1) < 1e-10 * (1.0 + np.abs(x))
        safe = np.where(small, 1.0, v1)
        base = A / safe
        if np.any(small):
            v2 = np.asarray(m.potential_d2(x), dtype=float)
            av = np.asarray(weight.a(x), dtype=float)
            limit = av / np.where(np.abs(v2) < 1e-300, 1.0, v2)
            base = np.where(small, limit, base)
        return base

    return ratio


def _potential_weighted_mixed(spec: FunctionSpec, pts, pairs, weights):
    """d_{j,k} of x -> spec(x) * A_k(x_k)/V_k'(x_k), for pairs (j, k)."""
    out = {}
    for (j, k) in pairs:
        ratio = _ratio_primitive_over_potential(weights[k])
        hj = H_HESS * (1.0 + np.abs(pts[:, j]))
        hk = H_HESS * (1.0 + np.abs(pts[:, k]))

        def m_val(points):
            return spec(points) * ratio(points[:, k])

        pp = pts.copy(); pp[:, j] += hj; pp[:, k] += hk
        pm = pts.copy(); pm[:, j] += hj; pm[:, k] -= hk
        mp = pts.copy(); mp[:, j] -= hj; mp[:, k] += hk
        mm = pts.copy(); mm[:, j] -= hj; mm[:, k] -= hk
        out[(j, k)] = (m_val(pp) - m_val(pm) - m_val(mp) + m_val(mm)) / (4 * hj * hk)
    return out


_CONDITIONS: dict[str, dict] = {
    # pairs: which (i,j); qty: plain | quotient | potential_ratio
    # mode: equal (signs of left and right must match) or a (left_req, right_req)
    "cond-l2-fg": {"pairs": "all", "qty": "plain", "mode": "equal"},
    "cond-l2-fg-mod": {"pairs": "all", "qty": "quotient", "mode": "equal"},
    "cond-a-i": {"pairs": "diag", "qty": "quotient", "mode": "equal"},
    "cond-a-ij": {"pairs": "offdiag", "qty": "plain", "mode": "equal"},
    "cond-l2-idem": {"pairs": "diag", "qty": "quotient", "mode": "equal"},
    "cond-ii-phi-g": {"pairs": "diag", "qty": "quotient", "mode": ("-", "+")},
    "cond-ij-phi-g": {"pairs": "offdiag", "qty": "plain", "mode": ("-", "+")},
    "cond-ii-phi-psi": {"pairs": "diag", "qty": "quotient", "mode": ("-", "-")},
    "cond-ij-phi-psi": {"pairs": "offdiag", "qty": "plain", "mode": ("-", "-")},
    "cond-l2-phi-g": {"pairs": "all", "qty": "plain", "mode": ("-", "+")},
    "cond-l2-phi-psi": {"pairs": "all", "qty": "plain", "mode": ("-", "-")},
    "cond-V-i": {"pairs": "diag", "qty": "quotient", "mode": "equal"},
    "cond-V-ij": {"pairs": "upper", "qty": "potential_ratio", "mode": "equal"},
}


def condition_ids() -> list[str]:
    return sorted(_CONDITIONS)


def check_sign_condition(left: FunctionSpec, right: FunctionSpec,
                         weights: Sequence[Weight], condition: str,
                         box: Sequence[tuple[float, float]],
                         n_axis: int = 13) -> SignConditionReport:
    """Probe the signed-derivative condition for a function pair.

    ``left``/``right`` are the functions the condition quotes: f and g for
    the sign-matching conditions, phi = -ln f (and psi) for the phi-forms.
    """
    rule = _CONDITIONS.get(condition)
    if rule is None:
        raise ValueError(f"unknown sign condition {condition!r}")
    d = left.dim
    if rule["pairs"] == "diag":
        pairs = [(i, i) for i in range(d)]
    elif rule["pairs"] == "offdiag":
        pairs = [(i, j) for i in range(d) for j in range(d) if i != j]
    elif rule["pairs"] == "upper":
        pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    else:
        pairs = [(i, j) for i in range(d) for j in range(d)]
    pts = probe_points(box, n_axis=n_axis)

    def evaluate(spec):
        if rule["qty"] == "plain":
            return _plain_mixed(spec, pts, pairs)
        if rule["qty"] == "quotient":
            return _quotient_mixed(spec, pts, pairs, weights)
        return _potential_weighted_mixed(spec, pts, pairs, weights)

    vals_l = evaluate(left)
    vals_r = evaluate(right)
    signs_l = {p: _classify(v) for p, v in vals_l.items()}
    signs_r = {p: _classify(v) for p, v in vals_r.items()}

    failures = []
    for p in pairs:
        if rule["mode"] == "equal":
            if not _signs_compatible(signs_l[p], signs_r[p]):
                failures.append(
                    f"pair {p}: signs {signs_l[p]} vs {signs_r[p]}"
                )
        else:
            req_l, req_r = rule["mode"]
            if not _sign_allows(signs_l[p], req_l):
                failures.append(f"pair {p}: left sign {signs_l[p]}, need {req_l}")
            if not _sign_allows(signs_r[p], req_r):
                failures.append(f"pair {p}: right sign {signs_r[p]}, need {req_r}")

    return SignConditionReport(
        condition=condition,
        pairs=pairs,
        signs_left=signs_l,
        signs_right=signs_r,
        passed=not failures,
        failures=failures,
        probe_description=f"tensor grid {n_axis}/axis on {len(pts)} points",
    )


# --- layer cake -------------------------------------------------------------

@dataclass
class LayerCake:
    levels: list          # (t_j, r_j) pairs
    delta: float          # level spacing
    sup_error: float

    def reconstruct(self, x) -> np.ndarray:
        x = np.abs(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        for _, r in self.levels:
            out += self.delta * (x <= r)
        return out


def layer_cake_decompose(f: FunctionSpec, box: tuple[float, float],
                         levels: int, n_probe: int = 2001) -> LayerCake:
    """Decompose an even quasi-concave 1-D function into interval layers.

    r(t) solves f(r) = t by bisection on [0, hi], using that f is
    non-increasing on [0, inf) (forced by even + quasi-concave). A level set
    that is not an interval on the probe grid raises with the level.
    """
    if f.dim != 1:
        raise ValueError("layer cake decomposition is one-dimensional")
    lo, hi = box
    xs = np.linspace(lo, hi, n_probe)
    vals = f(xs[:, None])
    if np.any(vals < -1e-12):
        raise ValueError("layer cake needs f >= 0")
    fmax = float(vals.max())
    if fmax <= 0:
        raise ValueError("layer cake needs a positive maximum")
    delta = fmax / levels

    def f_scalar(x):
        return float(f(np.array([[x]]))[0])

    pairs = []
    for j in range(levels):
        t = (j + 0.5) * delta
        ind = vals >= t
        if ind.any():
            first, last = np.argmax(ind), len(ind) - 1 - np.argmax(ind[::-1])
            if not ind[first:last + 1].all():
                raise ValueError(
                    f"level set at t={t:.6g} is not an interval; "
                    "f is not quasi-concave"
                )
        if f_scalar(hi) >= t:
            r = hi
        elif f_scalar(0.0) < t:
            r = 0.0
        else:
            a, b = 0.0, hi
            for _ in range(80):
                mid = 0.5 * (a + b)
                if f_scalar(mid) >= t:
                    a = mid
                else:
                    b = mid
            r = 0.5 * (a + b)
        pairs.append((t, r))

    cake = LayerCake(levels=pairs, delta=delta, sup_error=0.0)
    cake.sup_error = float(np.max(np.abs(cake.reconstruct(xs) - vals)))
    return cake
