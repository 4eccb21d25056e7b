"""One-dimensional covariance relations through kernel-induced plane
measures.

The kernel k(x,y) of a measure mu, weighted by a(x) a(y) and optionally by
function factors f(x) and g(y), defines a probability measure on the plane
after normalization. Covariances of mu decompose through these induced
measures:

  variant 1:  Cov(f,g) = Z * Cov_nu(f'/a, g'/a) + Cov(f,A) Cov(g,A) / Z
  variant 2:  Cov(f,g) = Z_f * Cov_nu_f(-phi'/a, g'/a)
                         + Cov(f,A) Cov(F_a, g) / Z_f          (f = e^-phi)
  variant 3:  Cov(f,g) = Z_fg * Cov_nu_fg(phi'/a, psi'/a)
                         + Cov(f,G_a) Cov(F_a, g) / Z_fg       (g = e^-psi)

with A the centered primitive of a, F_a and G_a primitives of a f and a g,
and each Z the mass of the unnormalized plane density. The masses also have
covariance forms (Z = Var A, Z_f = Cov(F_a, A), Z_fg = Cov(F_a, G_a)),
reported alongside the direct integrals.

Everything here is for continuous measures; the discrete counterparts live
in the oracle module as exact atom sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._gauss import CumulativePrimitive, stable_dot
from .functions import FunctionSpec
from .kernels import HoeffdingKernel
from .measures import Measure1D, ProductMeasure, Weight, unit_weight
from .quadrature import (DEFAULT_SPEC, CovarianceEngine, DiagGrid2D,
                         MeasureGrid1D, QuadratureSpec)

VARIANTS = (1, 2, 3)


def _deriv(fn: FunctionSpec, x: np.ndarray) -> np.ndarray:
    return fn.gradient(x)[:, 0]


class InducedMeasure2D:
    """The normalized plane measure  w(x) k(x,y) w~(y) dx dy.

    The base weights are a(x) a(y); the x side optionally carries an extra
    factor f, the y side an extra factor g. Integration uses a grid split
    along the diagonal because the kernel has a ridge there.
    """

    def __init__(self, measure: Measure1D, weight: Weight | None = None,
                 f: FunctionSpec | None = None, g: FunctionSpec | None = None,
                 spec: QuadratureSpec = DEFAULT_SPEC, _grid=None):
        if measure.is_discrete:
            raise ValueError("induced plane measures need a continuous base")
        self.measure = measure
        self.weight = weight if weight is not None else unit_weight(measure)
        self.f = f
        self.g = g
        self.spec = spec
        self.kern = HoeffdingKernel(measure, trunc_eps=spec.trunc_eps)
        if _grid is None:
            order, panels = spec.axis_rule(2)
            _grid = DiagGrid2D(self.kern.lo, self.kern.hi, order=order,
                               panels=panels)
        self._grid = _grid
        X, Y, W = _grid.pair_nodes()
        self.X, self.Y = X, Y
        a = self.weight.a
        dens = a(X) * self.kern.base_eval(X, Y) * a(Y)
        if f is not None:
            fx = f(X)
            if np.min(fx) <= 0:
                raise ValueError("x-side density factor must be positive")
            dens = dens * fx
        if g is not None:
            gy = g(Y)
            if np.min(gy) <= 0:
                raise ValueError("y-side density factor must be positive")
            dens = dens * gy
        self._wd = W * dens
        self._dens = dens
        self.z_mass = float(np.sum(self._wd))

    def coarse(self) -> "InducedMeasure2D":
        return InducedMeasure2D(self.measure, self.weight, self.f, self.g,
                                self.spec, _grid=self._grid.coarse())

    def expectation(self, u: Callable | None = None,
                    v: Callable | None = None) -> float:
        """E[u(x) v(y)]; either factor may be omitted."""
        vals = self._wd
        if u is not None:
            vals = vals * u(self.X)
        if v is not None:
            vals = vals * v(self.Y)
        return float(np.sum(vals)) / self.z_mass

    def covariance(self, u: Callable, v: Callable) -> float:
        ux = u(self.X)
        vy = v(self.Y)
        um = float(np.sum(self._wd * ux)) / self.z_mass
        vm = float(np.sum(self._wd * vy)) / self.z_mass
        return float(np.sum(self._wd * (ux - um) * (vy - vm))) / self.z_mass

    def log_density(self, points) -> np.ndarray:
        """Unnormalized log-density at (N, 2) points, -inf off support."""
        pts = np.asarray(points, dtype=float)
        x, y = pts[:, 0], pts[:, 1]
        a = self.weight.a
        dens = a(x) * self.kern.base_eval(x, y) * a(y)
        if self.f is not None:
            dens = dens * self.f(x)
        if self.g is not None:
            dens = dens * self.g(y)
        with np.errstate(divide="ignore"):
            return np.log(dens)


@dataclass
class HoeffdingReport:
    lhs: float
    rhs: float
    residual: float
    err: float
    tolerance: float
    passed: bool


def hoeffding_rhs(measure: Measure1D, f: FunctionSpec, g: FunctionSpec,
                  spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float]:
    """The double integral of f'(x) k(x,y) g'(y), with an error estimate."""
    kern = HoeffdingKernel(measure, trunc_eps=spec.trunc_eps)
    order, panels = spec.axis_rule(2)
    grid = DiagGrid2D(kern.lo, kern.hi, order=order, panels=panels)

    def h(x, y):
        return _deriv(f, x) * kern.base_eval(x, y) * _deriv(g, y)

    val = grid.integrate(h)
    err = abs(val - grid.coarse().integrate(h))
    return float(val), float(err)


def hoeffding_residual(measure: Measure1D, f: FunctionSpec, g: FunctionSpec,
                       spec: QuadratureSpec = DEFAULT_SPEC,
                       tol: float = 1e-7) -> HoeffdingReport:
    """Cov(f,g) against the kernel double integral, on consistent grids."""
    engine = CovarianceEngine(ProductMeasure([measure]), spec)
    lhs, lhs_err = engine.covariance(f, g)
    rhs, rhs_err = hoeffding_rhs(measure, f, g, spec)
    err = lhs_err + rhs_err
    residual = lhs - rhs
    tolerance = max(tol, 3.0 * err)
    return HoeffdingReport(lhs, rhs, float(residual), float(err),
                           float(tolerance), bool(abs(residual) <= tolerance))


@dataclass
class RelationReport:
    variant: int
    lhs: float
    cov_term: float
    middle: float
    rhs: float
    residual: float
    z_direct: float
    z_cov: float
    z_residual: float
    induced_cov: float
    err: float
    tolerance: float
    passed: bool
    formula_det_residual: float | None = None


def _primitive(measure: Measure1D, weight: Weight,
               fn: FunctionSpec) -> Callable:
    lo, hi = weight.support

    def integrand(t):
        return weight.a(t) * fn(t)

    return CumulativePrimitive(integrand, lo, hi)


def relation_residual(measure: Measure1D, f: FunctionSpec, g: FunctionSpec,
                      variant: int, weight: Weight | None = None,
                      spec: QuadratureSpec = DEFAULT_SPEC) -> RelationReport:
    """Check one covariance relation variant; see the module docstring.

    The residual is lhs - rhs with every term computed independently:
    the left side by direct quadrature, the induced covariance on the
    split plane grid, the middle term from one-dimensional covariances.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    weight = weight if weight is not None else unit_weight(measure)
    a = weight.a
    engine = CovarianceEngine(ProductMeasure([measure]), spec)
    lhs, lhs_err = engine.covariance(f, g)

    def u_plain(x):
        return _deriv(f, x) / a(x)

    def v_plain(y):
        return _deriv(g, y) / a(y)

    def u_log(x):
        return _deriv(f, x) / (f(x) * a(x))

    def v_log(y):
        return _deriv(g, y) / (g(y) * a(y))

    if variant == 1:
        nu = InducedMeasure2D(measure, weight, spec=spec)
        z_cov = weight.var_A()
        u, v = u_plain, v_plain
        sign = 1.0
    elif variant == 2:
        nu = InducedMeasure2D(measure, weight, f=f, spec=spec)
        F_a = _primitive(measure, weight, f)
        z_cov, _ = engine.covariance(F_a, weight.A)
        u, v = u_log, v_plain
        sign = 1.0
    else:
        nu = InducedMeasure2D(measure, weight, f=f, g=g, spec=spec)
        F_a = _primitive(measure, weight, f)
        G_a = _primitive(measure, weight, g)
        z_cov, _ = engine.covariance(F_a, G_a)
        # (-phi'/a)(-psi'/a) = (f'/fa)(g'/ga); the two signs cancel
        u, v = u_log, v_log
        sign = 1.0

    z = nu.z_mass
    induced_cov = nu.covariance(u, v)
    cov_term = sign * z * induced_cov

    if variant == 1:
        cfa, e1 = engine.covariance(f, weight.A)
        cga, e2 = engine.covariance(g, weight.A)
        middle = cfa * cga / z
    elif variant == 2:
        F_a = _primitive(measure, weight, f)
        cfa, e1 = engine.covariance(f, weight.A)
        cFg, e2 = engine.covariance(F_a, g)
        middle = cfa * cFg / z
    else:
        F_a = _primitive(measure, weight, f)
        G_a = _primitive(measure, weight, g)
        cfG, e1 = engine.covariance(f, G_a)
        cFg, e2 = engine.covariance(F_a, g)
        middle = cfG * cFg / z

    rhs = cov_term + middle

    nu_c = nu.coarse()
    rhs_coarse = sign * nu_c.z_mass * nu_c.covariance(u, v) + middle
    err = lhs_err + abs(rhs - rhs_coarse) + abs(e1) + abs(e2)
    residual = lhs - rhs
    tolerance = max(1e-6, 3.0 * err)

    fd_resid = None
    if variant == 1:
        # determinant form of the same relation:
        #   Z^2 Cov_nu(u, v) = Z Cov(f,g) - Cov(f,A) Cov(g,A)
        fd_resid = float(z * z * induced_cov - (z * lhs - cfa * cga))

    return RelationReport(
        variant=variant, lhs=float(lhs), cov_term=float(cov_term),
        middle=float(middle), rhs=float(rhs), residual=float(residual),
        z_direct=float(z), z_cov=float(z_cov),
        z_residual=float(z - z_cov), induced_cov=float(induced_cov),
        err=float(err), tolerance=float(tolerance),
        passed=bool(abs(residual) <= tolerance),
        formula_det_residual=fd_resid,
    )


@dataclass
class InducedSignReport:
    cov: float
    err: float
    tolerance: float
    passed: bool


def induced_convex_covariance(measure: Measure1D, f: FunctionSpec,
                              g: FunctionSpec,
                              spec: QuadratureSpec = DEFAULT_SPEC,
                              tol: float = 1e-9) -> InducedSignReport:
    """Cov_nu(f', g') under the plain induced measure.

    Nonnegative whenever f and g are both convex: the induced measure has a
    totally positive density, so it carries positive association, and the
    derivatives of convex functions are nondecreasing.
    """
    nu = InducedMeasure2D(measure, spec=spec)

    def u(x):
        return _deriv(f, x)

    def v(y):
        return _deriv(g, y)

    cov = nu.covariance(u, v)
    nu_c = nu.coarse()
    err = abs(cov - nu_c.covariance(u, v))
    tolerance = max(tol, 3.0 * err)
    return InducedSignReport(float(cov), float(err), float(tolerance),
                             bool(cov >= -tolerance))
