"""The covariance kernel k(x,y) = F(x^y) - F(x)F(y) of a 1-D measure,
weighted variants a(x) k(x,y) b(y), and the structural checks on them:
mass = variance, total positivity minors, and the Holley condition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._gauss import stable_sum
from .measures import Measure1D
from .quadrature import DEFAULT_SPEC, DiagGrid2D, MeasureGrid1D, QuadratureSpec

TAU_DET = 1e-10
MIN_GAP_FRACTION = 1e-6


class HoeffdingKernel:
    """k(x,y) = F(min) * (1 - F(max)), optionally with one-sided weights.

    The product form is used instead of F(min) - F(x)F(y); the two are
    algebraically equal and the product never goes negative in floating
    point.

    For a continuous measure with unbounded support the CDF is restricted
    to the truncation box and renormalized, so the kernel belongs to the
    same truncated measure that the quadrature grids integrate against.
    Identities checked between the two then hold to quadrature accuracy
    instead of truncation accuracy. Bounded supports are unaffected
    (the restriction is the identity map there).
    """

    def __init__(self, measure: Measure1D, a: Callable | None = None,
                 b: Callable | None = None, trunc_eps: float = 1e-9):
        self.measure = measure
        self.a = a
        self.b = b
        self.lo, self.hi = measure.truncated_support(trunc_eps)
        if measure.is_discrete:
            self._flo, self._fspan = 0.0, 1.0
        else:
            flo = float(measure.cdf(self.lo))
            fhi = float(measure.cdf(self.hi))
            self._flo, self._fspan = flo, fhi - flo

    @property
    def weighted(self) -> bool:
        return self.a is not None or self.b is not None

    def base_eval(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        f_min = (self.measure.cdf(np.minimum(x, y)) - self._flo) / self._fspan
        f_max = (self.measure.cdf(np.maximum(x, y)) - self._flo) / self._fspan
        f_min = np.clip(f_min, 0.0, 1.0)
        f_max = np.clip(f_max, 0.0, 1.0)
        return f_min * (1.0 - f_max)

    def __call__(self, x, y):
        out = self.base_eval(x, y)
        if self.a is not None:
            out = out * np.asarray(self.a(np.asarray(x, dtype=float)), dtype=float)
        if self.b is not None:
            out = out * np.asarray(self.b(np.asarray(y, dtype=float)), dtype=float)
        return out

    def grid(self, n: int):
        """Evaluation grid for dumps: n x n values over the truncated box."""
        xs = np.linspace(self.lo, self.hi, n)
        xx, yy = np.meshgrid(xs, xs, indexing="ij")
        return xs, xs, self(xx.ravel(), yy.ravel()).reshape(n, n)


def kernel_mass(kern: HoeffdingKernel,
                spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float]:
    """Integral of the (unweighted) kernel over the plane, with an error
    estimate. Equals Var(mu); exact cell sums for discrete measures."""
    m = kern.measure
    if m.is_discrete:
        cum = np.cumsum(m.probs)[:-1]
        if len(cum) == 0:
            return 0.0, 0.0
        h = np.diff(m.atoms)
        kmat = np.minimum.outer(cum, cum) - np.outer(cum, cum)
        return float(stable_sum(kmat * np.outer(h, h))), 0.0
    order, panels = spec.axis_rule(2)
    grid = DiagGrid2D(kern.lo, kern.hi, order=order, panels=panels)
    val = grid.integrate(kern.base_eval)
    err = abs(val - grid.coarse().integrate(kern.base_eval))
    return val, err


@dataclass
class MassIdentityResult:
    mass: float
    variance: float
    residual: float
    err: float
    passed: bool


def mass_identity_check(measure: Measure1D,
                        spec: QuadratureSpec = DEFAULT_SPEC,
                        tol: float = 1e-8) -> MassIdentityResult:
    """Check that the kernel mass equals the variance of the measure.

    Both sides refer to the same numerically represented measure: exact
    atom sums for discrete measures, truncated-and-renormalized grids for
    continuous ones, so the comparison is sharp at quadrature accuracy.
    """
    kern = HoeffdingKernel(measure, trunc_eps=spec.trunc_eps)
    mass, err = kernel_mass(kern, spec)
    if measure.is_discrete:
        var = measure.var()
    else:
        g = MeasureGrid1D(measure, spec)
        mean = float(np.dot(g.pweights, g.nodes))
        var = float(np.dot(g.pweights, (g.nodes - mean) ** 2))
    residual = mass - var
    passed = bool(abs(residual) <= max(tol, err))
    return MassIdentityResult(float(mass), float(var), float(residual),
                              float(err), passed)


@dataclass
class MinorCheckResult:
    passed: bool
    worst_minor: float
    worst_scale: float
    witness: tuple | None
    trials: int
    order: int
    seed: int


def sample_ordered_tuple(rng, lo: float, hi: float, n: int,
                         max_tries: int = 200) -> np.ndarray:
    """Strictly increasing nodes with a minimum gap, by sort-and-reject."""
    gap = MIN_GAP_FRACTION * (hi - lo)
    for _ in range(max_tries):
        t = np.sort(rng.uniform(lo, hi, size=n))
        if n == 1 or np.min(np.diff(t)) >= gap:
            return t
    # fall back to an evenly spread jittered tuple
    base = np.linspace(lo + gap, hi - gap, n)
    return base


def tp_minor_check(kern: HoeffdingKernel, n: int, trials: int,
                   seed: int) -> MinorCheckResult:
    """Sample minors det(k(s_i, t_j)) on ordered tuples; total positivity
    means none may fall below -TAU_DET * scale."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    worst_scale = 1.0
    witness = None
    passed = True
    for _ in range(trials):
        s = sample_ordered_tuple(rng, kern.lo, kern.hi, n)
        t = sample_ordered_tuple(rng, kern.lo, kern.hi, n)
        mat = kern(np.repeat(s, n), np.tile(t, n)).reshape(n, n)
        det = float(np.linalg.det(mat))
        scale = float(np.prod(np.abs(mat).max(axis=1)))
        margin = det + TAU_DET * scale
        if det < worst:
            worst, worst_scale, witness = det, scale, (tuple(s), tuple(t))
        if margin < 0:
            passed = False
    return MinorCheckResult(passed, worst, worst_scale, witness, trials, n, seed)


@dataclass
class HolleyResult:
    passed: bool
    worst: float
    witness: tuple | None
    trials: int


def holley_check(H: Callable, box, trials: int = 2000,
                 seed: int = 0, tau: float = 1e-7) -> HolleyResult:
    """Check H(x^y) + H(x v y) >= H(x) + H(y) on random pairs in the box.

    H evaluates log-densities on (N, m) arrays; the coordinatewise min/max
    are the lattice operations.
    """
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    x = lo + rng.random((trials, len(box))) * (hi - lo)
    y = lo + rng.random((trials, len(box))) * (hi - lo)
    vals = (np.asarray(H(np.minimum(x, y)), dtype=float)
            + np.asarray(H(np.maximum(x, y)), dtype=float)
            - np.asarray(H(x), dtype=float)
            - np.asarray(H(y), dtype=float))
    scale = float(np.max(np.abs(vals))) if len(vals) else 0.0
    tol = tau * (1.0 + scale)
    worst_idx = int(np.argmin(vals))
    worst = float(vals[worst_idx])
    passed = bool(worst >= -tol)
    witness = None if passed else (tuple(x[worst_idx]), tuple(y[worst_idx]))
    return HolleyResult(passed, worst, witness, trials)


def log_kernel(kern: HoeffdingKernel) -> Callable:
    """H(x, y) = ln k(x, y) as a 2-D log-density evaluator for Holley
    probes; pairs outside the support of k give -inf and are rejected."""

    def H(points):
        pts = np.asarray(points, dtype=float)
        vals = kern(pts[:, 0], pts[:, 1])
        with np.errstate(divide="ignore"):
            return np.log(vals)

    return H
