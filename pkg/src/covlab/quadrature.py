"""Deterministic tensor-grid quadrature under measures, diagonal-split 2-D
grids for kernel integrands, and the Monte Carlo fallback.

Grids carry probability weights (Gauss-Legendre weights times the density,
normalized on the truncated support), so every grid is itself an exact
discrete measure. Identities that hold for arbitrary measures then hold on
the grid up to roundoff, and truncation is the only systematic error.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from ._gauss import leggauss, panel_rule, stable_dot, stable_sum
from .ioutil import ConfigError, require_keys
from .measures import Measure1D, ProductMeasure, as_product

DIM_CAP = 4

# Per-axis (order, panels) when the caller keeps the defaults; the full
# default rule (512 nodes/axis) is only affordable in low dimension.
_AXIS_DEFAULTS = {1: (64, 8), 2: (32, 4), 3: (21, 2), 4: (16, 2)}


@dataclass(frozen=True)
class QuadratureSpec:
    order: int = 64
    panels: int = 8
    mc_samples: int = 200000
    seed: int = 42
    trunc_eps: float = 1e-9
    # times the per-axis order has been halved for error estimation; kept
    # out of the JSON round trip on purpose
    half_steps: int = 0

    def __post_init__(self):
        if self.order < 2:
            raise ConfigError("quadrature.order", f"must be >= 2, got {self.order}")
        if self.panels < 1:
            raise ConfigError("quadrature.panels", f"must be >= 1, got {self.panels}")

    @classmethod
    def from_json(cls, obj: dict, context: str = "quadrature") -> "QuadratureSpec":
        if not isinstance(obj, dict):
            raise ConfigError(context, "expected an object")
        require_keys(obj, {"order", "panels", "mc_samples", "seed", "trunc_eps"},
                     context)
        return cls(
            order=int(obj.get("order", 64)),
            panels=int(obj.get("panels", 8)),
            mc_samples=int(obj.get("mc_samples", 200000)),
            seed=int(obj.get("seed", 42)),
            trunc_eps=float(obj.get("trunc_eps", 1e-9)),
        )

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "panels": self.panels,
            "mc_samples": self.mc_samples,
            "seed": self.seed,
            "trunc_eps": self.trunc_eps,
        }

    def axis_rule(self, dim: int) -> tuple[int, int]:
        """Scale the per-axis rule with dimension unless explicitly set."""
        if (self.order, self.panels) == (64, 8):
            order, panels = _AXIS_DEFAULTS[min(max(dim, 1), DIM_CAP)]
        else:
            order, panels = self.order, self.panels
        return max(order >> self.half_steps, 2), panels

    def halved(self) -> "QuadratureSpec":
        return replace(self, half_steps=self.half_steps + 1)


DEFAULT_SPEC = QuadratureSpec()


def _check_finite(vals: np.ndarray, nodes, what: str):
    if not np.all(np.isfinite(vals)):
        bad = int(np.argmax(~np.isfinite(np.ravel(vals))))
        node = np.asarray(nodes).reshape(len(np.ravel(vals)), -1)[bad]
        raise ValueError(f"{what} returned a non-finite value at node {node}")


class MeasureGrid1D:
    """Nodes and probability weights for one factor measure."""

    def __init__(self, measure: Measure1D, spec: QuadratureSpec, dim: int = 1):
        order, panels = spec.axis_rule(dim)
        self.measure = measure
        if measure.is_discrete:
            self.nodes = measure.atoms.copy()
            self.pweights = measure.probs.copy()
            self.raw_mass = 1.0
            self.lo, self.hi = measure.support()
            return
        lo, hi = measure.truncated_support(spec.trunc_eps)
        if measure.family == "grid_density":
            nodes, wts = self._grid_aligned(measure, order * panels)
        else:
            nodes, wts = panel_rule(lo, hi, order, panels)
        dens = np.asarray(measure.pdf(nodes), dtype=float)
        _check_finite(dens, nodes, f"{measure.family} density")
        pw = wts * dens
        self.raw_mass = float(stable_sum(pw))
        self.pweights = pw / self.raw_mass
        self.nodes = nodes
        self.lo, self.hi = lo, hi

    @staticmethod
    def _grid_aligned(measure, budget: int):
        """One Gauss panel per density segment keeps the piecewise-linear
        density (and piecewise-quadratic CDF) smooth inside every panel."""
        edges = measure.grid
        nseg = len(edges) - 1
        per = int(np.clip(round(budget / nseg), 3, 24))
        gx, gw = leggauss(per)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
        wts = (half[:, None] * gw[None, :]).ravel()
        return nodes, wts


class TensorGrid:
    """Product grid over a ProductMeasure with cached function values."""

    def __init__(self, product: ProductMeasure, spec: QuadratureSpec = DEFAULT_SPEC):
        product = as_product(product)
        if product.dim > DIM_CAP:
            raise ValueError(
                f"deterministic quadrature capped at d={DIM_CAP}; "
                f"got d={product.dim} (use the MC path)"
            )
        self.product = product
        self.spec = spec
        self.axes = [MeasureGrid1D(m, spec, product.dim) for m in product.factors]
        self.shape = tuple(len(ax.nodes) for ax in self.axes)
        mesh = np.meshgrid(*[ax.nodes for ax in self.axes], indexing="ij")
        self.points = np.column_stack([m.ravel() for m in mesh])
        w = self.axes[0].pweights
        for ax in self.axes[1:]:
            w = np.multiply.outer(w, ax.pweights)
        self.pw = w.ravel()
        self._cache: dict = {}

    @property
    def dim(self) -> int:
        return len(self.axes)

    def values(self, fn) -> np.ndarray:
        cached = self._cache.get(fn)
        if cached is None:
            cached = np.asarray(fn(self.points), dtype=float)
            cached = cached.reshape(len(self.points))
            _check_finite(cached, self.points, "integrand")
            self._cache[fn] = cached
        return cached

    def expectation(self, fn) -> float:
        return float(stable_dot(self.pw, self.values(fn)))

    def covariance(self, f, g) -> float:
        vf = self.values(f)
        vg = self.values(g)
        mf = stable_dot(self.pw, vf)
        mg = stable_dot(self.pw, vg)
        return float(stable_dot(self.pw, (vf - mf) * (vg - mg)))


class CovarianceEngine:
    """Fine/coarse grid pair giving values plus error estimates.

    Function values are cached per grid, so a suite check that reuses f, g,
    and coordinate projections pays for each evaluation once.
    """

    def __init__(self, product, spec: QuadratureSpec = DEFAULT_SPEC):
        product = as_product(product)
        self.product = product
        self.spec = spec
        self.fine = TensorGrid(product, spec)
        self.coarse = TensorGrid(product, spec.halved())
        self.coord_fns = [_CoordFn(k) for k in range(product.dim)]

    def expectation(self, fn) -> tuple[float, float]:
        val = self.fine.expectation(fn)
        return val, abs(val - self.coarse.expectation(fn))

    def covariance(self, f, g) -> tuple[float, float]:
        val = self.fine.covariance(f, g)
        return val, abs(val - self.coarse.covariance(f, g))

    def cov_with_coord(self, f, i: int) -> tuple[float, float]:
        return self.covariance(f, self.coord_fns[i])

    def var_coord(self, i: int) -> tuple[float, float]:
        return self.covariance(self.coord_fns[i], self.coord_fns[i])


class _CoordFn:
    """Coordinate projection with a stable identity for value caching."""

    def __init__(self, k: int):
        self.k = k

    def __call__(self, points):
        return np.asarray(points, dtype=float)[:, self.k]


def mc_covariance(product: ProductMeasure, f, g, n: int, seed: int):
    """Monte Carlo covariance with a standard error, same sample for all
    three expectations."""
    x = as_product(product).sample(n, seed)
    vf = np.asarray(f(x), dtype=float)
    vg = np.asarray(g(x), dtype=float)
    h = (vf - vf.mean()) * (vg - vg.mean())
    est = float(h.sum() / (n - 1))
    se = float(h.std(ddof=1) / np.sqrt(n))
    return est, se


def integrate_box(fn, box: Sequence[tuple[float, float]],
                  spec: QuadratureSpec = DEFAULT_SPEC):
    """Plain tensor-product integration of fn over a box, with an error
    estimate from an order-halved rule."""
    dim = len(box)
    if dim > DIM_CAP:
        raise ValueError(f"deterministic quadrature capped at d={DIM_CAP}")

    def run(order, panels):
        axes = [panel_rule(lo, hi, order, panels) for lo, hi in box]
        mesh = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        w = axes[0][1]
        for _, wt in axes[1:]:
            w = np.multiply.outer(w, wt)
        vals = np.asarray(fn(pts) if dim > 1 else fn(pts[:, 0]), dtype=float)
        _check_finite(vals, pts, "integrand")
        return float(stable_dot(w.ravel(), vals))

    order, panels = spec.axis_rule(dim)
    val = run(order, panels)
    err = abs(val - run(max(order // 2, 2), panels))
    return val, err


class DiagGrid2D:
    """Quadrature on [lo,hi]^2 split along the diagonal x = y.

    Kernel integrands have a slope break there; integrating the lower
    triangle and its mirror separately restores Gauss-rule convergence.
    ``integrate(h)`` returns the full-square integral of h(x, y).
    """

    def __init__(self, lo: float, hi: float, order: int = 48, panels: int = 6,
                 inner_order: int | None = None, inner_panels: int = 2):
        self.lo, self.hi = float(lo), float(hi)
        self.order, self.panels = order, panels
        self.inner_order = inner_order or max(order // 2, 4)
        self.inner_panels = inner_panels
        xs, ws = panel_rule(self.lo, self.hi, order, panels)
        gx, gw = leggauss(self.inner_order)
        frac = np.linspace(0.0, 1.0, inner_panels + 1)
        edges = self.lo + (xs - self.lo)[:, None] * frac[None, :]
        mid = 0.5 * (edges[:, :-1] + edges[:, 1:])
        half = 0.5 * (edges[:, 1:] - edges[:, :-1])
        y = mid[:, :, None] + half[:, :, None] * gx[None, None, :]
        v = half[:, :, None] * gw[None, None, :]
        m = xs.shape[0]
        self.x = np.repeat(xs, inner_panels * self.inner_order)
        self.y = y.reshape(m, -1).ravel()
        self.w = (ws[:, None] * v.reshape(m, -1)).ravel()

    def pair_nodes(self):
        """Both orientations covering the full square: (X, Y, W) arrays."""
        X = np.concatenate([self.x, self.y])
        Y = np.concatenate([self.y, self.x])
        W = np.concatenate([self.w, self.w])
        return X, Y, W

    def integrate(self, h) -> float:
        vals_low = np.asarray(h(self.x, self.y), dtype=float)
        vals_up = np.asarray(h(self.y, self.x), dtype=float)
        _check_finite(vals_low, self.x, "integrand")
        _check_finite(vals_up, self.y, "integrand")
        return float(stable_dot(self.w, vals_low) + stable_dot(self.w, vals_up))

    def coarse(self) -> "DiagGrid2D":
        return DiagGrid2D(self.lo, self.hi, max(self.order // 2, 2), self.panels,
                          max(self.inner_order // 2, 2), self.inner_panels)
