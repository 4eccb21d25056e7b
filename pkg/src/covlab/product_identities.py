"""Covariance identities on product measures.

Four decompositions of Cov(f, g) under mu = mu_1 x ... x mu_d:

* tensorization: a telescoping sum of per-coordinate conditional
  covariances of progressively marginalized functions, exact on any
  tensor grid,
* duplication: Cov = (1/2) sum_i E[D_i f * Dt_i g] over an independent
  pair (X, X'), estimated by Monte Carlo,
* the kernel decomposition: one double integral of partial derivatives
  against the coordinate kernel per coordinate (deterministic for d <= 2),
* the relation variants 1-3 of the one-dimensional theory, with the
  coordinate kernels inducing plane measures and every middle term
  computed explicitly.

Plus the supporting operations: marginalization over trailing
coordinates, projection onto the orthogonal complement of the weight
primitives, and the log-density of an induced measure for lattice
condition probes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._gauss import stable_dot, stable_sum
from .functions import FunctionSpec
from .kernels import HoeffdingKernel
from .measures import (Measure1D, ProductMeasure, Weight, as_product,
                       unit_weight)
from .quadrature import (DEFAULT_SPEC, CovarianceEngine, DiagGrid2D,
                         MeasureGrid1D, QuadratureSpec, TensorGrid)
from . import relations1d

_CHUNK = 200_000


def _unit_weights(product: ProductMeasure) -> list[Weight]:
    return [unit_weight(m) for m in product.factors]


def marginalize(product, f: FunctionSpec, keep: int,
                spec: QuadratureSpec = DEFAULT_SPEC) -> FunctionSpec:
    """Integrate out the trailing d - keep coordinates of f.

    The result is the conditional expectation E[f | x_1..x_keep] as a
    function of the leading block, evaluated by quadrature over the
    trailing factors.
    """
    product = as_product(product)
    d = product.dim
    if not 0 < keep < d:
        raise ValueError(f"keep must be in 1..{d - 1}")
    tail = ProductMeasure(product.factors[keep:])
    tg = TensorGrid(tail, spec)
    tp, tw = tg.points, tg.pw
    t = len(tp)

    def fn(pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, keep)
        out = np.empty(len(pts))
        step = max(1, _CHUNK // t)
        for s in range(0, len(pts), step):
            blk = pts[s:s + step]
            full = np.concatenate(
                [np.repeat(blk, t, axis=0), np.tile(tp, (len(blk), 1))],
                axis=1,
            )
            vals = np.asarray(f(full), dtype=float).reshape(len(blk), t)
            out[s:s + len(blk)] = vals @ tw
        return out

    return FunctionSpec(keep, fn, name=f"marg[{keep}]({f.name})")


@dataclass
class TensorizationReport:
    terms: list[float]
    total: float
    cov: float
    residual: float
    err: float
    tolerance: float
    passed: bool


def tensorization_terms(product, f: FunctionSpec, g: FunctionSpec,
                        spec: QuadratureSpec = DEFAULT_SPEC,
                        tol: float = 1e-6) -> TensorizationReport:
    """Per-coordinate conditional covariance terms summing to Cov(f, g).

    Terms and the covariance come from the same tensor grid, on which the
    telescoping identity is exact; the reported error compares against a
    coarser grid.
    """
    product = as_product(product)

    def run(grid: TensorGrid):
        shape = grid.shape
        pws = [ax.pweights for ax in grid.axes]
        vf = grid.values(f).reshape(shape)
        vg = grid.values(g).reshape(shape)
        d = len(shape)
        terms = []
        # marginalize trailing axes one at a time; at step k the arrays
        # depend on x_1..x_k and the conditional covariance is over x_k
        fk, gk = vf, vg
        for k in range(d - 1, -1, -1):
            w = pws[k]
            ef = np.tensordot(fk, w, axes=([k], [0]))
            eg = np.tensordot(gk, w, axes=([k], [0]))
            efg = np.tensordot(fk * gk, w, axes=([k], [0]))
            cond_cov = efg - ef * eg
            lead = cond_cov
            for j in range(k - 1, -1, -1):
                lead = np.tensordot(lead, pws[j], axes=([j], [0]))
            terms.append(float(lead))
            fk, gk = ef, eg
        terms.reverse()
        cov = grid.covariance(f, g)
        return terms, float(stable_sum(terms)), float(cov)

    fine = TensorGrid(product, spec)
    terms, total, cov = run(fine)
    _, total_c, cov_c = run(TensorGrid(product, spec.halved()))
    err = abs(total - total_c) + abs(cov - cov_c)
    residual = total - cov
    tolerance = max(tol, 3.0 * err)
    return TensorizationReport(terms, total, cov, float(residual), float(err),
                               float(tolerance), bool(abs(residual) <= tolerance))


@dataclass
class DuplicationReport:
    terms: list[float]
    term_ses: list[float]
    total: float
    se: float
    cov: float
    cov_se: float
    n_samples: int
    seed: int
    tolerance: float
    passed: bool


def duplication_covariance(product, f: FunctionSpec, g: FunctionSpec,
                           n_samples: int = 200_000, seed: int = 42,
                           n_sigma: float = 4.0) -> DuplicationReport:
    """Monte Carlo check of the duplication formula.

    D_i f compares X against X with coordinate i replaced from an
    independent copy X'; Dt_i g compares the hybrid (x_1..x_i,
    x'_{i+1}..x'_d) against the same with x'_i in slot i. The estimator
    averages (1/2) sum_i D_i f Dt_i g per sample and is compared with the
    plain covariance estimator on the same X sample.
    """
    product = as_product(product)
    d = product.dim
    rng = np.random.default_rng(seed)
    x = product.sample(n_samples, rng)
    xp = product.sample(n_samples, rng)

    fx = np.asarray(f(x), dtype=float)
    per_sample = np.zeros(n_samples)
    terms, term_ses = [], []
    for i in range(d):
        swap = x.copy()
        swap[:, i] = xp[:, i]
        delta_f = fx - np.asarray(f(swap), dtype=float)
        lead = xp.copy()
        lead[:, :i + 1] = x[:, :i + 1]
        lead_swap = lead.copy()
        lead_swap[:, i] = xp[:, i]
        delta_g = (np.asarray(g(lead), dtype=float)
                   - np.asarray(g(lead_swap), dtype=float))
        s = 0.5 * delta_f * delta_g
        per_sample += s
        terms.append(float(s.mean()))
        term_ses.append(float(s.std(ddof=1) / np.sqrt(n_samples)))
    total = float(per_sample.mean())
    se = float(per_sample.std(ddof=1) / np.sqrt(n_samples))

    gx = np.asarray(g(x), dtype=float)
    h = (fx - fx.mean()) * (gx - gx.mean())
    cov = float(h.sum() / (n_samples - 1))
    cov_se = float(h.std(ddof=1) / np.sqrt(n_samples))

    tolerance = n_sigma * float(np.hypot(se, cov_se))
    residual = total - cov
    return DuplicationReport(terms, term_ses, total, se, cov, cov_se,
                             n_samples, seed, tolerance,
                             bool(abs(residual) <= tolerance))


class _AxisKernelGrid:
    """Kernel pair nodes for one coordinate of a product, fine and coarse."""

    def __init__(self, measure: Measure1D, spec: QuadratureSpec):
        self.kern = HoeffdingKernel(measure, trunc_eps=spec.trunc_eps)
        order, panels = spec.axis_rule(2)
        self.grid = DiagGrid2D(self.kern.lo, self.kern.hi, order=order,
                               panels=panels)

    def nodes(self, coarse: bool):
        g = self.grid.coarse() if coarse else self.grid
        x, y, w = g.pair_nodes()
        return x, y, w * self.kern.base_eval(x, y)


@dataclass
class ProductHoeffdingReport:
    terms: list[float]
    rhs: float
    lhs: float
    residual: float
    err: float
    tolerance: float
    passed: bool


def product_hoeffding(product, f: FunctionSpec, g: FunctionSpec,
                      spec: QuadratureSpec = DEFAULT_SPEC,
                      tol: float = 1e-6) -> ProductHoeffdingReport:
    """Cov(f,g) against the per-coordinate kernel decomposition

        sum_i int d_i f(x) k_i(x_i, x_i') d_i g(x_..i-1, x'_i..) dmu dmu'

    evaluated deterministically. d = 1 reuses the one-dimensional kernel
    path; d = 2 adds the term that shares the leading unprimed coordinate
    between both difference profiles. Higher d goes through the Monte
    Carlo duplication route instead.
    """
    product = as_product(product)
    d = product.dim
    engine = CovarianceEngine(product, spec)
    lhs, lhs_err = engine.covariance(f, g)

    if d == 1:
        rhs, rhs_err = relations1d.hoeffding_rhs(product.factors[0], f, g, spec)
        terms = [rhs]
    elif d == 2:
        def run(sp: QuadratureSpec, coarse: bool):
            ax1 = _AxisKernelGrid(product.factors[0], sp)
            ax2 = _AxisKernelGrid(product.factors[1], sp)
            tail_sp = sp.halved() if coarse else sp
            g1 = MeasureGrid1D(product.factors[0], tail_sp, 2)
            g2 = MeasureGrid1D(product.factors[1], tail_sp, 2)

            # i = 1: both profiles marginalize their own trailing copy
            x, y, wk = ax1.nodes(coarse)
            mf = _tail_profile(f, 0, x, g2.nodes, g2.pweights)
            mg = _tail_profile(g, 0, y, g2.nodes, g2.pweights)
            t1 = float(stable_dot(wk, mf * mg))

            # i = 2: the unprimed x_1 is shared between both profiles
            x2, y2, wk2 = ax2.nodes(coarse)
            t2 = _shared_lead_integral(f, g, g1.nodes, g1.pweights, x2, y2, wk2)
            return t1, t2

        t1, t2 = run(spec, False)
        t1c, t2c = run(spec, True)
        terms = [t1, t2]
        rhs = t1 + t2
        rhs_err = abs(t1 - t1c) + abs(t2 - t2c)
    else:
        raise ValueError("deterministic kernel decomposition capped at d=2; "
                         "use duplication_covariance for higher dimension")

    rhs = float(stable_sum(terms))
    residual = lhs - rhs
    err = lhs_err + rhs_err
    tolerance = max(tol, 3.0 * err)
    return ProductHoeffdingReport([float(t) for t in terms], rhs, float(lhs),
                                  float(residual), float(err),
                                  float(tolerance),
                                  bool(abs(residual) <= tolerance))


def _tail_profile(fn: FunctionSpec, i: int, xs: np.ndarray,
                  tail_nodes: np.ndarray, tail_w: np.ndarray) -> np.ndarray:
    """int d_i fn(x_i, t) dmu_tail(t) evaluated at each x in xs (d = 2)."""
    t = len(tail_nodes)
    out = np.empty(len(xs))
    step = max(1, _CHUNK // t)
    for s in range(0, len(xs), step):
        blk = xs[s:s + step]
        cols = [np.repeat(blk, t), np.tile(tail_nodes, len(blk))]
        pts = np.column_stack(cols if i == 0 else cols[::-1])
        dvals = fn.gradient(pts)[:, i].reshape(len(blk), t)
        out[s:s + len(blk)] = dvals @ tail_w
    return out


def _shared_lead_integral(f: FunctionSpec, g: FunctionSpec,
                          lead_nodes: np.ndarray, lead_w: np.ndarray,
                          x2: np.ndarray, y2: np.ndarray,
                          wk: np.ndarray) -> float:
    """sum_m p_m sum_p wk_p d2f(x1_m, x2_p) d2g(x1_m, y2_p) (d = 2)."""
    p = len(x2)
    total = 0.0
    step = max(1, _CHUNK // p)
    for s in range(0, len(lead_nodes), step):
        blk = lead_nodes[s:s + step]
        b = len(blk)
        rep = np.repeat(blk, p)
        pts_f = np.column_stack([rep, np.tile(x2, b)])
        pts_g = np.column_stack([rep, np.tile(y2, b)])
        df = f.gradient(pts_f)[:, 1].reshape(b, p)
        dg = g.gradient(pts_g)[:, 1].reshape(b, p)
        total += float(lead_w[s:s + b] @ ((df * dg) @ wk))
    return total


@dataclass
class ProductRelationTerm:
    coord: int
    z: float
    cov_term: float
    middle: float
    eu: float
    ev: float
    ei_residual: float | None


@dataclass
class ProductRelationReport:
    variant: int
    lhs: float
    rhs: float
    residual: float
    terms: list[ProductRelationTerm]
    err: float
    tolerance: float
    passed: bool


def product_relation(product, f: FunctionSpec, g: FunctionSpec, variant: int,
                     weights: Sequence[Weight] | None = None,
                     spec: QuadratureSpec = DEFAULT_SPEC) -> ProductRelationReport:
    """The product-measure form of the relation variants.

    Per coordinate i the identity contributes

        Z_i Cov_{nu_i}(u_i, v_i) + Eu_i Ev_i / Z_i

    where nu_i is the measure induced by the coordinate kernel (weighted by
    a_i a_i and, for variants 2 and 3, by f and g as density factors), u_i
    and v_i are the variant's quotient profiles, and Eu, Ev are the
    unnormalized marginal integrals. For variant 1, Eu_i equals Cov(f, A_i)
    exactly; that agreement is reported per term so the vanishing of middle
    terms under orthogonality is visible rather than assumed.
    """
    if variant not in (1, 2, 3):
        raise ValueError("variant must be 1, 2, or 3")
    product = as_product(product)
    d = product.dim
    if weights is None:
        weights = _unit_weights(product)
    if len(weights) != d:
        raise ValueError("need one weight per coordinate")

    if d == 1:
        r = relations1d.relation_residual(product.factors[0], f, g, variant,
                                          weights[0], spec)
        term = ProductRelationTerm(0, r.z_direct, r.cov_term, r.middle,
                                   float("nan"), float("nan"), None)
        return ProductRelationReport(variant, r.lhs, r.rhs, r.residual,
                                     [term], r.err, r.tolerance, r.passed)
    if d != 2:
        raise ValueError("deterministic product relations capped at d=2")

    engine = CovarianceEngine(product, spec)
    lhs, lhs_err = engine.covariance(f, g)
    if variant >= 2:
        _require_positive(engine.fine, f, "f")
    if variant == 3:
        _require_positive(engine.fine, g, "g")

    def assemble(coarse: bool):
        out = []
        for i in (0, 1):
            out.append(_relation_term(product, f, g, variant, weights, i,
                                      spec, coarse))
        return out

    fine_terms = assemble(False)
    coarse_terms = assemble(True)

    terms = []
    rhs_parts = []
    for i, (ft, _) in enumerate(zip(fine_terms, coarse_terms)):
        z, euv, eu, ev = ft
        cov_term = euv - eu * ev / z
        middle = eu * ev / z
        ei = None
        if variant in (1, 2):
            cfa, _ = engine.covariance(f, _CoordWeightFn(weights[i], i))
            ei = eu - cfa
        terms.append(ProductRelationTerm(i, float(z), float(cov_term),
                                         float(middle), float(eu), float(ev),
                                         None if ei is None else float(ei)))
        rhs_parts.append(euv)
    rhs = float(stable_sum(rhs_parts))
    rhs_coarse = float(stable_sum([t[1] for t in coarse_terms]))
    err = lhs_err + abs(rhs - rhs_coarse)
    residual = lhs - rhs
    tolerance = max(1e-6, 3.0 * err)
    return ProductRelationReport(variant, float(lhs), rhs, float(residual),
                                 terms, float(err), float(tolerance),
                                 bool(abs(residual) <= tolerance))


class _CoordWeightFn:
    """A_i(x_i) lifted to the product space, cache-stable."""

    def __init__(self, weight: Weight, i: int):
        self.weight = weight
        self.i = i

    def __call__(self, points):
        return self.weight.A(np.asarray(points, dtype=float)[:, self.i])


def _require_positive(grid: TensorGrid, fn: FunctionSpec, label: str):
    if float(np.min(grid.values(fn))) <= 0.0:
        raise ValueError(f"{label} must be positive for this variant")


def _relation_term(product: ProductMeasure, f: FunctionSpec, g: FunctionSpec,
                   variant: int, weights: Sequence[Weight], i: int,
                   spec: QuadratureSpec, coarse: bool):
    """(Z, Euv, Eu, Ev) for coordinate i of a 2-D product, unnormalized.

    Every integral is a pair integral against the coordinate kernel. For
    i = 0 both sides marginalize their own trailing copy and the x/y
    profiles are independent; for i = 1 the unprimed leading coordinate is
    shared and the integrals are batched over its grid.
    """
    j = 1 - i
    sp = spec
    ax = _AxisKernelGrid(product.factors[i], sp)
    x, y, wk = ax.nodes(coarse)
    other = MeasureGrid1D(product.factors[j], sp.halved() if coarse else sp, 2)
    tn, tw = other.nodes, other.pweights
    a = weights[i].a

    if i == 0:
        # profiles on the kernel nodes; each marginalizes its own tail copy
        def prof(fn: FunctionSpec, xs: np.ndarray, kind: str) -> np.ndarray:
            t = len(tn)
            out = np.empty(len(xs))
            step = max(1, _CHUNK // t)
            for s in range(0, len(xs), step):
                blk = xs[s:s + step]
                pts = np.column_stack(
                    [np.repeat(blk, t), np.tile(tn, len(blk))])
                if kind == "value":
                    vals = np.asarray(fn(pts), dtype=float)
                elif kind == "deriv":
                    vals = fn.gradient(pts)[:, 0]
                else:  # value_deriv: -d_i fn, for the log-side integrals
                    vals = -fn.gradient(pts)[:, 0]
                out[s:s + len(blk)] = vals.reshape(len(blk), t) @ tw
            return out

        ax_ = a(x)
        ay_ = a(y)
        if variant == 1:
            zl, zr = ax_, ay_
            # the 1/a in u cancels against the a in the density
            ul = prof(f, x, "deriv")
            vr = prof(g, y, "deriv")
            z = float(stable_dot(wk, zl * zr))
            euv = float(stable_dot(wk, ul * vr))
            eu = float(stable_dot(wk, ul * zr))
            ev = float(stable_dot(wk, zl * vr))
        elif variant == 2:
            fbar_x = prof(f, x, "value")
            zl = ax_ * fbar_x
            zr = ay_
            ul = prof(f, x, "deriv")                    # f * u * a = d_i f
            vr = prof(g, y, "deriv")
            z = float(stable_dot(wk, zl * zr))
            euv = float(stable_dot(wk, ul * vr))
            eu = float(stable_dot(wk, ul * zr))
            ev = float(stable_dot(wk, zl * vr))
        else:
            fbar_x = prof(f, x, "value")
            gbar_y = prof(g, y, "value")
            zl = ax_ * fbar_x
            zr = ay_ * gbar_y
            ul = prof(f, x, "value_deriv")              # f * u * a = -d_i f
            vr = prof(g, y, "value_deriv")
            z = float(stable_dot(wk, zl * zr))
            euv = float(stable_dot(wk, ul * vr))
            eu = float(stable_dot(wk, ul * zr))
            ev = float(stable_dot(wk, zl * vr))
        return z, euv, eu, ev

    # i == 1: batch over the shared leading grid
    p = len(x)
    z = euv = eu = ev = 0.0
    step = max(1, _CHUNK // p)
    for s in range(0, len(tn), step):
        blk = tn[s:s + step]
        bw = tw[s:s + step]
        b = len(blk)
        rep = np.repeat(blk, p)
        pts_x = np.column_stack([rep, np.tile(x, b)])
        pts_y = np.column_stack([rep, np.tile(y, b)])
        ak_x = a(x)[None, :]
        ak_y = a(y)[None, :]
        if variant == 1:
            zl = np.broadcast_to(ak_x, (b, p))
            zr = np.broadcast_to(ak_y, (b, p))
            ul = f.gradient(pts_x)[:, 1].reshape(b, p)
            vr = g.gradient(pts_y)[:, 1].reshape(b, p)
        elif variant == 2:
            zl = np.asarray(f(pts_x), dtype=float).reshape(b, p) * ak_x
            zr = np.broadcast_to(ak_y, (b, p))
            ul = f.gradient(pts_x)[:, 1].reshape(b, p)
            vr = g.gradient(pts_y)[:, 1].reshape(b, p)
        else:
            zl = np.asarray(f(pts_x), dtype=float).reshape(b, p) * ak_x
            zr = np.asarray(g(pts_y), dtype=float).reshape(b, p) * ak_y
            ul = -f.gradient(pts_x)[:, 1].reshape(b, p)
            vr = -g.gradient(pts_y)[:, 1].reshape(b, p)
        z += float(bw @ ((zl * zr) @ wk))
        euv += float(bw @ ((ul * vr) @ wk))
        eu += float(bw @ ((ul * zr) @ wk))
        ev += float(bw @ ((zl * vr) @ wk))
    return z, euv, eu, ev


@dataclass
class OrthogonalizeResult:
    fn: FunctionSpec
    betas: list[float]
    max_residual: float


def orthogonalize(product, f: FunctionSpec,
                  weights: Sequence[Weight] | None = None,
                  spec: QuadratureSpec = DEFAULT_SPEC) -> OrthogonalizeResult:
    """Project f onto the complement of the weight primitives A_i(x_i).

    Under a product measure the A_i live on distinct coordinates and are
    uncorrelated, so the projection is one beta per coordinate. The
    returned function carries adjusted derivatives and a recheck of the
    residual covariances.
    """
    product = as_product(product)
    d = product.dim
    if weights is None:
        weights = _unit_weights(product)
    engine = CovarianceEngine(product, spec)
    coord_fns = [_CoordWeightFn(weights[i], i) for i in range(d)]
    betas = []
    for i in range(d):
        c, _ = engine.covariance(f, coord_fns[i])
        v, _ = engine.covariance(coord_fns[i], coord_fns[i])
        betas.append(c / v)
    betas_arr = np.asarray(betas)

    def fn(pts):
        pts = np.asarray(pts, dtype=float)
        out = np.asarray(f(pts), dtype=float).reshape(len(pts))
        for i in range(d):
            out = out - betas_arr[i] * weights[i].A(pts[:, i])
        return out

    def grad(pts):
        pts = np.asarray(pts, dtype=float)
        gvals = f.gradient(pts).copy()
        for i in range(d):
            gvals[:, i] -= betas_arr[i] * weights[i].a(pts[:, i])
        return gvals

    hess = None
    if all(w.a_d1 is not None for w in weights):
        def hess(pts):
            pts = np.asarray(pts, dtype=float)
            hvals = f.hessian(pts).copy()
            for i in range(d):
                hvals[:, i, i] -= betas_arr[i] * weights[i].a_d1(pts[:, i])
            return hvals

    proj = FunctionSpec(d, fn, grad, hess, name=f"perp({f.name})")
    worst = 0.0
    for i in range(d):
        c, _ = engine.covariance(proj, coord_fns[i])
        worst = max(worst, abs(c))
    return OrthogonalizeResult(proj, [float(b) for b in betas], float(worst))


def induced_log_density(product, i: int, f: FunctionSpec | None = None,
                        weight: Weight | None = None,
                        spec: QuadratureSpec = DEFAULT_SPEC,
                        delta: float = 1e-3):
    """Log-density of the kernel-induced measure for lattice probes.

    The measure lives on (x_1..x_d, x_i'): the x side carries the optional
    positive factor f and the weight a_i(x_i), the extra coordinate couples
    to x_i through the kernel. Coordinates of other indices only add
    separable terms, which cancel in the lattice inequality but are kept so
    the result is a genuine log-density. Returns (H, box) with H acting on
    (N, d+1) arrays.
    """
    product = as_product(product)
    d = product.dim
    mi = product.factors[i]
    weight = weight if weight is not None else unit_weight(mi)
    kern = HoeffdingKernel(mi, trunc_eps=spec.trunc_eps)

    def H(points):
        pts = np.asarray(points, dtype=float)
        x = pts[:, :d]
        xip = pts[:, d]
        with np.errstate(divide="ignore"):
            out = np.log(kern.base_eval(x[:, i], xip))
            out += np.log(weight.a(x[:, i])) + np.log(weight.a(xip))
            if f is not None:
                out += np.log(np.asarray(f(x), dtype=float).reshape(len(pts)))
            for j in range(d):
                out += np.log(product.factors[j].pdf(x[:, j]))
            out += np.log(mi.pdf(xip))
        return out

    box = []
    for j in range(d):
        if j == i:
            box.append((float(mi.quantile(delta)), float(mi.quantile(1 - delta))))
        else:
            box.append(product.factors[j].truncated_support(spec.trunc_eps))
    box.append((float(mi.quantile(delta)), float(mi.quantile(1 - delta))))
    return H, box
