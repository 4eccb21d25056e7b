"""Inequality checkers: certify hypotheses, evaluate margins, emit verdicts.

Every checker follows the same discipline. Hypotheses are re-verified
numerically even for corpus instances that satisfy them by construction, so
a failed certification is always reported with a witness instead of being
assumed away. The decision quantity (the margin, oriented so that >= 0 means
the inequality holds) is evaluated on the fine quadrature grid, and the same
expression on the order-halved grid supplies the error estimate.

Verdicts:

* HYPOTHESIS_FAILED: some hypothesis did not certify; no claim about the
  inequality is made (and none is implied, so this is not a failure of the
  statement).
* FAIL: hypotheses hold and margin < -tolerance.
* NUMERICALLY_INCONCLUSIVE: |margin| <= tolerance and the error estimate
  exceeds |margin|; equality cases land here.
* PASS: everything else.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import functions as fn
from .determinantal import chebyshev_certify, det_cov_matrix
from .ioutil import ConfigError
from .measures import (Gaussian, ProductMeasure, Weight, as_product,
                       unit_weight)
from .product_identities import _CoordWeightFn, marginalize
from .quadrature import (DEFAULT_SPEC, CovarianceEngine, QuadratureSpec,
                         TensorGrid)

VERDICT_PASS = "PASS"
VERDICT_FAIL = "FAIL"
VERDICT_HYP = "HYPOTHESIS_FAILED"
VERDICT_INCONCLUSIVE = "NUMERICALLY_INCONCLUSIVE"

TOL_FLOOR = 1e-6
# boundary products must sit this far under the interior sup at the
# truncation edge; genuinely divergent integrands overshoot by many orders
BOUNDARY_REL = 1e-3


@dataclass
class HypothesisResult:
    name: str
    passed: bool
    witness: str | None = None

    def to_json(self) -> dict:
        out = {"name": self.name, "verdict": "pass" if self.passed else "fail"}
        if self.witness:
            out["witness"] = self.witness
        return out


@dataclass
class CheckReport:
    theorem_id: str
    hypotheses: list
    lhs: float | None
    rhs: float | None
    margin: float | None
    tolerance: float
    verdict: str
    seed: int
    error_estimate: float
    quadrature: QuadratureSpec
    label: str = ""

    @property
    def failed(self) -> bool:
        return self.verdict == VERDICT_FAIL

    def to_json(self) -> dict:
        out = {
            "theorem_id": self.theorem_id,
            "hypotheses": [h.to_json() for h in self.hypotheses],
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "seed": self.seed,
            "error_estimate": self.error_estimate,
            "quadrature": self.quadrature.to_json(),
        }
        if self.label:
            out["label"] = self.label
        return out


def resolve_verdict(hypotheses: Sequence[HypothesisResult],
                    margin: float | None, tolerance: float,
                    err: float) -> str:
    if any(not h.passed for h in hypotheses):
        return VERDICT_HYP
    if margin is None:
        raise ValueError("margin missing although hypotheses certified")
    if margin < -tolerance:
        return VERDICT_FAIL
    if abs(margin) <= tolerance and err > abs(margin):
        return VERDICT_INCONCLUSIVE
    return VERDICT_PASS


# --- shared hypothesis machinery ---------------------------------------------


class _Ctx:
    """Mutable state threaded through one check."""

    def __init__(self, mu, f, g, weights, options, spec, seed):
        self.mu = mu
        self.f = f
        self.g = g
        self.weights = weights
        self.options = options or {}
        self.spec = spec
        self.seed = seed
        self.box = mu.truncated_box(spec.trunc_eps)
        self.hyps: list[HypothesisResult] = []
        self._engine: CovarianceEngine | None = None

    @property
    def engine(self) -> CovarianceEngine:
        if self._engine is None:
            self._engine = CovarianceEngine(self.mu, self.spec)
        return self._engine

    def unit_weights(self) -> list[Weight]:
        return [unit_weight(m) for m in self.mu.factors]

    def add(self, name: str, passed: bool, witness: str | None = None) -> bool:
        self.hyps.append(HypothesisResult(name, passed, witness if not passed
                                          else None))
        return passed

    def cert(self, spec_fn: fn.FunctionSpec, prop: str, label: str) -> bool:
        res = fn.certify(spec_fn, prop, self.box, seed=self.seed)
        wit = None
        if not res.passed:
            parts = [res.detail] if res.detail else []
            if res.witness is not None:
                pt = ", ".join(f"{v:.6g}" for v in res.witness)
                parts.append(f"near ({pt})")
            wit = "; ".join(parts) or "certification failed"
        return self.add(label, bool(res.passed), wit)

    def sign(self, left, right, weights, condition: str,
             label: str | None = None) -> bool:
        rep = fn.check_sign_condition(left, right, weights, condition, self.box)
        wit = "; ".join(rep.failures) if rep.failures else None
        return self.add(label or f"sign condition {condition}", rep.passed, wit)

    def orthogonal(self, spec_fn, coords, label: str) -> bool:
        """|Cov(f, A_i)| below a scale-aware tolerance for every i."""
        eng = self.engine
        var_f, _ = eng.covariance(spec_fn, spec_fn)
        fails = []
        for i, c in enumerate(coords):
            cov, err = eng.covariance(spec_fn, c)
            var_c, _ = eng.covariance(c, c)
            scale = math.sqrt(max(var_f, 0.0) * max(var_c, 0.0))
            tau = max(1e-8 * (1.0 + scale), 5.0 * err)
            if abs(cov) > tau:
                fails.append(f"Cov(f, A_{i + 1}) = {cov:.3e} exceeds {tau:.1e}")
        return self.add(label, not fails, "; ".join(fails) or None)

    def even_marginals(self) -> bool:
        bad = [f"factor {k + 1} ({m!r})" for k, m in
               enumerate(self.mu.factors) if not m.is_even()]
        return self.add("marginals even", not bad,
                        "not even: " + "; ".join(bad) if bad else None)

    def standard_gaussian(self) -> bool:
        bad = []
        for k, m in enumerate(self.mu.factors):
            ok = (m.family == "gaussian" and abs(m.mu) <= 1e-12
                  and abs(m.sigma - 1.0) <= 1e-12)
            if not ok:
                bad.append(f"factor {k + 1} is {m!r}")
        return self.add("marginals standard gaussian", not bad,
                        "; ".join(bad) or None)

    def logconcave_densities(self) -> bool:
        fails = []
        for k, m in enumerate(self.mu.factors):
            if m.is_discrete:
                fails.append(f"factor {k + 1} is discrete")
                continue
            lo, hi = m.truncated_support(self.spec.trunc_eps)
            xs = np.linspace(lo, hi, 513)
            dens = np.asarray(m.pdf(xs), dtype=float)
            if np.any(dens <= 0.0):
                fails.append(f"factor {k + 1} density vanishes on its support")
                continue
            lp = np.log(dens)
            d2 = lp[:-2] - 2.0 * lp[1:-1] + lp[2:]
            tau = 1e-7 * (1.0 + float(np.max(np.abs(lp))))
            if np.any(d2 > tau):
                x_bad = float(xs[1:-1][int(np.argmax(d2))])
                fails.append(
                    f"factor {k + 1}: ln-density convex near x = {x_bad:.4g}")
        return self.add("marginal densities log-concave", not fails,
                        "; ".join(fails) or None)

    def even_weights(self, weights) -> bool:
        bad = [f"weight {k + 1}" for k, w in enumerate(weights) if not w.even]
        return self.add("weights even", not bad,
                        "not even: " + "; ".join(bad) if bad else None)


def _require_dim(mu, theorem_id: str, want: int) -> None:
    if mu.dim != want:
        raise ConfigError(
            "measure",
            f"{theorem_id} is stated for d = {want}; got d = {mu.dim}")


def _require_fn(ctx, which: str):
    spec_fn = getattr(ctx, which)
    if spec_fn is None:
        raise ConfigError(which, "a function is required for this theorem")
    if spec_fn.dim != ctx.mu.dim:
        raise ConfigError(
            which, f"dimension {spec_fn.dim} does not match measure "
                   f"dimension {ctx.mu.dim}")
    return spec_fn


def _no_functions(ctx, theorem_id: str) -> None:
    if ctx.f is not None or ctx.g is not None:
        raise ConfigError(
            "f", f"{theorem_id} builds its own functions from options")


def _resolve_weights(ctx) -> list[Weight]:
    if ctx.weights is None:
        return ctx.unit_weights()
    if len(ctx.weights) != ctx.mu.dim:
        raise ConfigError("weights", "need one weight per coordinate")
    return list(ctx.weights)


def _coord_objs(weights) -> list[_CoordWeightFn]:
    return [_CoordWeightFn(w, i) for i, w in enumerate(weights)]


def _tensorized_display(f, g, coords) -> Callable:
    """lhs = Cov(f,g), rhs = sum_i Cov(f,A_i) Cov(g,A_i) / Var(A_i)."""

    def compute(grid: TensorGrid):
        lhs = grid.covariance(f, g)
        rhs = 0.0
        for c in coords:
            var_c = grid.covariance(c, c)
            rhs += grid.covariance(f, c) * grid.covariance(g, c) / var_c
        return lhs, rhs, lhs - rhs

    return compute


def _cov_sign_display(f, g, sign: float) -> Callable:
    """margin = sign * Cov(f, g) against rhs 0."""

    def compute(grid: TensorGrid):
        lhs = grid.covariance(f, g)
        return lhs, 0.0, sign * lhs

    return compute


# --- the checkers -----------------------------------------------------------


def _chk_t111(ctx):
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    ctx.standard_gaussian()
    ctx.cert(f, "convex", "f convex")
    ctx.cert(g, "convex", "g convex")
    coords = ctx.engine.coord_fns

    def compute(grid):
        lhs = grid.covariance(f, g)
        rhs = sum(grid.covariance(f, c) * grid.covariance(g, c)
                  for c in coords)
        return lhs, rhs, lhs - rhs

    return compute


def _chk_t112(ctx):
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    ctx.standard_gaussian()
    ctx.cert(f, "log_concave", "f log-concave")
    ctx.orthogonal(f, ctx.engine.coord_fns, "f orthogonal to coordinates")
    ctx.cert(g, "convex", "g convex")
    return _cov_sign_display(f, g, -1.0)


def _chk_t113(ctx):
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    ctx.standard_gaussian()
    ctx.cert(f, "quasi_concave", "f quasi-concave")
    ctx.cert(f, "even", "f even")
    ctx.cert(g, "quasi_concave", "g quasi-concave")
    ctx.cert(g, "even", "g even")
    return _cov_sign_display(f, g, 1.0)


def _chk_t121(ctx):
    _require_dim(ctx.mu, "T1.2.1", 1)
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    ctx.cert(f, "convex", "f convex")
    ctx.cert(g, "convex", "g convex")
    x = ctx.engine.coord_fns[0]

    def compute(grid):
        lhs = grid.covariance(x, x) * grid.covariance(f, g)
        rhs = grid.covariance(f, x) * grid.covariance(g, x)
        return lhs, rhs, lhs - rhs

    return compute


def _chk_t122(ctx):
    _require_dim(ctx.mu, "T1.2.2", 1)
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    ctx.cert(f, "log_concave", "f log-concave")
    ctx.orthogonal(f, ctx.engine.coord_fns, "f orthogonal to the coordinate")
    ctx.cert(g, "convex", "g convex")
    return _cov_sign_display(f, g, -1.0)


def _chk_t123(ctx):
    _require_dim(ctx.mu, "T1.2.3", 1)
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    ctx.cert(f, "quasi_concave", "f quasi-concave")
    ctx.cert(f, "even", "f even")
    ctx.cert(g, "quasi_concave", "g quasi-concave")
    ctx.cert(g, "even", "g even")
    return _cov_sign_display(f, g, 1.0)


def _tensorized_core(ctx):
    """Shared body of the weighted tensorization and its a == 1 corollary."""
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    if ctx.weights is None:
        weights = ctx.unit_weights()
        condition = "cond-l2-fg"
    else:
        weights = _resolve_weights(ctx)
        condition = "cond-l2-fg-mod"
    ctx.sign(f, g, weights, condition)
    return _tensorized_display(f, g, _coord_objs(weights))


def _chk_t13(ctx):
    return _tensorized_core(ctx)


def _chk_c14(ctx):
    if ctx.weights is not None:
        raise ConfigError("weights",
                          "C1.4 is the a == 1 case and takes no weights")
    return _tensorized_core(ctx)


def _chk_t15(ctx):
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    weights = _resolve_weights(ctx)
    ctx.even_marginals()
    ctx.even_weights(weights)
    ctx.sign(f, g, weights, "cond-l2-idem")
    res_f = fn.certify(f, "unconditional", ctx.box, seed=ctx.seed)
    res_g = None if res_f.passed else fn.certify(g, "unconditional", ctx.box,
                                                 seed=ctx.seed)
    either = bool(res_f.passed or (res_g is not None and res_g.passed))
    ctx.add("f or g unconditional", either,
            None if either else "neither f nor g is unconditional")
    return _cov_sign_display(f, g, 1.0)


def _chk_t181(ctx):
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    ctx.even_marginals()
    ctx.logconcave_densities()
    ctx.cert(f, "positive", "f positive")
    ctx.cert(f, "log_concave", "f log-concave")
    ctx.cert(f, "unconditional", "f unconditional")
    ctx.cert(g, "coordinatewise_convex", "g coordinatewise convex")
    return _cov_sign_display(f, g, -1.0)


def _chk_t182(ctx):
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    ctx.cert(f, "unconditional", "f unconditional")
    ctx.cert(f, "coordinatewise_quasi_concave",
             "f coordinatewise quasi-concave")
    ctx.cert(g, "unconditional", "g unconditional")
    ctx.cert(g, "coordinatewise_quasi_concave",
             "g coordinatewise quasi-concave")
    return _cov_sign_display(f, g, 1.0)


def _phi_of(ctx, spec_fn, label: str):
    """-ln of a certified-positive function, or None with a failed entry."""
    if ctx.cert(spec_fn, "positive", f"{label} positive"):
        return fn.neg_log(spec_fn)
    return None


def _skip_sign(ctx, condition: str, reason: str) -> None:
    ctx.add(f"sign condition {condition}", False, f"not evaluated: {reason}")


def _chk_t191(ctx):
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    weights = _resolve_weights(ctx)
    phi = _phi_of(ctx, f, "f")
    if phi is not None:
        ctx.sign(phi, g, weights, "cond-ii-phi-g")
        ctx.sign(phi, g, weights, "cond-ij-phi-g")
    else:
        _skip_sign(ctx, "cond-ii-phi-g", "f is not positive")
        _skip_sign(ctx, "cond-ij-phi-g", "f is not positive")
    ctx.orthogonal(f, _coord_objs(weights), "f orthogonal to the primitives")
    return _cov_sign_display(f, g, 1.0)


def _chk_t192(ctx):
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    weights = _resolve_weights(ctx)
    ctx.even_marginals()
    ctx.even_weights(weights)
    ctx.cert(f, "even", "f even")
    ctx.cert(g, "even", "g even")
    phi = _phi_of(ctx, f, "f")
    psi = _phi_of(ctx, g, "g")
    if phi is not None and psi is not None:
        ctx.sign(phi, psi, weights, "cond-ii-phi-psi")
        ctx.sign(phi, psi, weights, "cond-ij-phi-psi")
    else:
        reason = "f is not positive" if phi is None else "g is not positive"
        _skip_sign(ctx, "cond-ii-phi-psi", reason)
        _skip_sign(ctx, "cond-ij-phi-psi", reason)
    return _cov_sign_display(f, g, 1.0)


def _chk_c110(ctx):
    if ctx.weights is not None:
        raise ConfigError("weights",
                          "C1.10 is the a == 1 case and takes no weights")
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    weights = ctx.unit_weights()
    phi = _phi_of(ctx, f, "f")
    if phi is not None:
        ctx.sign(phi, g, weights, "cond-l2-phi-g")
    else:
        _skip_sign(ctx, "cond-l2-phi-g", "f is not positive")
    ctx.orthogonal(f, ctx.engine.coord_fns, "f orthogonal to coordinates")
    return _cov_sign_display(f, g, 1.0)


def _chk_t43(ctx):
    _require_dim(ctx.mu, "T4.3", 1)
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    phis = ctx.options.get("phis", [])
    if not isinstance(phis, (list, tuple)):
        raise ConfigError("options.phis", "expected a list of functions")
    if len(phis) > 3:
        raise ConfigError("options.phis",
                          "at most 3 shared members are supported")
    for k, p in enumerate(phis):
        if not isinstance(p, fn.FunctionSpec) or p.dim != 1:
            raise ConfigError(f"options.phis[{k}]",
                              "expected a one-dimensional function")
    lo, hi = ctx.box[0]
    one = fn.polynomial1d([1.0])
    for tag, h in (("f", f), ("g", g)):
        cert = chebyshev_certify([one, *phis, h], lo, hi, seed=ctx.seed)
        ok = cert.passed and cert.agree
        wit = None
        if not ok:
            if not cert.agree:
                wit = "minor and derivative routes disagree"
            elif cert.minors.witness is not None:
                pts = ", ".join(f"{v:.4g}" for v in cert.minors.witness)
                wit = f"negative minor at nodes ({pts})"
            else:
                wit = "negative minor"
        ctx.add(f"(1, shared members, {tag}) is a Chebyshev system", ok, wit)

    members_f = [*phis, f]
    members_g = [*phis, g]
    factor = ctx.mu.factors[0]
    res = det_cov_matrix(factor, members_f, members_g, ctx.spec)
    res_c = det_cov_matrix(factor, members_f, members_g, ctx.spec.halved())
    err = abs(res.det - res_c.det) + abs(res.residual)
    return res.det, 0.0, res.det, err


def _third_derivative_nonneg(ctx, h, label: str) -> bool:
    lo, hi = ctx.box[0]
    step = (hi - lo) / 200.0
    xs = np.linspace(lo + 2 * step, hi - 2 * step, 151)

    def v(shift):
        return np.asarray(h((xs + shift * step)[:, None]), dtype=float)

    d3 = (v(2) - 2.0 * v(1) + 2.0 * v(-1) - v(-2)) / (2.0 * step ** 3)
    tau = 1e-6 * (1.0 + float(np.max(np.abs(d3))))
    bad = xs[d3 < -tau]
    wit = None
    if len(bad):
        wit = f"third derivative {float(np.min(d3)):.3e} near x = {bad[0]:.4g}"
    return ctx.add(label, len(bad) == 0, wit)


def _chk_c47(ctx):
    _require_dim(ctx.mu, "C4.7", 1)
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    _third_derivative_nonneg(ctx, f, "f has a non-negative third derivative")
    _third_derivative_nonneg(ctx, g, "g has a non-negative third derivative")
    x = ctx.engine.coord_fns[0]
    x2 = fn.polynomial1d([0.0, 0.0, 1.0])
    x3 = fn.polynomial1d([0.0, 0.0, 0.0, 1.0])

    fine = ctx.engine.fine
    m1 = fine.expectation(x)
    m3 = fine.expectation(x3)
    scale1 = 1.0 + abs(fine.covariance(x, x))
    centered = abs(m1) <= 1e-9 * scale1 and abs(m3) <= 1e-9 * scale1 ** 2

    if centered:
        def compute(grid):
            lhs = grid.covariance(f, g)
            rhs = (grid.covariance(x, f) * grid.covariance(x, g)
                   / grid.covariance(x, x)
                   + grid.covariance(x2, f) * grid.covariance(x2, g)
                   / grid.covariance(x2, x2))
            return lhs, rhs, lhs - rhs
    else:
        def compute(grid):
            v1 = grid.covariance(x, x)
            v2 = grid.covariance(x2, x2)
            c12 = grid.covariance(x, x2)
            c1f, c1g = grid.covariance(x, f), grid.covariance(x, g)
            c2f, c2g = grid.covariance(x2, f), grid.covariance(x2, g)
            lhs = grid.covariance(f, g) * (v2 * v1 - c12 ** 2)
            rhs = (v2 * c1f * c1g - c12 * (c1f * c2g + c2f * c1g)
                   + v1 * c2f * c2g)
            return lhs, rhs, lhs - rhs

    return compute


def _boundary_decay(ctx, h, weights, label: str) -> bool:
    """The marginalized integrand must vanish at unbounded box edges.

    For coordinate k the probed product is h_k(x_1..x_k) (A_k/V_k')(x_k)
    pdf_k(x_k) with h_k the marginalization over trailing coordinates. The
    stated limits are at +-infinity, so nothing is required at a finite
    support endpoint. Decaying products sit orders of magnitude below the
    interior sup at the truncation quantiles; divergent ones tower above it.
    """
    mu, spec = ctx.mu, ctx.spec
    d = mu.dim
    fails = []
    for k in range(d):
        m = mu.factors[k]
        lo_s, hi_s = m.support()
        edges = []
        lo, hi = m.truncated_support(spec.trunc_eps)
        if not math.isfinite(lo_s):
            edges.append(lo)
        if not math.isfinite(hi_s):
            edges.append(hi)
        if not edges:
            continue
        keep = k + 1
        hk = h if keep == d else marginalize(mu, h, keep, spec.halved())
        ratio = fn._ratio_primitive_over_potential(weights[k])

        if k == 0:
            leads = np.zeros((1, 0))
        else:
            axes = [np.linspace(b_lo, b_hi, 5) for b_lo, b_hi in ctx.box[:k]]
            mesh = np.meshgrid(*axes, indexing="ij")
            leads = np.column_stack([mm.ravel() for mm in mesh])

        def products(ts):
            ts = np.asarray(ts, dtype=float)
            t_rep = np.tile(ts, len(leads))
            pts = np.column_stack(
                [np.repeat(leads, len(ts), axis=0), t_rep])
            vals = np.asarray(hk(pts), dtype=float)
            return vals * ratio(t_rep) * np.asarray(m.pdf(t_rep), dtype=float)

        interior_t = np.asarray(
            m.quantile(np.array([0.1, 0.3, 0.5, 0.7, 0.9])), dtype=float)
        interior = float(np.max(np.abs(products(interior_t))))
        edge_val = float(np.max(np.abs(products(np.asarray(edges)))))
        if edge_val > BOUNDARY_REL * (1.0 + interior):
            fails.append(
                f"coordinate {k + 1}: boundary value {edge_val:.3e} vs "
                f"interior scale {interior:.3e}")
    return ctx.add(label, not fails, "; ".join(fails) or None)


def _chk_t53(ctx):
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    for k, m in enumerate(ctx.mu.factors):
        if not m.has_potential:
            raise ConfigError(
                "measure",
                f"factor {k + 1} ({m.family}) has no smooth potential")
    weights = _resolve_weights(ctx)
    ctx.sign(f, g, weights, "cond-V-i")
    ctx.sign(f, g, weights, "cond-V-ij")
    _boundary_decay(ctx, f, weights, "f boundary decay at truncation")
    _boundary_decay(ctx, g, weights, "g boundary decay at truncation")
    return _tensorized_display(f, g, _coord_objs(weights))


def _chk_ex91(ctx):
    _no_functions(ctx, "EX9.1")
    d = ctx.mu.dim
    alpha = ctx.options.get("alpha")
    beta = ctx.options.get("beta")
    for name, val in (("alpha", alpha), ("beta", beta)):
        if val is None:
            raise ConfigError(f"options.{name}", "required for EX9.1")
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"options.{name}",
                              f"expected a number, got {val!r}")
    ctx.add("alpha > 0", alpha > 0, None if alpha > 0 else f"alpha = {alpha}")
    ctx.add("beta > 0", beta > 0, None if beta > 0 else f"beta = {beta}")
    f_a = fn.softmax_free_energy(float(abs(alpha)) or 1.0, d)
    f_b = fn.softmax_free_energy(float(abs(beta)) or 1.0, d)
    coords = ctx.engine.coord_fns

    def compute(grid):
        lhs = grid.covariance(f_a, f_b)
        rhs = sum(grid.covariance(f_a, c) * grid.covariance(f_b, c)
                  / grid.covariance(c, c) for c in coords)
        return lhs, rhs, lhs - rhs

    return compute


class _TiltSum:
    """sum_i x_i x_{i+1}, cache-stable across grids."""

    def __call__(self, points):
        p = np.asarray(points, dtype=float)
        if p.shape[1] < 2:
            return np.zeros(len(p))
        return np.sum(p[:, :-1] * p[:, 1:], axis=1)


def _chk_ex92(ctx):
    _no_functions(ctx, "EX9.2")
    d = ctx.mu.dim
    j_val = ctx.options.get("J")
    theta = ctx.options.get("theta")
    if j_val is None or isinstance(j_val, bool) \
            or not isinstance(j_val, (int, float)):
        raise ConfigError("options.J", "a number is required for EX9.2")
    if theta is None or not isinstance(theta, (list, tuple)):
        raise ConfigError("options.theta", "a list of numbers is required")
    if len(theta) != d:
        raise ConfigError("options.theta",
                          f"length {len(theta)} != dimension {d}")
    theta = np.asarray([float(t) for t in theta], dtype=float)
    ctx.even_marginals()
    ctx.add("J >= 0", j_val >= 0, None if j_val >= 0 else f"J = {j_val}")
    ok_theta = bool(np.all(theta >= 0))
    ctx.add("theta >= 0", ok_theta,
            None if ok_theta else f"theta = {theta.tolist()}")
    tilt = _TiltSum()

    def compute(grid):
        s = grid.values(tilt)
        expo = float(j_val) * s
        expo = expo - expo.max()
        w = np.exp(expo)
        quad = (grid.points @ theta) ** 2
        z = float(grid.pw @ w)
        lhs = float(grid.pw @ (w * quad)) / z
        rhs = float(grid.pw @ quad)
        return lhs, rhs, lhs - rhs

    return compute


_GAUSS_GRIDS: dict = {}


def _gauss_grid(dim: int, spec: QuadratureSpec):
    key = (dim, spec)
    got = _GAUSS_GRIDS.get(key)
    if got is None:
        tg = TensorGrid(ProductMeasure([Gaussian(0.0, 1.0)] * dim), spec)
        got = (tg.points, tg.pw)
        _GAUSS_GRIDS[key] = got
    return got


def coord_increase_probes(spec_fn, dim: int,
                          spec: QuadratureSpec = DEFAULT_SPEC,
                          sigma_lo: float = 0.6, sigma_hi: float = 1.6,
                          n_sigma: int = 5) -> dict:
    """E[f(sigma . x)] under the standard Gaussian on a sigma ladder.

    One coordinate's sigma varies per row while the others stay at 1, the
    discrete probe of coordinatewise monotonicity in the scale parameters.
    Returns the ladder, the expectation rows, and the extreme consecutive
    differences.
    """
    pts, pw = _gauss_grid(dim, spec)
    sigmas = np.linspace(sigma_lo, sigma_hi, n_sigma)
    rows = []
    for i in range(dim):
        row = []
        for s in sigmas:
            scaled = pts.copy()
            scaled[:, i] *= s
            row.append(float(pw @ np.asarray(spec_fn(scaled), dtype=float)))
        rows.append(row)
    diffs = np.diff(np.asarray(rows), axis=1)
    scale = float(np.max(np.abs(rows)))
    return {
        "sigmas": [float(s) for s in sigmas],
        "expectations": [[float(v) for v in row] for row in rows],
        "min_diff": float(diffs.min()),
        "max_diff": float(diffs.max()),
        "scale": scale,
    }


def _chk_ta1(ctx):
    f, g = _require_fn(ctx, "f"), _require_fn(ctx, "g")
    bad = []
    for k, m in enumerate(ctx.mu.factors):
        centered_gauss = m.family == "gaussian" and abs(m.mu) <= 1e-12
        if not (centered_gauss or m.family == "gaussian_scale_mixture"):
            bad.append(f"factor {k + 1} is {m!r}")
    ctx.add("marginals are centered gaussian mixtures", not bad,
            "; ".join(bad) or None)
    ctx.cert(f, "log_concave", "f log-concave")
    ctx.cert(f, "even", "f even")
    ctx.cert(g, "convex", "g convex")

    d = ctx.mu.dim
    probe_g = coord_increase_probes(g, d, ctx.spec)
    tau_g = 1e-6 * (1.0 + probe_g["scale"])
    ctx.add("E[g] coordinatewise increasing in sigma",
            probe_g["min_diff"] >= -tau_g,
            None if probe_g["min_diff"] >= -tau_g
            else f"decrease {probe_g['min_diff']:.3e} on the sigma ladder")
    probe_f = coord_increase_probes(f, d, ctx.spec)
    tau_f = 1e-6 * (1.0 + probe_f["scale"])
    ctx.add("E[f] coordinatewise decreasing in sigma",
            probe_f["max_diff"] <= tau_f,
            None if probe_f["max_diff"] <= tau_f
            else f"increase {probe_f['max_diff']:.3e} on the sigma ladder")
    return _cov_sign_display(f, g, -1.0)


_CHECKERS: dict[str, Callable] = {
    "T1.1.1": _chk_t111,
    "T1.1.2": _chk_t112,
    "T1.1.3": _chk_t113,
    "T1.2.1": _chk_t121,
    "T1.2.2": _chk_t122,
    "T1.2.3": _chk_t123,
    "T1.3": _chk_t13,
    "C1.4": _chk_c14,
    "T1.5": _chk_t15,
    "T1.8.1": _chk_t181,
    "T1.8.2": _chk_t182,
    "T1.9.1": _chk_t191,
    "T1.9.2": _chk_t192,
    "C1.10": _chk_c110,
    "T4.3": _chk_t43,
    "C4.7": _chk_c47,
    "T5.3": _chk_t53,
    "EX9.1": _chk_ex91,
    "EX9.2": _chk_ex92,
    "TA.1": _chk_ta1,
}

# ids exercised by the default randomized suite; the standard-Gaussian
# specializations and C1.10 stay individually checkable
DEFAULT_SUITE_IDS = (
    "T1.2.1", "T1.2.2", "T1.2.3", "T1.3", "C1.4", "T1.5",
    "T1.8.1", "T1.8.2", "T1.9.1", "T1.9.2", "T4.3", "C4.7",
    "T5.3", "EX9.1", "EX9.2", "TA.1",
)


def theorem_ids() -> list[str]:
    return list(_CHECKERS)


def check(theorem_id: str, measure, f=None, g=None, weights=None,
          options: dict | None = None, spec: QuadratureSpec = DEFAULT_SPEC,
          seed: int = 0, tol: float | None = None,
          label: str = "") -> CheckReport:
    """Run one theorem checker and assemble its report."""
    checker = _CHECKERS.get(theorem_id)
    if checker is None:
        raise ConfigError("theorem", f"unknown theorem id {theorem_id!r}")
    mu = as_product(measure)
    ctx = _Ctx(mu, f, g, weights, options, spec, seed)
    outcome = checker(ctx)

    lhs = rhs = margin = None
    err = 0.0
    hyp_ok = all(h.passed for h in ctx.hyps)
    if callable(outcome):
        try:
            lhs, rhs, margin = outcome(ctx.engine.fine)
            _, _, margin_c = outcome(ctx.engine.coarse)
            err = abs(margin - margin_c)
        except (ValueError, FloatingPointError) as exc:
            if hyp_ok:
                raise
            ctx.add("margin evaluation", False, f"not evaluated: {exc}")
    else:
        lhs, rhs, margin, err = outcome

    tolerance = float(tol) if tol is not None else max(TOL_FLOOR, 3.0 * err)
    if margin is None:
        verdict = VERDICT_HYP
    else:
        verdict = resolve_verdict(ctx.hyps, margin, tolerance, err)
    return CheckReport(
        theorem_id=theorem_id,
        hypotheses=ctx.hyps,
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        tolerance=tolerance,
        verdict=verdict,
        seed=seed,
        error_estimate=err,
        quadrature=spec,
        label=label,
    )


def check_instance(inst, spec: QuadratureSpec = DEFAULT_SPEC,
                   tol: float | None = None) -> CheckReport:
    return check(inst.theorem_id, inst.measure, inst.f, inst.g,
                 inst.weights, inst.options, spec=spec, seed=inst.seed,
                 tol=tol, label=inst.label)


# --- suite ------------------------------------------------------------------

_SUITE_KEYS = {"seed", "instances", "theorems", "dims", "families",
               "quadrature", "tolerance", "mutant_sign_flip"}


@dataclass
class SuiteResult:
    reports: list[CheckReport]
    summary: dict

    @property
    def exit_code(self) -> int:
        return 1 if self.summary["fail_count"] else 0

    def to_json(self) -> dict:
        return {
            "summary": self.summary,
            "reports": [r.to_json() for r in self.reports],
        }


def _workers() -> int:
    env = os.environ.get("COVLAB_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError("COVLAB_THREADS", f"not an integer: {env!r}")
        return max(1, cap)
    return min(8, os.cpu_count() or 1)


def _flip(report: CheckReport) -> CheckReport:
    """The sign-flipped mutant used to prove the suite can fail."""
    if report.margin is None:
        return report
    flipped = -report.margin
    verdict = resolve_verdict(report.hypotheses, flipped, report.tolerance,
                              report.error_estimate)
    return CheckReport(
        theorem_id=report.theorem_id,
        hypotheses=report.hypotheses,
        lhs=report.lhs,
        rhs=report.rhs,
        margin=flipped,
        tolerance=report.tolerance,
        verdict=verdict,
        seed=report.seed,
        error_estimate=report.error_estimate,
        quadrature=report.quadrature,
        label=report.label,
    )


def run_suite(config: dict | None = None) -> SuiteResult:
    """Randomized certified instances for every selected theorem.

    Config keys: seed, instances (per theorem), theorems, dims, families,
    quadrature, tolerance, mutant_sign_flip. Reports come back in config
    order regardless of worker scheduling; COVLAB_THREADS caps the pool.
    """
    from . import corpus

    config = dict(config or {})
    for key in config:
        if key not in _SUITE_KEYS:
            raise ConfigError(key, "unexpected field in suite config")
    seed = int(config.get("seed", 42))
    n_inst = int(config.get("instances", 200))
    theorems = list(config.get("theorems", DEFAULT_SUITE_IDS))
    dims = tuple(config.get("dims", (1, 2, 3)))
    families = config.get("families")
    quad = config.get("quadrature", {})
    spec = quad if isinstance(quad, QuadratureSpec) \
        else QuadratureSpec.from_json(quad)
    tol = config.get("tolerance")
    mutant = bool(config.get("mutant_sign_flip", False))

    for tid in theorems:
        if tid not in _CHECKERS:
            raise ConfigError("theorems", f"unknown theorem id {tid!r}")

    jobs = [(tid, k) for tid in theorems for k in range(n_inst)]

    def run_one(job):
        tid, k = job
        inst = corpus.instance(tid, k, seed=seed, dims=dims,
                               families=families)
        report = check_instance(inst, spec=spec, tol=tol)
        return _flip(report) if mutant else report

    if len(jobs) <= 1 or _workers() == 1:
        reports = [run_one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=_workers()) as pool:
            futures = [pool.submit(run_one, j) for j in jobs]
            reports = [f.result() for f in futures]

    counts = {VERDICT_PASS: 0, VERDICT_FAIL: 0, VERDICT_HYP: 0,
              VERDICT_INCONCLUSIVE: 0}
    by_theorem: dict[str, dict] = {}
    for rep in reports:
        counts[rep.verdict] += 1
        slot = by_theorem.setdefault(
            rep.theorem_id,
            {VERDICT_PASS: 0, VERDICT_FAIL: 0, VERDICT_HYP: 0,
             VERDICT_INCONCLUSIVE: 0})
        slot[rep.verdict] += 1
    summary = {
        "total": len(reports),
        "verdicts": counts,
        "fail_count": counts[VERDICT_FAIL],
        "by_theorem": by_theorem,
        "seed": seed,
    }
    return SuiteResult(reports, summary)
