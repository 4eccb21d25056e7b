"""Seeded corpora of certified instances for the theorem checkers.

Each generator builds (measure, f, g, weights, options) tuples that satisfy
the target inequality's hypotheses by construction. The checkers re-verify
everything, so a generator bug surfaces as HYPOTHESIS_FAILED instead of a
silently skipped condition.

Hypotheses the statements require exactly (orthogonality, evenness,
unconditionality) are arranged through symmetry: an even function against an
even product measure is orthogonal to every odd centered primitive. The one
exception is the one-dimensional log-concave-orthogonal corpus on non-even
measures, where a Gaussian bump is shifted by bisection until its covariance
with the coordinate vanishes on the quadrature grid.
"""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass, field
from typing import Sequence

from . import functions as fs
from .measures import (
    Discrete,
    Exponential,
    Gaussian,
    GaussianScaleMixture,
    GridDensity,
    Logistic,
    Measure1D,
    ProductMeasure,
    Uniform,
    Weight,
    centered_primitive,
    unit_weight,
)
from .quadrature import DEFAULT_SPEC, MeasureGrid1D, QuadratureSpec

CONTINUOUS_FAMILIES = (
    "gaussian", "uniform", "exponential", "logistic",
    "gaussian_scale_mixture", "grid_density",
)
ALL_FAMILIES = CONTINUOUS_FAMILIES + ("discrete",)
EVEN_FAMILIES = ("gaussian", "uniform", "logistic", "gaussian_scale_mixture")
# families whose density is log-concave and even
EVEN_LOGCONCAVE_FAMILIES = ("gaussian", "uniform", "logistic")
# families with a smooth potential V = -ln density and light enough tails
# for the boundary terms in the weighted tensorization to vanish
POTENTIAL_FAMILIES = ("gaussian", "logistic", "exponential")
# families that keep exp(J x_i x_{i+1}) integrable for small J > 0; the
# logistic tail e^{-|x|/s} loses against the tilt for every positive J
TILT_FAMILIES = ("uniform", "gaussian", "gaussian_scale_mixture")


# --- measures ---------------------------------------------------------------

def random_measure(rng: np.random.Generator, family: str | None = None,
                   even: bool = False) -> Measure1D:
    """One marginal from the builtin pool, optionally centered and even."""
    if family is None:
        pool = EVEN_FAMILIES if even else CONTINUOUS_FAMILIES
        family = pool[int(rng.integers(0, len(pool)))]
    if family == "gaussian":
        mean = 0.0 if even else float(rng.uniform(-0.8, 0.8))
        return Gaussian(mean, float(rng.uniform(0.6, 1.3)))
    if family == "uniform":
        if even:
            half = float(rng.uniform(0.7, 1.8))
            return Uniform(-half, half)
        lo = float(rng.uniform(-1.5, 0.5))
        return Uniform(lo, lo + float(rng.uniform(0.8, 2.5)))
    if family == "exponential":
        if even:
            raise ValueError("the exponential family is not even")
        return Exponential(float(rng.uniform(0.7, 2.0)))
    if family == "logistic":
        loc = 0.0 if even else float(rng.uniform(-0.7, 0.7))
        return Logistic(loc, float(rng.uniform(0.35, 0.8)))
    if family == "gaussian_scale_mixture":
        k = int(rng.integers(2, 4))
        sigmas = rng.uniform(0.5, 1.5, size=k)
        weights = rng.uniform(0.2, 1.0, size=k)
        weights = weights / weights.sum()
        return GaussianScaleMixture(list(zip(sigmas, weights)))
    if family == "grid_density":
        if even:
            half = float(rng.uniform(0.8, 2.0))
            m = int(rng.integers(4, 7))
            right = 0.2 + rng.random(m)
            values = np.concatenate([right[::-1], right])
            grid = np.linspace(-half, half, 2 * m)
        else:
            lo = float(rng.uniform(-2.0, -0.5))
            hi = float(rng.uniform(0.5, 2.0))
            m = int(rng.integers(6, 12))
            grid = np.linspace(lo, hi, m)
            values = 0.2 + rng.random(m)
        return GridDensity(grid, values)
    if family == "discrete":
        m = int(rng.integers(3, 8))
        if even:
            pos = np.sort(rng.uniform(0.2, 2.0, size=m))
            w = rng.uniform(0.2, 1.0, size=m)
            atoms = np.concatenate([-pos[::-1], pos])
            weights = np.concatenate([w[::-1], w])
        else:
            atoms = np.sort(rng.uniform(-2.0, 2.0, size=m))
            weights = rng.uniform(0.2, 1.0, size=m)
        return Discrete(atoms, weights)
    raise ValueError(f"unknown family {family!r}")


def random_product(rng: np.random.Generator, d: int,
                   families: Sequence[str] = CONTINUOUS_FAMILIES,
                   even: bool = False) -> ProductMeasure:
    picks = [families[int(rng.integers(0, len(families)))] for _ in range(d)]
    return ProductMeasure([random_measure(rng, fam, even=even) for fam in picks])


def standard_gaussian_product(d: int) -> ProductMeasure:
    return ProductMeasure([Gaussian(0.0, 1.0) for _ in range(d)])


# --- weights ----------------------------------------------------------------

def random_weight(rng: np.random.Generator, measure: Measure1D,
                  even: bool = False, kind: str | None = None) -> Weight:
    """A positive coordinate weight with its centered primitive.

    Even kinds (quadratic bulge, cosh) keep the primitive odd on even
    measures, which the symmetry-based corpora rely on. Exponential rates
    are capped by the truncated support so the weight stays within a few
    orders of magnitude across the box.
    """
    if kind is None:
        kinds = ("unit", "quad", "cosh") if even else ("unit", "quad", "exp")
        kind = kinds[int(rng.integers(0, len(kinds)))]
    lo, hi = measure.truncated_support()
    reach = max(abs(lo), abs(hi), 1.0)
    if kind == "unit":
        return unit_weight(measure)
    if kind == "quad":
        lam = float(rng.uniform(0.1, 0.6))
        return centered_primitive(
            measure,
            a=lambda x, lam=lam: 1.0 + lam * np.asarray(x, dtype=float) ** 2,
            a_d1=lambda x, lam=lam: 2.0 * lam * np.asarray(x, dtype=float),
        )
    if kind == "cosh":
        beta = float(rng.uniform(0.2, min(0.7, 5.0 / reach)))
        return centered_primitive(
            measure,
            a=lambda x, b=beta: np.cosh(b * np.asarray(x, dtype=float)),
            a_d1=lambda x, b=beta: b * np.sinh(b * np.asarray(x, dtype=float)),
        )
    if kind == "exp":
        cap = min(0.5, 5.0 / reach)
        beta = float(rng.uniform(-cap, cap))
        return centered_primitive(
            measure,
            a=lambda x, b=beta: np.exp(b * np.asarray(x, dtype=float)),
            a_d1=lambda x, b=beta: b * np.exp(b * np.asarray(x, dtype=float)),
        )
    raise ValueError(f"unknown weight kind {kind!r}")


def _weight_scales(weights: Sequence[Weight]) -> np.ndarray:
    """1 + sup |A_i| on each truncated support.

    Outer coefficients are divided by these so composed functions keep O(1)
    values no matter how fast the primitives grow toward the box corners.
    """
    out = []
    for w in weights:
        lo, hi = w.support
        probe = np.linspace(lo, hi, 257)
        out.append(1.0 + float(np.max(np.abs(w.A(probe)))))
    return np.asarray(out)


def potential_weight(measure: Measure1D) -> Weight:
    """The canonical a = V'' choice, whose centered primitive is V' itself.

    E[V'] is a boundary term of the density, so V' is centered up to the
    truncation mass and A/V' is identically one.
    """
    lo, hi = measure.truncated_support()

    def a(x):
        return np.asarray(measure.potential_d2(x), dtype=float)

    def A(x):
        return np.asarray(measure.potential_d1(x), dtype=float)

    probe = np.linspace(lo, hi, 201)
    if np.any(a(probe) <= 0):
        raise ValueError("potential weight needs a strictly convex potential")
    scale = 1.0 + float(np.max(np.abs(A(probe))))
    return Weight(measure, a=a, A=A, a_d1=None, tau_id=1e-9 * scale,
                  even=measure.is_even(), support=(lo, hi))


# --- scalar function pools --------------------------------------------------

def _psd_quadratic(rng, d: int, with_linear: bool = True) -> fs.FunctionSpec:
    m = rng.normal(size=(d, d)) * 0.5
    q = m @ m.T / max(d, 1) + np.diag(rng.uniform(0.15, 0.7, size=d))
    b = rng.normal(size=d) * 0.5 if with_linear else None
    return fs.quadratic(q, b)


def convex_fn(rng: np.random.Generator, d: int) -> fs.FunctionSpec:
    """A certified convex function; 1-D draws include non-smooth members."""
    roll = int(rng.integers(0, 5 if d == 1 else 4))
    if roll == 0:
        return _psd_quadratic(rng, d)
    if roll == 1:
        return fs.softplus(rng.normal(size=d), float(rng.normal()))
    if roll == 2:
        return fs.exp_linear(rng.uniform(-0.45, 0.45, size=d))
    if roll == 3:
        parts = [_psd_quadratic(rng, d), fs.softplus(rng.normal(size=d))]
        return fs.linear_combination(parts, rng.uniform(0.3, 1.2, size=2))
    if float(rng.random()) < 0.5:
        return fs.abs_power(float(rng.uniform(1.3, 2.6)),
                            float(rng.uniform(0.5, 1.5)))
    c2 = float(rng.uniform(0.2, 1.0))
    c4 = float(rng.uniform(0.0, 0.4))
    return fs.polynomial1d([float(rng.normal()), float(rng.normal()), c2, 0.0, c4])


def even_logconcave_fn(rng: np.random.Generator, d: int,
                       unconditional: bool = False) -> fs.FunctionSpec:
    roll = int(rng.integers(0, 3))
    if roll == 0:
        if unconditional:
            q = np.diag(rng.uniform(0.3, 1.2, size=d))
        else:
            m = rng.normal(size=(d, d)) * 0.4
            q = m @ m.T / max(d, 1) + np.diag(rng.uniform(0.3, 1.0, size=d))
        return fs.exp_neg_quadratic(q)
    if roll == 1:
        return fs.even_exp_quartic(rng.uniform(0.15, 0.8, size=d),
                                   rng.uniform(0.0, 0.25, size=d))
    return fs.sech_prod(rng.uniform(0.3, 1.1, size=d))


def even_quasiconcave_fn(rng: np.random.Generator, d: int) -> fs.FunctionSpec:
    """Jointly quasi-concave and even (log-concave members included)."""
    roll = int(rng.integers(0, 4))
    if roll == 0:
        return fs.inverse_quadratic_bump(rng.uniform(0.3, 1.5, size=d))
    if roll == 1:
        return fs.tent(rng.uniform(0.4, 1.2, size=d))
    if roll == 2 and d == 1:
        return fs.prod_bump(rng.uniform(0.4, 1.8, size=1))
    return even_logconcave_fn(rng, d)


def unconditional_cqc_fn(rng: np.random.Generator, d: int) -> fs.FunctionSpec:
    """Unconditional and coordinatewise quasi-concave."""
    roll = int(rng.integers(0, 4))
    if roll == 0:
        return fs.prod_bump(rng.uniform(0.4, 1.8, size=d))
    if roll == 1:
        return fs.inverse_quadratic_bump(rng.uniform(0.3, 1.5, size=d))
    if roll == 2:
        return fs.tent(rng.uniform(0.4, 1.2, size=d))
    return even_logconcave_fn(rng, d, unconditional=True)


def coordinatewise_convex_fn(rng: np.random.Generator, d: int) -> fs.FunctionSpec:
    """Convex along every axis; off-diagonal curvature left unconstrained."""
    roll = int(rng.integers(0, 3 if d > 1 else 2))
    if roll == 0:
        q = rng.normal(size=(d, d)) * 0.6
        q = 0.5 * (q + q.T)
        np.fill_diagonal(q, rng.uniform(0.2, 1.0, size=d))
        return fs.quadratic(q, rng.normal(size=d) * 0.5)
    if roll == 1:
        return fs.exp_linear(rng.uniform(-0.45, 0.45, size=d))
    return fs.softmax_free_energy(float(rng.uniform(0.4, 2.0)), d)


def sign_pattern(rng: np.random.Generator, d: int) -> np.ndarray:
    """A symmetric +/-1 matrix used to pair functions with matching
    second-derivative signs."""
    s = rng.choice([-1.0, 1.0], size=(d, d))
    return np.triu(s) + np.triu(s, 1).T


def matched_quadratic(rng: np.random.Generator, pattern: np.ndarray,
                      scales=None, with_linear: bool = True) -> fs.FunctionSpec:
    d = len(pattern)
    mag = rng.uniform(0.2, 1.0, size=(d, d))
    mag = 0.5 * (mag + mag.T)
    q = pattern * mag
    b = rng.normal(size=d) * 0.6 if with_linear else None
    if scales is not None:
        q = q / np.outer(scales, scales)
        b = b / scales if b is not None else None
    return fs.quadratic(q, b)


def matched_pair(rng: np.random.Generator, d: int,
                 weights: Sequence[Weight] | None = None
                 ) -> tuple[fs.FunctionSpec, fs.FunctionSpec]:
    """(f, g) whose mixed second derivatives share a constant sign pattern.

    With weights the pair is composed through the centered primitives, so
    d_j(d_i f / a_i) inherits the outer Hessian's sign entry for every pair
    including the diagonal.
    """
    if weights is None:
        roll = int(rng.integers(0, 3 if d > 1 else 2))
        if roll == 0:
            pattern = sign_pattern(rng, d)
            return matched_quadratic(rng, pattern), matched_quadratic(rng, pattern)
        if roll == 1:
            signs = rng.choice([-1.0, 1.0], size=d)
            b1 = signs * rng.uniform(0.15, 0.45, size=d)
            b2 = signs * rng.uniform(0.15, 0.45, size=d)
            return fs.exp_linear(b1), fs.exp_linear(b2)
        return (fs.softmax_free_energy(float(rng.uniform(0.4, 2.0)), d),
                fs.softmax_free_energy(float(rng.uniform(0.4, 2.0)), d))
    pattern = sign_pattern(rng, d)
    scales = _weight_scales(weights)
    outer_f = matched_quadratic(rng, pattern, scales)
    outer_g = matched_quadratic(rng, pattern, scales)
    return (fs.coordinate_substitution(outer_f, weights),
            fs.coordinate_substitution(outer_g, weights))


def _prod_square(gamma: float, d: int) -> fs.FunctionSpec:
    """gamma * prod_i u_i^2 with analytic derivatives (unconditional)."""

    def val(p):
        return gamma * np.prod(p ** 2, axis=1)

    def grad(p):
        sq = p ** 2
        out = np.empty_like(p)
        for i in range(d):
            rest = np.prod(np.delete(sq, i, axis=1), axis=1) if d > 1 else 1.0
            out[:, i] = 2.0 * gamma * p[:, i] * rest
        return out

    def hess(p):
        sq = p ** 2
        out = np.empty((len(p), d, d))
        for i in range(d):
            for j in range(d):
                keep = [k for k in range(d) if k not in (i, j)]
                rest = np.prod(sq[:, keep], axis=1) if keep else 1.0
                if i == j:
                    out[:, i, i] = 2.0 * gamma * rest
                else:
                    out[:, i, j] = 4.0 * gamma * p[:, i] * p[:, j] * rest
        return out

    return fs.FunctionSpec(d, val, grad, hess, {"unconditional", "even"},
                           name="prod_square")


def diag_sign_pair(rng: np.random.Generator, weights: Sequence[Weight]
                   ) -> tuple[fs.FunctionSpec, fs.FunctionSpec]:
    """(f, g) for the unconditional tensorization corpus.

    f is unconditional: an even polynomial in the odd primitives A_i. g only
    matches the diagonal condition sign and is generally not unconditional.
    """
    d = len(weights)
    scales = _weight_scales(weights)
    s = float(rng.choice([-1.0, 1.0]))
    diag_f = s * rng.uniform(0.4, 1.6, size=d) / scales ** 2
    outer_f = fs.quadratic(np.diag(diag_f))
    if d > 1 and rng.random() < 0.5:
        gamma = s * float(rng.uniform(0.05, 0.25)) / float(np.prod(scales ** 2))
        outer_f = fs.linear_combination(
            [outer_f, _prod_square(gamma, d)], [1.0, 1.0])
    t = rng.normal(size=(d, d)) * 0.5
    t = 0.5 * (t + t.T)
    np.fill_diagonal(t, s * rng.uniform(0.4, 1.6, size=d))
    t = t / np.outer(scales, scales)
    outer_g = fs.quadratic(t, rng.normal(size=d) * 0.5 / scales)
    f = fs.coordinate_substitution(outer_f, weights)
    g = fs.coordinate_substitution(outer_g, weights)
    return f.with_declared("unconditional", "even"), g


def exp_quadratic_pair(rng: np.random.Generator, weights: Sequence[Weight],
                       both_exponential: bool
                       ) -> tuple[fs.FunctionSpec, fs.FunctionSpec]:
    """(f, g) for the global duplication corpus.

    f = exp(+A'PA/2) with entrywise non-negative P, so phi = -ln f has
    non-positive weighted diagonal and plain off-diagonal derivatives.
    P is scaled by the primitives' sup so A'PA/2 stays below about 0.8 on
    the truncated box, keeping f bounded and well conditioned. g either
    mirrors the construction (both_exponential) or is a plain quadratic with
    entrywise non-negative Hessian through the primitives.
    """
    d = len(weights)
    scales = _weight_scales(weights)
    cap = 1.5 / (d * d)

    def nonneg_sym():
        p = rng.uniform(0.1 * cap, cap, size=(d, d))
        p = 0.5 * (p + p.T)
        np.fill_diagonal(p, rng.uniform(0.2 * cap, cap, size=d))
        return p / np.outer(scales, scales)

    p = nonneg_sym()
    f = fs.coordinate_substitution(fs.exp_neg_quadratic(-p), weights)
    f = f.with_declared("positive", "even")
    if both_exponential:
        r = nonneg_sym()
        g = fs.coordinate_substitution(fs.exp_neg_quadratic(-r), weights)
        return f, g.with_declared("positive", "even")
    smag = rng.uniform(0.1, 0.8, size=(d, d))
    smag = 0.5 * (smag + smag.T) / np.outer(scales, scales)
    outer_g = fs.quadratic(smag, rng.normal(size=d) * 0.5 / scales)
    return f, fs.coordinate_substitution(outer_g, weights)


def third_nonneg_fn(rng: np.random.Generator) -> fs.FunctionSpec:
    """1-D functions with a non-negative third derivative."""
    roll = int(rng.integers(0, 3))
    if roll == 0:
        return fs.polynomial1d([float(rng.normal()), float(rng.normal()),
                                float(rng.normal()) * 0.5,
                                float(rng.uniform(0.0, 0.8))])
    if roll == 1:
        return fs.exp_linear([float(rng.uniform(0.2, 0.8))])
    return fs.polynomial1d([0.0, float(rng.normal()) * 0.5, 0.0,
                            float(rng.uniform(0.1, 0.6)), 0.0,
                            float(rng.uniform(0.0, 0.1))])


def increasing_fn(rng: np.random.Generator) -> fs.FunctionSpec:
    roll = int(rng.integers(0, 3))
    if roll == 0:
        return fs.softplus([float(rng.uniform(0.4, 1.5))], float(rng.normal()))
    if roll == 1:
        return fs.exp_linear([float(rng.uniform(0.2, 0.7))])
    return fs.polynomial1d([0.0, float(rng.uniform(0.2, 1.0)), 0.0,
                            float(rng.uniform(0.0, 0.5))])


def orthogonal_logconcave_1d(rng: np.random.Generator, measure: Measure1D,
                             spec: QuadratureSpec = DEFAULT_SPEC
                             ) -> fs.FunctionSpec:
    """A positive log-concave 1-D function with Cov(f, x) = 0.

    Even measures take an even bump. Otherwise a Gaussian bump's center is
    moved by bisection until the covariance with x vanishes on the quadrature
    grid, which is the same grid the checker integrates on.
    """
    if measure.is_even():
        return even_logconcave_fn(rng, 1)
    alpha = float(rng.uniform(0.4, 1.5))
    grid = MeasureGrid1D(measure, spec)
    nodes, pw = grid.nodes, grid.pweights
    ex = float(np.dot(pw, nodes))

    def cov_at(c):
        v = np.exp(-alpha * (nodes - c) ** 2)
        return float(np.dot(pw, v * nodes) - np.dot(pw, v) * ex)

    lo, hi = measure.truncated_support()
    a, b = lo, hi
    ca, cb = cov_at(a), cov_at(b)
    if ca > 0 or cb < 0:
        # very skewed grids can push the zero past an endpoint; fall back
        # to the measure mean which always brackets for unimodal bumps
        a, b = ex - 3.0, ex + 3.0
        ca, cb = cov_at(a), cov_at(b)
    for _ in range(90):
        mid = 0.5 * (a + b)
        if cov_at(mid) <= 0.0:
            a = mid
        else:
            b = mid
    c = 0.5 * (a + b)
    return fs.exp_neg_quadratic([[2.0 * alpha]], [-2.0 * alpha * c],
                                alpha * c * c).with_declared(
                                    "positive", "log_concave")


# --- instances --------------------------------------------------------------

@dataclass
class Instance:
    """One randomized input set for a theorem checker."""
    theorem_id: str
    measure: ProductMeasure
    f: fs.FunctionSpec | None
    g: fs.FunctionSpec | None
    weights: list[Weight] | None = None
    options: dict = field(default_factory=dict)
    seed: int = 0
    label: str = ""


def scaled(inst: Instance, c: float) -> Instance:
    """The instance with f, g replaced by c*f, c*g (c > 0)."""
    return Instance(
        theorem_id=inst.theorem_id,
        measure=inst.measure,
        f=fs.scale_output(inst.f, c) if inst.f is not None else None,
        g=fs.scale_output(inst.g, c) if inst.g is not None else None,
        weights=inst.weights,
        options=dict(inst.options),
        seed=inst.seed,
        label=f"{inst.label}*{c}" if inst.label else f"scaled*{c}",
    )


def _pick_dim(rng, dims, lo=1, hi=3):
    usable = [d for d in dims if lo <= d <= hi]
    if not usable:
        raise ValueError(f"no usable dimension in {dims} for range [{lo},{hi}]")
    return usable[int(rng.integers(0, len(usable)))]


def _gen_t111(rng, dims, families):
    d = _pick_dim(rng, dims)
    return standard_gaussian_product(d), convex_fn(rng, d), convex_fn(rng, d), None, {}


def _gen_t112(rng, dims, families):
    d = _pick_dim(rng, dims)
    return (standard_gaussian_product(d), even_logconcave_fn(rng, d),
            convex_fn(rng, d), None, {})


def _gen_t113(rng, dims, families):
    d = _pick_dim(rng, dims)
    return (standard_gaussian_product(d), even_quasiconcave_fn(rng, d),
            even_quasiconcave_fn(rng, d), None, {})


def _one_d_measure(rng, families):
    fam = families[int(rng.integers(0, len(families)))]
    return ProductMeasure([random_measure(rng, fam)])


def _gen_t121(rng, dims, families):
    mu = _one_d_measure(rng, families or ALL_FAMILIES)
    return mu, convex_fn(rng, 1), convex_fn(rng, 1), None, {}


def _gen_t122(rng, dims, families):
    pool = families or (CONTINUOUS_FAMILIES + ("discrete",))
    mu = _one_d_measure(rng, pool)
    f = orthogonal_logconcave_1d(rng, mu.factors[0])
    return mu, f, convex_fn(rng, 1), None, {}


def _gen_t123(rng, dims, families):
    mu = _one_d_measure(rng, families or ALL_FAMILIES)
    return mu, even_quasiconcave_fn(rng, 1), even_quasiconcave_fn(rng, 1), None, {}


def _gen_t13(rng, dims, families):
    d = _pick_dim(rng, dims)
    mu = random_product(rng, d, families or CONTINUOUS_FAMILIES)
    if rng.random() < 0.3:
        weights = [unit_weight(m) for m in mu.factors]
        f, g = matched_pair(rng, d)
    else:
        weights = [random_weight(rng, m) for m in mu.factors]
        f, g = matched_pair(rng, d, weights)
    return mu, f, g, weights, {}


def _gen_c14(rng, dims, families):
    d = _pick_dim(rng, dims)
    mu = random_product(rng, d, families or CONTINUOUS_FAMILIES)
    f, g = matched_pair(rng, d)
    return mu, f, g, None, {}


def _gen_t15(rng, dims, families):
    d = _pick_dim(rng, dims)
    mu = random_product(rng, d, families or EVEN_FAMILIES, even=True)
    weights = [random_weight(rng, m, even=True) for m in mu.factors]
    f, g = diag_sign_pair(rng, weights)
    if rng.random() < 0.5:
        f, g = g, f  # the unconditional one may sit on either side
    return mu, f, g, weights, {}


def _gen_t181(rng, dims, families):
    d = _pick_dim(rng, dims)
    mu = random_product(rng, d, families or EVEN_LOGCONCAVE_FAMILIES, even=True)
    f = even_logconcave_fn(rng, d, unconditional=True)
    return mu, f, coordinatewise_convex_fn(rng, d), None, {}


def _gen_t182(rng, dims, families):
    d = _pick_dim(rng, dims)
    mu = random_product(rng, d, families or CONTINUOUS_FAMILIES)
    return mu, unconditional_cqc_fn(rng, d), unconditional_cqc_fn(rng, d), None, {}


def _gen_t191(rng, dims, families):
    d = _pick_dim(rng, dims)
    mu = random_product(rng, d, families or EVEN_FAMILIES, even=True)
    weights = [random_weight(rng, m, even=True) for m in mu.factors]
    f, g = exp_quadratic_pair(rng, weights, both_exponential=False)
    return mu, f, g, weights, {}


def _gen_t192(rng, dims, families):
    d = _pick_dim(rng, dims)
    mu = random_product(rng, d, families or EVEN_FAMILIES, even=True)
    weights = [random_weight(rng, m, even=True) for m in mu.factors]
    f, g = exp_quadratic_pair(rng, weights, both_exponential=True)
    return mu, f, g, weights, {}


def _gen_c110(rng, dims, families):
    d = _pick_dim(rng, dims)
    mu = random_product(rng, d, families or EVEN_FAMILIES, even=True)
    weights = [unit_weight(m) for m in mu.factors]
    f, g = exp_quadratic_pair(rng, weights, both_exponential=False)
    return mu, f, g, None, {}


def _gen_t43(rng, dims, families):
    mu = _one_d_measure(rng, families or CONTINUOUS_FAMILIES)
    n = int(rng.integers(1, 4))
    if n == 1:
        phis = []
        f, g = increasing_fn(rng), increasing_fn(rng)
    elif n == 2:
        phis = [fs.linear([1.0])]
        f, g = convex_fn(rng, 1), convex_fn(rng, 1)
    else:
        phis = [fs.linear([1.0]), fs.polynomial1d([0.0, 0.0, 1.0])]
        f, g = third_nonneg_fn(rng), third_nonneg_fn(rng)
    return mu, f, g, None, {"phis": phis}


def _gen_c47(rng, dims, families):
    pool = families or CONTINUOUS_FAMILIES
    fam = pool[int(rng.integers(0, len(pool)))]
    even = fam in EVEN_FAMILIES and rng.random() < 0.6
    mu = ProductMeasure([random_measure(rng, fam, even=even)])
    return mu, third_nonneg_fn(rng), third_nonneg_fn(rng), None, {}


def _gen_t53(rng, dims, families):
    d = _pick_dim(rng, dims)
    kind = int(rng.integers(0, 3))
    if kind == 0:
        mu = random_product(rng, d, ("gaussian",))
        weights = [unit_weight(m) for m in mu.factors]
        f, g = matched_pair(rng, d)
    elif kind == 1:
        mu = random_product(rng, d, ("gaussian", "logistic"))
        weights = [potential_weight(m) for m in mu.factors]
        f, g = matched_pair(rng, d, weights)
    else:
        mu = random_product(rng, d, ("exponential",))
        weights = [unit_weight(m) for m in mu.factors]
        rates = [m.rate for m in mu.factors]
        b1 = [float(rng.uniform(0.1, 0.35)) * r for r in rates]
        b2 = [float(rng.uniform(0.1, 0.35)) * r for r in rates]
        f, g = fs.exp_linear(b1), fs.exp_linear(b2)
    return mu, f, g, weights, {}


def _gen_ex91(rng, dims, families):
    d = _pick_dim(rng, dims, lo=2)
    mu = random_product(rng, d, families or CONTINUOUS_FAMILIES)
    alpha = float(rng.uniform(0.4, 2.2))
    beta = float(rng.uniform(0.4, 2.2))
    return mu, None, None, None, {"alpha": alpha, "beta": beta}


def _gen_ex92(rng, dims, families):
    d = _pick_dim(rng, dims, lo=2)
    mu = random_product(rng, d, families or TILT_FAMILIES, even=True)
    j = float(rng.uniform(0.0, 0.2))
    theta = rng.uniform(0.0, 1.2, size=d)
    if rng.random() < 0.2:
        theta[int(rng.integers(0, d))] = 0.0
    return mu, None, None, None, {"J": j, "theta": [float(t) for t in theta]}


def _gen_ta1(rng, dims, families):
    d = _pick_dim(rng, dims)
    factors = []
    for _ in range(d):
        if rng.random() < 0.25:
            factors.append(Gaussian(0.0, float(rng.uniform(0.6, 1.3))))
        else:
            factors.append(random_measure(rng, "gaussian_scale_mixture"))
    mu = ProductMeasure(factors)
    f = even_logconcave_fn(rng, d)
    return mu, f, convex_fn(rng, d), None, {}


_GENERATORS = {
    "T1.1.1": _gen_t111,
    "T1.1.2": _gen_t112,
    "T1.1.3": _gen_t113,
    "T1.2.1": _gen_t121,
    "T1.2.2": _gen_t122,
    "T1.2.3": _gen_t123,
    "T1.3": _gen_t13,
    "C1.4": _gen_c14,
    "T1.5": _gen_t15,
    "T1.8.1": _gen_t181,
    "T1.8.2": _gen_t182,
    "T1.9.1": _gen_t191,
    "T1.9.2": _gen_t192,
    "C1.10": _gen_c110,
    "T4.3": _gen_t43,
    "C4.7": _gen_c47,
    "T5.3": _gen_t53,
    "EX9.1": _gen_ex91,
    "EX9.2": _gen_ex92,
    "TA.1": _gen_ta1,
}

CORPUS_IDS = tuple(_GENERATORS)

# theorems whose statements live in one dimension
_ONE_D_IDS = frozenset({"T1.2.1", "T1.2.2", "T1.2.3", "T4.3", "C4.7"})


def instance(theorem_id: str, index: int, seed: int = 0,
             dims: Sequence[int] = (1, 2, 3),
             families: Sequence[str] | None = None) -> Instance:
    """The index-th certified instance of a theorem's corpus stream."""
    gen = _GENERATORS.get(theorem_id)
    if gen is None:
        raise KeyError(f"no corpus for theorem id {theorem_id!r}")
    tid_index = list(_GENERATORS).index(theorem_id)
    rng = np.random.default_rng([seed, tid_index, index])
    if theorem_id in _ONE_D_IDS:
        dims = (1,)
    mu, f, g, weights, options = gen(rng, dims, families)
    return Instance(theorem_id=theorem_id, measure=mu, f=f, g=g,
                    weights=weights, options=options,
                    seed=int(rng.integers(0, 2 ** 31)),
                    label=f"{theorem_id}#{index}")


def instances(theorem_id: str, n: int, seed: int = 0,
              dims: Sequence[int] = (1, 2, 3),
              families: Sequence[str] | None = None) -> list[Instance]:
    return [instance(theorem_id, k, seed=seed, dims=dims, families=families)
            for k in range(n)]
