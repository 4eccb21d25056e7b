"""Determinantal structure behind the covariance inequalities.

Three layers, all on one real variable:

* the ordered-triple determinant condition on a pair (u, U) and its
  signed-permutation invariance,
* Chebyshev system certification, by sampled minors and by the derived
  system of derivatives, with cross-validation between the two routes,
* moment determinant identities: the symmetrized expansion of
  det E[f_i g_j], the bordered form of det Cov(f_i, g_j), and the 2x2
  covariance ratio inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._gauss import stable_dot
from .functions import FunctionSpec
from .measures import Measure1D
from .quadrature import DEFAULT_SPEC, MeasureGrid1D, QuadratureSpec

TAU_DET = 1e-10
MIN_GAP = 1e-5

# grid sizes per determinant order for the symmetrized moment expansion;
# the identity is exact on any fixed grid, so these stay small
_ANDREEV_RULES = {1: (64, 8), 2: (32, 4), 3: (16, 3), 4: (10, 2)}


def _vals(fn, x: np.ndarray) -> np.ndarray:
    out = fn(x)
    return np.asarray(out, dtype=float).reshape(len(x))


@dataclass
class TupleCheckResult:
    passed: bool
    worst: float
    worst_scale: float
    witness: tuple | None
    trials: int


def sample_ordered_tuples(rng: np.random.Generator, lo: float, hi: float,
                          n: int, trials: int) -> np.ndarray:
    """(trials, n) strictly increasing rows with a minimum relative gap."""
    gap = MIN_GAP * (hi - lo)
    t = np.sort(rng.uniform(lo, hi, size=(trials, n)), axis=1)
    if n > 1:
        bad = np.min(np.diff(t, axis=1), axis=1) < gap
        for _ in range(50):
            if not np.any(bad):
                break
            t[bad] = np.sort(rng.uniform(lo, hi, size=(int(bad.sum()), n)), axis=1)
            bad = np.min(np.diff(t, axis=1), axis=1) < gap
    return t


def _ordered_triple_dets(u, U, t: np.ndarray):
    """det [[1,1,1], [u(t)], [U(t)]] for each row of t, with a size scale."""
    flat = t.ravel()
    uv = _vals(u, flat).reshape(t.shape)
    Uv = _vals(U, flat).reshape(t.shape)
    minors = (uv[:, 1] * Uv[:, 2] - uv[:, 2] * Uv[:, 1]
              - uv[:, 0] * Uv[:, 2] + uv[:, 2] * Uv[:, 0]
              + uv[:, 0] * Uv[:, 1] - uv[:, 1] * Uv[:, 0])
    scale = (np.max(np.abs(uv), axis=1) * np.max(np.abs(Uv), axis=1))
    return minors, scale


def assumption_c_check(u, U, lo: float, hi: float, trials: int = 500,
                       seed: int = 0) -> TupleCheckResult:
    """Sample ordered triples x1 < x2 < x3 and require the determinant

        det [[1, 1, 1], [u(x1), u(x2), u(x3)], [U(x1), U(x2), U(x3)]]

    to be nonnegative up to TAU_DET times its natural size.
    """
    rng = np.random.default_rng(seed)
    t = sample_ordered_tuples(rng, lo, hi, 3, trials)
    dets, scale = _ordered_triple_dets(u, U, t)
    tol = TAU_DET * (1.0 + scale)
    idx = int(np.argmin(dets + tol))
    passed = bool(np.all(dets >= -tol))
    witness = None if passed else tuple(t[idx])
    return TupleCheckResult(passed, float(dets[idx]), float(scale[idx]),
                            witness, trials)


def signed_triple_check(u, U, lo: float, hi: float, trials: int = 500,
                        seed: int = 0) -> TupleCheckResult:
    """The permutation-signed version of the triple condition.

    For arbitrary distinct (x1, x2, x3), the determinant picks up the sign
    of the permutation that sorts the triple, so sign * det must still be
    nonnegative.
    """
    rng = np.random.default_rng(seed)
    sorted_t = sample_ordered_tuples(rng, lo, hi, 3, trials)
    perms = np.array([rng.permutation(3) for _ in range(trials)])
    t = np.take_along_axis(sorted_t, perms, axis=1)
    # parity of a 3-permutation: identity-like cycles are even
    signs = np.where((perms[:, 0] + 1) % 3 == perms[:, 1] % 3, 1.0, -1.0)
    dets, scale = _ordered_triple_dets(u, U, t)
    vals = signs * dets
    tol = TAU_DET * (1.0 + scale)
    idx = int(np.argmin(vals + tol))
    passed = bool(np.all(vals >= -tol))
    witness = None if passed else tuple(t[idx])
    return TupleCheckResult(passed, float(vals[idx]), float(scale[idx]),
                            witness, trials)


def minors_check(members: Sequence, lo: float, hi: float,
                 trials: int = 400, seed: int = 0) -> TupleCheckResult:
    """det(f_i(t_j)) >= -tol on ordered tuples, one tuple size = one system."""
    n = len(members)
    rng = np.random.default_rng(seed)
    t = sample_ordered_tuples(rng, lo, hi, n, trials)
    flat = t.ravel()
    rows = np.stack([_vals(f, flat).reshape(t.shape) for f in members], axis=1)
    dets = np.linalg.det(np.swapaxes(rows, 1, 2)) if n > 1 else rows[:, 0, 0]
    scale = np.prod(np.max(np.abs(rows), axis=2), axis=1)
    tol = TAU_DET * (1.0 + scale)
    idx = int(np.argmin(dets + tol))
    passed = bool(np.all(dets >= -tol))
    witness = None if passed else tuple(t[idx])
    return TupleCheckResult(passed, float(dets[idx]), float(scale[idx]),
                            witness, trials)


@dataclass
class ChebyshevCertification:
    passed: bool
    minors: TupleCheckResult
    derivative: TupleCheckResult | None
    agree: bool


def chebyshev_certify(members: Sequence[FunctionSpec], lo: float, hi: float,
                      trials: int = 400, seed: int = 0,
                      use_derivative: bool = True) -> ChebyshevCertification:
    """Certify (f_1, ..., f_n) as a Chebyshev system on [lo, hi].

    Primary route: sampled minors. When the first member is the constant 1,
    the derived system (f_2', ..., f_n') is equivalent, so it is checked as
    well and the two verdicts must agree.
    """
    base = minors_check(members, lo, hi, trials, seed)
    deriv = None
    agree = True
    first_is_one = False
    if use_derivative and len(members) >= 2:
        probes = np.linspace(lo, hi, 33)
        first_is_one = bool(np.max(np.abs(_vals(members[0], probes) - 1.0)) < 1e-12)
    if first_is_one:
        derived = [(lambda x, m=m: m.gradient(np.asarray(x, dtype=float))[:, 0])
                   for m in members[1:]]
        deriv = minors_check(derived, lo, hi, trials, seed + 1)
        agree = deriv.passed == base.passed
    return ChebyshevCertification(base.passed, base, deriv, agree)


@dataclass
class AndreevResult:
    lhs: float
    rhs: float
    residual: float
    n: int
    grid_size: int


def andreev_residual(measure: Measure1D, fs: Sequence, gs: Sequence,
                     spec: QuadratureSpec = DEFAULT_SPEC) -> AndreevResult:
    """det E[f_i g_j] against its symmetrized n-point expansion

        (1/n!) E det(f_i(X_j)) det(g_i(X_j)),   X_j iid from the measure,

    both sides evaluated on one fixed quadrature grid so the comparison is
    exact up to roundoff.
    """
    n = len(fs)
    if n != len(gs):
        raise ValueError("need equally many f and g members")
    if n not in _ANDREEV_RULES:
        raise ValueError(f"determinant order {n} not supported (max 4)")
    order, panels = _ANDREEV_RULES[n]
    grid = MeasureGrid1D(
        measure,
        QuadratureSpec(order=order, panels=panels, trunc_eps=spec.trunc_eps),
    )
    x, w = grid.nodes, grid.pweights
    m = len(x)
    if m ** n > 4e6:
        raise ValueError("grid too large for the symmetrized expansion")
    fvals = np.column_stack([_vals(f, x) for f in fs])
    gvals = np.column_stack([_vals(g, x) for g in gs])

    moments = (fvals * w[:, None]).T @ gvals
    lhs = float(np.linalg.det(moments))

    idx = np.indices((m,) * n).reshape(n, -1).T
    wprod = np.prod(w[idx], axis=1)
    fdet = np.linalg.det(fvals[idx]) if n > 1 else fvals[idx][:, 0, 0]
    gdet = np.linalg.det(gvals[idx]) if n > 1 else gvals[idx][:, 0, 0]
    rhs = float(stable_dot(wprod, fdet * gdet)) / math.factorial(n)
    return AndreevResult(lhs, rhs, lhs - rhs, n, m)


@dataclass
class DetCovResult:
    matrix: np.ndarray
    det: float
    bordered_det: float
    residual: float
    tolerance: float
    consistent: bool


def det_cov_matrix(measure: Measure1D, fs: Sequence, gs: Sequence,
                   spec: QuadratureSpec = DEFAULT_SPEC) -> DetCovResult:
    """The covariance matrix C_ij = Cov(f_i, g_j), its determinant, and the
    bordered moment determinant

        det [[1,      E g_j ],
             [E f_i,  E f_i g_j]]

    which equals det C after elementary row and column operations. Both are
    computed from one grid and must agree to roundoff.
    """
    n = len(fs)
    grid = MeasureGrid1D(measure, spec)
    x, w = grid.nodes, grid.pweights
    fvals = np.column_stack([_vals(f, x) for f in fs])
    gvals = np.column_stack([_vals(g, x) for g in gs])
    fmean = w @ fvals
    gmean = w @ gvals
    cov = ((fvals - fmean) * w[:, None]).T @ (gvals - gmean)
    det = float(np.linalg.det(cov))

    bordered = np.empty((n + 1, n + 1))
    bordered[0, 0] = 1.0
    bordered[0, 1:] = gmean
    bordered[1:, 0] = fmean
    bordered[1:, 1:] = (fvals * w[:, None]).T @ gvals
    bdet = float(np.linalg.det(bordered))

    scale = max(1.0, float(np.prod(np.abs(cov).max(axis=1) + 1.0)))
    tol = 1e-9 * scale
    residual = det - bdet
    return DetCovResult(cov, det, bdet, residual, tol, bool(abs(residual) <= tol))


@dataclass
class CovRatioResult:
    margin: float
    det3: float
    residual: float
    cov_uv: float
    cov_UV: float
    cov_uV: float
    cov_Uv: float


def cov_ratio_check(measure: Measure1D, u, U, v, V,
                    spec: QuadratureSpec = DEFAULT_SPEC) -> CovRatioResult:
    """margin = Cov(U,V) Cov(u,v) - Cov(u,V) Cov(U,v).

    Nonnegative when (u, U) and (v, V) each satisfy the ordered-triple
    determinant condition. The same quantity is the 3x3 bordered moment
    determinant of (1, u, U) against (1, v, V); both forms are returned so
    callers can assert their agreement.
    """
    grid = MeasureGrid1D(measure, spec)
    x, w = grid.nodes, grid.pweights
    uv_ = np.column_stack([_vals(u, x), _vals(U, x)])
    vv_ = np.column_stack([_vals(v, x), _vals(V, x)])
    umean = w @ uv_
    vmean = w @ vv_
    cov = ((uv_ - umean) * w[:, None]).T @ (vv_ - vmean)
    margin = float(cov[1, 1] * cov[0, 0] - cov[0, 1] * cov[1, 0])

    bord = np.empty((3, 3))
    bord[0, 0] = 1.0
    bord[0, 1:] = vmean
    bord[1:, 0] = umean
    bord[1:, 1:] = (uv_ * w[:, None]).T @ vv_
    det3 = float(np.linalg.det(bord))
    return CovRatioResult(margin, det3, margin - det3,
                          float(cov[0, 0]), float(cov[1, 1]),
                          float(cov[0, 1]), float(cov[1, 0]))


@dataclass
class MonotonePairResult:
    cov: float
    err: float
    f_direction: int
    g_direction: int
    applicable: bool
    passed: bool


def _direction(derivs: np.ndarray, tau: float) -> int:
    """+1 nondecreasing, -1 nonincreasing, 0 flat, None-ish 2 for mixed."""
    pos = np.any(derivs > tau)
    neg = np.any(derivs < -tau)
    if pos and neg:
        return 2
    if pos:
        return 1
    if neg:
        return -1
    return 0


def monotone_pair_check(measure: Measure1D, f: FunctionSpec, g: FunctionSpec,
                        spec: QuadratureSpec = DEFAULT_SPEC,
                        tol: float = 1e-9) -> MonotonePairResult:
    """Cov(f, g) >= 0 when f and g are monotone in the same direction.

    Monotonicity is probed from derivative signs on the quadrature nodes;
    a mixed-sign profile makes the check inapplicable rather than failed.
    """
    grid = MeasureGrid1D(measure, spec)
    x, w = grid.nodes, grid.pweights
    df = f.gradient(x)[:, 0]
    dg = g.gradient(x)[:, 0]
    tau = 1e-9 * (1.0 + max(float(np.max(np.abs(df))), float(np.max(np.abs(dg)))))
    fdir = _direction(df, tau)
    gdir = _direction(dg, tau)
    applicable = fdir != 2 and gdir != 2 and fdir * gdir >= 0
    fv = _vals(f, x)
    gv = _vals(g, x)
    cov = float(stable_dot(w, (fv - w @ fv) * (gv - w @ gv)))
    coarse = MeasureGrid1D(measure, spec.halved())
    xc, wc = coarse.nodes, coarse.pweights
    fc = _vals(f, xc)
    gc = _vals(g, xc)
    cov_c = float(stable_dot(wc, (fc - wc @ fc) * (gc - wc @ gc)))
    err = abs(cov - cov_c)
    passed = bool(not applicable or cov >= -max(tol, 3.0 * err))
    return MonotonePairResult(cov, err, fdir, gdir, applicable, passed)
