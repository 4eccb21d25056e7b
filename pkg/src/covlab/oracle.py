"""Exact finite-support ground truth.

Every identity in the library is recomputed here by exhaustive summation
over discrete product measures, with piecewise-linear interpolants standing
in for absolutely continuous functions. Residuals are pure roundoff, which
is what makes these values safe to freeze into tests.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

from ._gauss import stable_dot, stable_sum
from .measures import Discrete

ATOM_CAP = 1_000_000


class DiscreteProduct:
    """Product of finitely supported factors with full enumeration."""

    def __init__(self, factors: Sequence[Discrete]):
        self.factors = list(factors)
        total = 1
        for m in self.factors:
            total *= len(m.atoms)
        if total > ATOM_CAP:
            raise ValueError(f"atom count {total} exceeds cap {ATOM_CAP}")
        self.n_total = total
        mesh = np.meshgrid(*[m.atoms for m in self.factors], indexing="ij")
        self.points = np.column_stack([g.ravel() for g in mesh])
        w = self.factors[0].probs
        for m in self.factors[1:]:
            w = np.multiply.outer(w, m.probs)
        self.weights = w.ravel()
        self.shape = tuple(len(m.atoms) for m in self.factors)

    @property
    def dim(self) -> int:
        return len(self.factors)


def exact_mean(dp: DiscreteProduct, f: Callable) -> float:
    return float(stable_dot(dp.weights, np.asarray(f(dp.points), dtype=float)))


def exact_covariance(dp: DiscreteProduct, f: Callable, g: Callable) -> float:
    vf = np.asarray(f(dp.points), dtype=float)
    vg = np.asarray(g(dp.points), dtype=float)
    mf = stable_dot(dp.weights, vf)
    mg = stable_dot(dp.weights, vg)
    return float(stable_dot(dp.weights, (vf - mf) * (vg - mg)))


def _cell_kernel(measure: Discrete) -> np.ndarray:
    """Kernel values on the cells between consecutive atoms (constant per
    cell): K[c,d] = F_min - F_c F_d with F the CDF at the left atom."""
    cum = np.cumsum(measure.probs)[:-1]
    return np.minimum.outer(cum, cum) - np.outer(cum, cum)


def exact_hoeffding(measure: Discrete, f: Callable, g: Callable):
    """Both sides of Cov(f,g) = double integral of f' k g' for the
    piecewise-linear interpolants of f and g between atoms.

    The h_c cell widths cancel between the derivative and the cell area, so
    the right side is the exact double sum of value differences against the
    cell kernel.
    """
    dp = DiscreteProduct([measure])
    lhs = exact_covariance(dp, f, g)
    atoms = measure.atoms[:, None]
    fv = np.asarray(f(atoms), dtype=float)
    gv = np.asarray(g(atoms), dtype=float)
    if len(measure.atoms) < 2:
        return lhs, 0.0
    df = np.diff(fv)
    dg = np.diff(gv)
    K = _cell_kernel(measure)
    rhs = float(stable_sum(df[:, None] * K * dg[None, :]))
    return lhs, rhs


def exact_andreev(measure: Discrete, fs: Sequence[Callable],
                  gs: Sequence[Callable]):
    """det(E[f_i g_j]) versus the symmetrized n-point enumeration
    (1/n!) E[det(f_i(X_j)) det(g_i(X_j))] over independent copies."""
    n = len(fs)
    if n != len(gs):
        raise ValueError("need equally many f's and g's")
    if n > 4:
        raise ValueError("Andreev enumeration capped at n = 4")
    atoms = measure.atoms[:, None]
    probs = measure.probs
    m = len(measure.atoms)
    fvals = np.column_stack([np.asarray(f(atoms), dtype=float) for f in fs])
    gvals = np.column_stack([np.asarray(g(atoms), dtype=float) for g in gs])

    moment = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            moment[i, j] = stable_dot(probs, fvals[:, i] * gvals[:, j])
    lhs = float(np.linalg.det(moment))

    tuples = np.array(list(itertools.product(range(m), repeat=n)))
    w = probs[tuples].prod(axis=1)
    fmats = fvals[tuples].transpose(0, 2, 1)  # (T, n_funcs, n_points)
    gmats = gvals[tuples].transpose(0, 2, 1)
    dets = np.linalg.det(fmats) * np.linalg.det(gmats)
    rhs = float(stable_dot(w, dets)) / math.factorial(n)
    return lhs, rhs


def exact_tensorization(dp: DiscreteProduct, f: Callable, g: Callable):
    """Per-coordinate conditional-covariance terms and their total."""
    d = dp.dim
    vf = np.asarray(f(dp.points), dtype=float).reshape(dp.shape)
    vg = np.asarray(g(dp.points), dtype=float).reshape(dp.shape)
    probs = [m.probs for m in dp.factors]

    def marginalize(values, k):
        """Average over coordinates k+1..d (trailing axes)."""
        out = values
        for axis in range(d - 1, k - 1, -1):
            out = np.tensordot(out, probs[axis], axes=([axis], [0]))
        return out

    terms = []
    for k in range(d):
        fk = marginalize(vf, k + 1)   # depends on axes 0..k
        gk = marginalize(vg, k + 1)
        e_fg = np.tensordot(fk * gk, probs[k], axes=([k], [0]))
        e_f = np.tensordot(fk, probs[k], axes=([k], [0]))
        e_g = np.tensordot(gk, probs[k], axes=([k], [0]))
        cov_field = e_fg - e_f * e_g   # function of axes 0..k-1
        for axis in range(k - 1, -1, -1):
            cov_field = np.tensordot(cov_field, probs[axis], axes=([axis], [0]))
        terms.append(float(cov_field))
    total = float(stable_sum(terms))
    return terms, total, exact_covariance(dp, f, g)


def exact_duplication(dp: DiscreteProduct, f: Callable, g: Callable):
    """Exact enumeration of Cov(f,g) = (1/2) sum_i E[D_i f * Dt_i g] over an
    independent pair (X, X').

    D_i f replaces coordinate i of X by X'_i; Dt_i g compares the hybrid
    vector (x_1..x_i, x'_{i+1}..x'_d) against the same with x'_i in slot i.
    """
    n = dp.n_total
    if n * n > ATOM_CAP:
        raise ValueError("pair enumeration too large")
    d = dp.dim
    X = np.repeat(dp.points, n, axis=0)
    Xp = np.tile(dp.points, (n, 1))
    w = np.repeat(dp.weights, n) * np.tile(dp.weights, n)

    terms = []
    for i in range(d):
        swap = X.copy()
        swap[:, i] = Xp[:, i]
        delta_f = np.asarray(f(X), dtype=float) - np.asarray(f(swap), dtype=float)
        lead = Xp.copy()
        lead[:, :i + 1] = X[:, :i + 1]
        lead_swap = lead.copy()
        lead_swap[:, i] = Xp[:, i]
        delta_g = (np.asarray(g(lead), dtype=float)
                   - np.asarray(g(lead_swap), dtype=float))
        terms.append(0.5 * float(stable_dot(w, delta_f * delta_g)))
    total = float(stable_sum(terms))
    return terms, total, exact_covariance(dp, f, g)


def exact_product_hoeffding(dp: DiscreteProduct, f: Callable, g: Callable):
    """Per-coordinate kernel terms of the product covariance identity,
    exact for the coordinatewise piecewise-linear interpolants (d <= 2)."""
    d = dp.dim
    if d > 2:
        raise ValueError("exact product Hoeffding enumeration capped at d = 2")
    if d == 1:
        lhs, rhs = exact_hoeffding(dp.factors[0], f, g)
        return [rhs], rhs, lhs

    m1, m2 = dp.factors
    a1, p1 = m1.atoms, m1.probs
    a2, p2 = m2.atoms, m2.probs
    K1 = _cell_kernel(m1)
    K2 = _cell_kernel(m2)

    def values(fn):
        mesh = np.meshgrid(a1, a2, indexing="ij")
        pts = np.column_stack([g_.ravel() for g_ in mesh])
        return np.asarray(fn(pts), dtype=float).reshape(len(a1), len(a2))

    vf = values(f)
    vg = values(g)

    # i = 1: both difference profiles marginalize their own trailing copy
    df1 = np.diff(vf, axis=0) @ p2          # (cells1,)
    dg1 = np.diff(vg, axis=0) @ p2
    term1 = float(stable_sum(df1[:, None] * K1 * dg1[None, :]))

    # i = 2: the unprimed leading coordinate x_1 is shared by both sides
    df2 = np.diff(vf, axis=1)               # (atoms1, cells2)
    dg2 = np.diff(vg, axis=1)
    inner = np.einsum("ac,cd,ad->a", df2, K2, dg2)
    term2 = float(stable_dot(p1, inner))

    total = float(stable_sum([term1, term2]))
    return [term1, term2], total, exact_covariance(dp, f, g)


def exact_bivariate_andreev(measure: Discrete, fs: Sequence[Callable],
                            gs: Sequence[Callable]):
    """det Cov(F_i, G_j) versus the ordered-domain triple-determinant sum,
    for the piecewise-linear interpolants of the system members (n <= 4).

    Cells where two ordered arguments coincide contribute nothing (equal
    determinant columns), so only strictly increasing cell tuples appear.
    """
    n = len(fs)
    if n > 4:
        raise ValueError("bivariate Andreev enumeration capped at n = 4")
    dp = DiscreteProduct([measure])
    atoms = measure.atoms[:, None]
    fvals = np.column_stack([np.asarray(F(atoms), dtype=float) for F in fs])
    gvals = np.column_stack([np.asarray(G(atoms), dtype=float) for G in gs])

    cov = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            fi = fvals[:, i]
            gj = gvals[:, j]
            mf = stable_dot(measure.probs, fi)
            mg = stable_dot(measure.probs, gj)
            cov[i, j] = stable_dot(measure.probs, (fi - mf) * (gj - mg))
    lhs = float(np.linalg.det(cov))

    m_cells = len(measure.atoms) - 1
    if m_cells < n:
        return lhs, 0.0
    df = np.diff(fvals, axis=0)   # (cells, n)
    dg = np.diff(gvals, axis=0)
    K = _cell_kernel(measure)
    combos = list(itertools.combinations(range(m_cells), n))
    fdets = np.linalg.det(np.stack([df[list(c)].T for c in combos]))
    gdets = np.linalg.det(np.stack([dg[list(c)].T for c in combos]))
    # every ordered x-cell tuple pairs with every ordered y-cell tuple
    kdet_matrix = np.empty((len(combos), len(combos)))
    for ci, c in enumerate(combos):
        for dj, dcells in enumerate(combos):
            kdet_matrix[ci, dj] = np.linalg.det(K[np.ix_(list(c), list(dcells))])
    rhs = float(fdets @ kdet_matrix @ gdets)
    return lhs, rhs


# --- random instance builders ----------------------------------------------

def random_discrete(rng: np.random.Generator, n_atoms: int | None = None,
                    span: tuple[float, float] = (-2.0, 2.0),
                    even: bool = False) -> Discrete:
    n = int(n_atoms or rng.integers(3, 9))
    lo, hi = span
    if even:
        half = np.sort(rng.uniform(0.1, hi, size=n))
        atoms = np.concatenate([-half[::-1], half])
        w_half = rng.random(n) + 0.2
        weights = np.concatenate([w_half[::-1], w_half])
    else:
        atoms = np.sort(rng.uniform(lo, hi, size=n))
        while np.min(np.diff(atoms)) < 1e-3:
            atoms = np.sort(rng.uniform(lo, hi, size=n))
        weights = rng.random(n) + 0.2
    return Discrete(atoms, weights / weights.sum())


def random_polynomial_fn(rng: np.random.Generator, dim: int,
                         degree: int = 3) -> Callable:
    """A small random polynomial in d variables, as a plain callable."""
    n_terms = int(rng.integers(2, 5))
    coeffs = rng.uniform(-1.0, 1.0, size=n_terms)
    powers = rng.integers(0, degree + 1, size=(n_terms, dim))

    def fn(points):
        pts = np.asarray(points, dtype=float)
        out = np.zeros(len(pts))
        for c, pw in zip(coeffs, powers):
            out += c * np.prod(pts ** pw, axis=1)
        return out

    return fn


IDENTITY_TOL = 1e-12

_IDENTITY_NAMES = ("hoeffding", "andreev", "tensorization", "duplication",
                   "product_hoeffding")


def identity_battery(seed: int = 42, instances: int = 500) -> dict:
    """Worst residual of each exact identity over seeded random instances.

    One shared generator drives all identities so the whole battery is a
    single reproducible stream. Returns per-identity maxima plus the
    overall verdict against IDENTITY_TOL.
    """
    rng = np.random.default_rng(seed)
    worst = {name: 0.0 for name in _IDENTITY_NAMES}

    def note(name, residual):
        worst[name] = max(worst[name], abs(residual))

    for _ in range(instances):
        m = random_discrete(rng)
        f1 = random_polynomial_fn(rng, 1)
        g1 = random_polynomial_fn(rng, 1)
        lhs, rhs = exact_hoeffding(m, f1, g1)
        note("hoeffding", lhs - rhs)

        n = int(rng.integers(2, 5))
        m2 = random_discrete(rng)
        fs = [random_polynomial_fn(rng, 1) for _ in range(n)]
        gs = [random_polynomial_fn(rng, 1) for _ in range(n)]
        lhs, rhs = exact_andreev(m2, fs, gs)
        note("andreev", lhs - rhs)

        d = int(rng.integers(1, 4))
        dp = DiscreteProduct(
            [random_discrete(rng, n_atoms=int(rng.integers(3, 6)))
             for _ in range(d)])
        f = random_polynomial_fn(rng, d, degree=2)
        g = random_polynomial_fn(rng, d, degree=2)
        _, total, cov = exact_tensorization(dp, f, g)
        note("tensorization", total - cov)
        _, total, cov = exact_duplication(dp, f, g)
        note("duplication", total - cov)

        d2 = int(rng.integers(1, 3))
        dp2 = DiscreteProduct([random_discrete(rng) for _ in range(d2)])
        f2 = random_polynomial_fn(rng, d2, degree=2)
        g2 = random_polynomial_fn(rng, d2, degree=2)
        _, total, cov = exact_product_hoeffding(dp2, f2, g2)
        note("product_hoeffding", total - cov)

    overall = max(worst.values())
    return {
        "seed": int(seed),
        "instances": int(instances),
        "tolerance": IDENTITY_TOL,
        "residuals": worst,
        "max_residual": overall,
        "verdict": "PASS" if overall <= IDENTITY_TOL else "FAIL",
    }
