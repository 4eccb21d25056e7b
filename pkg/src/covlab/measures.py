"""One-dimensional measure families, weights with centered primitives, and
product measures.

Each family exposes the same surface: density, CDF, quantile, first two
moments, truncated support, and (for smooth positive densities exp(-V)) the
potential derivatives V' and V''. All evaluators accept numpy arrays.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit, ndtr, ndtri

from ._gauss import CumulativePrimitive, panel_rule, stable_dot, stable_sum
from .ioutil import ConfigError

DEGENERATE_VAR = 1e-14
_SQRT_2PI = math.sqrt(2.0 * math.pi)


class Measure1D:
    """Base class for one-dimensional probability measures."""

    family = "abstract"
    is_discrete = False
    has_potential = False

    # --- subclass surface -------------------------------------------------
    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def var(self) -> float:
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def is_even(self) -> bool:
        return False

    def potential_d1(self, x):
        """V'(x) for density exp(-V); only for has_potential families."""
        raise NotImplementedError(f"{self.family} has no smooth potential")

    def potential_d2(self, x):
        raise NotImplementedError(f"{self.family} has no smooth potential")

    def params_json(self) -> dict:
        raise NotImplementedError

    # --- shared helpers ---------------------------------------------------
    def truncated_support(self, eps: float = 1e-9) -> tuple[float, float]:
        """Quantile box [q(eps), q(1-eps)]; exact bounds on bounded sides."""
        lo_s, hi_s = self.support()
        lo = lo_s if math.isfinite(lo_s) else float(self.quantile(eps))
        hi = hi_s if math.isfinite(hi_s) else float(self.quantile(1.0 - eps))
        return (lo, hi)

    def sample(self, n: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return np.asarray(self.quantile(rng.random(n)), dtype=float)

    def to_json(self) -> dict:
        return {"family": self.family, "params": self.params_json()}

    def _check_not_degenerate(self):
        if self.var() < DEGENERATE_VAR:
            raise ValueError(
                f"{self.family} measure is degenerate (variance "
                f"{self.var():.3e} < {DEGENERATE_VAR:g})"
            )

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in self.params_json().items())
        return f"{type(self).__name__}({inner})"


class Gaussian(Measure1D):
    family = "gaussian"
    has_potential = True

    def __init__(self, mean: float = 0.0, sigma: float = 1.0):
        if not sigma > 0:
            raise ConfigError("params.sigma", f"must be > 0, got {sigma}")
        self.mu = float(mean)
        self.sigma = float(sigma)
        self._check_not_degenerate()

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * _SQRT_2PI)

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def quantile(self, u):
        return self.mu + self.sigma * ndtri(np.asarray(u, dtype=float))

    def mean(self):
        return self.mu

    def var(self):
        return self.sigma ** 2

    def is_even(self):
        return self.mu == 0.0

    def potential_d1(self, x):
        return (np.asarray(x, dtype=float) - self.mu) / self.sigma ** 2

    def potential_d2(self, x):
        return np.full_like(np.asarray(x, dtype=float), 1.0 / self.sigma ** 2)

    def params_json(self):
        return {"mean": self.mu, "sigma": self.sigma}


class Uniform(Measure1D):
    family = "uniform"

    def __init__(self, lo: float = 0.0, hi: float = 1.0):
        if not hi > lo:
            raise ConfigError("params.hi", f"need hi > lo, got [{lo}, {hi}]")
        self.lo = float(lo)
        self.hi = float(hi)
        self.width = self.hi - self.lo
        self._check_not_degenerate()

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, 1.0 / self.width, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.lo) / self.width, 0.0, 1.0)

    def quantile(self, u):
        return self.lo + self.width * np.asarray(u, dtype=float)

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def var(self):
        return self.width ** 2 / 12.0

    def support(self):
        return (self.lo, self.hi)

    def is_even(self):
        return self.lo == -self.hi

    def params_json(self):
        return {"lo": self.lo, "hi": self.hi}


class Exponential(Measure1D):
    family = "exponential"
    has_potential = True

    def __init__(self, rate: float = 1.0):
        if not rate > 0:
            raise ConfigError("params.rate", f"must be > 0, got {rate}")
        self.rate = float(rate)
        self._check_not_degenerate()

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def quantile(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    def mean(self):
        return 1.0 / self.rate

    def var(self):
        return 1.0 / self.rate ** 2

    def support(self):
        return (0.0, math.inf)

    def potential_d1(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.rate)

    def potential_d2(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def params_json(self):
        return {"rate": self.rate}


class Logistic(Measure1D):
    family = "logistic"
    has_potential = True

    def __init__(self, loc: float = 0.0, scale: float = 1.0):
        if not scale > 0:
            raise ConfigError("params.scale", f"must be > 0, got {scale}")
        self.loc = float(loc)
        self.scale = float(scale)
        self._check_not_degenerate()

    def _z(self, x):
        return (np.asarray(x, dtype=float) - self.loc) / self.scale

    def pdf(self, x):
        F = expit(self._z(x))
        return F * (1.0 - F) / self.scale

    def cdf(self, x):
        return expit(self._z(x))

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        return self.loc + self.scale * (np.log(u) - np.log1p(-u))

    def mean(self):
        return self.loc

    def var(self):
        return (math.pi * self.scale) ** 2 / 3.0

    def is_even(self):
        return self.loc == 0.0

    def potential_d1(self, x):
        return (2.0 * expit(self._z(x)) - 1.0) / self.scale

    def potential_d2(self, x):
        return 2.0 * self.pdf(x) / self.scale

    def params_json(self):
        return {"loc": self.loc, "scale": self.scale}


class GaussianScaleMixture(Measure1D):
    """Finite mixture of centered Gaussians: sum of w_j * N(0, sigma_j^2)."""

    family = "gaussian_scale_mixture"
    has_potential = True

    def __init__(self, components: Sequence[tuple[float, float]]):
        if not components:
            raise ConfigError("components", "need at least one component")
        sigmas = np.asarray([c[0] for c in components], dtype=float)
        weights = np.asarray([c[1] for c in components], dtype=float)
        if np.any(sigmas <= 0):
            raise ConfigError("components.sigma", "sigmas must be > 0")
        if np.any(weights <= 0):
            raise ConfigError("components.weight", "weights must be > 0")
        total = stable_sum(weights)
        if abs(total - 1.0) > 1e-8:
            raise ConfigError("components.weight", f"weights sum to {total}, not 1")
        self.sigmas = sigmas
        self.weights = weights / total
        self._check_not_degenerate()

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = x[..., None] / self.sigmas
        comps = np.exp(-0.5 * z * z) / (self.sigmas * _SQRT_2PI)
        return comps @ self.weights

    def _pdf_d1(self, x):
        x = np.asarray(x, dtype=float)
        z = x[..., None] / self.sigmas
        comps = np.exp(-0.5 * z * z) / (self.sigmas * _SQRT_2PI)
        return (comps * (-x[..., None] / self.sigmas ** 2)) @ self.weights

    def _pdf_d2(self, x):
        x = np.asarray(x, dtype=float)
        z = x[..., None] / self.sigmas
        comps = np.exp(-0.5 * z * z) / (self.sigmas * _SQRT_2PI)
        factor = (x[..., None] ** 2 / self.sigmas ** 4) - 1.0 / self.sigmas ** 2
        return (comps * factor) @ self.weights

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return ndtr(x[..., None] / self.sigmas) @ self.weights

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        uq = np.atleast_1d(u).astype(float)
        sig_max = float(self.sigmas.max())
        safe = np.clip(uq, 1e-300, 1.0 - 1e-16)
        bound = sig_max * (np.abs(ndtri(safe)) + 1.0) + 1.0
        lo, hi = -bound, bound.copy()
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            too_low = self.cdf(mid) < uq
            lo = np.where(too_low, mid, lo)
            hi = np.where(too_low, hi, mid)
        out = 0.5 * (lo + hi)
        return float(out[0]) if scalar else out.reshape(u.shape)

    def mean(self):
        return 0.0

    def var(self):
        return float(stable_dot(self.weights, self.sigmas ** 2))

    def is_even(self):
        return True

    def potential_d1(self, x):
        return -self._pdf_d1(x) / self.pdf(x)

    def potential_d2(self, x):
        rho = self.pdf(x)
        r1 = self._pdf_d1(x) / rho
        return -self._pdf_d2(x) / rho + r1 * r1

    def params_json(self):
        return {
            "components": [
                {"sigma": float(s), "weight": float(w)}
                for s, w in zip(self.sigmas, self.weights)
            ]
        }

    def to_json(self):
        return {"family": self.family, **self.params_json()}


class GridDensity(Measure1D):
    """Piecewise-linear density on a node grid; CDF is piecewise quadratic,
    so the quantile inverts segment-local quadratics in closed form."""

    family = "grid_density"

    def __init__(self, grid: Sequence[float], values: Sequence[float]):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ConfigError("grid", "need at least two grid nodes")
        if values.shape != grid.shape:
            raise ConfigError("values", "grid and values lengths differ")
        if np.any(np.diff(grid) <= 0):
            raise ConfigError("grid", "grid must be strictly increasing")
        if np.any(values < 0):
            raise ConfigError("values", "density values must be >= 0")
        h = np.diff(grid)
        mass = stable_sum(0.5 * (values[:-1] + values[1:]) * h)
        if mass <= 0:
            raise ConfigError("values", "density has zero total mass")
        values = values / mass
        self.grid = grid
        self.values = values
        self.h = h
        self.slopes = np.diff(values) / h
        cell = 0.5 * (values[:-1] + values[1:]) * h
        self.cum = np.concatenate([[0.0], np.cumsum(cell)])
        self.cum[-1] = 1.0
        self._check_not_degenerate()

    def _segment(self, x):
        idx = np.searchsorted(self.grid, x, side="right") - 1
        return np.clip(idx, 0, len(self.grid) - 2)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = self._segment(x)
        s = x - self.grid[idx]
        val = self.values[idx] + self.slopes[idx] * s
        inside = (x >= self.grid[0]) & (x <= self.grid[-1])
        return np.where(inside, np.maximum(val, 0.0), 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.grid[0], self.grid[-1])
        idx = self._segment(xc)
        s = xc - self.grid[idx]
        out = self.cum[idx] + self.values[idx] * s + 0.5 * self.slopes[idx] * s * s
        return np.clip(out, 0.0, 1.0)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        uq = np.clip(np.atleast_1d(u).astype(float), 0.0, 1.0)
        idx = np.searchsorted(self.cum, uq, side="right") - 1
        idx = np.clip(idx, 0, len(self.grid) - 2)
        q = uq - self.cum[idx]
        v = self.values[idx]
        m = self.slopes[idx]
        disc = np.sqrt(np.maximum(v * v + 2.0 * m * q, 0.0))
        denom = v + disc
        s = np.where(denom > 0, 2.0 * q / np.where(denom > 0, denom, 1.0), 0.0)
        out = self.grid[idx] + np.minimum(s, self.h[idx])
        return float(out[0]) if scalar else out.reshape(u.shape)

    def _segment_moments(self):
        """Exact integrals of (1, x, x^2) against the linear density."""
        g, v, m, h = self.grid[:-1], self.values[:-1], self.slopes, self.h
        i0 = v * h + 0.5 * m * h ** 2
        j1 = 0.5 * v * h ** 2 + m * h ** 3 / 3.0
        j2 = v * h ** 3 / 3.0 + 0.25 * m * h ** 4
        m1 = g * i0 + j1
        m2 = g * g * i0 + 2.0 * g * j1 + j2
        return i0, m1, m2

    def mean(self):
        _, m1, _ = self._segment_moments()
        return float(stable_sum(m1))

    def var(self):
        _, m1, m2 = self._segment_moments()
        mu = stable_sum(m1)
        return float(stable_sum(m2) - mu * mu)

    def support(self):
        return (float(self.grid[0]), float(self.grid[-1]))

    def is_even(self):
        return bool(
            np.allclose(self.grid, -self.grid[::-1], atol=1e-12)
            and np.allclose(self.values, self.values[::-1], atol=1e-12)
        )

    def params_json(self):
        return {"grid": self.grid.tolist(), "values": self.values.tolist()}

    def to_json(self):
        return {"family": self.family, **self.params_json()}


class Discrete(Measure1D):
    """Finitely supported measure; CDF is the right-continuous step function
    F(x) = P(X <= x), and the quantile picks the smallest atom with F >= u."""

    family = "discrete"
    is_discrete = True

    def __init__(self, atoms: Sequence[float], weights: Sequence[float]):
        atoms = np.asarray(atoms, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if atoms.ndim != 1 or atoms.size == 0:
            raise ConfigError("atoms", "need at least one atom")
        if weights.shape != atoms.shape:
            raise ConfigError("weights", "atoms and weights lengths differ")
        if np.any(weights <= 0):
            raise ConfigError("weights", "weights must be > 0")
        order = np.argsort(atoms, kind="stable")
        atoms = atoms[order]
        weights = weights[order]
        if np.any(np.diff(atoms) == 0):
            raise ConfigError("atoms", "atoms must be distinct")
        total = stable_sum(weights)
        self.atoms = atoms
        self.probs = weights / total
        self.cum = np.cumsum(self.probs)
        self.cum[-1] = 1.0
        self._check_not_degenerate()

    def pdf(self, x):
        raise TypeError("discrete measure has no density")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.atoms, x, side="right")
        full = np.concatenate([[0.0], self.cum])
        return full[idx]

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self.cum, u, side="left")
        idx = np.clip(idx, 0, len(self.atoms) - 1)
        return self.atoms[idx]

    def mean(self):
        return float(stable_dot(self.atoms, self.probs))

    def var(self):
        m = self.mean()
        return float(stable_dot((self.atoms - m) ** 2, self.probs))

    def support(self):
        return (float(self.atoms[0]), float(self.atoms[-1]))

    def truncated_support(self, eps: float = 1e-9):
        return self.support()

    def is_even(self):
        return bool(
            np.allclose(self.atoms, -self.atoms[::-1], atol=1e-12)
            and np.allclose(self.probs, self.probs[::-1], atol=1e-12)
        )

    def params_json(self):
        return {"atoms": self.atoms.tolist(), "weights": self.probs.tolist()}


class ProductMeasure:
    """Product of independent one-dimensional factors."""

    def __init__(self, factors: Sequence[Measure1D]):
        if not factors:
            raise ConfigError("measure", "product needs at least one factor")
        self.factors = list(factors)

    @property
    def dim(self) -> int:
        return len(self.factors)

    def is_even(self) -> bool:
        return all(m.is_even() for m in self.factors)

    def sample(self, n: int, seed: int) -> np.ndarray:
        """Inverse-CDF sampling, one uniform column per coordinate."""
        rng = np.random.default_rng(seed)
        u = rng.random((n, self.dim))
        cols = [np.asarray(m.quantile(u[:, k]), dtype=float)
                for k, m in enumerate(self.factors)]
        return np.column_stack(cols)

    def truncated_box(self, eps: float = 1e-9):
        return [m.truncated_support(eps) for m in self.factors]

    def to_json(self):
        if self.dim == 1:
            return self.factors[0].to_json()
        return {"product": [m.to_json() for m in self.factors]}

    def __repr__(self):
        return " (x) ".join(repr(m) for m in self.factors)


class Weight:
    """A positive weight a with its centered primitive A on one coordinate.

    A(x) = int_{x0}^{x} a(t) dt + c with x0 the midpoint of the truncated
    support and c chosen so that the mean of A under the measure vanishes.
    """

    def __init__(self, measure: Measure1D, a: Callable, A: Callable,
                 a_d1: Callable | None, tau_id: float, even: bool,
                 support: tuple[float, float]):
        self.measure = measure
        self.a = a
        self.A = A
        self.a_d1 = a_d1
        self.tau_id = tau_id
        self.even = even
        self.support = support

    def var_A(self, quad_nodes=None) -> float:
        """Var of A under the measure (equals E[A^2] since A is centered)."""
        lo, hi = self.support
        if self.measure.is_discrete:
            vals = self.A(self.measure.atoms)
            mean = stable_dot(vals, self.measure.probs)
            return float(stable_dot((vals - mean) ** 2, self.measure.probs))
        nodes, wts = panel_rule(lo, hi, 32, 16)
        pw = wts * self.measure.pdf(nodes)
        pw = pw / stable_sum(pw)
        vals = self.A(nodes)
        mean = stable_dot(vals, pw)
        return float(stable_dot((vals - mean) ** 2, pw))


def unit_weight(measure: Measure1D, eps: float = 1e-9) -> Weight:
    """The a == 1 weight; its centered primitive is x - E[x]."""
    m = measure.mean()
    lo, hi = measure.truncated_support(eps)
    return Weight(
        measure,
        a=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        A=lambda x: np.asarray(x, dtype=float) - m,
        a_d1=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        tau_id=1e-9 * (1.0 + max(abs(lo - m), abs(hi - m))),
        even=measure.is_even(),
        support=(lo, hi),
    )


def centered_primitive(measure: Measure1D, a: Callable,
                       a_d1: Callable | None = None,
                       eps: float = 1e-9,
                       panels: int = 256, order: int = 16) -> Weight:
    """Build the Weight for a positive evaluator ``a`` on one coordinate."""
    lo, hi = measure.truncated_support(eps)
    x0 = 0.5 * (lo + hi)
    probe = np.linspace(lo, hi, 241)
    avals = np.asarray(a(probe), dtype=float)
    if not np.all(np.isfinite(avals)):
        raise ValueError("weight evaluator returned non-finite values")
    if np.any(avals <= 0):
        bad = float(probe[np.argmin(avals)])
        raise ValueError(f"weight must be positive; a({bad:.6g}) <= 0")

    raw_left = CumulativePrimitive(a, lo, hi, panels=panels, order=order)
    offset = raw_left(x0)

    def raw(x):
        return raw_left(x) - offset

    if measure.is_discrete:
        atoms = measure.atoms
        mean_raw = stable_dot(raw(np.clip(atoms, lo, hi)), measure.probs)
    else:
        nodes, wts = panel_rule(lo, hi, order, max(panels // 2, 8))
        pw = wts * measure.pdf(nodes)
        pw = pw / stable_sum(pw)
        mean_raw = stable_dot(raw(nodes), pw)

    c = -float(mean_raw)

    def A(x):
        return raw(x) + c

    scale = 1.0 + float(np.max(np.abs(raw(probe) + c)))
    tau_id = 1e-9 * scale

    even = False
    # quantile root-finding leaves ~1e-9 relative noise in the truncation
    # endpoints, so the symmetry gate cannot be machine-tight
    if measure.is_even() and abs(lo + hi) <= 1e-6 * (1.0 + abs(hi)):
        even = bool(np.max(np.abs(avals - np.asarray(a(-probe), dtype=float)))
                    <= 1e-9 * (1.0 + np.max(np.abs(avals))))

    return Weight(measure, a=a, A=A, a_d1=a_d1, tau_id=tau_id, even=even,
                  support=(lo, hi))


# --- JSON construction ----------------------------------------------------

def _measure1d_from_json(obj: dict, context: str = "measure") -> Measure1D:
    if not isinstance(obj, dict):
        raise ConfigError(context, f"expected an object, got {type(obj).__name__}")
    if "family" not in obj:
        raise ConfigError(f"{context}.family", "missing required field")
    family = obj["family"]
    params = dict(obj.get("params", {}))
    # mixtures and grids may carry their payload beside "family"
    for key in ("components", "grid", "values", "atoms", "weights"):
        if key in obj:
            params.setdefault(key, obj[key])
    extra = set(obj) - {"family", "params", "components", "grid", "values",
                        "atoms", "weights"}
    if extra:
        raise ConfigError(f"{context}.{sorted(extra)[0]}", "unexpected field")

    if family == "gaussian":
        allowed = {"mean", "sigma"}
        for key in params:
            if key not in allowed:
                raise ConfigError(f"{context}.params.{key}", "unexpected field")
        return Gaussian(params.get("mean", 0.0), params.get("sigma", 1.0))
    if family == "uniform":
        allowed = {"lo", "hi"}
        for key in params:
            if key not in allowed:
                raise ConfigError(f"{context}.params.{key}", "unexpected field")
        return Uniform(params.get("lo", 0.0), params.get("hi", 1.0))
    if family == "exponential":
        for key in params:
            if key != "rate":
                raise ConfigError(f"{context}.params.{key}", "unexpected field")
        return Exponential(params.get("rate", 1.0))
    if family == "logistic":
        allowed = {"loc", "scale"}
        for key in params:
            if key not in allowed:
                raise ConfigError(f"{context}.params.{key}", "unexpected field")
        return Logistic(params.get("loc", 0.0), params.get("scale", 1.0))
    if family == "gaussian_scale_mixture":
        comps = params.get("components")
        if not isinstance(comps, list) or not comps:
            raise ConfigError(f"{context}.components", "need a non-empty list")
        pairs = []
        for i, comp in enumerate(comps):
            if not isinstance(comp, dict) or "sigma" not in comp or "weight" not in comp:
                raise ConfigError(
                    f"{context}.components[{i}]", "need sigma and weight"
                )
            pairs.append((float(comp["sigma"]), float(comp["weight"])))
        return GaussianScaleMixture(pairs)
    if family == "grid_density":
        if "grid" not in params or "values" not in params:
            raise ConfigError(f"{context}.grid", "grid_density needs grid and values")
        return GridDensity(params["grid"], params["values"])
    if family == "discrete":
        if "atoms" not in params or "weights" not in params:
            raise ConfigError(f"{context}.atoms", "discrete needs atoms and weights")
        return Discrete(params["atoms"], params["weights"])
    raise ConfigError(f"{context}.family", f"unknown family {family!r}")


def measure_from_json(obj, context: str = "measure") -> ProductMeasure:
    """Build a ProductMeasure from a single-measure dict, a list of factor
    dicts, or {"product": [...]}."""
    if isinstance(obj, dict) and "product" in obj:
        extra = set(obj) - {"product"}
        if extra:
            raise ConfigError(f"{context}.{sorted(extra)[0]}", "unexpected field")
        obj = obj["product"]
    if isinstance(obj, list):
        if not obj:
            raise ConfigError(context, "empty product")
        return ProductMeasure(
            [_measure1d_from_json(m, f"{context}[{i}]") for i, m in enumerate(obj)]
        )
    return ProductMeasure([_measure1d_from_json(obj, context)])


def as_product(measure) -> ProductMeasure:
    if isinstance(measure, ProductMeasure):
        return measure
    return ProductMeasure([measure])
