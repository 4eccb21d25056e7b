"""Low-level shared numerics: cached Gauss-Legendre rules, compensated sums,
and a vectorized cumulative primitive used for centered weights and the
antiderivatives appearing in the normalization constants.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np


@lru_cache(maxsize=None)
def leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1], cached per order."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def panel_rule(lo: float, hi: float, order: int, panels: int):
    """Composite Gauss-Legendre rule on [lo, hi] as flat (nodes, weights)."""
    if not hi > lo:
        raise ValueError(f"empty integration interval [{lo}, {hi}]")
    x, w = leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def stable_sum(values) -> float:
    """Accurate sum: exact fsum for small arrays, fsum of chunk partials
    otherwise. Panel/chunk order is fixed, so results are reproducible."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        return 0.0
    if arr.size <= 2048:
        return math.fsum(arr.tolist())
    n_chunks = (arr.size + 2047) // 2048
    partials = [float(chunk.sum()) for chunk in np.array_split(arr, n_chunks)]
    return math.fsum(partials)


def stable_dot(a, b) -> float:
    return stable_sum(np.asarray(a, dtype=float) * np.asarray(b, dtype=float))


class CumulativePrimitive:
    """Vectorized antiderivative x -> integral of ``fn`` from ``lo`` to x.

    Panel integrals over [lo, hi] are precomputed once; a query point costs
    one prefix lookup plus a partial-panel Gauss rule, all array-at-a-time.
    Queries outside [lo, hi] clamp to the endpoints (the integrand is only
    trusted on the truncated support anyway).
    """

    def __init__(self, fn: Callable, lo: float, hi: float,
                 panels: int = 256, order: int = 16):
        self.fn = fn
        self.lo = float(lo)
        self.hi = float(hi)
        self.edges = np.linspace(self.lo, self.hi, panels + 1)
        gx, gw = leggauss(order)
        mid = 0.5 * (self.edges[:-1] + self.edges[1:])
        half = 0.5 * (self.edges[1:] - self.edges[:-1])
        nodes = mid[:, None] + half[:, None] * gx[None, :]
        vals = np.asarray(fn(nodes.ravel()), dtype=float).reshape(nodes.shape)
        panel_ints = (vals * gw[None, :]).sum(axis=1) * half
        self.prefix = np.concatenate([[0.0], np.cumsum(panel_ints)])
        self._gx = gx
        self._gw = gw

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xq = np.clip(np.atleast_1d(x).ravel(), self.lo, self.hi)
        idx = np.searchsorted(self.edges, xq, side="right") - 1
        idx = np.clip(idx, 0, len(self.edges) - 2)
        left = self.edges[idx]
        mid = 0.5 * (left + xq)
        half = 0.5 * (xq - left)
        nodes = mid[:, None] + half[:, None] * self._gx[None, :]
        vals = np.asarray(self.fn(nodes.ravel()), dtype=float).reshape(nodes.shape)
        partial = (vals * self._gw[None, :]).sum(axis=1) * half
        out = self.prefix[idx] + partial
        if scalar:
            return float(out[0])
        return out.reshape(np.atleast_1d(x).shape)
