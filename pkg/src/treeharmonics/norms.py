"""Norms on the boundary and on the tree.

Exponents are plain floats with ``math.inf`` for the sup norm; anything
below 1 raises :class:`~treeharmonics.errors.InvalidExponent`.

``weak_l1_tree`` evaluates the weak quasi-norm exactly: the supremum of
``lam * sigma({|f| > lam})`` is attained as ``lam`` approaches one of the
finitely many distinct values of ``|f|`` from below, so it equals the
maximum over distinct values ``v`` of ``v * sigma({|f| >= v})``.

``hardy_norm`` is the level-sup norm: the maximum over levels of the
flow-weighted p-sum of the function on that level (for ``p = inf``, the
plain sup over all vertices).  ``bmo_norm`` is the largest sector mean
oscillation; ties on the maximizing vertex break toward the lowest
level, then the smallest id.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, InvalidExponent
from .measures import BoundaryMeasure, FlowMeasure, VertexMeasure, sector_leaf_sums
from .tree import Tree

__all__ = [
    "lp_boundary",
    "lp_tree",
    "weak_l1_tree",
    "hardy_norm",
    "BmoNorm",
    "bmo_norm",
    "sector_mean",
]


def _check_p(p: float) -> float:
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise InvalidExponent(f"exponent must lie in [1, inf], got {p}")
    return p


def _weighted_p_norm(values: np.ndarray, weights: np.ndarray, p: float) -> float:
    if math.isinf(p):
        return float(np.abs(values).max()) if values.size else 0.0
    return float(np.dot(np.abs(values) ** p, weights) ** (1.0 / p))


def lp_boundary(g: np.ndarray, nu: BoundaryMeasure, p: float) -> float:
    """``L^p`` norm of boundary data against ``nu``."""
    p = _check_p(p)
    g = np.asarray(g, dtype=np.float64)
    if g.shape != nu.nu.shape:
        raise DimensionMismatch(
            f"function has shape {g.shape}, measure has shape {nu.nu.shape}"
        )
    return _weighted_p_norm(g, nu.nu, p)


def lp_tree(f: np.ndarray, sigma: VertexMeasure, p: float) -> float:
    """``L^p`` norm of a vertex function against ``sigma``."""
    p = _check_p(p)
    f = np.asarray(f, dtype=np.float64)
    if f.shape != sigma.sigma.shape:
        raise DimensionMismatch(
            f"function has shape {f.shape}, measure has shape {sigma.sigma.shape}"
        )
    return _weighted_p_norm(f, sigma.sigma, p)


def weak_l1_tree(f: np.ndarray, sigma: VertexMeasure) -> float:
    """``sup over lam of lam * sigma({|f| > lam})``, evaluated at the breakpoints."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != sigma.sigma.shape:
        raise DimensionMismatch(
            f"function has shape {f.shape}, measure has shape {sigma.sigma.shape}"
        )
    absf = np.abs(f)
    order = np.argsort(-absf, kind="stable")
    vals = absf[order]
    masses = np.cumsum(sigma.sigma[order])
    # per distinct value v, masses at the last index of its run = sigma({|f| >= v})
    idx = np.concatenate([np.flatnonzero(np.diff(vals) != 0.0), [vals.size - 1]])
    cand = vals[idx]
    keep = cand > 0.0
    if not keep.any():
        return 0.0
    return float((cand[keep] * masses[idx][keep]).max())


def hardy_norm(t: Tree, m: FlowMeasure, f: np.ndarray, p: float) -> float:
    """Level-sup norm: max over levels of the flow-weighted p-sum on that level."""
    p = _check_p(p)
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (t.n_vertices,):
        raise DimensionMismatch(
            f"expected {t.n_vertices} vertex values, got shape {f.shape}"
        )
    if math.isinf(p):
        return float(np.abs(f).max())
    terms = np.abs(f) ** p * m.m
    best = 0.0
    for k in range(t.depth + 1):
        v = t.by_level[k]
        best = max(best, float(terms[v].sum()))
    return best ** (1.0 / p)


class BmoNorm(NamedTuple):
    value: float
    vertex: int


def bmo_norm(t: Tree, nu: BoundaryMeasure, b: np.ndarray) -> BmoNorm:
    """Largest sector mean oscillation of boundary data, with its vertex.

    For each vertex the oscillation is the ``nu``-average over its sector
    of ``|b - sector mean|``.  Ties break toward the lowest level, then
    the smallest vertex id.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (t.n_leaves,):
        raise DimensionMismatch(
            f"expected {t.n_leaves} leaf values, got shape {b.shape}"
        )
    w = nu.nu
    m = sector_leaf_sums(t, w)
    means = sector_leaf_sums(t, b * w) / m
    osc = np.empty(t.n_vertices, dtype=np.float64)
    for x in range(t.n_vertices):
        lo, hi = t.leaf_lo[x], t.leaf_hi[x]
        osc[x] = np.dot(np.abs(b[lo:hi] - means[x]), w[lo:hi]) / m[x]
    best = float(osc.max())
    ties = np.flatnonzero(osc == best)
    lvls = t.level[ties]
    pick = ties[np.lexsort((ties, lvls))][0]
    return BmoNorm(best, int(pick))


def sector_mean(t: Tree, nu: BoundaryMeasure, b: np.ndarray, x: int) -> float:
    """``nu``-average of boundary data over the sector of ``x``."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (t.n_leaves,):
        raise DimensionMismatch(
            f"expected {t.n_leaves} leaf values, got shape {b.shape}"
        )
    t._check_vertex(x)
    num = sector_leaf_sums(t, b * nu.nu)
    m = sector_leaf_sums(t, nu.nu)
    return float(num[x] / m[x])
