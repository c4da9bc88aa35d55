"""Measures on trees and the aggregation passes they share.

Three kinds of weights appear throughout the package:

* a *boundary measure* ``nu``: one positive weight per leaf,
* a *flow measure* ``m``: one positive weight per vertex obeying the
  conservation law ``m(x) = sum of m over the children of x``,
* a plain *vertex measure* ``sigma``: nonnegative, no conservation.

All per-leaf arrays follow the tree's canonical leaf order; per-vertex
arrays are indexed by vertex id.

Every sum over a boundary sector or a subtree in this package goes
through :func:`sector_leaf_sums` / :func:`subtree_sums`, which accumulate
level by level in one fixed order (children in id order).  Using a single
summation order is deliberate: the flow induced from ``nu`` then passes
:func:`check_flow` by construction, and the maximal-operator comparisons
in :mod:`treeharmonics.harmonic` hold pointwise without tolerances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NoInternalVertices,
    RadiusOutOfRange,
    ValidationError,
)
from .tree import Tree

__all__ = [
    "BoundaryMeasure",
    "FlowMeasure",
    "VertexMeasure",
    "FlowCheck",
    "sector_leaf_sums",
    "subtree_sums",
    "ancestor_cumsum",
    "induce_flow",
    "check_flow",
    "doubling_constants",
    "boundary_ball",
    "boundary_doubling_ratio",
]


def _as_float_array(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"{what} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class BoundaryMeasure:
    """Strictly positive leaf weights, in canonical leaf order."""

    nu: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.nu, "boundary measure")
        if arr.size and arr.min() <= 0.0:
            raise ValidationError("boundary measure must be strictly positive")
        object.__setattr__(self, "nu", arr)


@dataclass(frozen=True)
class FlowMeasure:
    """Strictly positive vertex weights; conservation is checked by check_flow."""

    m: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.m, "flow measure")
        if arr.size and arr.min() <= 0.0:
            raise ValidationError("flow measure must be strictly positive")
        object.__setattr__(self, "m", arr)


@dataclass(frozen=True)
class VertexMeasure:
    """Nonnegative vertex weights with no conservation requirement."""

    sigma: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.sigma, "vertex measure")
        if arr.size and arr.min() < 0.0:
            raise ValidationError("vertex measure must be nonnegative")
        object.__setattr__(self, "sigma", arr)


# ---- aggregation passes ------------------------------------------------


def sector_leaf_sums(t: Tree, leaf_terms: np.ndarray) -> np.ndarray:
    """Per-vertex sums of ``leaf_terms`` over each boundary sector.

    Accumulates one level at a time, adding children in id order, so the
    result at a parent is exactly the floating-point sum of the results
    at its children.
    """
    if leaf_terms.shape != (t.n_leaves,):
        raise DimensionMismatch(
            f"expected {t.n_leaves} leaf values, got {leaf_terms.shape}"
        )
    out = np.zeros(t.n_vertices, dtype=np.float64)
    out[t.leaves] = leaf_terms
    parent = t.parent
    for k in range(1, t.depth + 1):
        kids = t.by_level[k - 1]
        out += np.bincount(parent[kids], weights=out[kids], minlength=t.n_vertices)
    return out


def subtree_sums(t: Tree, vertex_values: np.ndarray) -> np.ndarray:
    """Per-vertex sums of ``vertex_values`` over each full subtree."""
    if vertex_values.shape != (t.n_vertices,):
        raise DimensionMismatch(
            f"expected {t.n_vertices} vertex values, got {vertex_values.shape}"
        )
    out = np.array(vertex_values, dtype=np.float64)
    parent = t.parent
    for k in range(1, t.depth + 1):
        kids = t.by_level[k - 1]
        out += np.bincount(parent[kids], weights=out[kids], minlength=t.n_vertices)
    return out


def ancestor_cumsum(t: Tree, vertex_values: np.ndarray) -> np.ndarray:
    """At each vertex, the sum of ``vertex_values`` over its ancestor path.

    The path includes the vertex itself and the top.
    """
    if vertex_values.shape != (t.n_vertices,):
        raise DimensionMismatch(
            f"expected {t.n_vertices} vertex values, got {vertex_values.shape}"
        )
    out = np.array(vertex_values, dtype=np.float64)
    parent = t.parent
    for k in range(t.depth - 1, -1, -1):
        v = t.by_level[k]
        out[v] += out[parent[v]]
    return out


# ---- flow measures -----------------------------------------------------


def induce_flow(t: Tree, nu: BoundaryMeasure) -> FlowMeasure:
    """The flow determined by a boundary measure: ``m(x) = nu(sector of x)``."""
    if nu.nu.shape != (t.n_leaves,):
        raise DimensionMismatch(
            f"boundary measure has {nu.nu.size} entries, tree has {t.n_leaves} leaves"
        )
    return FlowMeasure(sector_leaf_sums(t, nu.nu))


@dataclass(frozen=True)
class FlowCheck:
    ok: bool
    worst_vertex: int
    max_rel_err: float


def check_flow(t: Tree, m: FlowMeasure, tol: float = 1e-12) -> FlowCheck:
    """Verify conservation ``m(x) = sum over children`` within ``tol`` (relative)."""
    arr = m.m
    if arr.shape != (t.n_vertices,):
        raise DimensionMismatch(
            f"flow has {arr.size} entries, tree has {t.n_vertices} vertices"
        )
    kid_sums = np.zeros(t.n_vertices, dtype=np.float64)
    parent = t.parent
    for k in range(1, t.depth + 1):
        kids = t.by_level[k - 1]
        kid_sums += np.bincount(parent[kids], weights=arr[kids], minlength=t.n_vertices)
    internal = np.flatnonzero(t.leaf_pos < 0)
    if internal.size == 0:
        return FlowCheck(True, -1, 0.0)
    rel = np.abs(arr[internal] - kid_sums[internal]) / arr[internal]
    worst = int(np.argmax(rel))
    return FlowCheck(bool(rel[worst] <= tol), int(internal[worst]), float(rel[worst]))


def doubling_constants(t: Tree, m: FlowMeasure) -> tuple[float, float]:
    """Extreme parent/child flow ratios ``(c1, c2)``.

    ``c2 <= m(parent(x)) / m(x) <= c1`` over all non-top vertices.  The
    flow is locally doubling exactly when ``c2 > 1``, which holds whenever
    the tree branches at least twice everywhere.
    """
    if m.m.shape != (t.n_vertices,):
        raise DimensionMismatch(
            f"flow has {m.m.size} entries, tree has {t.n_vertices} vertices"
        )
    if t.n_vertices == 1:
        raise NoInternalVertices("a single-vertex tree has no parent/child pairs")
    ratios = _edge_ratios(t, m.m)
    return float(ratios.max()), float(ratios.min())


def _edge_ratios(t: Tree, m: np.ndarray) -> np.ndarray:
    nonroot = np.flatnonzero(t.parent >= 0)
    return m[t.parent[nonroot]] / m[nonroot]


# ---- boundary balls ----------------------------------------------------


def boundary_ball(t: Tree, nu: BoundaryMeasure, omega: int, r: float) -> np.ndarray:
    """Leaves within Gromov distance ``r`` of leaf ``omega``.

    The ball of radius ``r`` is the boundary sector of the ancestor of
    ``omega`` at level ``floor(log r)``; the radius is admissible when
    that level lies inside the truncation.
    """
    del nu  # the ball is purely metric; the signature mirrors the ratio below
    if r <= 0.0:
        raise RadiusOutOfRange("radius must be positive")
    k = math.floor(math.log(r))
    if k < 0 or k > t.depth:
        raise RadiusOutOfRange(
            f"floor(log r) = {k} outside the level range 0..{t.depth}"
        )
    return t.boundary_sector(t.phi(omega, k))


def boundary_doubling_ratio(t: Tree, nu: BoundaryMeasure) -> float:
    """Largest ratio ``nu(B(omega, 2r)) / nu(B(omega, r))`` over admissible balls.

    Doubling a radius either keeps ``floor(log r)`` or raises it by one,
    so the distinct ratios are exactly 1 and the parent/child flow ratios
    along leaf paths; the maximum is computed from those edges directly.
    """
    m = induce_flow(t, nu).m
    if t.n_vertices == 1:
        return 1.0
    # same expression as doubling_constants, so the bound ratio <= c1 is exact
    return float(max(1.0, _edge_ratios(t, m).max()))
