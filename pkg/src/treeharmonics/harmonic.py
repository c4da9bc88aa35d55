"""Averaging operators on a tree: Laplacian, Poisson extension, maximal functions.

The transition operator at an internal vertex averages the values on its
children with flow weights ``m(child)/m(parent)``; the Laplacian is
``identity - transition`` and vanishes on leaves by convention (a
truncation has no data below level 0).  A function is harmonic when its
Laplacian vanishes on the internal vertices, and every harmonic function
is the Poisson extension of its own leaf restriction.

Two floating-point conventions matter here and are relied upon by the
tests:

* ``poisson_extend`` writes the leaf values of ``g`` through unchanged
  (a sector average over a single leaf is exactly ``g``), so leaf
  recovery is exact, and its internal numerators reuse the same
  bottom-up summation as the induced flow, so the extension of the
  constant 1 is exactly 1 everywhere.
* ``hl_maximal`` treats the singleton ball the same way and builds its
  averages from the same sums, which makes the pointwise domination of
  the radial maximal function by the Hardy-Littlewood one hold without
  any tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .measures import BoundaryMeasure, FlowMeasure, induce_flow, sector_leaf_sums
from .tree import Tree

__all__ = [
    "laplacian_apply",
    "transition_apply",
    "poisson_extend",
    "HarmonicityCheck",
    "is_harmonic",
    "recover_boundary",
    "hl_maximal",
    "radial_maximal",
]


def _check_vertex_fn(t: Tree, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (t.n_vertices,):
        raise DimensionMismatch(
            f"expected {t.n_vertices} vertex values, got shape {f.shape}"
        )
    return f


def _check_leaf_fn(t: Tree, g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (t.n_leaves,):
        raise DimensionMismatch(
            f"expected {t.n_leaves} leaf values, got shape {g.shape}"
        )
    return g


def transition_apply(t: Tree, m: FlowMeasure, f: np.ndarray) -> np.ndarray:
    """One step of the flow-weighted averaging operator (identity on leaves)."""
    f = _check_vertex_fn(t, f)
    arr = m.m
    if arr.shape != (t.n_vertices,):
        raise DimensionMismatch("flow measure does not match the tree")
    out = np.array(f)
    weighted = np.zeros(t.n_vertices, dtype=np.float64)
    parent = t.parent
    terms = f * arr
    for k in range(1, t.depth + 1):
        kids = t.by_level[k - 1]
        weighted += np.bincount(parent[kids], weights=terms[kids], minlength=t.n_vertices)
        v = t.by_level[k]
        out[v] = weighted[v] / arr[v]
    return out


def laplacian_apply(t: Tree, m: FlowMeasure, f: np.ndarray) -> np.ndarray:
    """``f - transition(f)``; zero on leaves."""
    return _check_vertex_fn(t, f) - transition_apply(t, m, f)


def poisson_extend(t: Tree, nu: BoundaryMeasure, g: np.ndarray) -> np.ndarray:
    """Harmonic extension of boundary data: sector averages of ``g`` against ``nu``."""
    g = _check_leaf_fn(t, g)
    m = induce_flow(t, nu).m
    num = sector_leaf_sums(t, g * nu.nu)
    out = num / m
    out[t.leaves] = g  # singleton averages, written through exactly
    return out


@dataclass(frozen=True)
class HarmonicityCheck:
    ok: bool
    worst_vertex: int
    max_residual: float


def is_harmonic(t: Tree, m: FlowMeasure, f: np.ndarray, tol: float = 1e-10) -> HarmonicityCheck:
    """Check ``laplacian(f) == 0`` on internal vertices, relative to ``max(1, |f|)``."""
    res = laplacian_apply(t, m, f)
    f = np.asarray(f, dtype=np.float64)
    internal = np.flatnonzero(t.leaf_pos < 0)
    if internal.size == 0:
        return HarmonicityCheck(True, -1, 0.0)
    scaled = np.abs(res[internal]) / np.maximum(1.0, np.abs(f[internal]))
    worst = int(np.argmax(scaled))
    return HarmonicityCheck(
        bool(scaled[worst] <= tol), int(internal[worst]), float(scaled[worst])
    )


def recover_boundary(t: Tree, f: np.ndarray) -> np.ndarray:
    """Leaf restriction of a vertex function, in canonical leaf order."""
    return _check_vertex_fn(t, f)[t.leaves]


def hl_maximal(t: Tree, nu: BoundaryMeasure, g: np.ndarray) -> np.ndarray:
    """Hardy-Littlewood maximal function of boundary data.

    At each leaf, the maximum over its ancestor chain (the leaf's
    singleton sector up to the whole boundary) of the ``nu``-average of
    ``|g|`` over the ancestor's sector.
    """
    g = _check_leaf_fn(t, g)
    m = induce_flow(t, nu).m
    absg = np.abs(g)
    if t.depth == 0:
        return absg.copy()
    avg = sector_leaf_sums(t, absg * nu.nu) / m
    best = np.empty(t.n_vertices, dtype=np.float64)
    best[t.top] = avg[t.top]
    parent = t.parent
    for k in range(t.depth - 1, 0, -1):
        v = t.by_level[k]
        best[v] = np.maximum(avg[v], best[parent[v]])
    leaves = t.leaves
    return np.maximum(absg, best[parent[leaves]])


def radial_maximal(t: Tree, f: np.ndarray) -> np.ndarray:
    """At each leaf, the maximum of ``|f|`` along the leaf-to-top path."""
    f = _check_vertex_fn(t, f)
    absf = np.abs(f)
    best = np.empty(t.n_vertices, dtype=np.float64)
    best[t.top] = absf[t.top]
    parent = t.parent
    for k in range(t.depth - 1, -1, -1):
        v = t.by_level[k]
        best[v] = np.maximum(absf[v], best[parent[v]])
    return best[t.leaves]
