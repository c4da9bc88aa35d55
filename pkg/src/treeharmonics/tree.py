"""Finite rooted trees with all leaves on a common bottom level.

A tree here is a truncation of an infinite rooted tree: the unique
parentless vertex (the *top*) sits at the highest level, every other
vertex has exactly one parent one level up, and every childless vertex
(a *leaf*) sits at level 0.  Levels count height above the leaves, so
``level(parent(x)) == level(x) + 1`` and ``level(top)`` is the depth.

Vertices are integer ids ``0 .. n-1`` given by the position in the
parent list.  Leaves carry a second index, their *position*: the tree
fixes one canonical depth-first order of the leaves (children visited in
id order), and every per-leaf array in this package is aligned with
``Tree.leaves``.  In that order the boundary sector of any vertex is a
contiguous slice ``leaf_lo[x]:leaf_hi[x]``, which is what makes the
aggregation helpers in :mod:`treeharmonics.measures` cheap.

The leaf boundary carries the ultrametric ``rho(a, b) = exp(level(a^b))``
for distinct leaves (``a^b`` the confluent, i.e. lowest common ancestor)
and 0 on the diagonal.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import (
    CycleDetected,
    EmptyInput,
    LevelOverflow,
    LevelUnderflow,
    MixedLeafLevels,
    MultipleRoots,
    ValidationError,
)

__all__ = ["Tree", "build_from_parents"]


def _parse_parents(parents) -> np.ndarray:
    if parents is None:
        raise EmptyInput("parent list is missing")
    seq = list(parents)
    if len(seq) == 0:
        raise EmptyInput("parent list is empty")
    n = len(seq)
    out = np.empty(n, dtype=np.int64)
    for i, p in enumerate(seq):
        if p is None:
            out[i] = -1
            continue
        p = int(p)
        if p == -1:
            out[i] = -1
        elif 0 <= p < n:
            out[i] = p
        else:
            raise ValidationError(f"parent of vertex {i} is {p}, outside 0..{n - 1}")
        if out[i] == i:
            raise CycleDetected(f"vertex {i} is its own parent")
    return out


class Tree:
    """Immutable rooted tree built from a parent list.

    Use :func:`build_from_parents` (or the constructor directly) with a
    sequence of parent ids where the top vertex has parent ``None``
    (``-1`` is accepted as an alias).
    """

    def __init__(self, parents: Sequence[int | None]):
        parent = _parse_parents(parents)
        n = parent.size

        roots = np.flatnonzero(parent == -1)
        if roots.size > 1:
            raise MultipleRoots(f"vertices {roots.tolist()} all lack a parent")
        if roots.size == 0:
            raise CycleDetected("every vertex has a parent, so the graph contains a cycle")
        top = int(roots[0])

        # children in id order, CSR layout
        is_child = parent >= 0
        child_of = np.flatnonzero(is_child)  # ascending ids
        order = np.argsort(parent[child_of], kind="stable")
        child_ids = child_of[order]
        counts = np.bincount(parent[child_of], minlength=n)
        child_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=child_ptr[1:])

        # distance from the top: resolve one level per sweep; detects cycles
        dist = np.full(n, -1, dtype=np.int64)
        dist[top] = 0
        nonroot = np.flatnonzero(parent >= 0)
        for _ in range(n):
            pending = nonroot[dist[nonroot] < 0]
            if pending.size == 0:
                break
            ready = pending[dist[parent[pending]] >= 0]
            if ready.size == 0:
                raise CycleDetected("some vertices are not reachable from the top")
            dist[ready] = dist[parent[ready]] + 1

        leaf_mask = counts == 0
        leaf_dists = np.unique(dist[leaf_mask])
        if leaf_dists.size != 1:
            raise MixedLeafLevels(
                f"childless vertices at distances {leaf_dists.tolist()} from the top"
            )
        depth = int(leaf_dists[0])
        level = depth - dist

        # vertices grouped by level, ascending id inside each level
        by_id = np.argsort(level, kind="stable")
        lvl_counts = np.bincount(level, minlength=depth + 1)
        lvl_ptr = np.zeros(depth + 2, dtype=np.int64)
        np.cumsum(lvl_counts, out=lvl_ptr[1:])
        by_level = [by_id[lvl_ptr[k]:lvl_ptr[k + 1]] for k in range(depth + 1)]

        # rank of each child inside its parent's (id-ordered) child list
        child_rank = np.zeros(n, dtype=np.int64)
        child_rank[child_ids] = np.arange(child_ids.size) - np.repeat(
            child_ptr[:-1], counts
        )

        # depth-first position per level: order by (parent position, child rank)
        pos = np.zeros(n, dtype=np.int64)
        level_sorted: list[np.ndarray] = [None] * (depth + 1)  # type: ignore[list-item]
        level_sorted[depth] = np.array([top], dtype=np.int64)
        for k in range(depth - 1, -1, -1):
            v = by_level[k]
            dfs = v[np.lexsort((child_rank[v], pos[parent[v]]))]
            pos[dfs] = np.arange(dfs.size)
            level_sorted[k] = dfs

        leaves = level_sorted[0]
        n_leaves = leaves.size
        leaf_pos = np.full(n, -1, dtype=np.int64)
        leaf_pos[leaves] = np.arange(n_leaves)

        # leaf counts per subtree, then contiguous leaf intervals per vertex
        leaf_count = leaf_mask.astype(np.int64)
        for k in range(1, depth + 1):
            kids = by_level[k - 1]
            np.add.at(leaf_count, parent[kids], leaf_count[kids])
        leaf_lo = np.zeros(n, dtype=np.int64)
        leaf_hi = np.zeros(n, dtype=np.int64)
        for k in range(depth + 1):
            v = level_sorted[k]
            ends = np.cumsum(leaf_count[v])
            leaf_hi[v] = ends
            leaf_lo[v] = ends - leaf_count[v]

        # vertex preorder: by first leaf, ancestors before descendants
        pre = np.lexsort((-level, leaf_lo))
        pre_pos = np.empty(n, dtype=np.int64)
        pre_pos[pre] = np.arange(n)
        subtree_size = np.ones(n, dtype=np.int64)
        for k in range(1, depth + 1):
            kids = by_level[k - 1]
            np.add.at(subtree_size, parent[kids], subtree_size[kids])

        # ancestor table: anc[leaf position, j] = vertex at level j over that leaf
        anc = np.empty((n_leaves, depth + 1), dtype=np.int64)
        for k in range(depth + 1):
            v = level_sorted[k]
            anc[:, k] = np.repeat(v, leaf_count[v])

        self.parent = parent
        self.level = level
        self.top = top
        self.depth = depth
        self.n_vertices = n
        self.n_leaves = n_leaves
        self.leaves = leaves
        self.leaf_pos = leaf_pos
        self.leaf_lo = leaf_lo
        self.leaf_hi = leaf_hi
        self.by_level = by_level
        self.level_sorted = level_sorted
        self.child_ptr = child_ptr
        self.child_ids = child_ids
        self.subtree_size = subtree_size
        self.ancestors = anc
        self._pre = pre
        self._pre_pos = pre_pos

    # ---- basic structure -------------------------------------------

    def children(self, x: int) -> np.ndarray:
        """Ordered children of ``x`` (empty for leaves)."""
        return self.child_ids[self.child_ptr[x]:self.child_ptr[x + 1]]

    def is_leaf(self, x: int) -> bool:
        return self.leaf_pos[x] >= 0

    def check_min_branching(self, k: int) -> bool:
        """True iff every internal vertex has at least ``k`` children."""
        counts = self.child_ptr[1:] - self.child_ptr[:-1]
        internal = counts > 0
        if not internal.any():
            return True
        return bool(counts[internal].min() >= k)

    # ---- level walks -----------------------------------------------

    def predecessor_n(self, x: int, n: int) -> int:
        """The ancestor ``n`` levels above ``x``."""
        self._check_vertex(x)
        if n < 0:
            raise LevelUnderflow("negative ancestor distance")
        if self.level[x] + n > self.depth:
            raise LevelOverflow(
                f"vertex {x} at level {self.level[x]} has no ancestor {n} levels up"
            )
        v = x
        for _ in range(n):
            v = int(self.parent[v])
        return v

    def successors_n(self, x: int, n: int) -> np.ndarray:
        """All descendants exactly ``n`` levels below ``x``, in depth-first order."""
        self._check_vertex(x)
        if n < 0:
            raise LevelOverflow("negative descendant distance")
        lvl = self.level[x] - n
        if lvl < 0:
            raise LevelUnderflow(
                f"vertex {x} at level {self.level[x]} has no descendants {n} levels down"
            )
        v = self.level_sorted[lvl]
        lo = np.searchsorted(self.leaf_lo[v], self.leaf_lo[x], side="left")
        hi = np.searchsorted(self.leaf_lo[v], self.leaf_hi[x], side="left")
        return v[lo:hi]

    def phi(self, omega: int, j: int) -> int:
        """The unique ancestor of leaf ``omega`` at level ``j``."""
        p = self.leaf_pos[omega]
        if p < 0:
            raise ValidationError(f"vertex {omega} is not a leaf")
        if j < 0:
            raise LevelUnderflow("requested level below 0")
        if j > self.depth:
            raise LevelOverflow(f"requested level {j} above the top ({self.depth})")
        return int(self.ancestors[p, j])

    # ---- sectors ----------------------------------------------------

    def sector(self, x: int) -> np.ndarray:
        """All vertices of the subtree under ``x`` (including ``x``), preorder."""
        self._check_vertex(x)
        i = self._pre_pos[x]
        return self._pre[i:i + self.subtree_size[x]]

    def boundary_sector(self, x: int) -> np.ndarray:
        """Leaf ids under ``x``, in canonical leaf order."""
        self._check_vertex(x)
        return self.leaves[self.leaf_lo[x]:self.leaf_hi[x]]

    # ---- boundary metric --------------------------------------------

    def confluent(self, a: int, b: int) -> int:
        """Lowest common ancestor of two vertices."""
        self._check_vertex(a)
        self._check_vertex(b)
        while self.level[a] < self.level[b]:
            a = int(self.parent[a])
        while self.level[b] < self.level[a]:
            b = int(self.parent[b])
        while a != b:
            a = int(self.parent[a])
            b = int(self.parent[b])
        return a

    def gromov_distance(self, a: int, b: int) -> float:
        """``exp(level(a^b))`` for distinct leaves, 0 on the diagonal."""
        if a == b:
            self._check_vertex(a)
            return 0.0
        return math.exp(self.level[self.confluent(a, b)])

    # ---- misc -------------------------------------------------------

    def _check_vertex(self, x: int) -> None:
        if not 0 <= x < self.n_vertices:
            raise ValidationError(f"vertex id {x} outside 0..{self.n_vertices - 1}")

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"Tree(n_vertices={self.n_vertices}, n_leaves={self.n_leaves}, "
            f"depth={self.depth})"
        )


def build_from_parents(parents: Sequence[int | None]) -> Tree:
    """Build a :class:`Tree` from a parent list (``None``/``-1`` marks the top)."""
    return Tree(parents)
