"""Instance files: JSON serialization and seeded generation.

An instance bundles a tree with a boundary measure and, optionally, a
vertex measure, named functions (on leaves or on vertices), and a dense
kernel.  The JSON layout::

    {
      "format": "tree-instance",
      "version": 1,
      "tree": {"parents": [null, 0, 0, 1, 1, 2, 2]},
      "nu": [1.0, 1.0, 1.0, 1.0],
      "sigma": [...],                      # optional, per vertex
      "functions": {"g": {"domain": "leaves", "values": [...]}},
      "kernel": {"alpha": 1.0, "entries": [[...], ...]},  # optional
      "meta": {...}                        # free-form, e.g. generator record
    }

All leaf-domain arrays (including ``nu``) are listed in the tree's
canonical depth-first leaf order.  Numbers round-trip bit-exact: floats
are emitted in Python's shortest-repr form, which parses back to the
identical double, so ``save(load(path))`` reproduces the numeric text.

Generation is deterministic from a :class:`GenSpec`: a full tree of the
requested depth whose vertices branch uniformly in a range, and leaf
weights that are either all 1 ("uniform") or independently log-uniform
in a range.  The RNG is numpy's PCG64, recorded in instance metadata
and in CLI reports.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .kernels import Kernel
from .measures import BoundaryMeasure, VertexMeasure, induce_flow
from .tree import Tree, build_from_parents

__all__ = [
    "RNG_ALGORITHM",
    "InstanceFunction",
    "Instance",
    "load_instance",
    "save_instance",
    "GenSpec",
    "generate",
    "make_sigma",
]

RNG_ALGORITHM = "numpy-pcg64"

FORMAT_NAME = "tree-instance"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class InstanceFunction:
    domain: str  # "leaves" or "vertices"
    values: np.ndarray

    def __post_init__(self):
        if self.domain not in ("leaves", "vertices"):
            raise ValidationError(
                f"function domain must be 'leaves' or 'vertices', got {self.domain!r}"
            )
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or not np.all(np.isfinite(arr)):
            raise ValidationError("function values must be a finite 1-d array")
        object.__setattr__(self, "values", arr)


@dataclass
class Instance:
    tree: Tree
    nu: BoundaryMeasure
    sigma: VertexMeasure | None = None
    functions: dict[str, InstanceFunction] = field(default_factory=dict)
    kernel: Kernel | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = self.tree
        if self.nu.nu.size != t.n_leaves:
            raise ValidationError(
                f"nu has {self.nu.nu.size} entries, tree has {t.n_leaves} leaves"
            )
        if self.sigma is not None and self.sigma.sigma.size != t.n_vertices:
            raise ValidationError(
                f"sigma has {self.sigma.sigma.size} entries, "
                f"tree has {t.n_vertices} vertices"
            )
        for name, fn in self.functions.items():
            want = t.n_leaves if fn.domain == "leaves" else t.n_vertices
            if fn.values.size != want:
                raise ValidationError(
                    f"function {name!r} on {fn.domain} has {fn.values.size} "
                    f"entries, expected {want}"
                )
        if self.kernel is not None and self.kernel.entries.shape != (
            t.n_vertices,
            t.n_leaves,
        ):
            raise ValidationError(
                f"kernel is {self.kernel.entries.shape}, expected "
                f"({t.n_vertices}, {t.n_leaves})"
            )


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise ParseError(f"missing key {key!r} in {where}")
    val = doc[key]
    if kind is not None and not isinstance(val, kind):
        raise ParseError(f"key {key!r} in {where} has the wrong type")
    return val


def load_instance(path: str | Path) -> Instance:
    """Load and validate an instance file."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    if _require(doc, "format", str, "instance") != FORMAT_NAME:
        raise ParseError(f"{path}: unknown format {doc['format']!r}")
    if _require(doc, "version", int, "instance") != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported version {doc['version']!r}")
    tree_doc = _require(doc, "tree", dict, "instance")
    parents = _require(tree_doc, "parents", list, "tree")
    tree = build_from_parents(parents)
    nu = BoundaryMeasure(np.asarray(_require(doc, "nu", list, "instance"), dtype=np.float64))
    sigma = None
    if doc.get("sigma") is not None:
        sigma = VertexMeasure(np.asarray(doc["sigma"], dtype=np.float64))
    functions: dict[str, InstanceFunction] = {}
    for name, fn_doc in (doc.get("functions") or {}).items():
        if not isinstance(fn_doc, dict):
            raise ParseError(f"function {name!r} must be an object")
        functions[name] = InstanceFunction(
            _require(fn_doc, "domain", str, f"function {name!r}"),
            np.asarray(_require(fn_doc, "values", list, f"function {name!r}"),
                       dtype=np.float64),
        )
    kernel = None
    if doc.get("kernel") is not None:
        k_doc = doc["kernel"]
        if not isinstance(k_doc, dict):
            raise ParseError("kernel must be an object")
        kernel = Kernel(
            np.asarray(_require(k_doc, "entries", list, "kernel"), dtype=np.float64),
            float(_require(k_doc, "alpha", (int, float), "kernel")),
        )
    meta = doc.get("meta") or {}
    if not isinstance(meta, dict):
        raise ParseError("meta must be an object")
    return Instance(tree, nu, sigma, functions, kernel, meta)


def save_instance(inst: Instance, path: str | Path) -> None:
    """Write an instance file (deterministic layout, shortest-repr floats)."""
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "tree": {
            "parents": [None if p < 0 else int(p) for p in inst.tree.parent]
        },
        "nu": inst.nu.nu.tolist(),
        "sigma": None if inst.sigma is None else inst.sigma.sigma.tolist(),
        "functions": {
            name: {"domain": fn.domain, "values": fn.values.tolist()}
            for name, fn in sorted(inst.functions.items())
        },
        "kernel": None
        if inst.kernel is None
        else {"alpha": inst.kernel.alpha, "entries": inst.kernel.entries.tolist()},
        "meta": inst.meta,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---- generation ---------------------------------------------------------


@dataclass(frozen=True)
class GenSpec:
    """Recipe for a random full tree with a boundary measure."""

    depth: int
    branching: tuple[int, int] = (2, 2)
    nu_law: str = "uniform"
    nu_range: tuple[float, float] = (0.1, 10.0)
    seed: int = 0

    def __post_init__(self):
        if self.depth < 0:
            raise ValidationError("depth must be nonnegative")
        lo, hi = self.branching
        if not (1 <= lo <= hi):
            raise ValidationError("branching range must satisfy 1 <= lo <= hi")
        if self.nu_law not in ("uniform", "loguniform"):
            raise ValidationError(
                f"nu_law must be 'uniform' or 'loguniform', got {self.nu_law!r}"
            )
        a, b = self.nu_range
        if not (0.0 < a <= b):
            raise ValidationError("nu_range must satisfy 0 < a <= b")


def generate(spec: GenSpec) -> Instance:
    """Deterministically generate an instance from a :class:`GenSpec`."""
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.branching
    parents: list[int | None] = [None]
    frontier = [0]
    for _ in range(spec.depth):
        nxt = []
        counts = rng.integers(lo, hi + 1, size=len(frontier))
        for v, c in zip(frontier, counts):
            for _ in range(int(c)):
                nxt.append(len(parents))
                parents.append(v)
        frontier = nxt
    tree = build_from_parents(parents)
    if spec.nu_law == "uniform":
        nu = np.ones(tree.n_leaves)
    else:
        a, b = spec.nu_range
        nu = np.exp(rng.uniform(np.log(a), np.log(b), size=tree.n_leaves))
    meta = {
        "generator": {
            "depth": spec.depth,
            "branching": list(spec.branching),
            "nu_law": spec.nu_law,
            "nu_range": list(spec.nu_range),
            "seed": spec.seed,
            "rng": RNG_ALGORITHM,
        }
    }
    return Instance(tree, BoundaryMeasure(nu), meta=meta)


def make_sigma(t: Tree, nu: BoundaryMeasure, law: str, seed: int = 0) -> VertexMeasure:
    """Vertex measures used by the verification batteries.

    ``flow`` copies the induced flow, ``random`` draws independent
    uniform weights, ``spike`` concentrates the total boundary mass on
    one random vertex.
    """
    rng = np.random.default_rng(seed)
    if law == "flow":
        return VertexMeasure(induce_flow(t, nu).m)
    if law == "random":
        return VertexMeasure(rng.random(t.n_vertices))
    if law == "spike":
        sig = np.zeros(t.n_vertices)
        sig[int(rng.integers(t.n_vertices))] = float(nu.nu.sum())
        return VertexMeasure(sig)
    raise ValidationError(f"unknown sigma law {law!r}")
