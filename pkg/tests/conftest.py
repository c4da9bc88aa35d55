r"""Shared fixtures.

The workhorse is the depth-2 uniform binary tree

        0            level 2 (top)
       / \
      1   2          level 1
     / \ / \
    3  4 5  6        level 0 (leaves, depth-first order 3,4,5,6)

with unit leaf weights, so the induced flow is m = (4,2,2,1,1,1,1).
All hand-computed numbers in the test modules refer to this picture.
``cherry`` is the one-level tree with two leaves and skewed weights
(1,3), ``chain3`` a branchless path of four vertices.
"""
from pathlib import Path

import numpy as np
import pytest

import treeharmonics as th

FIXTURE_DIR = Path(__file__).parent / "fixtures"

BINARY2_PARENTS = [None, 0, 0, 1, 1, 2, 2]

# test_acceptance appends one verdict line per criterion here; the summary
# hook replays them after the run so they survive output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def binary2():
    t = th.build_from_parents(BINARY2_PARENTS)
    nu = th.BoundaryMeasure(np.ones(4))
    return t, nu


@pytest.fixture
def cherry():
    t = th.build_from_parents([None, 0, 0])
    nu = th.BoundaryMeasure(np.array([1.0, 3.0]))
    return t, nu


@pytest.fixture
def chain3():
    t = th.build_from_parents([None, 0, 1, 2])
    nu = th.BoundaryMeasure(np.array([2.0]))
    return t, nu


@pytest.fixture
def fixture_path():
    return FIXTURE_DIR / "depth2_uniform_binary.json"


def random_instance(rng, dmin=1, dmax=6, blo=2, bhi=4, laws=("uniform", "loguniform")):
    """One random instance drawn from the standard acceptance corpus."""
    depth = int(rng.integers(dmin, dmax + 1))
    lo = int(rng.integers(blo, bhi + 1))
    hi = int(rng.integers(lo, bhi + 1))
    law = laws[int(rng.integers(len(laws)))]
    spec = th.GenSpec(depth, (lo, hi), law, (0.1, 10.0), int(rng.integers(2 ** 32)))
    return th.generate(spec)


def corpus(n, seed, **kw):
    rng = np.random.default_rng(seed)
    return [random_instance(rng, **kw) for _ in range(n)]
