"""Measures, flows, aggregation, and the doubling geometry.

Depth-2 binary fixture numbers: m = (4,2,2,1,1,1,1); both doubling
constants equal 2; the cherry with weights (1,3) has c1 = 4 (edge into
the light leaf) and c2 = 4/3 (edge into the heavy one).
"""
import math

import numpy as np
import pytest

import treeharmonics as th
from treeharmonics.errors import (
    DimensionMismatch,
    NoInternalVertices,
    RadiusOutOfRange,
    ValidationError,
)

import oracles
from conftest import corpus


def test_measure_validation():
    with pytest.raises(ValidationError):
        th.BoundaryMeasure(np.array([1.0, 0.0]))  # zero weight
    with pytest.raises(ValidationError):
        th.BoundaryMeasure(np.array([1.0, -2.0]))
    with pytest.raises(ValidationError):
        th.FlowMeasure(np.array([1.0, np.nan]))
    with pytest.raises(ValidationError):
        th.VertexMeasure(np.array([1.0, -0.5]))  # sigma may be zero, not negative
    th.VertexMeasure(np.zeros(3))  # fine


def test_induced_flow_binary2(binary2):
    t, nu = binary2
    m = th.induce_flow(t, nu)
    assert list(m.m) == [4.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0]
    fc = th.check_flow(t, m)
    assert fc.ok
    assert fc.max_rel_err == 0.0


def test_check_flow_flags_perturbation(binary2):
    t, nu = binary2
    m = th.induce_flow(t, nu).m.copy()
    m[1] = 2.5
    fc = th.check_flow(t, th.FlowMeasure(m))
    assert not fc.ok
    assert fc.worst_vertex == 1
    assert fc.max_rel_err > 0.1


def test_check_flow_shape_mismatch(binary2):
    t, _ = binary2
    with pytest.raises(DimensionMismatch):
        th.check_flow(t, th.FlowMeasure(np.ones(3)))


def test_flow_conservation_random():
    # conservation holds on every generated instance, including iterated
    # aggregation of the flow itself down the levels
    for inst in corpus(40, 990, dmax=7):
        t, nu = inst.tree, inst.nu
        m = th.induce_flow(t, nu)
        fc = th.check_flow(t, m)
        assert fc.ok, f"flow broken at vertex {fc.worst_vertex}: {fc.max_rel_err}"
        # top mass is a reordered sum of all leaf weights
        assert m.m[t.top] == pytest.approx(float(nu.nu.sum()), rel=1e-12)


def test_flow_matches_bruteforce():
    for inst in corpus(15, 321, dmax=5):
        t, nu = inst.tree, inst.nu
        m = th.induce_flow(t, nu).m
        ref = oracles.flow(t, nu.nu)
        assert np.allclose(m, ref, rtol=1e-13, atol=0.0)


def test_aggregation_against_bruteforce():
    rng = np.random.default_rng(17)
    for inst in corpus(15, 322, dmax=5):
        t = inst.tree
        vals = rng.standard_normal(t.n_vertices)
        sub = th.subtree_sums(t, vals)
        for v in range(t.n_vertices):
            assert sub[v] == pytest.approx(oracles.subtree_sum(t, vals, v),
                                           rel=1e-12, abs=1e-12)
        up = th.ancestor_cumsum(t, vals)
        for v in range(t.n_vertices):
            ref = math.fsum(vals[a] for a in oracles.ancestors(t, v))
            assert up[v] == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_sector_leaf_sums_is_the_flow_on_ones(binary2):
    t, nu = binary2
    out = th.sector_leaf_sums(t, nu.nu)
    assert list(out) == [4.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0]


def test_doubling_constants(binary2, cherry):
    t, nu = binary2
    assert th.doubling_constants(t, th.induce_flow(t, nu)) == (2.0, 2.0)
    tc, nuc = cherry
    c1, c2 = th.doubling_constants(tc, th.induce_flow(tc, nuc))
    assert c1 == 4.0
    assert c2 == pytest.approx(4.0 / 3.0, rel=1e-15)


def test_doubling_needs_an_edge():
    t = th.build_from_parents([None])
    with pytest.raises(NoInternalVertices):
        th.doubling_constants(t, th.FlowMeasure(np.array([1.0])))


def test_boundary_ball_radii(binary2):
    t, nu = binary2
    # r < e gives the singleton, e <= r < e^2 the parent sector,
    # r >= e^2 everything; r = e^2 hits the boundary case exactly
    assert list(th.boundary_ball(t, nu, 3, 1.0)) == [3]
    assert list(th.boundary_ball(t, nu, 3, math.e)) == [3, 4]
    assert list(th.boundary_ball(t, nu, 3, math.exp(2.0))) == [3, 4, 5, 6]
    assert list(th.boundary_ball(t, nu, 6, 2.0)) == [6]
    with pytest.raises(RadiusOutOfRange):
        th.boundary_ball(t, nu, 3, 0.5)  # below 1: no ball
    with pytest.raises(ValidationError):
        th.boundary_ball(t, nu, 1, 1.0)  # not a leaf


def test_balls_are_sectors():
    # every ball coincides with the boundary sector of the right ancestor
    rng = np.random.default_rng(5150)
    for inst in corpus(15, 808, dmax=5):
        t, nu = inst.tree, inst.nu
        for _ in range(6):
            omega = int(t.leaves[rng.integers(t.n_leaves)])
            j = int(rng.integers(t.depth + 1))
            ball = th.boundary_ball(t, nu, omega, math.exp(j))
            anc = t.phi(omega, j)
            assert list(ball) == list(t.boundary_sector(anc))


def test_boundary_doubling_ratio_bounded_by_c1(binary2, cherry):
    t, nu = binary2
    assert th.boundary_doubling_ratio(t, nu) == 2.0
    tc, nuc = cherry
    assert th.boundary_doubling_ratio(tc, nuc) == 4.0
    for inst in corpus(40, 909, dmax=7):
        t, nu = inst.tree, inst.nu
        m = th.induce_flow(t, nu)
        c1, _ = th.doubling_constants(t, m)
        assert th.boundary_doubling_ratio(t, nu) <= c1
