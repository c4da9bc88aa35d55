"""Kernels, audits, atoms, and the BMO-to-Carleson bound both ways.

Fixture numbers (depth-2 binary, unit weights, m = induced flow):
  example_kernel_delta at alpha = delta = 1:
    top row is degenerate (no second ring) and stays zero;
    an internal row has ring profile (2/4 * (1/2)^2, 2/16 * (1/4)^2)
      = (0.125, 0.0078125) with ring nu-masses (2, 2), so the
      compensated coefficients are (-1/16, 1) and the row reads
      -0.0078125 on its own sector, +0.0078125 across;
    a leaf row has profile (1, 1/4 * 1/4, 1/16 * 1/16) with masses
      (1, 1, 2), the two largest rings are the first two, and the row
      reads -0.0625 on its own leaf, +0.0625 on the sibling leaf.
    ck: the column of any leaf collects 2 * 0.0078125 twice (both
      internal rows) and 0.0625 twice (own row and sibling row),
      totalling 0.15625.
  theorem3_bound at c1 = c2 = 2, alpha = 1:
    C_alpha = 2 * (1/(1 - 1/2))^2 * (1/(1 - 1/2)) = 16, so a kernel
    audited at ck = 1 paired with bmo = 1 gives 2*1 + 16 = 18.
  verify_bmo_to_carleson for b = (1,0,0,0):
    bmo(b) = 1/2, bound = 0.5 * (2 * 0.15625 + 16) = 8.15625;
    Kb picks out column 0, the density |Kb| m is
    (0, 1/64, 1/64, 1/16, 1/16, 0, 0) * m = (0, .015625, .015625,
    .0625, .0625, 0, 0), and the worst subtree ratio sits at vertex 1:
    (0.015625 + 0.0625 + 0.0625) / 2 = 0.0703125.
  atom at the top for the same b: sector mean 1/4, signs (+,-,-,-),
    sign mean -1/2, atom (1.5, -0.5, -0.5, -0.5)/8
      = (0.1875, -0.0625, -0.0625, -0.0625);
    pairing 0.1875 with oscillation 4*0.1875*2 = 1.5; at vertex 1 the
    pairing is 0.25 with oscillation 1; singleton sectors vanish.
  pure-decay positive kernel K = m(x)^alpha / m(confluent)^(alpha+1):
    column of leaf 0 sums m * K = 1 + 1 + 1/4 + 1 + 1/4 + 1/16 + 1/16
      = 3.625; it meets the decay bound with equality and has no
    cancellation at all.
"""
import numpy as np
import pytest

import treeharmonics as th
from treeharmonics.errors import (
    DimensionMismatch,
    RequiresLocallyDoubling,
    ValidationError,
)

import oracles
from conftest import random_instance


def unit_binary2():
    t = th.Tree([None, 0, 0, 1, 1, 2, 2])
    nu = th.BoundaryMeasure(np.ones(4))
    return t, nu, th.induce_flow(t, nu)


# ---- confluents ---------------------------------------------------------


def test_confluent_matrix_binary2(binary2):
    t, _ = binary2
    conf = th.confluent_matrix(t)
    assert conf.tolist() == [
        [0, 0, 0, 0],
        [1, 1, 0, 0],
        [0, 0, 2, 2],
        [3, 1, 0, 0],
        [1, 4, 0, 0],
        [0, 0, 5, 2],
        [0, 0, 2, 6],
    ]


def test_confluent_matrix_matches_bruteforce():
    rng = np.random.default_rng(401)
    for _ in range(8):
        inst = random_instance(rng, dmax=4)
        t = inst.tree
        conf = th.confluent_matrix(t)
        for x in range(t.n_vertices):
            for pos, leaf in enumerate(t.leaves):
                assert conf[x, pos] == oracles.confluent(t, x, int(leaf))


# ---- kernel container and audit ----------------------------------------


def test_kernel_validation():
    with pytest.raises(ValidationError):
        th.Kernel(np.ones(4), 1.0)  # not 2-d
    bad = np.ones((3, 2))
    bad[1, 1] = np.nan
    with pytest.raises(ValidationError):
        th.Kernel(bad, 1.0)
    bad[1, 1] = np.inf
    with pytest.raises(ValidationError):
        th.Kernel(bad, 1.0)
    with pytest.raises(ValidationError):
        th.Kernel(np.ones((3, 2)), 0.0)


def test_apply_kernel_shape_checks(binary2):
    t, nu = binary2
    with pytest.raises(DimensionMismatch):
        th.apply_kernel(t, nu, th.Kernel(np.ones((5, 3)), 1.0), np.ones(4))
    k = th.Kernel(np.ones((7, 4)), 1.0)
    with pytest.raises(DimensionMismatch):
        th.apply_kernel(t, nu, k, np.ones(3))


def test_apply_kernel_matches_bruteforce():
    rng = np.random.default_rng(402)
    for _ in range(6):
        inst = random_instance(rng, dmax=4)
        t, nu = inst.tree, inst.nu
        K = rng.standard_normal((t.n_vertices, t.n_leaves))
        b = rng.standard_normal(t.n_leaves)
        got = th.apply_kernel(t, nu, th.Kernel(K, 1.0), b)
        for x in range(t.n_vertices):
            want = sum(
                K[x, pos] * b[pos] * nu.nu[pos] for pos in range(t.n_leaves)
            )
            assert got[x] == pytest.approx(want, rel=1e-12, abs=1e-12)


# ---- the decaying example ----------------------------------------------


def test_example_kernel_rows_binary2():
    t, nu, m = unit_binary2()
    k = th.example_kernel_delta(t, nu, m, 1.0, 1.0)
    assert k.alpha == 1.0
    e = 0.0078125
    f = 0.0625
    assert k.entries.tolist() == [
        [0.0, 0.0, 0.0, 0.0],
        [-e, -e, e, e],
        [e, e, -e, -e],
        [-f, f, 0.0, 0.0],
        [f, -f, 0.0, 0.0],
        [0.0, 0.0, -f, f],
        [0.0, 0.0, f, -f],
    ]
    assert th.zero_rows(k) == [0]


def test_example_kernel_audit_binary2():
    t, nu, m = unit_binary2()
    k = th.example_kernel_delta(t, nu, m, 1.0, 1.0)
    audit = th.audit_kernel(t, nu, m, k)
    assert audit.ok
    assert audit.cancellation_max == 0.0  # dyadic ring masses cancel exactly
    assert audit.ck == 0.15625
    assert audit.a3_ok
    assert audit.alpha == 1.0


def test_example_kernel_seed_determinism():
    t, nu, m = unit_binary2()
    k1 = th.example_kernel_delta(t, nu, m, 1.0, 0.5, seed=9)
    k2 = th.example_kernel_delta(t, nu, m, 1.0, 0.5, seed=9)
    assert np.array_equal(k1.entries, k2.entries)
    audit = th.audit_kernel(t, nu, m, k1)
    assert audit.ok


def test_example_kernel_rejects_bad_shapes_and_exponents(binary2, chain3):
    t, nu = binary2
    m = th.induce_flow(t, nu)
    with pytest.raises(ValidationError):
        th.example_kernel_delta(t, nu, m, 0.0, 1.0)
    with pytest.raises(ValidationError):
        th.example_kernel_delta(t, nu, m, 1.0, 0.0)
    ct, cnu = chain3
    cm = th.induce_flow(ct, cnu)
    with pytest.raises(ValidationError):  # chain never branches
        th.example_kernel_delta(ct, cnu, cm, 1.0, 1.0)
    shallow = th.Tree([None, 0, 0])
    snu = th.BoundaryMeasure(np.ones(2))
    with pytest.raises(ValidationError):  # depth 1 has no second ring
        th.example_kernel_delta(shallow, snu, th.induce_flow(shallow, snu), 1.0, 1.0)


def test_example_kernel_seeded_audits():
    rng = np.random.default_rng(403)
    for _ in range(8):
        inst = random_instance(rng, dmin=2, dmax=4, blo=2, bhi=3)
        t, nu = inst.tree, inst.nu
        m = th.induce_flow(t, nu)
        alpha = float(rng.choice([0.5, 1.0, 2.0]))
        delta = float(rng.choice([0.5, 1.0]))
        k = th.example_kernel_delta(t, nu, m, alpha, delta,
                                    seed=int(rng.integers(2 ** 32)))
        audit = th.audit_kernel(t, nu, m, k)
        assert audit.ok
        assert audit.ck <= th.example_ck_bound(
            th.doubling_constants(t, m)[1], alpha, delta)


def test_example_ck_bound_values():
    assert th.example_ck_bound(2.0, 1.0, 1.0) == pytest.approx(16.0 / 3.0)
    with pytest.raises(RequiresLocallyDoubling):
        th.example_ck_bound(1.0, 1.0, 1.0)


# ---- audit failure modes ------------------------------------------------


def test_audit_detects_broken_cancellation():
    t, nu, m = unit_binary2()
    K = th.example_kernel_delta(t, nu, m, 1.0, 1.0).entries.copy()
    K[1, 0] += 1e-3
    audit = th.audit_kernel(t, nu, m, th.Kernel(K, 1.0))
    assert not audit.cancellation_ok
    assert not audit.ok
    assert audit.cancellation_max == pytest.approx(1e-3)


def test_audit_detects_excess_decay():
    t, nu, m = unit_binary2()
    K = th.example_kernel_delta(t, nu, m, 1.0, 1.0).entries.copy()
    K[3, 0] = -2.0
    K[3, 1] = 2.0  # keep the row integral zero so only decay trips
    audit = th.audit_kernel(t, nu, m, th.Kernel(K, 1.0))
    assert audit.cancellation_ok
    assert not audit.a3_ok
    assert audit.a3_worst_vertex == 3
    # the tighter ceiling is on the sibling leaf: 1 / m(parent)^2 = 1/4,
    # so the entry of size 2 overshoots by a factor 8 there (the own-leaf
    # ceiling 1/m(3) = 1 is only overshot by 2)
    assert audit.a3_worst_leaf == 4  # leaf vertex id, not position
    assert audit.a3_worst_ratio == 8.0


def test_pure_decay_kernel_meets_bound_with_equality():
    t, nu, m = unit_binary2()
    conf = th.confluent_matrix(t)
    K = m.m[:, None] ** 1.0 / m.m[conf] ** 2.0
    audit = th.audit_kernel(t, nu, m, th.Kernel(K, 1.0))
    assert audit.a3_ok
    assert audit.a3_worst_ratio == 1.0
    assert not audit.cancellation_ok  # all rows are positive
    assert audit.ck == 3.625


# ---- the forward bound --------------------------------------------------


def test_theorem3_bound_reference_constant(binary2):
    t, nu = binary2
    m = th.induce_flow(t, nu)
    audit = th.KernelAudit(True, 0.0, 1.0, 1.0, True, 0, 0, 0.0, 1.0, 1e-12)
    assert th.theorem3_bound(t, m, audit, 1.0) == 18.0
    assert th.theorem3_bound(t, m, audit, 0.5) == 9.0


def test_theorem3_bound_needs_lower_doubling(chain3):
    t, nu = chain3
    m = th.induce_flow(t, nu)  # constant along the chain, c2 = 1
    audit = th.KernelAudit(True, 0.0, 1.0, 1.0, True, 0, 0, 0.0, 1.0, 1e-12)
    with pytest.raises(RequiresLocallyDoubling):
        th.theorem3_bound(t, m, audit, 1.0)


def test_verify_bmo_to_carleson_binary2():
    t, nu, m = unit_binary2()
    b = np.array([1.0, 0.0, 0.0, 0.0])
    k = th.example_kernel_delta(t, nu, m, 1.0, 1.0)
    v = th.verify_bmo_to_carleson(t, nu, m, k, b)
    assert v.ok
    assert v.max_ratio == 0.0703125
    assert v.bound == 8.15625
    assert v.witness_vertex == 1
    assert v.bmo == 0.5
    assert (v.c1, v.c2) == (2.0, 2.0)
    assert v.audit.ck == 0.15625


def test_verify_rejects_failed_audit():
    t, nu, m = unit_binary2()
    K = np.ones((7, 4))  # no cancellation whatsoever
    with pytest.raises(ValidationError):
        th.verify_bmo_to_carleson(t, nu, m, th.Kernel(K, 1.0), np.ones(4))


def test_verify_random_battery():
    rng = np.random.default_rng(404)
    for _ in range(10):
        inst = random_instance(rng, dmin=2, dmax=4, blo=2, bhi=3)
        t, nu = inst.tree, inst.nu
        m = th.induce_flow(t, nu)
        k = th.example_kernel_delta(t, nu, m, 1.0, 1.0,
                                    seed=int(rng.integers(2 ** 32)))
        b = rng.standard_normal(t.n_leaves) * 3.0
        v = th.verify_bmo_to_carleson(t, nu, m, k, b)
        assert v.ok
        assert v.max_ratio <= v.bound * (1 + 1e-9) + 1e-9


# ---- atoms and the converse ---------------------------------------------


def test_atom_values_binary2():
    t, nu, m = unit_binary2()
    b = np.array([1.0, 0.0, 0.0, 0.0])
    k, a = th.atom_kernel(t, nu, m, 0, b)
    assert a.tolist() == [0.1875, -0.0625, -0.0625, -0.0625]
    assert np.array_equal(k.entries[0], a)
    assert not k.entries[1:].any()
    assert float(a @ nu.nu) == 0.0
    audit = th.audit_kernel(t, nu, m, k)
    assert audit.ok


def test_atom_on_singleton_sector_vanishes():
    t, nu, m = unit_binary2()
    _, a = th.atom_kernel(t, nu, m, 3, np.array([5.0, 1.0, -2.0, 0.5]))
    assert not a.any()


def test_atom_pairings_binary2():
    t, nu, m = unit_binary2()
    b = np.array([1.0, 0.0, 0.0, 0.0])
    pair, osc = th.atom_pairings(t, nu, m, b)
    assert pair.tolist() == [0.1875, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0]
    assert osc.tolist() == [1.5, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    assert np.array_equal(2.0 * m.m * np.abs(pair), osc)
    assert th.bmo_from_carleson(t, nu, m, b) == 0.25
    assert th.bmo_norm(t, nu, b).value == 0.5


def test_atom_density_concentrates_at_its_vertex():
    t, nu, m = unit_binary2()
    b = np.array([1.0, 0.0, 0.0, 0.0])
    k, _ = th.atom_kernel(t, nu, m, 1, b)
    dens = th.carleson_density(t, nu, m, k, b)
    assert dens.sigma.tolist() == [0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]


def test_atom_identities_random():
    rng = np.random.default_rng(405)
    for _ in range(12):
        inst = random_instance(rng, dmax=5)
        t, nu = inst.tree, inst.nu
        m = th.induce_flow(t, nu)
        b = rng.standard_normal(t.n_leaves) * 10.0
        pair, osc = th.atom_pairings(t, nu, m, b)
        gap = np.abs(2.0 * m.m * np.abs(pair) - osc)
        assert np.all(gap <= 1e-12 * np.maximum(1.0, osc))
        bmo = th.bmo_norm(t, nu, b).value
        recon = 2.0 * float(np.max(np.abs(pair)))
        assert abs(recon - bmo) <= 1e-12 * max(1.0, bmo)
        y = int(rng.integers(t.n_vertices))
        _, a = th.atom_kernel(t, nu, m, y, b)
        assert np.abs(a).max() * m.m[y] <= 1.0  # sup bound, no tolerance
        resid = abs(float(a @ nu.nu))
        assert resid <= 1e-12 * max(1.0, float(np.abs(a) @ nu.nu))


def test_atom_vertex_and_shape_checks(binary2):
    t, nu = binary2
    m = th.induce_flow(t, nu)
    with pytest.raises(ValidationError):
        th.atom_kernel(t, nu, m, 99, np.ones(4))
    with pytest.raises(DimensionMismatch):
        th.atom_kernel(t, nu, m, 0, np.ones(3))
    with pytest.raises(DimensionMismatch):
        th.atom_pairings(t, nu, m, np.ones(5))


def test_verify_needs_branching(chain3):
    t, nu = chain3
    m = th.induce_flow(t, nu)
    k, _ = th.atom_kernel(t, nu, m, 0, np.ones(t.n_leaves))
    with pytest.raises(ValidationError):
        th.verify_bmo_to_carleson(t, nu, m, k, np.ones(t.n_leaves))
