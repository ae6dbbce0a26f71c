import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domshift.checks import random_instance
from domshift.core import Affine, FiniteDistribution, HypothesisClass, Identity, LossSpec, Table
from domshift.measures import (
    discrepancy,
    empirical_risk,
    estimate_K,
    estimate_L,
    max_mean_gap,
    quad_discrepancy,
    relation_gap,
    risk,
    symmetric_difference_class,
)

import oracles

ABS = LossSpec("absolute")
SQ = LossSpec("squared")


def scale(a):
    return Affine(np.array([[float(a)]]), np.zeros(1))


def const(c):
    return Affine.constant([float(c)], 1)


def test_risk_examples():
    D = FiniteDistribution.uniform([[0.0], [1.0]])
    assert risk(D, Identity(1), scale(2), ABS) == 0.5
    assert risk(D, scale(3), scale(3), SQ) == 0.0


def test_empirical_risk_examples():
    assert empirical_risk([([1.0], [1.0]), ([2.0], [2.0])], ABS) == 0.0
    assert empirical_risk([([0.0], [1.0])], ABS) == 1.0
    assert empirical_risk([([0.0], [1.0]), ([0.0], [3.0])], SQ) == 5.0


def test_discrepancy_examples():
    C = HypothesisClass((const(0), Identity(1)))
    P0 = FiniteDistribution.point_mass([0.0])
    P1 = FiniteDistribution.point_mass([1.0])
    res = discrepancy(C, P0, P1, ABS)
    assert res.value == 1.0
    assert res.witness == (0, 1)
    assert discrepancy(C, P0, P0, ABS).value == 0.0
    single = HypothesisClass((scale(2),))
    assert discrepancy(single, P0, P1, ABS).value == 0.0


def test_quad_discrepancy_identical_pairs_is_zero():
    inst = random_instance(np.random.default_rng(3))
    D1, D2 = inst.D[:2]
    assert quad_discrepancy(inst.C, D1, D2, D1, D2, inst.spec).value == 0.0


def test_symmetric_difference_class_examples():
    C = HypothesisClass((const(0),))
    X = np.array([[-1.0], [0.0], [5.0]])
    S = symmetric_difference_class(C)
    assert len(S) == 1 and not S.outputs(X).any()
    C2 = HypothesisClass((const(0), const(1)))
    S2 = symmetric_difference_class(C2)
    assert [float(m([0.0])[0]) for m in S2] == [0.0, 1.0, 1.0, 0.0]
    with pytest.raises(ValueError):
        symmetric_difference_class(HypothesisClass((const(2),)), probes=X)


def test_estimate_K_examples():
    rng = np.random.default_rng(0)
    probes = rng.uniform(-3, 3, size=(20000, 3, 1))
    assert estimate_K(ABS, probes) <= 1 + 1e-12
    assert estimate_K(SQ, [[0.0, 1.0, 2.0]]) == 2.0
    with_mid = np.concatenate([probes, [[[0.0], [1.0], [2.0]]]])
    assert 2.0 <= estimate_K(SQ, with_mid) <= 2 + 1e-12
    assert estimate_K(SQ, [[1.0, 4.0, 1.0]]) == 0.0


def test_estimate_L_examples():
    probes = np.random.default_rng(1).uniform(-2, 2, size=(1000, 2, 1))
    assert estimate_L(Identity(1), ABS, probes) <= 1 + 1e-12
    assert estimate_L(const(3), ABS, probes) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_discrepancy_matches_loop_oracle(seed):
    inst = random_instance(np.random.default_rng(seed), max_class=10, max_support=20)
    D1, D2 = inst.D[:2]
    got = discrepancy(inst.C, D1, D2, inst.spec).value
    want = oracles.disc(inst.C.members, inst.spec.kind, oracles.dist(D1), oracles.dist(D2))
    assert abs(got - want) < 1e-12
    q = quad_discrepancy(inst.C, *inst.D, inst.spec).value
    wq = oracles.quad_disc(inst.C.members, inst.spec.kind, *map(oracles.dist, inst.D))
    assert abs(q - wq) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_discrepancy_is_a_pseudometric(seed):
    inst = random_instance(np.random.default_rng(seed), max_class=12, max_support=24)
    C, (D1, D2, D3, _), spec = inst.C, inst.D, inst.spec
    d = lambda a, b: discrepancy(C, a, b, spec).value
    assert d(D1, D1) == 0.0
    assert abs(d(D1, D2) - d(D2, D1)) <= 1e-9
    assert d(D1, D3) <= d(D1, D2) + d(D2, D3) + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_quad_discrepancy_relations(seed):
    inst = random_instance(np.random.default_rng(seed), max_class=12, max_support=24)
    C, (A, B, P, Q), spec = inst.C, inst.D, inst.spec
    q = quad_discrepancy(C, A, B, P, Q, spec).value
    d1, d2 = discrepancy(C, A, B, spec).value, discrepancy(C, P, Q, spec).value
    assert abs(d1 - d2) <= q + 1e-9
    assert q <= d1 + d2 + 1e-9
    assert abs(quad_discrepancy(C, A, B, Q, Q, spec).value - d1) < 1e-12
    assert abs(quad_discrepancy(C, A, Q, B, Q, spec).value - d1) < 1e-12
    U = relation_gap(C, A, B, spec)
    assert abs(np.abs(U).max() - d1) < 1e-12


def test_witness_is_lexicographically_first():
    P0 = FiniteDistribution.point_mass([0.0])
    P1 = FiniteDistribution.point_mass([1.0])
    # (0,1), (0,2), (1,0) and (2,0) all reach the sup of 1.
    res = discrepancy(HypothesisClass((const(0), Identity(1), scale(1))), P0, P1, ABS)
    assert res.value == 1.0 and res.witness == (0, 1)
    # Constants have equal risks everywhere: every pair ties at 0.
    flat = discrepancy(HypothesisClass((const(0), const(1))), P0, P1, ABS)
    assert flat.value == 0.0 and flat.witness == (0, 0)


def test_parallel_matches_sequential_bitwise():
    inst = random_instance(np.random.default_rng(11), max_class=32, max_support=64)
    D1, D2 = inst.D[:2]
    a = discrepancy(inst.C, D1, D2, inst.spec)
    b = discrepancy(inst.C, D1, D2, inst.spec, workers=4)
    assert a.value == b.value and a.witness == b.witness
    qa = quad_discrepancy(inst.C, *inst.D, inst.spec)
    qb = quad_discrepancy(inst.C, *inst.D, inst.spec, workers=3)
    assert qa.value == qb.value and qa.witness == qb.witness


def test_cdc_equivalence_on_tables():
    rng = np.random.default_rng(5)
    X = np.arange(8.0)[:, None]
    members = tuple(Table(X, rng.integers(0, 2, (8, 1)).astype(float)) for _ in range(6))
    C = HypothesisClass(members)
    for _ in range(10):
        w1, w2 = rng.random(8), rng.random(8)
        D1 = FiniteDistribution(X, w1 / w1.sum())
        D2 = FiniteDistribution(X, w2 / w2.sum())
        d = discrepancy(C, D1, D2, LossSpec("zero_one")).value
        gap, _ = max_mean_gap(symmetric_difference_class(C), D1, D2)
        assert abs(d - gap) <= 1e-12
