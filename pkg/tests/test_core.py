import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domshift.core import (
    Affine,
    Codebook,
    DimensionError,
    FiniteDistribution,
    HypothesisClass,
    Identity,
    Layer,
    LossSpec,
    PReLUNet,
    Table,
    TableMissError,
    compose,
    declared_lipschitz,
    hypothesis_from_dict,
    lipschitz_upper_bound,
    loss,
    pushforward,
)
from domshift.measures import estimate_L

import oracles


def test_evaluate_examples():
    assert Identity(1)([2.5]).tolist() == [2.5]
    net = PReLUNet((Layer(np.array([[1.0]]), np.zeros(1), 0.5),))
    assert net([-2.0]).tolist() == [-1.0]
    assert Affine(np.array([[2.0]]), np.array([1.0]))([3.0]).tolist() == [7.0]


def test_evaluate_rejects_wrong_dimension():
    with pytest.raises(DimensionError):
        Affine(np.eye(2), np.zeros(2))([1.0])


def test_table_outside_domain():
    t = Table([[0.0], [1.0]], [[5.0], [5.0]])
    with pytest.raises(TableMissError):
        t([2.0])


def test_compose_applies_left_to_right():
    f = Affine(np.array([[2.0]]), np.array([0.0]))
    g = Affine(np.array([[1.0]]), np.array([1.0]))
    assert compose(f, g)([3.0]).tolist() == [7.0]
    assert compose(g, f)([3.0]).tolist() == [8.0]
    assert f.then(g)([3.0]).tolist() == [7.0]


def test_pushforward_examples():
    D = FiniteDistribution.uniform([[0.0], [1.0], [3.0]])
    same = pushforward(Identity(1), D)
    assert same.same_as(D)

    const = pushforward(Affine.constant([4.0], 1), D)
    assert const.support.tolist() == [[4.0]]
    assert const.weights.tolist() == [1.0]

    coin = FiniteDistribution.uniform([[0.0], [1.0]])
    merged = pushforward(Table([[0.0], [1.0]], [[5.0], [5.0]]), coin)
    assert merged.support.tolist() == [[5.0]]
    assert merged.weights.tolist() == [1.0]


def test_pushforward_keeps_first_occurrence_order():
    D = FiniteDistribution([[0.0], [1.0], [2.0], [3.0]], [0.1, 0.2, 0.3, 0.4])
    h = Table([[0.0], [1.0], [2.0], [3.0]], [[9.0], [7.0], [9.0], [7.0]])
    P = pushforward(h, D)
    assert P.support.tolist() == [[9.0], [7.0]]
    assert P.weights.tolist() == [0.1 + 0.3, 0.2 + 0.4]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=1, max_size=20, unique=True),
       st.lists(st.integers(-2, 2), min_size=20, max_size=20),
       st.integers(0, 10**6))
def test_pushforward_matches_dictionary_merge(keys, images, seed):
    rng = np.random.default_rng(seed)
    w = rng.random(len(keys)) + 0.01
    D = FiniteDistribution(np.array(keys, float)[:, None], w / w.sum())
    h = Table(D.support, np.array(images[:len(keys)], float)[:, None])
    P = pushforward(h, D)
    pts, ws = oracles.pushforward([h], D.support, D.weights)
    got = dict(zip(map(tuple, P.support.tolist()), P.weights.tolist()))
    want = dict(zip(map(tuple, pts.tolist()), ws.tolist()))
    assert got.keys() == want.keys()
    for k in want:
        assert abs(got[k] - want[k]) < 1e-12
    assert abs(P.weights.sum() - 1.0) < 1e-12


def test_loss_examples():
    assert loss(LossSpec("absolute", 2), [1, 2], [1, 2]) == 0.0
    assert loss(LossSpec("squared"), [3], [1]) == 4.0
    assert loss(LossSpec("zero_one"), [0], [1]) == 1.0


def test_loss_spec_constants():
    assert LossSpec("absolute").K == 1.0
    assert LossSpec("squared").K == 3.0
    assert LossSpec("zero_one").K == 1.0
    with pytest.raises(ValueError):
        LossSpec("hinge")
    with pytest.raises(DimensionError):
        loss(LossSpec("absolute", 2), [1.0], [1.0])


def test_distribution_validation():
    with pytest.raises(ValueError):
        FiniteDistribution([[0.0], [1.0]], [0.5, 0.6])
    with pytest.raises(ValueError):
        FiniteDistribution([[0.0], [0.0]], [0.5, 0.5])
    with pytest.raises(ValueError):
        FiniteDistribution([[0.0], [1.0]], [1.5, -0.5])
    with pytest.raises(ValueError):
        FiniteDistribution(np.zeros((0, 1)), [])


def test_distribution_round_trip():
    D = FiniteDistribution([[0.1, 0.2], [1 / 3, 2.0]], [0.3, 0.7])
    back = FiniteDistribution.from_dict(json.loads(json.dumps(D.to_dict())))
    assert back.same_as(D)


def test_exact_inverses():
    A = Affine(np.array([[2.0, 1.0], [0.0, 0.5]]), np.array([0.25, -1.0]))
    X = np.array([[0.125, -2.0], [1.5, 0.75]])
    assert np.array_equal(A.inverse().apply(A.apply(X)), X)
    t = Table([[0.0], [1.0]], [[3.0], [4.0]])
    assert t.inverse()([4.0]).tolist() == [1.0]
    with pytest.raises(ValueError):
        Table([[0.0], [1.0]], [[3.0], [3.0]]).inverse()


def test_codebook_is_idempotent_with_lowest_index_ties():
    y = Codebook([[0.0], [2.0]])
    assert y([1.0]).tolist() == [0.0]
    X = np.linspace(-3, 3, 49)[:, None]
    once = y.apply(X)
    assert np.array_equal(y.apply(once), once)


def test_hypothesis_json_round_trip():
    forms = [
        Identity(2),
        Affine(np.array([[1.0, -0.5]]), np.array([0.25])),
        PReLUNet((Layer(np.eye(2), np.ones(2), 0.25), Layer(np.array([[1.0, 1.0]]), None, 1.0))),
        Table([[0.0, 1.0], [1.0, 0.0]], [[1.0], [0.0]]),
        Codebook([[0.0, 0.0], [1.0, 1.0]]),
    ]
    forms.append(compose(forms[1], Affine(np.array([[3.0]]), np.array([0.0]))))
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    for h in forms:
        back = hypothesis_from_dict(json.loads(json.dumps(h.to_dict())))
        assert np.array_equal(back.apply(X), h.apply(X))


def test_class_signature_checked():
    with pytest.raises(DimensionError):
        HypothesisClass((Identity(1), Identity(2)))
    with pytest.raises(ValueError):
        HypothesisClass(())


def test_lipschitz_of_scaling():
    h = Affine(np.array([[2.0]]), np.zeros(1))
    probes = np.random.default_rng(0).uniform(-2, 2, size=(500, 2, 1))
    assert abs(estimate_L(h, LossSpec("absolute"), probes) - 2.0) < 1e-12
    assert abs(estimate_L(h, LossSpec("squared"), probes) - 4.0) < 1e-12
    assert lipschitz_upper_bound(h, "absolute") == 2.0
    assert estimate_L(Affine.constant([1.0], 1), LossSpec("absolute"), probes) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["absolute", "squared"]))
def test_declared_lipschitz_dominates_estimate(seed, kind):
    rng = np.random.default_rng(seed)
    layers = (Layer(rng.integers(-2, 3, (3, 2)) / 2, rng.integers(-2, 3, 3) / 4,
                    float(rng.choice([0.0, 0.25, 0.5, 1.0]))),
              Layer(rng.integers(-2, 3, (1, 3)) / 2, None, 1.0))
    net = PReLUNet(layers)
    probes = rng.uniform(-2, 2, size=(1000, 2, 2))
    assert estimate_L(net, LossSpec(kind), probes) <= declared_lipschitz([net], kind)
