import dataclasses
import json

import numpy as np
import pytest

from domshift.core import Identity, LossSpec, compose, pushforward
from domshift.measures import discrepancy, estimate_L, risk
from domshift.scenarios import ConfigError, ScenarioConfig, generate, scenario_document
from domshift.setting import KINDS, DASetting, SettingError


def scen(kind, seed, **kw):
    return generate(ScenarioConfig(kind, seed=seed, **kw))


def test_same_seed_same_json():
    for kind in KINDS:
        cfg = ScenarioConfig(kind, seed=17)
        a = json.dumps(scenario_document(cfg))
        b = json.dumps(scenario_document(ScenarioConfig.from_dict(cfg.to_dict())))
        assert a == b
        assert a != json.dumps(scenario_document(cfg.replace(seed=18)))


def test_setting_json_round_trip():
    for kind in KINDS:
        s = scen(kind, 2)
        text = json.dumps(s.to_dict())
        back = DASetting.from_dict(json.loads(text))
        assert json.dumps(back.to_dict()) == text
        # Evaluated objects agree, not just their serializations.
        for name, D in s.distributions.items():
            assert back.distributions[name].same_as(D)
        X = next(iter(s.distributions.values())).support
        if "H1" in s.classes:
            assert np.array_equal(back.classes["H1"].outputs(X), s.classes["H1"].outputs(X))


def test_zero_shift_gives_identical_domains():
    for kind, a, b in [("standard_da", "D_S", "D_T"), ("output_da", "D_S", "D_T"),
                       ("analogy_oda", "D_S", "D_T"), ("binary_da", "D_S", "D_T")]:
        s = scen(kind, 5, shift_magnitude=0.0)
        assert s.distributions[a].same_as(s.distributions[b])


def test_seed_42_has_positive_discrepancy():
    s = scen("standard_da", 42)
    DS, DT = s.distributions["D_S"], s.distributions["D_T"]
    values = [discrepancy(s.classes["H2"], pushforward(f, DS), pushforward(f, DT), s.loss).value
              for f in s.classes["H1"]]
    assert max(values) > 0


def test_output_da_realizable_inverse_exists():
    s = scen("output_da", 9, realizable=True)
    DyT = s.output_distribution("T")
    Id = Identity(s.output_dim)
    for g in s.classes["H2"]:
        best = min(risk(DyT, compose(gh, g), Id, s.loss) for gh in s.classes["H2_prime"])
        assert best == 0.0


def test_analogy_images_are_disjoint():
    for seed in range(10):
        s = scen("analogy_oda", seed)
        img_S = {tuple(p) for p in s.output_distribution("S").support.tolist()}
        img_T = {tuple(p) for p in s.output_distribution("T").support.tolist()}
        assert not img_S & img_T


def test_true_adapter_maps_target_outputs_onto_source_outputs():
    s = scen("analogy_oda", 3, shift_magnitude=0.0)
    D = s.distributions["D_S"]
    y_S, y_T = s.targets["y_S"], s.targets["y_T"]
    hits = [a for a in s.classes["H3"]
            if np.array_equal(a.apply(y_T.apply(D.support)), y_S.apply(D.support))]
    assert hits


def test_analogy_inverse_classes_are_inverses():
    s = scen("analogy_oda", 4)
    for name in ("H3", "H4"):
        C = s.classes[name]
        probes = np.random.default_rng(0).uniform(-2, 2, size=(200, C.input_dim))
        assert C.inverse_gap(probes, LossSpec("absolute", C.input_dim)) < 1e-9


def test_domain_transfer_idempotency():
    for seed in range(10):
        s = scen("domain_transfer", seed)
        y = s.targets["y"]
        assert np.array_equal(y.apply(y.points), y.points)
        for D in s.distributions.values():
            once = y.apply(D.support)
            assert np.array_equal(y.apply(once), once)
        Dy2 = s.output_distribution("2")
        assert risk(Dy2, y, Identity(y.input_dim), s.loss) == 0.0


def test_domain_transfer_second_domain_touches_codebook():
    s = scen("domain_transfer", 11)
    code = {tuple(p) for p in s.targets["y"].points.tolist()}
    support = {tuple(p) for p in s.distributions["D_2"].support.tolist()}
    assert code & support


def test_declared_lipschitz_bounds_estimates():
    rng = np.random.default_rng(0)
    for kind in ("standard_da", "output_da", "analogy_oda", "domain_transfer", "two_sided"):
        for loss_kind in ("absolute", "squared"):
            s = scen(kind, 21, loss_kind=loss_kind)
            for C in s.classes.values():
                for cls in (C, C.inverse_class):
                    if cls is None or cls.lipschitz_L is None:
                        continue
                    probes = rng.uniform(-2, 2, size=(1000, 2, cls.input_dim))
                    spec = LossSpec(loss_kind)
                    for h in cls:
                        assert estimate_L(h, spec, probes) <= cls.lipschitz_L


def test_config_validation():
    with pytest.raises(ConfigError):
        ScenarioConfig("nonsense")
    with pytest.raises(ConfigError):
        ScenarioConfig("standard_da", support_size=0)
    with pytest.raises(ConfigError):
        ScenarioConfig("standard_da", support_size=513)
    with pytest.raises(ConfigError):
        ScenarioConfig("standard_da", class_sizes={"H2": 0})
    with pytest.raises(ConfigError):
        ScenarioConfig("standard_da", class_sizes={"H2": 1000}, support_size=512)
    with pytest.raises(ConfigError):
        ScenarioConfig("binary_da", loss_kind="absolute")
    with pytest.raises(ConfigError):
        ScenarioConfig("standard_da", loss_kind="zero_one")
    with pytest.raises(ConfigError):
        ScenarioConfig("standard_da", shift_magnitude=-1.0)
    assert ScenarioConfig("binary_da").loss_kind == "zero_one"


def test_setting_validation():
    s = scen("standard_da", 1)
    with pytest.raises(SettingError):
        dataclasses.replace(s, kind="nonsense")
    with pytest.raises((SettingError, ValueError)):
        dataclasses.replace(s, distributions={"D_S": s.distributions["D_S"]})
    b = scen("binary_da", 1)
    with pytest.raises((SettingError, ValueError)):
        dataclasses.replace(b, loss=LossSpec("absolute"))


def test_every_kind_generates_at_other_sizes():
    for kind in KINDS:
        for dims in [dict(input_dim=1, feature_dim=1), dict(input_dim=3, feature_dim=2)]:
            s = scen(kind, 8, support_size=16, **dims)
            assert s.kind == kind
