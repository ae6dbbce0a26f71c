"""Domain-shift settings and the learner-visible views of them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .core import (
    DimensionError,
    FiniteDistribution,
    Hypothesis,
    HypothesisClass,
    LossSpec,
    Table,
    hypothesis_from_dict,
    pushforward,
)

KINDS = ("standard_da", "output_da", "analogy_oda", "two_sided", "domain_transfer", "binary_da")

_REQUIRED = {
    "standard_da": (("D_S", "D_T"), ("y_S", "y_T"), ("H1", "H2"), ()),
    "binary_da": (("D_S", "D_T"), ("y_S", "y_T"), ("H1", "H2"), ()),
    "output_da": (("D_S", "D_T"), ("y_S", "y_T"), ("H1", "H2", "H2_prime"), ()),
    "analogy_oda": (("D_S", "D_T"), ("y_S", "y_T"), ("H1", "H3", "H4"), ()),
    "two_sided": (("D_1", "D_2"), ("y_1", "y_2"), ("H1", "H2", "H3", "C"), ()),
    "domain_transfer": (("D_1", "D_2"), ("y",), ("H2",), ("f",)),
}


class SettingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DASetting:
    """A domain-shift instance: distributions, ground-truth maps, classes, loss.

    ``fixed`` holds maps that are part of the problem rather than learned
    (the pre-trained feature map ``f`` of domain transfer).
    """

    kind: str
    distributions: Dict[str, FiniteDistribution]
    targets: Dict[str, Hypothesis]
    classes: Dict[str, HypothesisClass]
    loss: LossSpec
    fixed: Dict[str, Hypothesis] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SettingError(f"unknown setting kind {self.kind!r}")
        dists, targets, classes, fixed = _REQUIRED[self.kind]
        for names, pool, what in ((dists, self.distributions, "distribution"),
                                  (targets, self.targets, "target"),
                                  (classes, self.classes, "class"),
                                  (fixed, self.fixed, "fixed map")):
            missing = [n for n in names if n not in pool]
            if missing:
                raise SettingError(f"{self.kind} setting is missing {what}(s) {missing}")
        getattr(self, f"_check_{self.kind}")()

    # -- dimension bookkeeping -------------------------------------------------

    @property
    def loss_F(self) -> LossSpec:
        return self.loss.with_dimension(self.feature_dim)

    @property
    def feature_dim(self) -> int:
        if self.kind == "domain_transfer":
            return self.fixed["f"].output_dim
        if "H1" in self.classes:
            return self.classes["H1"].output_dim
        raise SettingError("setting has no feature space")

    @property
    def output_dim(self) -> int:
        return self.loss.dimension

    def _chain(self, cls: str, din: int, dout: int):
        C = self.classes[cls]
        if (C.input_dim, C.output_dim) != (din, dout):
            raise DimensionError(
                f"{cls} maps R^{C.input_dim}->R^{C.output_dim}, expected R^{din}->R^{dout}")

    def _check_inputs(self, dist_names, target_names):
        dx = self.distributions[dist_names[0]].dim
        for d in dist_names:
            if self.distributions[d].dim != dx:
                raise DimensionError("input distributions must share a dimension")
        for t in target_names:
            y = self.targets[t]
            if (y.input_dim, y.output_dim) != (dx, self.output_dim):
                raise DimensionError(f"target {t} has the wrong signature")
        return dx

    def _check_standard_da(self):
        dx = self._check_inputs(("D_S", "D_T"), ("y_S", "y_T"))
        dF = self.classes["H1"].output_dim
        self._chain("H1", dx, dF)
        self._chain("H2", dF, self.output_dim)

    def _check_binary_da(self):
        self._check_standard_da()
        if self.loss.kind != "zero_one":
            raise SettingError("binary domain adaptation uses the zero_one loss")
        if self.targets["y_S"] is not self.targets["y_T"]:
            raise SettingError("binary domain adaptation assumes y_S = y_T")

    def _check_output_da(self):
        self._check_standard_da()
        self._chain("H2_prime", self.output_dim, self.feature_dim)
        for c in ("H2", "H2_prime"):
            if self.classes[c].lipschitz_L is None:
                raise SettingError(f"{c} needs a declared Lipschitz constant")

    def _check_analogy_oda(self):
        dx = self._check_inputs(("D_S", "D_T"), ("y_S", "y_T"))
        dF = self.classes["H1"].output_dim
        dY = self.output_dim
        self._chain("H1", dx, dF)
        self._chain("H4", dF, dY)
        self._chain("H3", dY, dY)
        for c in ("H3", "H4"):
            C = self.classes[c]
            if C.inverse_class is None:
                raise SettingError(f"{c} needs an inverse class")
            if C.lipschitz_L is None or C.inverse_class.lipschitz_L is None:
                raise SettingError(f"{c} and its inverse need declared Lipschitz constants")

    def _check_two_sided(self):
        dx = self._check_inputs(("D_1", "D_2"), ("y_1", "y_2"))
        dF = self.classes["H1"].output_dim
        self._chain("H1", dx, dF)
        self._chain("H2", dF, self.output_dim)
        H3 = self.classes["H3"]
        if H3.input_dim != self.output_dim:
            raise DimensionError("adapters must act on the output space")
        C = self.classes["C"]
        if C.input_dim != H3.output_dim:
            raise DimensionError("discriminator class must act on adapted outputs")

    def _check_domain_transfer(self):
        dx = self._check_inputs(("D_1", "D_2"), ("y",))
        if dx != self.output_dim:
            raise DimensionError("domain transfer maps a space to itself")
        f = self.fixed["f"]
        if f.input_dim != dx:
            raise DimensionError("feature map must act on the input space")
        self._chain("H2", f.output_dim, dx)
        if self.classes["H2"].lipschitz_L is None:
            raise SettingError("H2 needs a declared Lipschitz constant")
        y = self.targets["y"]
        for name in ("D_1", "D_2"):
            Y = y.apply(self.distributions[name].support)
            if not np.array_equal(y.apply(Y), Y):
                raise SettingError(f"target y is not idempotent on the support of {name}")

    # -- derived distributions -------------------------------------------------

    def output_distribution(self, domain: str) -> FiniteDistribution:
        """y o D for a domain label: 'S', 'T', '1' or '2'."""
        if self.kind == "domain_transfer":
            return pushforward(self.targets["y"], self.distributions[f"D_{domain}"])
        return pushforward(self.targets[f"y_{domain}"], self.distributions[f"D_{domain}"])

    def observed(self) -> "Observed":
        """What the learner is given; ground-truth target maps are not included."""
        d, c = self.distributions, self.classes
        if self.kind in ("standard_da", "binary_da"):
            return Observed(self.kind, self.loss,
                            {"D_S": d["D_S"], "D_T": d["D_T"]},
                            {"y_S": Table.from_function(self.targets["y_S"], d["D_S"].support)},
                            dict(c))
        if self.kind in ("output_da", "analogy_oda"):
            y_S = Table.from_function(self.targets["y_S"], d["D_S"].support)
            return Observed(self.kind, self.loss,
                            {"D_S": d["D_S"], "DyS": pushforward(y_S, d["D_S"]),
                             "DyT": self.output_distribution("T")},
                            {"y_S": y_S}, dict(c))
        if self.kind == "domain_transfer":
            return Observed(self.kind, self.loss,
                            {"D_1": d["D_1"], "Dy2": self.output_distribution("2")},
                            {"f": self.fixed["f"]}, dict(c))
        if self.kind == "two_sided":
            return Observed(self.kind, self.loss,
                            {"D_1": d["D_1"], "D_2": d["D_2"],
                             "Dy1": self.output_distribution("1"),
                             "Dy2": self.output_distribution("2")},
                            {}, dict(c))
        raise SettingError(self.kind)  # pragma: no cover

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "loss": self.loss.to_dict(),
            "distributions": {k: v.to_dict() for k, v in self.distributions.items()},
            "targets": _maps_to_dict(self.targets),
            "classes": {k: v.to_dict() for k, v in self.classes.items()},
            "fixed": {k: v.to_dict() for k, v in self.fixed.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DASetting":
        return cls(
            kind=d["kind"],
            distributions={k: FiniteDistribution.from_dict(v) for k, v in d["distributions"].items()},
            targets=_maps_from_dict(d["targets"]),
            classes={k: HypothesisClass.from_dict(v) for k, v in d["classes"].items()},
            loss=LossSpec.from_dict(d["loss"]),
            fixed={k: hypothesis_from_dict(v) for k, v in d.get("fixed", {}).items()},
        )


def _maps_to_dict(maps: Dict[str, Hypothesis]) -> dict:
    # Shared objects (y_S is y_T) are stored once and referenced by name.
    out, seen = {}, {}
    for name, h in maps.items():
        if id(h) in seen:
            out[name] = {"same_as": seen[id(h)]}
        else:
            seen[id(h)] = name
            out[name] = h.to_dict()
    return out


def _maps_from_dict(d: dict) -> Dict[str, Hypothesis]:
    out = {}
    for name, spec in d.items():
        out[name] = out[spec["same_as"]] if "same_as" in spec else hypothesis_from_dict(spec)
    return out


@dataclass(frozen=True, eq=False)
class Observed:
    """Learner view of a setting: sample distributions, source labels, classes."""

    kind: str
    loss: LossSpec
    data: Dict[str, FiniteDistribution]
    maps: Dict[str, Hypothesis]
    classes: Dict[str, HypothesisClass]
