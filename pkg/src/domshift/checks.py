"""Randomized property checks for the discrepancy measures.

Each check returns ``Check`` records; a run passes when every record does.
Instances are drawn from ``PCG64(seed)`` so a run is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, NamedTuple

import numpy as np

from .bounds import two_sided_gap_report, discrepancy_gap_report
from .core import FiniteDistribution, HypothesisClass, LossSpec, pushforward
from .measures import discrepancy, max_mean_gap, quad_discrepancy, symmetric_difference_class
from .scenarios import ScenarioConfig, _mixed_members, _sample_support, generate

TOL = 1e-9
EXACT_TOL = 1e-12


class Check(NamedTuple):
    name: str
    instance: int
    passed: bool
    lhs: float
    rhs: float

    def to_dict(self) -> dict:
        return {"name": self.name, "instance": self.instance, "pass": self.passed,
                "lhs": self.lhs, "rhs": self.rhs}


@dataclass(frozen=True)
class Instance:
    C: HypothesisClass
    D: tuple
    spec: LossSpec


def random_instance(rng: np.random.Generator, max_class: int = 32, max_support: int = 64,
                    n_dists: int = 4) -> Instance:
    """A random class on R^d -> R and ``n_dists`` distributions with overlapping supports."""
    dim = int(rng.integers(1, 3))
    kind = str(rng.choice(["absolute", "squared"]))
    m = int(rng.integers(1, max_class + 1))
    C = HypothesisClass(tuple(_mixed_members(rng, m, dim, 1, kind)))
    pool = _sample_support(rng, 2 * max_support, dim)
    Ds = []
    for _ in range(n_dists):
        n = int(rng.integers(1, max_support + 1))
        S = pool[np.sort(rng.choice(len(pool), size=n, replace=False))]
        w = rng.random(n) + 0.1
        Ds.append(FiniteDistribution(S, w / w.sum()))
    return Instance(C, tuple(Ds), LossSpec(kind, 1))


def disc_axioms(inst: Instance, i: int) -> List[Check]:
    C, (D1, D2, D3, _), spec = inst.C, inst.D, inst.spec
    d = lambda a, b: discrepancy(C, a, b, spec).value
    d11, d12, d21, d23, d13 = d(D1, D1), d(D1, D2), d(D2, D1), d(D2, D3), d(D1, D3)
    return [
        Check("disc-identity", i, d11 <= TOL, d11, 0.0),
        Check("disc-symmetry", i, abs(d12 - d21) <= TOL, d12, d21),
        Check("disc-triangle", i, d13 <= d12 + d23 + TOL, d13, d12 + d23),
    ]


def quad_properties(inst: Instance, i: int) -> List[Check]:
    C, (D11, D12, D21, D22), spec = inst.C, inst.D, inst.spec
    rep = discrepancy_gap_report(C, D11, D12, D21, D22, spec)
    q = rep.terms["q-disc_C[(D11, D12), (D21, D22)]"]
    d1 = discrepancy(C, D11, D12, spec).value
    d2 = discrepancy(C, D21, D22, spec).value
    D = D22
    first = quad_discrepancy(C, D11, D12, D, D, spec).value
    second = quad_discrepancy(C, D11, D, D12, D, spec).value
    same = quad_discrepancy(C, D11, D12, D11, D12, spec).value
    return [
        Check("disc-gap", i, rep.passed, rep.lhs, rep.rhs),
        Check("qdisc-sum-bound", i, q <= d1 + d2 + TOL, q, d1 + d2),
        Check("qdisc-identity-paired", i, abs(first - d1) < EXACT_TOL, first, d1),
        Check("qdisc-identity-shared", i, abs(second - d1) < EXACT_TOL, second, d1),
        Check("qdisc-identical-pairs", i, same == 0.0, same, 0.0),
    ]


def singleton_class(inst: Instance, i: int) -> List[Check]:
    C = HypothesisClass(inst.C.members[:1])
    D1, D2 = inst.D[:2]
    d = discrepancy(C, D1, D2, inst.spec).value
    q = quad_discrepancy(C, *inst.D, inst.spec).value
    return [Check("singleton-disc", i, d == 0.0, d, 0.0),
            Check("singleton-qdisc", i, q == 0.0, q, 0.0)]


def two_sided_check(seed: int, i: int, rng: np.random.Generator, **cfg) -> Check:
    setting = generate(ScenarioConfig("two_sided", seed=seed, **cfg))
    c = setting.classes
    pick = lambda name: c[name][int(rng.integers(len(c[name])))]
    h1 = pick("H1").then(pick("H2"))
    h2 = pick("H1").then(pick("H2"))
    rep = two_sided_gap_report(setting, h1, h2, pick("H3"), pick("H3"))
    return Check("two-sided-gap", i, rep.passed, rep.lhs, rep.rhs)


def cdc_check(seed: int, i: int, **cfg) -> Check:
    """Discrepancy of a binary class equals the max mean gap over its C-delta-C class."""
    setting = generate(ScenarioConfig("binary_da", seed=seed, **cfg))
    H1, H2 = setting.classes["H1"], setting.classes["H2"]
    D_S, D_T = setting.distributions["D_S"], setting.distributions["D_T"]
    worst = 0.0
    for f in H1.members:
        fS, fT = pushforward(f, D_S), pushforward(f, D_T)
        d = discrepancy(H2, fS, fT, setting.loss).value
        gap, _ = max_mean_gap(symmetric_difference_class(H2), fS, fT)
        worst = max(worst, abs(d - gap))
    return Check("cdc-equivalence", i, worst <= EXACT_TOL, worst, 0.0)


def iter_axiom_checks(seed: int, n: int) -> Iterator[Check]:
    """The full measures property suite over ``n`` random instances."""
    rng = np.random.Generator(np.random.PCG64(seed))
    for i in range(n):
        inst = random_instance(rng)
        yield from disc_axioms(inst, i)
        yield from quad_properties(inst, i)
        yield from singleton_class(inst, i)
        sub = int(rng.integers(2**32))
        yield two_sided_check(sub, i, rng, support_size=32)
        yield cdc_check(sub, i, support_size=32, class_sizes={"H1": 2, "H2": 8})


def run_axioms(seed: int, n: int) -> List[Check]:
    return list(iter_axiom_checks(seed, n))
