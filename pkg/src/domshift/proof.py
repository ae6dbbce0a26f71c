"""One-step inequality scripts and the reports they produce.

A proof is a list of steps ``lhs <= constant * sum(rhs)`` (or ``lhs == rhs``)
between named, numerically evaluated quantities. Every step is checked on
its own. The global bound is then assembled mechanically: starting from the
left-hand side with coefficient 1, each step pushes ``coefficient * constant``
onto its right-hand quantities, and the quantities that are never expanded
are the theorem's terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

TOL = 1e-9


@dataclass(frozen=True)
class ProofStep:
    step_id: str
    lhs_term: str
    rhs_terms: tuple
    constant: float
    justification: str
    group: str = ""
    relation: str = "le"

    def __post_init__(self):
        if self.relation not in ("le", "eq"):
            raise ValueError(f"unknown relation {self.relation!r}")
        if not (self.constant >= 1.0):
            raise ValueError(f"step {self.step_id}: constants are at least 1, got {self.constant}")
        if self.relation == "eq" and (len(self.rhs_terms) != 1 or self.constant != 1.0):
            raise ValueError(f"step {self.step_id}: identities relate two single quantities")


@dataclass
class BoundReport:
    setting: str
    theorem: str
    lhs_term: str
    lhs: float
    terms: Dict[str, float]
    coefficients: Dict[str, float]
    constant: float
    rhs: float
    slack: float
    steps: List[dict]
    passed: bool
    extras: Dict[str, float] = field(default_factory=dict)

    @property
    def failed_steps(self) -> List[dict]:
        return [s for s in self.steps if not s["pass"]]

    def to_dict(self) -> dict:
        return {
            "setting": self.setting,
            "theorem": self.theorem,
            "lhs_term": self.lhs_term,
            "lhs": self.lhs,
            "terms": dict(self.terms),
            "coefficients": dict(self.coefficients),
            "constant": self.constant,
            "rhs": self.rhs,
            "slack": self.slack,
            "steps": [dict(s) for s in self.steps],
            "pass": self.passed,
            "extras": dict(self.extras),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        return cls(
            setting=d["setting"], theorem=d["theorem"], lhs_term=d["lhs_term"], lhs=d["lhs"],
            terms=dict(d["terms"]), coefficients=dict(d["coefficients"]),
            constant=d["constant"], rhs=d["rhs"], slack=d["slack"],
            steps=[dict(s) for s in d["steps"]], passed=d["pass"],
            extras=dict(d.get("extras", {})),
        )


class Proof:
    """Collects evaluated quantities and the steps relating them."""

    def __init__(self, setting: str, theorem: str):
        self.setting = setting
        self.theorem = theorem
        self.values: Dict[str, float] = {}
        self.steps: List[ProofStep] = []

    def quantity(self, name: str, value: float) -> str:
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"quantity {name} is not finite")
        old = self.values.setdefault(name, value)
        if old != value:
            raise ValueError(f"quantity {name} evaluated twice with different values")
        return name

    def le(self, step_id: str, lhs: str, rhs: Sequence[str], constant: float,
           why: str, group: str = "") -> None:
        self._add(ProofStep(step_id, lhs, tuple(rhs), float(constant), why, group, "le"))

    def eq(self, step_id: str, lhs: str, rhs: str, why: str, group: str = "") -> None:
        self._add(ProofStep(step_id, lhs, (rhs,), 1.0, why, group, "eq"))

    def _add(self, step: ProofStep) -> None:
        for name in (step.lhs_term,) + step.rhs_terms:
            if name not in self.values:
                raise KeyError(f"step {step.step_id} uses unevaluated quantity {name}")
        if any(s.step_id == step.step_id for s in self.steps):
            raise ValueError(f"duplicate step id {step.step_id}")
        self.steps.append(step)

    # -- checking ----------------------------------------------------------

    def check(self, step: ProofStep) -> dict:
        lhs = self.values[step.lhs_term]
        total = math.fsum(self.values[t] for t in step.rhs_terms)
        rhs = step.constant * total
        ok = abs(lhs - rhs) <= TOL if step.relation == "eq" else lhs <= rhs + TOL
        return {
            "id": step.step_id,
            "lhs": lhs,
            "rhs": rhs,
            "constant": step.constant,
            "pass": bool(ok),
            "relation": step.relation,
            "justification": step.justification,
            "group": step.group,
            "lhs_term": step.lhs_term,
            "rhs_terms": list(step.rhs_terms),
        }

    def coefficients(self, target: str) -> Dict[str, float]:
        """Coefficient of every unexpanded quantity reachable from ``target``."""
        expanding: Dict[str, ProofStep] = {}
        for s in self.steps:
            if s.lhs_term in expanding:
                raise ValueError(f"quantity {s.lhs_term} is expanded by two steps")
            expanding[s.lhs_term] = s
        parents: Dict[str, List[ProofStep]] = {}
        for s in self.steps:
            for t in s.rhs_terms:
                parents.setdefault(t, []).append(s)

        memo: Dict[str, float] = {}

        def coef(name: str, trail=()) -> float:
            if name == target:
                return 1.0
            if name in memo:
                return memo[name]
            if name in trail:
                raise ValueError(f"proof steps are cyclic through {name}")
            total = 0.0
            for s in parents.get(name, ()):
                total += coef(s.lhs_term, trail + (name,)) * s.constant * s.rhs_terms.count(name)
            memo[name] = total
            return total

        leaves = {}
        stack, seen = [target], set()
        while stack:
            q = stack.pop()
            if q in seen:
                continue
            seen.add(q)
            if q in expanding:
                stack.extend(expanding[q].rhs_terms)
            else:
                leaves[q] = coef(q)
        return leaves

    def report(self, lhs: str, terms: Sequence[str],
               groups: Optional[Dict[str, Iterable[str]]] = None,
               extras: Optional[Dict[str, float]] = None) -> BoundReport:
        """Check every step and assemble the composed bound.

        ``terms`` lists the reported term names in order. A name in ``groups``
        stands for several unexpanded quantities whose values add up to the
        term; it receives the largest of their coefficients, which keeps the
        composed bound valid.
        """
        groups = {k: tuple(v) for k, v in (groups or {}).items()}
        leaf_coef = self.coefficients(lhs)
        expected = set()
        for t in terms:
            expected.update(groups.get(t, (t,)))
        if set(leaf_coef) != expected:
            raise ValueError(
                f"proof of {self.theorem} ends in {sorted(leaf_coef)}, expected {sorted(expected)}")

        term_values, coefs = {}, {}
        for t in terms:
            members = groups.get(t, (t,))
            term_values[t] = math.fsum(self.values[m] for m in members)
            coefs[t] = max(leaf_coef[m] for m in members)
        return self._finish(lhs, term_values, coefs, extras)

    def statement(self, lhs: str, terms: Dict[str, float],
                  extras: Optional[Dict[str, float]] = None) -> BoundReport:
        """A bound of the form lhs <= sum(terms), with the steps checked alongside."""
        return self._finish(lhs, dict(terms), {t: 1.0 for t in terms}, extras)

    def _finish(self, lhs, term_values, coefs, extras) -> BoundReport:
        steps = [self.check(s) for s in self.steps]
        constant = max(coefs.values()) if coefs else 1.0
        rhs = constant * math.fsum(term_values.values())
        lhs_value = self.values[lhs]
        passed = all(s["pass"] for s in steps) and lhs_value <= rhs + TOL
        return BoundReport(
            setting=self.setting, theorem=self.theorem, lhs_term=lhs, lhs=lhs_value,
            terms=term_values, coefficients=coefs, constant=constant, rhs=rhs,
            slack=rhs - lhs_value, steps=steps, passed=bool(passed), extras=dict(extras or {}),
        )
