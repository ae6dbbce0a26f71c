"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from domshift.adapt import train
from domshift.bounds import compute_bound_dt, compute_bound_dtn, two_sided_gap_report
from domshift.checks import random_instance
from domshift.cli import main, verify_scenario
from domshift.core import Identity, LossSpec, compose, pushforward
from domshift.measures import (
    discrepancy,
    estimate_K,
    estimate_L,
    max_mean_gap,
    quad_discrepancy,
    risk,
    symmetric_difference_class,
)
from domshift.scenarios import ScenarioConfig, generate

from test_adapt import audit

LINES = {}
TOL = 1e-9
EXACT = 1e-12


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES[n] = line
    print(line)
    assert ok, line


def rng_for(n):
    return np.random.Generator(np.random.PCG64(1000 + n))


def test_criterion_01_discrepancy_axioms():
    rng = rng_for(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        inst = random_instance(rng, max_class=32, max_support=64)
        C, (D1, D2, D3, _), spec = inst.C, inst.D, inst.spec
        d = lambda a, b: discrepancy(C, a, b, spec).value
        d12, d21, d23, d13 = d(D1, D2), d(D2, D1), d(D2, D3), d(D1, D3)
        worst = max(worst, d(D1, D1), abs(d12 - d21), d13 - (d12 + d23))
    elapsed = time.perf_counter() - start
    record(1, worst <= TOL and elapsed < 30,
           f"200 instances, worst violation {worst:.3g}, {elapsed:.1f}s")


def test_criterion_02_discrepancy_gap_and_identities():
    rng = rng_for(2)
    worst_ineq, worst_id = 0.0, 0.0
    for _ in range(200):
        inst = random_instance(rng, max_class=32, max_support=64)
        C, (A, B, P, Q), spec = inst.C, inst.D, inst.spec
        q = quad_discrepancy(C, A, B, P, Q, spec).value
        d1, d2 = discrepancy(C, A, B, spec).value, discrepancy(C, P, Q, spec).value
        worst_ineq = max(worst_ineq, abs(d1 - d2) - q, q - (d1 + d2))
        for D in (P, Q):
            worst_id = max(worst_id,
                           abs(quad_discrepancy(C, A, B, D, D, spec).value - d1),
                           abs(quad_discrepancy(C, A, D, B, D, spec).value - d1))
    record(2, worst_ineq <= TOL and worst_id < EXACT,
           f"200 quads, worst inequality excess {worst_ineq:.3g}, identity gap {worst_id:.3g}")


def test_criterion_03_two_sided_gap():
    rng = rng_for(3)
    fails, worst = 0, -math.inf
    for seed in range(100):
        s = generate(ScenarioConfig("two_sided", seed=seed))
        c = s.classes
        pick = lambda name: c[name][int(rng.integers(len(c[name])))]
        rep = two_sided_gap_report(s, compose(pick("H1"), pick("H2")),
                                   compose(pick("H1"), pick("H2")), pick("H3"), pick("H3"))
        fails += not rep.passed
        worst = max(worst, rep.lhs - rep.rhs)
    record(3, fails == 0 and worst <= TOL,
           f"100 two-sided scenarios, max lhs-rhs {worst:.3g}, {fails} failures")


def _verify(kind, n, seed=0):
    out = []
    for i in range(n):
        cfg = ScenarioConfig(kind, seed=seed + i)
        out.append(verify_scenario((i, cfg.to_dict(), {})))
    return out


def _summary(results):
    reports = [r for res in results for c in res["candidates"] for r in c["reports"]]
    steps = [s for r in reports for s in r["steps"]]
    bad_steps = sum(not s["pass"] for s in steps)
    min_slack = min(r["slack"] for r in reports)
    return reports, steps, bad_steps, min_slack


@pytest.mark.slow
def test_criterion_04_proof_scripts():
    start = time.perf_counter()
    details, ok = [], True
    for kind, label in [("output_da", "oda"), ("analogy_oda", "analogy"), ("domain_transfer", "dt")]:
        reports, steps, bad, slack = _summary(_verify(kind, 100))
        passed = bad == 0 and slack >= -TOL and all(r["pass"] for r in reports)
        ok &= passed
        details.append(f"{label}: {len(reports)} reports, {len(steps)} steps, {bad} failed, "
                       f"min slack {slack:.3g}")
    elapsed = time.perf_counter() - start
    record(4, ok and elapsed < 300, "; ".join(details) + f"; {elapsed:.0f}s")


@pytest.mark.slow
def test_criterion_05_prior_bounds():
    details, ok = [], True
    for kind in ("standard_da", "binary_da"):
        results = _verify(kind, 100)
        reports, _, bad, slack = _summary(results)
        for thm in sorted({r["theorem"] for r in reports}):
            mine = [r for r in reports if r["theorem"] == thm]
            good = all(r["pass"] for r in mine) and min(r["slack"] for r in mine) >= -TOL
            ok &= good
            details.append(f"{kind}/{thm}: {len(mine)} reports, min slack "
                           f"{min(r['slack'] for r in mine):.3g}")
    record(5, ok, "; ".join(details))


def test_criterion_06_constants():
    rng = rng_for(6)
    n = 100_000
    K = {}
    for kind in ("absolute", "squared", "zero_one"):
        if kind == "zero_one":
            probes = rng.integers(0, 2, size=(n, 3, 1)).astype(float)
        else:
            probes = rng.uniform(-3, 3, size=(n, 3, 1))
        K[kind] = estimate_K(LossSpec(kind), probes)
    k_ok = K["absolute"] <= 1 + EXACT and K["zero_one"] <= 1 + EXACT and K["squared"] <= 2 + EXACT
    k_ok &= K["squared"] <= LossSpec("squared").K

    checked, worst = 0, 0.0
    for kind in ("standard_da", "output_da", "analogy_oda", "two_sided", "domain_transfer"):
        for loss_kind in ("absolute", "squared"):
            s = generate(ScenarioConfig(kind, seed=6, loss_kind=loss_kind))
            for C in s.classes.values():
                for cls in (C, C.inverse_class):
                    if cls is None or cls.lipschitz_L is None:
                        continue
                    probes = rng.uniform(-2, 2, size=(1000, 2, cls.input_dim))
                    for h in cls:
                        worst = max(worst, estimate_L(h, LossSpec(loss_kind), probes) / cls.lipschitz_L)
                        checked += 1
    record(6, k_ok and worst <= 1.0,
           f"K_hat abs {K['absolute']:.12g}, sq {K['squared']:.12g}, 01 {K['zero_one']:.12g}; "
           f"{checked} members, max L_hat/L {worst:.4g}")


@pytest.mark.slow
def test_criterion_07_trainers():
    audited = 0
    for kind in ("standard_da", "binary_da", "output_da", "analogy_oda", "domain_transfer"):
        for seed in range(20):
            s = generate(ScenarioConfig(kind, seed=100 + seed))
            audit(s, train(s))
            audited += 1
    s = generate(ScenarioConfig("output_da", seed=3, realizable=True, shift_magnitude=0.0,
                                output_dim=2))
    gap = abs(train(s).target_risk - train(s, {"inv": 0.0, "disc": 0.0}).target_risk)
    dt = generate(ScenarioConfig("domain_transfer", seed=11, realizable=True))
    r = train(dt)
    dt_ok = compute_bound_dt(dt, r.parts["g"]).passed and compute_bound_dtn(dt, r.parts["g"]).passed
    record(7, gap <= 1e-6 and r.target_risk == 0.0 and dt_ok,
           f"{audited} audits optimal; no-shift ODA gap {gap:.3g}; "
           f"DT seed 11 target risk {r.target_risk}, bound pass {dt_ok}")


def test_criterion_08_idempotency():
    worst, checked = 0.0, 0
    for seed in range(50):
        s = generate(ScenarioConfig("domain_transfer", seed=seed, realizable=seed % 2 == 0))
        y = s.targets["y"]
        for D in s.distributions.values():
            once = y.apply(D.support)
            assert np.array_equal(y.apply(once), once)
            checked += len(D)
        Dy2 = s.output_distribution("2")
        worst = max(worst, risk(Dy2, y, Identity(y.input_dim), s.loss))
    record(8, worst == 0.0, f"50 scenarios, {checked} support points, max R[y, Id] {worst}")


def test_criterion_09_determinism(tmp_path, monkeypatch):
    outs = []
    for workers in ("1", "3"):
        monkeypatch.setenv("DSHIFT_WORKERS", workers)
        path = tmp_path / f"r{workers}.json"
        code = main(["verify", "--setting", "analogy", "--n", "6", "--seed", "42", "--out", str(path)])
        outs.append((code, path.read_bytes()))
    same = outs[0][1] == outs[1][1]
    record(9, same and outs[0][0] == 0, f"single vs 3 workers byte-identical: {same}")


def test_criterion_10_cdc_equivalence():
    worst, pairs = 0.0, 0
    for seed in range(50):
        s = generate(ScenarioConfig("binary_da", seed=seed))
        H2 = s.classes["H2"]
        S = symmetric_difference_class(H2)
        DS, DT = s.distributions["D_S"], s.distributions["D_T"]
        for f in s.classes["H1"]:
            fS, fT = pushforward(f, DS), pushforward(f, DT)
            d = discrepancy(H2, fS, fT, s.loss).value
            gap, _ = max_mean_gap(S, fS, fT)
            worst = max(worst, abs(d - gap))
            pairs += 1
    record(10, worst <= EXACT, f"50 scenarios, {pairs} feature maps, max |disc - gap| {worst:.3g}")
