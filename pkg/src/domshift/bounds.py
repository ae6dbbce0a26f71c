"""Reference minimizers and the checked bound theorems for every setting.

Each ``compute_bound_*`` evaluates the theorem's terms, replays its proof as
a list of single-application inequalities (one triangle, Lipschitz or
discrepancy step each, with the constant that step needs) and returns a
:class:`BoundReport`. Names of risk terms read like the math, with ``o`` for
composition: ``R_{f o DS}[g, g*_T]`` is the risk of g against g*_T under the
pushforward of D_S through f.
"""

from __future__ import annotations

import itertools
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core import (
    FiniteDistribution,
    Hypothesis,
    HypothesisClass,
    Identity,
    LossSpec,
    compose,
    pushforward,
)
from .measures import discrepancy, estimate_L, quad_discrepancy, relation_gap, risk
from .proof import TOL, BoundReport, Proof
from .setting import DASetting, SettingError


class BestFit(NamedTuple):
    index: int
    hypothesis: Hypothesis
    risk: float


def _argmin(values: Sequence[float]) -> int:
    # Lowest index among exact minimizers.
    return int(np.argmin(np.asarray(values, dtype=np.float64)))


def best_in_class(C: HypothesisClass, prefix: Hypothesis, D: FiniteDistribution,
                  target: Hypothesis, spec: LossSpec) -> BestFit:
    """argmin over members c of R_D[c o prefix, target]."""
    risks = [risk(D, compose(prefix, c), target, spec) for c in C.members]
    i = _argmin(risks)
    return BestFit(i, C[i], risks[i])


def best_ghat_T(H2_prime: HypothesisClass, g_star_T: Hypothesis, ghat: Hypothesis,
                f: Hypothesis, setting: DASetting) -> BestFit:
    """argmin over gbar of R_{ghat o DyT}[gbar o g*_T, Id] + R_{f o DT}[gbar o g*_T, Id]."""
    _require(setting, "output_da")
    loss_F = setting.loss_F
    DyT = setting.output_distribution("T")
    ghat_DyT = pushforward(ghat, DyT)
    f_DT = pushforward(f, setting.distributions["D_T"])
    Id = Identity(setting.feature_dim)
    values = []
    for gbar in H2_prime.members:
        back = compose(g_star_T, gbar)
        values.append(risk(ghat_DyT, back, Id, loss_F) + risk(f_DT, back, Id, loss_F))
    i = _argmin(values)
    return BestFit(i, H2_prime[i], values[i])


def _require(setting: DASetting, *kinds: str):
    if setting.kind not in kinds:
        raise SettingError(f"expected a {' or '.join(kinds)} setting, got {setting.kind}")


def _inverse_in(C: HypothesisClass, h: Hypothesis) -> Hypothesis:
    """The declared inverse of a member, or a closed-form inverse otherwise."""
    if C.inverse_class is not None:
        for i, m in enumerate(C.members):
            if m is h:
                return C.inverse_class[i]
    return h.inverse()


def R(D: str, a: str, b: str) -> str:
    return f"R_{{{D}}}[{a}, {b}]"


# ---------------------------------------------------------------------------
# prior bounds for standard adaptation


def compute_bound_mansour(setting: DASetting, f: Hypothesis, g: Hypothesis) -> BoundReport:
    """R_T[h, y_T] against source risk to h*_S, the h*-terms and disc_H2(f o DS, f o DT).

    With K = 1 this is the classical statement; for squared loss each
    triangle application carries K and the report holds the K-weighted form.
    """
    _require(setting, "standard_da", "binary_da")
    loss, K = setting.loss, setting.loss.K
    H2 = setting.classes["H2"]
    DS, DT = setting.distributions["D_S"], setting.distributions["D_T"]
    yS, yT = setting.targets["y_S"], setting.targets["y_T"]
    h = compose(f, g)
    gS = best_in_class(H2, f, DS, yS, loss).hypothesis
    gT = best_in_class(H2, f, DT, yT, loss).hypothesis
    hS, hT = compose(f, gS), compose(f, gT)
    fDS, fDT = pushforward(f, DS), pushforward(f, DT)

    p = Proof(setting.kind, "mansour")
    lhs = p.quantity(R("DT", "h", "y_T"), risk(DT, h, yT, loss))
    t_hT = p.quantity(R("DT", "h", "h*_T"), risk(DT, h, hT, loss))
    t_opt = p.quantity(R("DT", "h*_T", "y_T"), risk(DT, hT, yT, loss))
    fT = p.quantity(R("f o DT", "g", "g*_T"), risk(fDT, g, gT, loss))
    fS = p.quantity(R("f o DS", "g", "g*_T"), risk(fDS, g, gT, loss))
    disc = p.quantity("disc_H2(f o DS, f o DT)", discrepancy(H2, fDS, fDT, loss).value)
    s_hT = p.quantity(R("DS", "h", "h*_T"), risk(DS, h, hT, loss))
    s_hS = p.quantity(R("DS", "h", "h*_S"), risk(DS, h, hS, loss))
    s_ST = p.quantity(R("DS", "h*_S", "h*_T"), risk(DS, hS, hT, loss))

    p.le("target-split", lhs, [t_hT, t_opt], K, "triangle", "target")
    p.eq("feature-view-target", t_hT, fT, "pushforward", "discrepancy")
    p.le("discrepancy", fT, [fS, disc], 1.0, "discrepancy", "discrepancy")
    p.eq("feature-view-source", fS, s_hT, "pushforward", "discrepancy")
    p.le("source-split", s_hT, [s_hS, s_ST], K, "triangle", "source")
    return p.report(lhs, [s_hS, t_opt, s_ST, disc])


def lambda_minimizer(setting: DASetting, f: Hypothesis) -> BestFit:
    """argmin over g in H2 of R_DT[g o f, y] + R_DS[g o f, y]."""
    _require(setting, "binary_da", "standard_da")
    loss = setting.loss
    DS, DT = setting.distributions["D_S"], setting.distributions["D_T"]
    yS, yT = setting.targets["y_S"], setting.targets["y_T"]
    H2 = setting.classes["H2"]
    values = [risk(DT, compose(f, g), yT, loss) + risk(DS, compose(f, g), yS, loss)
              for g in H2.members]
    i = _argmin(values)
    return BestFit(i, H2[i], values[i])


def compute_bound_bendavid(setting: DASetting, f: Hypothesis, g: Hypothesis) -> BoundReport:
    """R_T[h, y] <= R_S[h, y] + disc_H2(f o DS, f o DT) + lambda for binary labels."""
    _require(setting, "binary_da")
    loss = setting.loss
    H2 = setting.classes["H2"]
    DS, DT = setting.distributions["D_S"], setting.distributions["D_T"]
    y = setting.targets["y_S"]
    h = compose(f, g)
    for D in (DS, DT):
        out = h.apply(D.support)
        if not np.all((out == 0.0) | (out == 1.0)):
            raise ValueError("hypothesis takes non-binary values")
    g_lam = lambda_minimizer(setting, f).hypothesis
    h_lam = compose(f, g_lam)
    fDS, fDT = pushforward(f, DS), pushforward(f, DT)

    p = Proof(setting.kind, "bendavid")
    lhs = p.quantity(R("DT", "h", "y"), risk(DT, h, y, loss))
    t_hl = p.quantity(R("DT", "h", "h_lambda"), risk(DT, h, h_lam, loss))
    t_ly = p.quantity(R("DT", "h_lambda", "y"), risk(DT, h_lam, y, loss))
    fT = p.quantity(R("f o DT", "g", "g_lambda"), risk(fDT, g, g_lam, loss))
    fS = p.quantity(R("f o DS", "g", "g_lambda"), risk(fDS, g, g_lam, loss))
    disc = p.quantity("disc_H2(f o DS, f o DT)", discrepancy(H2, fDS, fDT, loss).value)
    s_hl = p.quantity(R("DS", "h", "h_lambda"), risk(DS, h, h_lam, loss))
    s_hy = p.quantity(R("DS", "h", "y"), risk(DS, h, y, loss))
    s_ly = p.quantity(R("DS", "h_lambda", "y"), risk(DS, h_lam, y, loss))

    p.le("target-split", lhs, [t_hl, t_ly], 1.0, "triangle", "target")
    p.eq("feature-view-target", t_hl, fT, "pushforward", "discrepancy")
    p.le("discrepancy", fT, [fS, disc], 1.0, "discrepancy", "discrepancy")
    p.eq("feature-view-source", fS, s_hl, "pushforward", "discrepancy")
    p.le("source-split", s_hl, [s_hy, s_ly], 1.0, "triangle", "source")
    return p.report(lhs, [s_hy, disc, "lambda"], groups={"lambda": [t_ly, s_ly]})


# ---------------------------------------------------------------------------
# output-side adaptation


def _declared(C: HypothesisClass, what: str) -> float:
    if C.lipschitz_L is None:
        raise SettingError(f"{what} needs a declared Lipschitz constant")
    return float(C.lipschitz_L)


def compute_bound_oda(setting: DASetting, f: Hypothesis, g: Hypothesis,
                      ghat: Hypothesis) -> BoundReport:
    """Output-side adaptation bound with its seven terms.

    ghat maps target outputs back to features; ghat_T is the best such map for
    the target-optimal classifier g*_T.
    """
    _require(setting, "output_da")
    loss, loss_F, K = setting.loss, setting.loss_F, setting.loss.K
    H2, H2p = setting.classes["H2"], setting.classes["H2_prime"]
    L2, L2p = _declared(H2, "H2"), _declared(H2p, "H2_prime")
    DS, DT = setting.distributions["D_S"], setting.distributions["D_T"]
    yS, yT = setting.targets["y_S"], setting.targets["y_T"]
    IdY, IdF = Identity(setting.output_dim), Identity(setting.feature_dim)

    h = compose(f, g)
    gS = best_in_class(H2, f, DS, yS, loss).hypothesis
    gT = best_in_class(H2, f, DT, yT, loss).hypothesis
    hS, hT = compose(f, gS), compose(f, gT)
    ghT = best_ghat_T(H2p, gT, ghat, f, setting).hypothesis

    DyT = pushforward(yT, DT)
    ghat_DyT = pushforward(ghat, DyT)
    fDS, fDT = pushforward(f, DS), pushforward(f, DT)

    p = Proof(setting.kind, "oda")
    q = p.quantity
    lhs = q(R("DT", "h", "y_T"), risk(DT, h, yT, loss))
    back_y = q(R("DT", "g o ghat_T o y_T", "y_T"), risk(DT, compose(yT, ghT, g), yT, loss))
    resid = q(R("DT", "h", "g o ghat_T o y_T"), risk(DT, h, compose(yT, ghT, g), loss))
    cyc_T = q(R("DyT", "g o ghat_T", "Id"), risk(DyT, compose(ghT, g), IdY, loss))
    cyc_Tg = q(R("DyT", "g o ghat_T", "g o ghat"), risk(DyT, compose(ghT, g), compose(ghat, g), loss))
    inv_g = q(R("DyT", "g o ghat", "Id"), risk(DyT, compose(ghat, g), IdY, loss))
    feat = q(R("DyT", "ghat_T", "ghat"), risk(DyT, ghT, ghat, loss_F))
    mixed = compose(ghat, g, ghT)
    mix_a = q(R("DyT", "ghat_T o g o ghat", "ghat"), risk(DyT, mixed, ghat, loss_F))
    mix_b = q(R("DyT", "ghat_T o g o ghat", "ghat_T"), risk(DyT, mixed, ghT, loss_F))
    push_a = q(R("ghat o DyT", "ghat_T o g", "Id"), risk(ghat_DyT, compose(g, ghT), IdF, loss_F))
    push_b = q(R("ghat o DyT", "ghat_T o g", "ghat_T o g*_T"),
               risk(ghat_DyT, compose(g, ghT), compose(gT, ghT), loss_F))
    inv_gT = q(R("ghat o DyT", "ghat_T o g*_T", "Id"), risk(ghat_DyT, compose(gT, ghT), IdF, loss_F))
    gg = q(R("ghat o DyT", "g", "g*_T"), risk(ghat_DyT, g, gT, loss))
    fS = q(R("f o DS", "g", "g*_T"), risk(fDS, g, gT, loss))
    disc = q("disc_H2(f o DS, ghat o DyT)", discrepancy(H2, fDS, ghat_DyT, loss).value)
    s_hT = q(R("DS", "h", "h*_T"), risk(DS, h, hT, loss))
    s_hS = q(R("DS", "h", "h*_S"), risk(DS, h, hS, loss))
    s_ST = q(R("DS", "h*_S", "h*_T"), risk(DS, hS, hT, loss))
    f_res = q(R("DT", "f", "ghat_T o y_T"), risk(DT, f, compose(yT, ghT), loss_F))
    f_a = q(R("DT", "ghat_T o h*_T", "ghat_T o y_T"),
            risk(DT, compose(hT, ghT), compose(yT, ghT), loss_F))
    f_b = q(R("DT", "ghat_T o h*_T", "f"), risk(DT, compose(hT, ghT), f, loss_F))
    t_opt = q(R("DT", "h*_T", "y_T"), risk(DT, hT, yT, loss))
    inv_fT = q(R("f o DT", "ghat_T o g*_T", "Id"), risk(fDT, compose(gT, ghT), IdF, loss_F))

    p.le("target-split", lhs, [back_y, resid], K, "triangle", "target split")
    p.eq("target-split-pushforward", back_y, cyc_T, "pushforward", "target split")
    p.le("cycle-triangle", cyc_T, [cyc_Tg, inv_g], K, "triangle", "classifier lipschitz")
    p.le("cycle-lipschitz", cyc_Tg, [feat], L2, "lipschitz H2", "classifier lipschitz")
    p.le("inverse-triangle", feat, [mix_a, mix_b], K, "triangle", "pseudo-inverse")
    p.eq("inverse-pushforward", mix_a, push_a, "pushforward", "pseudo-inverse")
    p.le("inverse-lipschitz", mix_b, [inv_g], L2p, "lipschitz H2_prime", "pseudo-inverse")
    p.le("optimal-triangle", push_a, [push_b, inv_gT], K, "triangle", "pseudo-inverse")
    p.le("optimal-lipschitz", push_b, [gg], L2p, "lipschitz H2_prime", "pseudo-inverse")
    p.le("discrepancy", gg, [fS, disc], 1.0, "discrepancy", "discrepancy transfer")
    p.eq("feature-view-source", fS, s_hT, "pushforward", "discrepancy transfer")
    p.le("source-split", s_hT, [s_hS, s_ST], K, "triangle", "discrepancy transfer")
    p.le("residual-lipschitz", resid, [f_res], L2, "lipschitz H2", "target residual")
    p.le("residual-triangle", f_res, [f_a, f_b], K, "triangle", "target residual")
    p.le("residual-inverse-lipschitz", f_a, [t_opt], L2p, "lipschitz H2_prime", "target residual")
    p.eq("residual-pushforward", f_b, inv_fT, "pushforward", "target residual")
    return p.report(lhs, [s_hS, s_ST, t_opt, inv_gT, inv_fT, inv_g, disc])


# ---------------------------------------------------------------------------
# analogy-based adaptation


def analogy_minimizers(setting: DASetting, f: Hypothesis, a: Hypothesis):
    """(b*_T, b*_S): the best H4 members for the target through a^-1, and for the source."""
    _require(setting, "analogy_oda")
    loss = setting.loss
    H3, H4 = setting.classes["H3"], setting.classes["H4"]
    a_inv = _inverse_in(H3, a)
    DS, DT = setting.distributions["D_S"], setting.distributions["D_T"]
    yS, yT = setting.targets["y_S"], setting.targets["y_T"]
    target = [risk(DT, compose(f, b, a_inv), yT, loss) for b in H4.members]
    i = _argmin(target)
    bT = BestFit(i, H4[i], target[i])
    bS = best_in_class(H4, f, DS, yS, loss)
    return bT, bS


def compute_bound_analogy(setting: DASetting, f: Hypothesis, b: Hypothesis,
                          a: Hypothesis) -> BoundReport:
    """Analogy bound for h = a^-1 o b o f with adapter a in H3 and b in H4."""
    _require(setting, "analogy_oda")
    loss, loss_F, K = setting.loss, setting.loss_F, setting.loss.K
    H3, H4 = setting.classes["H3"], setting.classes["H4"]
    H4inv = H4.inverse_class
    L3, L3inv = _declared(H3, "H3"), _declared(H3.inverse_class, "H3 inverse")
    L4, L4inv = _declared(H4, "H4"), _declared(H4inv, "H4 inverse")
    L_g, L_ginv = L3inv * L4, L4inv * L3
    L_phi = L3inv * L4 * L4inv

    DS, DT = setting.distributions["D_S"], setting.distributions["D_T"]
    yS, yT = setting.targets["y_S"], setting.targets["y_T"]
    IdY = Identity(setting.output_dim)

    a_inv, b_inv = _inverse_in(H3, a), _inverse_in(H4, b)
    bT_fit, bS_fit = analogy_minimizers(setting, f, a)
    bT, bS = bT_fit.hypothesis, bS_fit.hypothesis
    bT_inv = _inverse_in(H4, bT)

    g = compose(b, a_inv)
    h = compose(f, g)
    hT = compose(f, bT, a_inv)
    hS = compose(f, bS)
    g_inv = compose(a, b_inv)
    gT_inv = compose(a, bT_inv)
    pull = compose(gT_inv, g)  # g o (g*_T)^-1

    DyT, DyS = pushforward(yT, DT), pushforward(yS, DS)
    aDyT, ainvDyS = pushforward(a, DyT), pushforward(a_inv, DyS)

    p = Proof(setting.kind, "analogy")
    q = p.quantity
    lhs = q(R("DT", "h", "y_T"), risk(DT, h, yT, loss))
    back_y = q(R("DT", "g o gT^-1 o y_T", "y_T"), risk(DT, compose(yT, pull), yT, loss))
    resid = q(R("DT", "h", "g o gT^-1 o y_T"), risk(DT, h, compose(yT, pull), loss))
    cyc = q(R("DyT", "g o gT^-1", "Id"), risk(DyT, pull, IdY, loss))
    cyc_g = q(R("DyT", "g o gT^-1", "g o g^-1"), risk(DyT, pull, compose(g_inv, g), loss))
    inv_T = q(R("DyT", "gT^-1", "g^-1"), risk(DyT, gT_inv, g_inv, loss_F))
    inv_aT = q(R("a o DyT", "bT^-1", "b^-1"), risk(aDyT, bT_inv, b_inv, loss_F))
    inv_S = q(R("DyS", "bT^-1", "b^-1"), risk(DyS, bT_inv, b_inv, loss_F))
    disc = q("disc_H4inv(a o DyT, DyS)", discrepancy(H4inv, aDyT, DyS, loss_F).value)
    inv_aS = q(R("a^-1 o DyS", "gT^-1", "g^-1"), risk(ainvDyS, gT_inv, g_inv, loss_F))
    fwd_aS = q(R("a^-1 o DyS", "g o gT^-1", "g o g^-1"),
               risk(ainvDyS, pull, compose(g_inv, g), loss))
    fwd_id = q(R("a^-1 o DyS", "g o gT^-1", "Id"), risk(ainvDyS, pull, IdY, loss))
    src = q(R("DS", "g o gT^-1 o a^-1 o y_S", "a^-1 o y_S"),
            risk(DS, compose(yS, a_inv, pull), compose(yS, a_inv), loss))
    src_a = q(R("DS", "g o gT^-1 o a^-1 o y_S", "h"), risk(DS, compose(yS, a_inv, pull), h, loss))
    src_b = q(R("DS", "h", "a^-1 o y_S"), risk(DS, h, compose(yS, a_inv), loss))
    ys_hT = q(R("DS", "y_S", "a o h*_T"), risk(DS, yS, compose(hT, a), loss))
    adapted = q(R("DS", "a o h", "y_S"), risk(DS, compose(h, a), yS, loss))
    s_opt = q(R("DS", "h*_S", "y_S"), risk(DS, hS, yS, loss))
    s_cross = q(R("DS", "a o h*_T", "h*_S"), risk(DS, compose(hT, a), hS, loss))
    t_opt = q(R("DT", "h*_T", "y_T"), risk(DT, hT, yT, loss))

    p.le("target-split", lhs, [back_y, resid], K, "triangle", "target split")
    p.eq("target-split-pushforward", back_y, cyc, "pushforward", "target split")
    p.eq("insert-inverse", cyc, cyc_g, "g o g^-1 = Id", "classifier lipschitz")
    p.le("classifier-lipschitz", cyc_g, [inv_T], L_g, "lipschitz H3^-1 o H4", "classifier lipschitz")
    p.eq("adapter-pushforward", inv_T, inv_aT, "pushforward", "output discrepancy")
    p.le("discrepancy", inv_aT, [inv_S, disc], 1.0, "discrepancy", "output discrepancy")
    p.eq("source-pullback", inv_S, inv_aS, "pushforward", "output discrepancy")
    p.le("inverse-lipschitz", inv_aS, [fwd_aS], L_ginv, "lipschitz H4^-1 o H3", "bi-lipschitz pull-back")
    p.eq("remove-inverse", fwd_aS, fwd_id, "g o g^-1 = Id", "bi-lipschitz pull-back")
    p.eq("source-pushforward", fwd_id, src, "pushforward", "bi-lipschitz pull-back")
    p.le("source-triangle", src, [src_a, src_b], K, "triangle", "source triangle")
    p.le("optimal-lipschitz", src_a, [ys_hT], L_phi, "lipschitz H3^-1 o H4 o H4^-1",
         "adapter lipschitz")
    p.le("adapter-lipschitz", src_b, [adapted], L3inv, "lipschitz H3^-1", "adapter lipschitz")
    p.le("optimal-triangle", ys_hT, [s_opt, s_cross], K, "triangle", "source optimum")
    p.le("residual-lipschitz", resid, [t_opt], L_g * L_ginv, "bi-lipschitz H2", "target residual")
    return p.report(lhs, [adapted, s_cross, s_opt, t_opt, disc])


# ---------------------------------------------------------------------------
# domain transfer


def dt_minimizer(setting: DASetting) -> BestFit:
    """lambda and g*: argmin over g of R_{Dy2}[g o f, Id] + R_{D1}[g o f, y]."""
    _require(setting, "domain_transfer")
    loss = setting.loss
    f, y = setting.fixed["f"], setting.targets["y"]
    D1 = setting.distributions["D_1"]
    Dy2 = setting.output_distribution("2")
    Id = Identity(setting.output_dim)
    H2 = setting.classes["H2"]
    values = [risk(Dy2, compose(f, g), Id, loss) + risk(D1, compose(f, g), y, loss)
              for g in H2.members]
    i = _argmin(values)
    return BestFit(i, H2[i], values[i])


def _probe_pairs(points: np.ndarray, limit: int = 64) -> np.ndarray:
    P = points[:limit]
    idx = [(i, j) for i, j in itertools.combinations(range(len(P)), 2)]
    if not idx:
        return np.stack([P, P], axis=1)
    i, j = np.array(idx).T
    return np.stack([P[i], P[j]], axis=1)


def _dt_proof(setting: DASetting, g: Hypothesis, theorem: str) -> tuple:
    _require(setting, "domain_transfer")
    loss, loss_F, K = setting.loss, setting.loss_F, setting.loss.K
    H2 = setting.classes["H2"]
    L2 = _declared(H2, "H2")
    f, y = setting.fixed["f"], setting.targets["y"]
    D1 = setting.distributions["D_1"]
    Dy2 = setting.output_distribution("2")
    Id = Identity(setting.output_dim)
    H = H2.after(f, name="H2 o f")

    g_star = dt_minimizer(setting).hypothesis
    h, h_star = compose(f, g), compose(f, g_star)
    hh = compose(h, h)
    hD1 = pushforward(h, D1)

    p = Proof(setting.kind, theorem)
    q = p.quantity
    lhs = q(R("D1", "h", "y"), risk(D1, h, y, loss))
    idem = q(R("D1", "h o h", "h"), risk(D1, hh, h, loss))
    hh_y = q(R("D1", "h o h", "y"), risk(D1, hh, y, loss))
    hh_s = q(R("D1", "h o h", "h* o h"), risk(D1, hh, compose(h, h_star), loss))
    s_h_y = q(R("D1", "h* o h", "y"), risk(D1, compose(h, h_star), y, loss))
    push = q(R("h o D1", "h", "h*"), risk(hD1, h, h_star, loss))
    out2 = q(R("Dy2", "h", "h*"), risk(Dy2, h, h_star, loss))
    disc = q("disc_H(Dy2, h o D1)", discrepancy(H, Dy2, hD1, loss).value)
    shift = q(R("D1", "g* o f o h", "g* o f"), risk(D1, compose(h, f, g_star), h_star, loss))
    opt_y = q(R("D1", "h*", "y"), risk(D1, h_star, y, loss))
    const = q(R("D1", "f o h", "f"), risk(D1, compose(h, f), f, loss_F))
    tid = q(R("Dy2", "h", "Id"), risk(Dy2, h, Id, loss))
    opt_tid = q(R("Dy2", "h*", "Id"), risk(Dy2, h_star, Id, loss))

    p.le("idempotency-split", lhs, [idem, hh_y], K, "triangle", "h-constancy")
    p.le("optimum-split", hh_y, [hh_s, s_h_y], K, "triangle", "h-constancy")
    p.eq("image-pushforward", hh_s, push, "pushforward", "discrepancy")
    p.le("discrepancy", push, [out2, disc], 1.0, "discrepancy", "discrepancy")
    p.le("feature-split", s_h_y, [shift, opt_y], K, "triangle", "f-constancy")
    p.le("optimum-lipschitz", shift, [const], L2, "lipschitz g*", "f-constancy")
    p.le("identity-split", out2, [tid, opt_tid], K, "triangle", "identity")

    # Record the Lipschitz assumption on g* against the declared class constant.
    feats = np.concatenate([f.apply(D1.support), f.apply(Dy2.support)])
    est = estimate_L(g_star, loss_F, _probe_pairs(np.unique(feats, axis=0)))
    extras = {"estimate_L(g*)": est, "declared_L(H2)": L2}
    return p, dict(lhs=lhs, idem=idem, const=const, tid=tid, disc=disc,
                   lam=[opt_tid, opt_y]), extras


def compute_bound_dt(setting: DASetting, g: Hypothesis) -> BoundReport:
    """Domain transfer bound for h = g o f with the fixed feature map f."""
    p, t, extras = _dt_proof(setting, g, "dt")
    rep = p.report(t["lhs"], [t["tid"], t["idem"], t["const"], t["disc"], "lambda"],
                   groups={"lambda": t["lam"]}, extras=extras)
    return _finish_dt(rep)


def compute_bound_dtn(setting: DASetting, g: Hypothesis) -> BoundReport:
    """The corollary form: the h o h term is absorbed through the Lipschitz class H2."""
    p, t, extras = _dt_proof(setting, g, "dtn")
    p.le("constancy-reduction", t["idem"], [t["const"]], _declared(setting.classes["H2"], "H2"),
         "lipschitz H2", "h-constancy")
    rep = p.report(t["lhs"], [t["tid"], t["const"], t["disc"], "lambda"],
                   groups={"lambda": t["lam"]}, extras=extras)
    return _finish_dt(rep)


def _finish_dt(rep: BoundReport) -> BoundReport:
    rep.extras["lambda"] = rep.terms["lambda"]
    ok = rep.extras["estimate_L(g*)"] <= rep.extras["declared_L(H2)"]
    rep.extras["lipschitz_g*_ok"] = bool(ok)
    rep.passed = bool(rep.passed and ok)
    return rep


# ---------------------------------------------------------------------------
# relations between discrepancies


def discrepancy_gap_report(C: HypothesisClass, D11: FiniteDistribution, D12: FiniteDistribution,
                  D21: FiniteDistribution, D22: FiniteDistribution, spec: LossSpec,
                  setting: str = "two_sided", theorem: str = "discrepancy_gap") -> BoundReport:
    """|disc(D11, D12) - disc(D21, D22)| <= q-disc, with the pairwise argument checked."""
    U1 = relation_gap(C, D11, D12, spec)
    U2 = relation_gap(C, D21, D22, spec)
    A, B, Q = np.abs(U1), np.abs(U2), np.abs(U1 - U2)
    d1 = discrepancy(C, D11, D12, spec).value
    d2 = discrepancy(C, D21, D22, spec).value
    qd = quad_discrepancy(C, D11, D12, D21, D22, spec).value

    p = Proof(setting, theorem)
    q = p.quantity
    # Pairwise steps are reported at the pair where they are tightest.
    i, j = np.unravel_index(int(np.argmax(np.abs(A - B) - Q)), A.shape)
    rev_l = q("||U1|-|U2|| at worst pair", abs(A[i, j] - B[i, j]))
    rev_r = q("|U1-U2| at worst pair", Q[i, j])
    i, j = np.unravel_index(int(np.argmax(A - (B + Q))), A.shape)
    re_l = q("|U1| at worst pair", A[i, j])
    re_a = q("|U2| at worst pair", B[i, j])
    re_b = q("|U1-U2| at that pair", Q[i, j])
    sup1 = q("sup |U1|", A.max())
    sup2 = q("sup |U2|", B.max())
    supq = q("sup |U1-U2|", Q.max())
    disc1 = q("disc_C(D11, D12)", d1)
    disc2 = q("disc_C(D21, D22)", d2)
    qdisc = q("q-disc_C[(D11, D12), (D21, D22)]", qd)
    gap12 = q("disc_C(D11, D12) - disc_C(D21, D22)", d1 - d2)
    gap21 = q("disc_C(D21, D22) - disc_C(D11, D12)", d2 - d1)
    lhs = q("|disc_C(D11, D12) - disc_C(D21, D22)|", abs(d1 - d2))

    p.le("reversed-triangle", rev_l, [rev_r], 1.0, "reversed triangle", "pairwise")
    p.le("rearranged", re_l, [re_a, re_b], 1.0, "rearrangement", "pairwise")
    p.eq("sup-first-pair", sup1, disc1, "definition of disc", "suprema")
    p.eq("sup-second-pair", sup2, disc2, "definition of disc", "suprema")
    p.eq("sup-quad", supq, qdisc, "definition of q-disc", "suprema")
    p.le("conclusion", gap12, [qdisc], 1.0, "supremum of the rearranged bound", "conclusion")
    p.le("conclusion-swapped", gap21, [qdisc], 1.0, "symmetry", "conclusion")
    p.le("sum-bound", qdisc, [disc1, disc2], 1.0, "triangle on |U1 - U2|", "upper bound")
    return p.statement(lhs, {qdisc: qd})


def two_sided_quadruple(setting: DASetting, h1: Hypothesis, h2: Hypothesis,
                       a1: Hypothesis, a2: Hypothesis):
    """(a1 o h1 o D1, a1 o Dy1, a2 o h2 o D2, a2 o Dy2)."""
    _require(setting, "two_sided")
    D1, D2 = setting.distributions["D_1"], setting.distributions["D_2"]
    return (pushforward(compose(h1, a1), D1), pushforward(a1, setting.output_distribution("1")),
            pushforward(compose(h2, a2), D2), pushforward(a2, setting.output_distribution("2")))


def two_sided_gap_report(setting: DASetting, h1: Hypothesis, h2: Hypothesis,
                a1: Hypothesis, a2: Hypothesis) -> BoundReport:
    """The discrepancy-gap bound on the adapted two-sided quadruple."""
    C = setting.classes["C"]
    Ds = two_sided_quadruple(setting, h1, h2, a1, a2)
    spec = setting.loss.with_dimension(C.output_dim)
    return discrepancy_gap_report(C, *Ds, spec, setting=setting.kind, theorem="two_sided_gap")


# ---------------------------------------------------------------------------

THEOREMS = {
    "mansour": compute_bound_mansour,
    "bendavid": compute_bound_bendavid,
    "oda": compute_bound_oda,
    "analogy": compute_bound_analogy,
    "dt": compute_bound_dt,
    "dtn": compute_bound_dtn,
    "discrepancy_gap": discrepancy_gap_report,
    "two_sided_gap": two_sided_gap_report,
}


def verify_proof_script(theorem_id: str, *args) -> list:
    """Step reports of one theorem's proof, evaluated on the given arguments."""
    try:
        fn = THEOREMS[theorem_id]
    except KeyError:
        raise ValueError(f"unknown theorem {theorem_id!r}; choose from {sorted(THEOREMS)}") from None
    return fn(*args).steps
