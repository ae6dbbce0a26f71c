"""Slow, independent re-implementations used to audit the package.

Nothing here calls the package's risk, discrepancy or pushforward code: losses
are computed point by point in plain Python, pushforwards by dictionary
accumulation, and suprema by explicit double loops. Hypotheses are still
evaluated through their ``apply`` method, which the core tests pin down
separately on hand-computed examples.
"""

import itertools
import math

import numpy as np


def loss(kind, a, b):
    a, b = [float(v) for v in np.ravel(a)], [float(v) for v in np.ravel(b)]
    if kind == "absolute":
        return math.fsum(abs(x - y) for x, y in zip(a, b))
    if kind == "squared":
        return math.fsum((x - y) ** 2 for x, y in zip(a, b))
    if kind == "zero_one":
        return 0.0 if a == b else 1.0
    raise ValueError(kind)


def chain(parts, X):
    """Apply ``parts`` left to right to the rows of X."""
    X = np.asarray(X, dtype=float)
    for p in parts:
        X = p.apply(X)
    return X


def risk_outputs(kind, A, B, w):
    return math.fsum(wi * loss(kind, a, b) for a, b, wi in zip(A, B, w))


def risk(kind, support, weights, left, right):
    """E_D loss(left(x), right(x)) with left/right given as lists of parts."""
    return risk_outputs(kind, chain(left, support), chain(right, support), weights)


def pushforward(parts, support, weights):
    """(points, weights) of the image distribution, merged by exact equality."""
    acc = {}
    for y, w in zip(chain(parts, support), weights):
        key = tuple(float(v) for v in y)
        acc[key] = acc.get(key, 0.0) + float(w)
    pts = np.array(list(acc.keys()), dtype=float)
    return pts, np.array(list(acc.values()))


class PairRisks:
    """All pairwise risks of a class on one distribution, computed by loops."""

    def __init__(self, members, kind, support, weights):
        outs = [m.apply(support) for m in members]
        w = np.asarray(weights, dtype=float)
        m = len(members)
        self.R = np.zeros((m, m))
        for i, j in itertools.product(range(m), range(m)):
            if kind == "absolute":
                per_point = np.abs(outs[i] - outs[j]).sum(axis=1)
            elif kind == "squared":
                per_point = ((outs[i] - outs[j]) ** 2).sum(axis=1)
            else:
                per_point = np.any(outs[i] != outs[j], axis=1).astype(float)
            self.R[i, j] = math.fsum(per_point * w)


def disc(members, kind, D1, D2):
    """sup over ordered pairs |R_D1 - R_D2|; D1, D2 are (support, weights)."""
    R1 = PairRisks(members, kind, *D1).R
    R2 = PairRisks(members, kind, *D2).R
    best = 0.0
    for i, j in itertools.product(range(len(members)), repeat=2):
        best = max(best, abs(R1[i, j] - R2[i, j]))
    return best


def quad_disc(members, kind, D11, D12, D21, D22):
    R = [PairRisks(members, kind, *D).R for D in (D11, D12, D21, D22)]
    best = 0.0
    for i, j in itertools.product(range(len(members)), repeat=2):
        best = max(best, abs((R[0][i, j] - R[1][i, j]) - (R[2][i, j] - R[3][i, j])))
    return best


def dist(D):
    return D.support, D.weights


# ---------------------------------------------------------------------------
# trainer objectives, one candidate at a time


def standard_objectives(setting):
    """{(f, g): {term: value}} over H1 x H2."""
    c = setting.classes
    D_S, D_T = setting.distributions["D_S"], setting.distributions["D_T"]
    y_S = setting.targets["y_S"]
    kind = setting.loss.kind
    discs = [disc(c["H2"].members, kind, pushforward([f], *dist(D_S)), pushforward([f], *dist(D_T)))
             for f in c["H1"]]
    out = {}
    for i, f in enumerate(c["H1"]):
        for j, g in enumerate(c["H2"]):
            out[(i, j)] = {"source_risk": risk(kind, *dist(D_S), [f, g], [y_S]), "disc": discs[i]}
    return out


def output_da_objectives(setting):
    c = setting.classes
    D_S, D_T = setting.distributions["D_S"], setting.distributions["D_T"]
    y_S, y_T = setting.targets["y_S"], setting.targets["y_T"]
    kind = setting.loss.kind
    H1, H2, H2p = c["H1"].members, c["H2"].members, c["H2_prime"].members
    DyT = pushforward([y_T], *dist(D_T))
    src = {(i, j): risk(kind, *dist(D_S), [f, g], [y_S])
           for i, f in enumerate(H1) for j, g in enumerate(H2)}
    inv = {(j, k): risk(kind, *DyT, [gh, g], [])
           for j, g in enumerate(H2) for k, gh in enumerate(H2p)}
    RS = [PairRisks(H2, kind, *pushforward([f], *dist(D_S))).R for f in H1]
    RT = [PairRisks(H2, kind, *pushforward([gh], *DyT)).R for gh in H2p]
    disc_fk = {(i, k): float(np.abs(RS[i] - RT[k]).max())
               for i in range(len(H1)) for k in range(len(H2p))}
    return {(i, j, k): {"source_risk": src[i, j], "inv": inv[j, k], "disc": disc_fk[i, k]}
            for i, j, k in itertools.product(range(len(H1)), range(len(H2)), range(len(H2p)))}


def analogy_objectives(setting):
    c = setting.classes
    D_S, D_T = setting.distributions["D_S"], setting.distributions["D_T"]
    y_S, y_T = setting.targets["y_S"], setting.targets["y_T"]
    kind = setting.loss.kind
    H1, H3, H4 = c["H1"].members, c["H3"].members, c["H4"].members
    H3inv, H4inv = c["H3"].inverse_class.members, c["H4"].inverse_class.members
    DyS = pushforward([y_S], *dist(D_S))
    DyT = pushforward([y_T], *dist(D_T))
    discs = [disc(H4inv, kind, pushforward([a], *DyT), DyS) for a in H3]
    out = {}
    for i, j, k in itertools.product(range(len(H1)), range(len(H3)), range(len(H4))):
        src = risk(kind, *dist(D_S), [H1[i], H4[k], H3inv[j], H3[j]], [y_S])
        out[(i, j, k)] = {"source_risk": src, "disc": discs[j]}
    return out


def domain_transfer_objectives(setting):
    H2 = setting.classes["H2"].members
    f, y = setting.fixed["f"], setting.targets["y"]
    D_1, D_2 = setting.distributions["D_1"], setting.distributions["D_2"]
    kind = setting.loss.kind
    Dy2 = pushforward([y], *dist(D_2))
    H = [_Chain([f, g]) for g in H2]
    R2 = PairRisks(H, kind, *Dy2).R
    out = {}
    for k, g in enumerate(H2):
        hD1 = pushforward([f, g], *dist(D_1))
        out[(k,)] = {
            "tid": risk(kind, *Dy2, [f, g], []),
            "const": risk(kind, *dist(D_1), [f, g, f], [f]),
            "disc": float(np.abs(R2 - PairRisks(H, kind, *hD1).R).max()),
        }
    return out


class _Chain:
    def __init__(self, parts):
        self.parts = parts

    def apply(self, X):
        return chain(self.parts, X)


OBJECTIVES = {
    "standard_da": standard_objectives,
    "binary_da": standard_objectives,
    "output_da": output_da_objectives,
    "analogy_oda": analogy_objectives,
    "domain_transfer": domain_transfer_objectives,
}


def weighted(terms, weights):
    return math.fsum(weights[k] * terms[k] for k in weights if math.isfinite(weights[k]))
