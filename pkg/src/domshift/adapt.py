"""Exhaustive trainers for the bound-motivated objectives of each setting.

Every trainer receives the full setting but optimizes on ``setting.observed()``,
which carries only what the learner is given (source samples and labels,
unlabelled target inputs or outputs). The held-out target map is read
afterwards, only to fill ``target_risk``.

Objectives are evaluated for the whole product grid at once and the first
minimizer in C order is chosen, i.e. the lowest index tuple among ties.
A term with infinite weight acts as a hard constraint: candidates are first
restricted to those minimizing it, then the finite-weight sum is minimized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .core import Hypothesis, HypothesisClass, Identity, compose, pushforward
from .measures import risk, risk_matrix, weighted_loss
from .setting import DASetting, Observed, SettingError

DEFAULT_WEIGHTS = {
    "standard_da": {"source_risk": 1.0, "disc": 1.0},
    "binary_da": {"source_risk": 1.0, "disc": 1.0},
    "output_da": {"source_risk": 1.0, "inv": 1.0, "disc": 1.0},
    "analogy_oda": {"source_risk": 1.0, "disc": 1.0},
    "domain_transfer": {"tid": 1.0, "const": 1.0, "disc": 1.0},
}


@dataclass
class TrainResult:
    setting: str
    chosen: Dict[str, int]
    objective_value: float
    objective_terms: Dict[str, float]
    weights: Dict[str, float]
    target_risk: float
    trace: Optional[List[Tuple[tuple, float]]] = None
    parts: Dict[str, Hypothesis] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        d = {
            "setting": self.setting,
            "chosen": dict(self.chosen),
            "objective_value": self.objective_value,
            "objective_terms": dict(self.objective_terms),
            "weights": {k: _json_weight(v) for k, v in self.weights.items()},
            "target_risk": self.target_risk,
        }
        if self.trace is not None:
            d["trace"] = [[list(c), v] for c, v in self.trace]
        return d


def _json_weight(w: float):
    return "inf" if math.isinf(w) else w


def combine(terms: Mapping[str, object], weights: Mapping[str, float]):
    """Weighted sum of the finite-weight terms, in the order of ``weights``."""
    total = 0.0
    for name, w in weights.items():
        if math.isfinite(w):
            total = total + w * terms[name]
    return total


def _resolve_weights(kind: str, weights: Optional[Mapping[str, float]]) -> Dict[str, float]:
    out = dict(DEFAULT_WEIGHTS[kind])
    for k, v in (weights or {}).items():
        if k not in out:
            raise ValueError(f"unknown weight {k!r} for {kind}; expected {sorted(out)}")
        v = float(v)
        if math.isnan(v) or v < 0:
            raise ValueError(f"weight {k} must be non-negative")
        out[k] = v
    return out


def _select(terms: Dict[str, np.ndarray], weights: Dict[str, float]) -> int:
    """Flat index of the chosen candidate over a common grid shape."""
    shape = np.broadcast_shapes(*(t.shape for t in terms.values()))
    full = {k: np.broadcast_to(v, shape) for k, v in terms.items()}
    allowed = np.ones(shape, dtype=bool)
    for name, w in weights.items():
        if math.isinf(w):
            vals = np.where(allowed, full[name], np.inf)
            allowed &= vals == vals.min()
    objective = np.broadcast_to(combine(full, weights), shape)
    return int(np.argmin(np.where(allowed, objective, np.inf)))


def _finish(kind, grid_terms, weights, names, with_trace) -> tuple:
    shape = np.broadcast_shapes(*(t.shape for t in grid_terms.values()))
    flat = _select(grid_terms, weights)
    idx = np.unravel_index(flat, shape)
    chosen = {n: int(i) for n, i in zip(names, idx)}
    terms = {k: float(np.broadcast_to(v, shape)[idx]) for k, v in grid_terms.items()}
    trace = None
    if with_trace:
        obj = np.broadcast_to(combine({k: np.broadcast_to(v, shape) for k, v in grid_terms.items()},
                                      weights), shape)
        trace = [(tuple(int(i) for i in np.unravel_index(j, shape)), float(obj.flat[j]))
                 for j in range(obj.size)]
    return chosen, terms, float(combine(terms, weights)), trace


def _require(setting: DASetting, *kinds):
    if setting.kind not in kinds:
        raise SettingError(f"trainer expects {' or '.join(kinds)}, got {setting.kind}")


# ---------------------------------------------------------------------------
# objective grids on the learner's view


def _pair_risks(kind, outs: np.ndarray, D) -> np.ndarray:
    return risk_matrix(kind, outs, outs, D.weights)


def _sup_gap(R1: np.ndarray, R2: np.ndarray) -> float:
    return float(np.abs(R1 - R2).max())


def standard_objective_grid(obs: Observed) -> Dict[str, np.ndarray]:
    """source_risk[f, g] and disc[f] for every f in H1, g in H2."""
    H1, H2 = obs.classes["H1"], obs.classes["H2"]
    D_S, D_T = obs.data["D_S"], obs.data["D_T"]
    kind = obs.loss.kind
    Y = obs.maps["y_S"].apply(D_S.support)
    src = np.empty((len(H1), len(H2)))
    disc = np.empty((len(H1), 1))
    for i, f in enumerate(H1.members):
        src[i] = weighted_loss(kind, H2.outputs(f.apply(D_S.support)), Y[None], D_S.weights)
        fS, fT = pushforward(f, D_S), pushforward(f, D_T)
        disc[i, 0] = _sup_gap(_pair_risks(kind, H2.outputs(fS.support), fS),
                              _pair_risks(kind, H2.outputs(fT.support), fT))
    return {"source_risk": src, "disc": disc}


def output_da_objective_grid(obs: Observed) -> Dict[str, np.ndarray]:
    """source_risk[f, g, :], inv[:, g, ghat], disc[f, :, ghat]."""
    H1, H2, H2p = obs.classes["H1"], obs.classes["H2"], obs.classes["H2_prime"]
    D_S, DyT = obs.data["D_S"], obs.data["DyT"]
    kind = obs.loss.kind
    Y = obs.maps["y_S"].apply(D_S.support)
    T = DyT.support

    src = np.empty((len(H1), len(H2), 1))
    RS = []
    for i, f in enumerate(H1.members):
        src[i, :, 0] = weighted_loss(kind, H2.outputs(f.apply(D_S.support)), Y[None], D_S.weights)
        fS = pushforward(f, D_S)
        RS.append(_pair_risks(kind, H2.outputs(fS.support), fS))
    inv = np.empty((1, len(H2), len(H2p)))
    RT = []
    for k, gh in enumerate(H2p.members):
        inv[0, :, k] = weighted_loss(kind, H2.outputs(gh.apply(T)), T[None], DyT.weights)
        ghT = pushforward(gh, DyT)
        RT.append(_pair_risks(kind, H2.outputs(ghT.support), ghT))
    disc = np.array([[_sup_gap(rs, rt) for rt in RT] for rs in RS])[:, None, :]
    return {"source_risk": src, "inv": inv, "disc": disc}


def analogy_objective_grid(obs: Observed) -> Dict[str, np.ndarray]:
    """source_risk[f, a, b] = R_DS[a o h, y_S] with h = a^-1 o b o f; disc[a]."""
    H1, H3, H4 = obs.classes["H1"], obs.classes["H3"], obs.classes["H4"]
    H3inv, H4inv = H3.inverse_class, H4.inverse_class
    if H3inv is None or H4inv is None:
        raise SettingError("analogy training needs inverse classes for H3 and H4")
    D_S, DyS, DyT = obs.data["D_S"], obs.data["DyS"], obs.data["DyT"]
    kind = obs.loss.kind
    Y = obs.maps["y_S"].apply(D_S.support)

    src = np.empty((len(H1), len(H3), len(H4)))
    for i, f in enumerate(H1.members):
        B = H4.outputs(f.apply(D_S.support))  # (|H4|, n, dY)
        for j, (a, a_inv) in enumerate(zip(H3.members, H3inv.members)):
            adapted = np.stack([a._apply(a_inv._apply(Bk)) for Bk in B])
            src[i, j] = weighted_loss(kind, adapted, Y[None], D_S.weights)
    R_src = _pair_risks(kind, H4inv.outputs(DyS.support), DyS)
    disc = np.empty((1, len(H3), 1))
    for j, a in enumerate(H3.members):
        aT = pushforward(a, DyT)
        disc[0, j, 0] = _sup_gap(_pair_risks(kind, H4inv.outputs(aT.support), aT), R_src)
    return {"source_risk": src, "disc": disc}


def domain_transfer_objective_grid(obs: Observed) -> Dict[str, np.ndarray]:
    """tid[g], const[g], disc[g] for h = g o f over g in H2."""
    H2 = obs.classes["H2"]
    f = obs.maps["f"]
    D_1, Dy2 = obs.data["D_1"], obs.data["Dy2"]
    kind = obs.loss.kind
    H = H2.after(f)
    tid = weighted_loss(kind, H.outputs(Dy2.support), Dy2.support[None], Dy2.weights)
    F1 = f.apply(D_1.support)
    hD1 = H2.outputs(F1)
    const = weighted_loss(kind, np.stack([f._apply(Y) for Y in hD1]), F1[None], D_1.weights)
    R2 = _pair_risks(kind, H.outputs(Dy2.support), Dy2)
    disc = np.empty(len(H2))
    for k, g in enumerate(H2.members):
        pushed = pushforward(compose(f, g), D_1)
        disc[k] = _sup_gap(R2, _pair_risks(kind, H.outputs(pushed.support), pushed))
    return {"tid": tid, "const": const, "disc": disc}


# ---------------------------------------------------------------------------
# trainers


def train_standard_da(setting: DASetting, weights=None, trace: bool = False) -> TrainResult:
    """argmin over H1 x H2 of source risk + w_disc * disc_H2(f o DS, f o DT)."""
    _require(setting, "standard_da", "binary_da")
    w = _resolve_weights(setting.kind, weights)
    grid = standard_objective_grid(setting.observed())
    chosen, terms, value, tr = _finish(setting.kind, grid, w, ("f", "g"), trace)
    H1, H2 = setting.classes["H1"], setting.classes["H2"]
    parts = {"f": H1[chosen["f"]], "g": H2[chosen["g"]]}
    h = compose(parts["f"], parts["g"])
    tr_risk = risk(setting.distributions["D_T"], h, setting.targets["y_T"], setting.loss)
    return TrainResult(setting.kind, chosen, value, terms, w, tr_risk, tr, parts)


def train_output_da(setting: DASetting, weights=None, trace: bool = False) -> TrainResult:
    """argmin over H1 x H2 x H2' of source risk + w_inv * R_DyT[g o ghat, Id]
    + w_disc * disc_H2(f o DS, ghat o DyT)."""
    _require(setting, "output_da")
    w = _resolve_weights(setting.kind, weights)
    grid = output_da_objective_grid(setting.observed())
    chosen, terms, value, tr = _finish(setting.kind, grid, w, ("f", "g", "ghat"), trace)
    c = setting.classes
    parts = {"f": c["H1"][chosen["f"]], "g": c["H2"][chosen["g"]],
             "ghat": c["H2_prime"][chosen["ghat"]]}
    h = compose(parts["f"], parts["g"])
    tr_risk = risk(setting.distributions["D_T"], h, setting.targets["y_T"], setting.loss)
    return TrainResult(setting.kind, chosen, value, terms, w, tr_risk, tr, parts)


def train_analogy(setting: DASetting, weights=None, trace: bool = False) -> TrainResult:
    """argmin over H1 x H3 x H4 of R_DS[a o h, y_S] + w_disc * disc_H4inv(a o DyT, DyS)."""
    _require(setting, "analogy_oda")
    w = _resolve_weights(setting.kind, weights)
    grid = analogy_objective_grid(setting.observed())
    chosen, terms, value, tr = _finish(setting.kind, grid, w, ("f", "a", "b"), trace)
    c = setting.classes
    parts = {"f": c["H1"][chosen["f"]], "a": c["H3"][chosen["a"]], "b": c["H4"][chosen["b"]]}
    a_inv = c["H3"].inverse_class[chosen["a"]]
    h = compose(parts["f"], parts["b"], a_inv)
    tr_risk = risk(setting.distributions["D_T"], h, setting.targets["y_T"], setting.loss)
    return TrainResult(setting.kind, chosen, value, terms, w, tr_risk, tr, parts)


def train_domain_transfer(setting: DASetting, weights=None, trace: bool = False) -> TrainResult:
    """argmin over H2 of w_tid * R_Dy2[h, Id] + w_const * R_D1[f o h, f]
    + w_disc * disc_H(Dy2, h o D1)."""
    _require(setting, "domain_transfer")
    w = _resolve_weights(setting.kind, weights)
    grid = domain_transfer_objective_grid(setting.observed())
    chosen, terms, value, tr = _finish(setting.kind, grid, w, ("g",), trace)
    parts = {"g": setting.classes["H2"][chosen["g"]]}
    h = compose(setting.fixed["f"], parts["g"])
    tr_risk = risk(setting.distributions["D_1"], h, setting.targets["y"], setting.loss)
    return TrainResult(setting.kind, chosen, value, terms, w, tr_risk, tr, parts)


TRAINERS = {
    "standard_da": train_standard_da,
    "binary_da": train_standard_da,
    "output_da": train_output_da,
    "analogy_oda": train_analogy,
    "domain_transfer": train_domain_transfer,
}


def train(setting: DASetting, weights=None, trace: bool = False) -> TrainResult:
    try:
        fn = TRAINERS[setting.kind]
    except KeyError:
        raise SettingError(f"no trainer for {setting.kind} settings") from None
    return fn(setting, weights, trace)
