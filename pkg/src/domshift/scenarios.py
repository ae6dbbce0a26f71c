"""Seeded synthetic instances of the four domain-shift settings.

All randomness comes from ``numpy.random.Generator(PCG64(seed))`` and is
drawn in a fixed order, so a config always yields the same setting. Points,
weights of hypothesis parameters and shifts live on dyadic lattices, which
keeps compositions and inverses exact in floating point.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, Optional

import numpy as np

from .core import (
    Affine,
    Codebook,
    FiniteDistribution,
    Hypothesis,
    HypothesisClass,
    Layer,
    LossSpec,
    PReLUNet,
    Table,
    compose,
    declared_lipschitz,
    operator_norm,
)
from .setting import KINDS, DASetting

DEFAULT_CLASS_SIZES = {"H1": 8, "H2": 32, "H2_prime": 32, "H3": 8, "H4": 16, "C": 16}
MAX_SUPPORT = 512
BUDGET = 10**8

# Classes whose pairwise enumeration dominates the cost of each setting.
_SUP_CLASSES = {
    "standard_da": ("H2",),
    "binary_da": ("H2",),
    "output_da": ("H2", "H2_prime"),
    "analogy_oda": ("H4", "H3"),
    "two_sided": ("C",),
    "domain_transfer": ("H2",),
}

_ENTRIES = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
_ALPHAS = np.array([0.0, 0.25, 0.5, 1.0])
_NORM_RANGE = (0.25, 2.0)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    seed: int = 0
    support_size: int = 64
    input_dim: int = 2
    feature_dim: int = 2
    output_dim: int = 1
    class_sizes: Dict[str, int] = field(default_factory=dict)
    loss_kind: Optional[str] = None
    shift_magnitude: float = 0.5
    realizable: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown setting kind {self.kind!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "seed", int(self.seed))
        if not (1 <= self.support_size <= MAX_SUPPORT):
            raise ConfigError(f"support_size must be in [1, {MAX_SUPPORT}]")
        for d in (self.input_dim, self.feature_dim, self.output_dim):
            if int(d) != d or d < 1:
                raise ConfigError("dimensions must be positive integers")
        sizes = dict(DEFAULT_CLASS_SIZES)
        for k, v in self.class_sizes.items():
            if k not in DEFAULT_CLASS_SIZES:
                raise ConfigError(f"unknown class name {k!r}")
            if int(v) != v or v < 1:
                raise ConfigError(f"class size for {k} must be a positive integer")
            sizes[k] = int(v)
        object.__setattr__(self, "class_sizes", sizes)
        kind = self.loss_kind
        if kind is None:
            kind = "zero_one" if self.kind == "binary_da" else "absolute"
        if self.kind == "binary_da" and kind != "zero_one":
            raise ConfigError("binary domain adaptation uses the zero_one loss")
        if self.kind != "binary_da" and kind not in ("absolute", "squared"):
            raise ConfigError(f"{self.kind} supports absolute or squared loss, not {kind}")
        object.__setattr__(self, "loss_kind", kind)
        if not (self.shift_magnitude >= 0 and math.isfinite(self.shift_magnitude)):
            raise ConfigError("shift_magnitude must be a finite non-negative number")
        if self.kind == "binary_da" and self.output_dim != 1:
            raise ConfigError("binary labels are one-dimensional")
        biggest = max(sizes[c] for c in _SUP_CLASSES[self.kind])
        if biggest * biggest * self.support_size > BUDGET:
            raise ConfigError(
                f"enumeration cost {biggest}^2 x {self.support_size} exceeds the budget {BUDGET:.0e}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        return cls(**d)

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# building blocks


def _rng(cfg: ScenarioConfig) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(cfg.seed))


def _lattice_step(n: int, dim: int) -> float:
    # Coarsest power-of-two step whose grid on [-2, 2]^dim has 2n points.
    step = 0.125
    while (4.0 / step + 1) ** dim < 2 * n:
        step /= 2
    return step


def _sample_support(rng, n: int, dim: int) -> np.ndarray:
    step = _lattice_step(n, dim)
    per_axis = int(4.0 / step) + 1
    flat = np.sort(rng.choice(per_axis ** dim, size=n, replace=False))
    coords = np.stack(np.unravel_index(flat, (per_axis,) * dim), axis=1)
    return coords * step - 2.0


def _weights(rng, n: int) -> np.ndarray:
    w = rng.random(n) + 0.5
    return w / w.sum()


def _snap(x, step=0.125):
    return np.round(np.asarray(x, dtype=np.float64) / step) * step


def _shifted(rng, D: FiniteDistribution, magnitude: float) -> FiniteDistribution:
    """Translate and exponentially tilt D; magnitude 0 returns D itself."""
    u = rng.normal(size=D.dim)
    u /= np.linalg.norm(u)
    if magnitude == 0:
        return D
    shift = _snap(magnitude * u, _lattice_step(len(D), D.dim))
    support = D.support + shift
    tilt = D.weights * np.exp(magnitude * (D.support @ u))
    return FiniteDistribution(support, tilt / tilt.sum())


def _union(*Ds: FiniteDistribution) -> np.ndarray:
    return np.unique(np.concatenate([D.support for D in Ds]), axis=0)


def _rescaled(W: np.ndarray, kind: str) -> np.ndarray:
    # Power-of-two rescaling keeps entries dyadic while moving the norm into range.
    lo, hi = _NORM_RANGE
    n = operator_norm(W, kind)
    while n > hi:
        W, n = W / 2, n / 2
    while n < lo:
        W, n = W * 2, n * 2
    return W


def _matrix(rng, rows: int, cols: int, kind: str) -> np.ndarray:
    while True:
        W = rng.choice(_ENTRIES, size=(rows, cols))
        if np.any(W != 0):
            return _rescaled(W, kind)


def _bias(rng, rows: int) -> np.ndarray:
    return rng.integers(-8, 9, size=rows) / 8.0


def _norm_kind(loss_kind: str) -> str:
    return "squared" if loss_kind == "squared" else "absolute"


def _affine(rng, din: int, dout: int, kind: str) -> Affine:
    return Affine(_matrix(rng, dout, din, kind), _bias(rng, dout))


def _prelu_net(rng, din: int, dout: int, kind: str) -> PReLUNet:
    hidden = max(din, dout)
    first = Layer(_matrix(rng, hidden, din, kind), _bias(rng, hidden), float(rng.choice(_ALPHAS)))
    last = Layer(_matrix(rng, dout, hidden, kind), _bias(rng, dout), 1.0)
    return PReLUNet((first, last))


def _mixed_members(rng, n: int, din: int, dout: int, kind: str):
    """Alternating affine maps and one-hidden-layer PReLU nets."""
    return [(_affine if i % 2 == 0 else _prelu_net)(rng, din, dout, kind) for i in range(n)]


def _invertible_matrix(rng, dim: int, kind: str) -> np.ndarray:
    """A dyadic matrix whose determinant is a power of two (exact inverse)."""
    while True:
        if dim == 1:
            W = rng.choice(np.array([-1.0, -0.5, 0.5, 1.0]), size=(1, 1))
        elif dim == 2:
            W = rng.choice(_ENTRIES, size=(2, 2))
        else:
            # Permuted unit-triangular matrices keep the inverse dyadic.
            U = np.triu(rng.choice(_ENTRIES, size=(dim, dim)), 1) + np.eye(dim)
            U = U * rng.choice(np.array([-1.0, 1.0]), size=dim)
            W = U[rng.permutation(dim)]
        det = float(np.linalg.det(W)) if dim > 2 else (
            W[0, 0] if dim == 1 else W[0, 0] * W[1, 1] - W[0, 1] * W[1, 0])
        if det == 0:
            continue
        if dim <= 2 and math.frexp(abs(det))[0] != 0.5:
            continue
        return _rescaled(W, kind)


def _invertible_affine(rng, dim: int, kind: str) -> Affine:
    return Affine(_invertible_matrix(rng, dim, kind), _bias(rng, dim))


def _lipschitz_class(members, kind: str, name: str) -> HypothesisClass:
    return HypothesisClass(tuple(members), lipschitz_L=declared_lipschitz(members, kind), name=name)


def _bi_lipschitz_class(members, kind: str, name: str) -> HypothesisClass:
    inverses = [m.inverse() for m in members]
    return HypothesisClass.with_inverses(
        members, lipschitz_L=declared_lipschitz(members, kind),
        inverse_L=declared_lipschitz(inverses, kind), name=name)


def _perturbed_table(rng, base: Hypothesis, points: np.ndarray) -> Table:
    """``base`` restricted to ``points`` with a lattice offset on about a quarter of them."""
    values = base.apply(points)
    hit = rng.random(len(points)) < 0.25
    offsets = rng.choice(np.array([-0.5, -0.25, 0.25, 0.5]), size=values.shape)
    return Table(points, values + hit[:, None] * offsets)


def _domains(rng, cfg: ScenarioConfig):
    S = _sample_support(rng, cfg.support_size, cfg.input_dim)
    D_S = FiniteDistribution(S, _weights(rng, len(S)))
    return D_S, _shifted(rng, D_S, cfg.shift_magnitude)


def _label_map(rng, cfg, f0, g0, *Ds) -> Hypothesis:
    y0 = compose(f0, g0)
    return y0 if cfg.realizable else _perturbed_table(rng, y0, _union(*Ds))


# ---------------------------------------------------------------------------
# generators


def gen_standard_da(cfg: ScenarioConfig) -> DASetting:
    """Shifted input domains with one shared labelling function."""
    _expect(cfg, "standard_da")
    rng = _rng(cfg)
    nk = _norm_kind(cfg.loss_kind)
    D_S, D_T = _domains(rng, cfg)
    sz = cfg.class_sizes
    H1 = HypothesisClass(tuple(_mixed_members(rng, sz["H1"], cfg.input_dim, cfg.feature_dim, nk)),
                         name="H1")
    H2 = _lipschitz_class(_mixed_members(rng, sz["H2"], cfg.feature_dim, cfg.output_dim, nk), nk, "H2")
    f0, g0 = H1[int(rng.integers(len(H1)))], H2[int(rng.integers(len(H2)))]
    y = _label_map(rng, cfg, f0, g0, D_S, D_T)
    return DASetting("standard_da", {"D_S": D_S, "D_T": D_T}, {"y_S": y, "y_T": y},
                     {"H1": H1, "H2": H2}, LossSpec(cfg.loss_kind, cfg.output_dim))


def _threshold_table(rng, points: np.ndarray) -> Table:
    w = rng.choice(_ENTRIES, size=points.shape[1])
    if not np.any(w):
        w[0] = 1.0
    b = float(_bias(rng, 1)[0])
    return Table(points, ((points @ w + b) >= 0).astype(np.float64).reshape(-1, 1))


def gen_binary_da(cfg: ScenarioConfig) -> DASetting:
    """Binary labels; H2 holds linear-threshold classifiers tabulated on reachable features."""
    _expect(cfg, "binary_da")
    rng = _rng(cfg)
    D_S, D_T = _domains(rng, cfg)
    sz = cfg.class_sizes
    H1 = HypothesisClass(
        tuple(_mixed_members(rng, sz["H1"], cfg.input_dim, cfg.feature_dim, "absolute")), name="H1")
    X = _union(D_S, D_T)
    feats = np.unique(np.concatenate([f.apply(X) for f in H1.members]), axis=0)
    H2 = HypothesisClass(tuple(_threshold_table(rng, feats) for _ in range(sz["H2"])),
                         lipschitz_L=1.0, name="H2")
    f0, g0 = H1[int(rng.integers(len(H1)))], H2[int(rng.integers(len(H2)))]
    labels = compose(f0, g0).apply(X)
    if not cfg.realizable:
        flip = rng.random(len(X)) < 0.1
        labels = np.where(flip[:, None], 1.0 - labels, labels)
    y = Table(X, labels)
    return DASetting("binary_da", {"D_S": D_S, "D_T": D_T}, {"y_S": y, "y_T": y},
                     {"H1": H1, "H2": H2}, LossSpec("zero_one", 1))


def _right_inverse(g: Affine) -> Affine:
    """An affine map r with g(r(y)) = y: exact for square or single-output maps."""
    W, b = g.weight, g.bias
    if W.shape[0] == W.shape[1]:
        return g.inverse()
    if W.shape[0] == 1:
        k = int(np.argmax(np.abs(W[0])))
        col = np.zeros((W.shape[1], 1))
        col[k, 0] = 1.0 / W[0, k]
        return Affine(col, -col[:, 0] * b[0])
    P = np.linalg.pinv(W)
    return Affine(P, -(P @ b))


def gen_output_da(cfg: ScenarioConfig) -> DASetting:
    """Output-side adaptation: target outputs are confined to a band when shifted.

    H2 is affine; H2_prime starts with a right inverse of each H2 member (two-sided
    when feature and output dimensions agree), padded with random maps and shuffled.
    """
    _expect(cfg, "output_da")
    rng = _rng(cfg)
    nk = _norm_kind(cfg.loss_kind)
    dF, dY = cfg.feature_dim, cfg.output_dim
    if dY > dF:
        raise ConfigError("output_da needs feature_dim >= output_dim for right inverses")
    D_S, D_T = _domains(rng, cfg)
    sz = cfg.class_sizes
    H1 = HypothesisClass(tuple(_mixed_members(rng, sz["H1"], cfg.input_dim, dF, nk)), name="H1")
    if dF == dY:
        g_members = [_invertible_affine(rng, dF, nk) for _ in range(sz["H2"])]
    else:
        g_members = [_affine(rng, dF, dY, nk) for _ in range(sz["H2"])]
    H2 = _lipschitz_class(g_members, nk, "H2")
    inverses = [_right_inverse(g) for g in g_members[:sz["H2_prime"]]]
    extras = [_affine(rng, dY, dF, nk) for _ in range(sz["H2_prime"] - len(inverses))]
    pool = inverses + extras
    H2p = _lipschitz_class([pool[i] for i in rng.permutation(len(pool))], nk, "H2_prime")

    f0, g0 = H1[int(rng.integers(len(H1)))], H2[int(rng.integers(len(H2)))]
    y_S = _label_map(rng, cfg, f0, g0, D_S, D_T)
    if cfg.shift_magnitude > 0:
        vals = y_S.apply(D_T.support)
        lo = np.floor(np.quantile(vals, 0.25, axis=0) * 8) / 8
        hi = np.ceil(np.quantile(vals, 0.75, axis=0) * 8) / 8
        y_T = Table(D_T.support, np.clip(vals, lo, hi))
    else:
        y_T = y_S
    return DASetting("output_da", {"D_S": D_S, "D_T": D_T}, {"y_S": y_S, "y_T": y_T},
                     {"H1": H1, "H2": H2, "H2_prime": H2p}, LossSpec(cfg.loss_kind, dY))


def gen_analogy(cfg: ScenarioConfig) -> DASetting:
    """Disjoint output images linked by a translation adapter in H3.

    Features share the output dimension so that H4 (features to outputs) is
    invertible; ``cfg.feature_dim`` is ignored here.
    """
    _expect(cfg, "analogy_oda")
    rng = _rng(cfg)
    nk = _norm_kind(cfg.loss_kind)
    dY = cfg.output_dim
    dF = dY
    D_S, D_T = _domains(rng, cfg)
    sz = cfg.class_sizes
    H1 = HypothesisClass(tuple(_mixed_members(rng, sz["H1"], cfg.input_dim, dF, nk)), name="H1")
    H4 = _bi_lipschitz_class([_invertible_affine(rng, dF, nk) for _ in range(sz["H4"])], nk, "H4")
    f0, b0 = H1[int(rng.integers(len(H1)))], H4[int(rng.integers(len(H4)))]
    X = _union(D_S, D_T)
    y_S = _label_map(rng, cfg, f0, b0, D_S, D_T)

    # Translate by a power of two larger than the spread so the images cannot meet.
    spread = float(np.abs(y_S.apply(X)).max())
    offset = 2.0 ** math.ceil(math.log2(2 * spread + 1))
    a_true = Affine(np.eye(dY), np.full(dY, offset))
    y_T = compose(y_S, a_true.inverse())

    members = [_invertible_affine(rng, dY, nk) for _ in range(sz["H3"] - 1)]
    members.insert(int(rng.integers(sz["H3"])), a_true)
    H3 = _bi_lipschitz_class(members, nk, "H3")
    return DASetting("analogy_oda", {"D_S": D_S, "D_T": D_T}, {"y_S": y_S, "y_T": y_T},
                     {"H1": H1, "H3": H3, "H4": H4}, LossSpec(cfg.loss_kind, dY))


def gen_two_sided(cfg: ScenarioConfig) -> DASetting:
    """Two unpaired domains with different labelling maps, adapters into R^k, discriminators."""
    _expect(cfg, "two_sided")
    rng = _rng(cfg)
    nk = _norm_kind(cfg.loss_kind)
    dX, dF, dY = cfg.input_dim, cfg.feature_dim, cfg.output_dim
    D_1, D_2 = _domains(rng, cfg)
    sz = cfg.class_sizes
    H1 = HypothesisClass(tuple(_mixed_members(rng, sz["H1"], dX, dF, nk)), name="H1")
    H2 = _lipschitz_class(_mixed_members(rng, sz["H2"], dF, dY, nk), nk, "H2")
    H3 = _lipschitz_class([_affine(rng, dY, dY, nk) for _ in range(sz["H3"])], nk, "H3")
    C = _lipschitz_class(_mixed_members(rng, sz["C"], dY, 1, nk), nk, "C")
    f0, g0 = H1[int(rng.integers(len(H1)))], H2[int(rng.integers(len(H2)))]
    y_1 = _label_map(rng, cfg, f0, g0, D_1, D_2)
    y_2 = compose(y_1, _invertible_affine(rng, dY, nk))
    return DASetting("two_sided", {"D_1": D_1, "D_2": D_2}, {"y_1": y_1, "y_2": y_2},
                     {"H1": H1, "H2": H2, "H3": H3, "C": C}, LossSpec(cfg.loss_kind, dY))


def gen_domain_transfer(cfg: ScenarioConfig) -> DASetting:
    """Idempotent target y = nearest-codebook projection on X = Y = R^input_dim.

    In realizable mode f = M o y for an invertible M in H1, M^-1 is placed in
    H2, and D_2 is built so that y o D_2 equals y o D_1 exactly: each codebook
    point reached from D_1 appears in D_2 with half its mass, the other half on
    a D_1 point projecting to it.
    """
    _expect(cfg, "domain_transfer")
    rng = _rng(cfg)
    nk = _norm_kind(cfg.loss_kind)
    dX, dF = cfg.input_dim, cfg.feature_dim
    S = _sample_support(rng, cfg.support_size, dX)
    D_1 = FiniteDistribution(S, _weights(rng, len(S)))
    n_code = max(2, min(8, len(S)))
    y = Codebook(_sample_support(rng, n_code, dX))
    sz = cfg.class_sizes

    if cfg.realizable:
        if dF != dX:
            raise ConfigError("realizable domain transfer needs feature_dim == input_dim")
        M = _invertible_affine(rng, dX, nk)
        H1_members = _mixed_members(rng, sz["H1"] - 1, dX, dF, nk)
        f = compose(y, M)
        H1_members.insert(int(rng.integers(sz["H1"])), f)
        H2_members = _mixed_members(rng, sz["H2"] - 1, dF, dX, nk)
        H2_members.insert(int(rng.integers(sz["H2"])), M.inverse())
        D_2 = _matched_output_domain(y, D_1)
    else:
        H1_members = _mixed_members(rng, sz["H1"], dX, dF, nk)
        f = H1_members[int(rng.integers(len(H1_members)))]
        H2_members = _mixed_members(rng, sz["H2"], dF, dX, nk)
        D_2 = _partly_codebook(rng, y, _shifted(rng, D_1, cfg.shift_magnitude))
    H1 = HypothesisClass(tuple(H1_members), name="H1")
    H2 = _lipschitz_class(H2_members, nk, "H2")
    return DASetting("domain_transfer", {"D_1": D_1, "D_2": D_2}, {"y": y},
                     {"H1": H1, "H2": H2}, LossSpec(cfg.loss_kind, dX), fixed={"f": f})


def _matched_output_domain(y: Codebook, D_1: FiniteDistribution) -> FiniteDistribution:
    codes = y.apply(D_1.support)
    points, weights = [], []
    seen = {}
    for x, c, w in zip(D_1.support, codes, D_1.weights):
        seen.setdefault(tuple(c), []).append((x, w))
    for c, rows in seen.items():
        total = sum(w for _, w in rows)
        partner = next((x for x, _ in rows if tuple(x) != c), None)
        if partner is None:
            points.append(c)
            weights.append(total)
        else:
            points += [c, tuple(partner)]
            weights += [total / 2, total / 2]
    # No renormalisation: halves must add back to exactly the merged weight.
    return FiniteDistribution(np.array(points, dtype=np.float64), np.array(weights))


def _partly_codebook(rng, y: Codebook, D: FiniteDistribution) -> FiniteDistribution:
    """Replace about half of D's points by codebook points (merging duplicates)."""
    take = rng.random(len(D)) < 0.5
    pts = np.where(take[:, None], y.points[rng.integers(len(y.points), size=len(D))], D.support)
    uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
    w = np.bincount(inverse.reshape(-1), weights=D.weights, minlength=len(uniq))
    return FiniteDistribution(uniq, w / w.sum())


GENERATORS = {
    "standard_da": gen_standard_da,
    "binary_da": gen_binary_da,
    "output_da": gen_output_da,
    "analogy_oda": gen_analogy,
    "two_sided": gen_two_sided,
    "domain_transfer": gen_domain_transfer,
}


def _expect(cfg: ScenarioConfig, kind: str):
    if cfg.kind != kind:
        raise ConfigError(f"generator for {kind} got a {cfg.kind} config")


def generate(cfg: ScenarioConfig) -> DASetting:
    return GENERATORS[cfg.kind](cfg)


def scenario_document(cfg: ScenarioConfig) -> dict:
    """The JSON-ready scenario file: config plus the full generated setting."""
    return {"config": cfg.to_dict(), "setting": generate(cfg).to_dict()}
