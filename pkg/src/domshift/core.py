"""Value types: points, finite distributions, losses, hypotheses, hypothesis classes.

Everything here is immutable after construction. Arrays held by these objects
are marked read-only so they can be shared freely between evaluators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

WEIGHT_TOL = 1e-12

LOSS_KINDS = ("absolute", "squared", "zero_one")

# Factor-triangle constants used for bound composition. Squared loss is stored
# at 3 even though 2 is tight; see measures.estimate_K for the empirical check.
TRIANGLE_CONSTANT = {"absolute": 1.0, "squared": 3.0, "zero_one": 1.0}


class DimensionError(ValueError):
    pass


class TableMissError(KeyError):
    """A table hypothesis was evaluated outside its finite domain."""


def _frozen(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def as_point(coords) -> np.ndarray:
    """Validate and return a point as a read-only 1-D float array."""
    p = np.asarray(coords, dtype=np.float64)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.ndim != 1 or p.size == 0:
        raise DimensionError(f"a point must be a non-empty 1-D vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point has non-finite coordinates: {p}")
    return _frozen(p)


def as_points(rows, dim: Optional[int] = None) -> np.ndarray:
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if dim in (None, 1) else X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] == 0:
        raise DimensionError(f"expected a (n, d) array of points, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise DimensionError(f"expected points of dimension {dim}, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("points must have finite coordinates")
    return X


# ---------------------------------------------------------------------------
# distributions


@dataclass(frozen=True, eq=False)
class FiniteDistribution:
    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        S = as_points(self.support)
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if len(S) == 0:
            raise ValueError("a distribution needs at least one support point")
        if len(w) != len(S):
            raise ValueError(f"{len(S)} support points but {len(w)} weights")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")
        if abs(float(w.sum()) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        if len(np.unique(S, axis=0)) != len(S):
            raise ValueError("support points must be pairwise distinct")
        object.__setattr__(self, "support", _frozen(S))
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def dim(self) -> int:
        return self.support.shape[1]

    def __len__(self) -> int:
        return len(self.support)

    @classmethod
    def point_mass(cls, x) -> "FiniteDistribution":
        return cls(as_point(x).reshape(1, -1), [1.0])

    @classmethod
    def uniform(cls, points) -> "FiniteDistribution":
        X = as_points(points)
        return cls(X, np.full(len(X), 1.0 / len(X)))

    def same_as(self, other: "FiniteDistribution") -> bool:
        """Exact equality of support (in order) and weights."""
        return (
            self.support.shape == other.support.shape
            and np.array_equal(self.support, other.support)
            and np.array_equal(self.weights, other.weights)
        )

    def to_dict(self) -> dict:
        return {"support": self.support.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteDistribution":
        return cls(np.asarray(d["support"], dtype=np.float64), d["weights"])


# ---------------------------------------------------------------------------
# losses


def pointwise_loss(kind: str, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Loss between matching rows of ``A`` and ``B`` (broadcast over leading axes)."""
    if kind == "absolute":
        return np.abs(A - B).sum(axis=-1)
    if kind == "squared":
        diff = A - B
        return (diff * diff).sum(axis=-1)
    if kind == "zero_one":
        return np.any(A != B, axis=-1).astype(np.float64)
    raise ValueError(f"unknown loss kind {kind!r}")


@dataclass(frozen=True)
class LossSpec:
    kind: str
    dimension: int = 1
    triangle_constant_K: float = math.nan

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"loss kind must be one of {LOSS_KINDS}, got {self.kind!r}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError("loss dimension must be a positive integer")
        if self.kind == "zero_one" and self.dimension != 1:
            raise ValueError("zero_one loss is defined on one-dimensional labels only")
        K = TRIANGLE_CONSTANT[self.kind]
        if math.isnan(self.triangle_constant_K):
            object.__setattr__(self, "triangle_constant_K", K)
        elif self.triangle_constant_K != K:
            raise ValueError(f"{self.kind} loss uses K={K}, got {self.triangle_constant_K}")

    @property
    def K(self) -> float:
        return self.triangle_constant_K

    def with_dimension(self, dim: int) -> "LossSpec":
        if dim == self.dimension:
            return self
        if self.kind == "zero_one":
            raise ValueError("zero_one loss cannot be lifted to multi-dimensional spaces")
        return LossSpec(self.kind, dim)

    def __call__(self, a, b) -> float:
        return loss(self, a, b)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dimension": self.dimension,
                "triangle_constant_K": self.triangle_constant_K}

    @classmethod
    def from_dict(cls, d: dict) -> "LossSpec":
        return cls(d["kind"], int(d["dimension"]), float(d["triangle_constant_K"]))


def loss(spec: LossSpec, a, b) -> float:
    a, b = as_point(a), as_point(b)
    if a.size != spec.dimension or b.size != spec.dimension:
        raise DimensionError(
            f"{spec.kind} loss on dimension {spec.dimension} got points of size {a.size}, {b.size}")
    return float(pointwise_loss(spec.kind, a, b))


# ---------------------------------------------------------------------------
# hypotheses


class Hypothesis:
    """An evaluable map R^input_dim -> R^output_dim.

    Subclasses implement ``_apply`` on a validated ``(n, input_dim)`` array.
    """

    form: str = "?"
    input_dim: int
    output_dim: int

    def apply(self, X) -> np.ndarray:
        X = as_points(X, self.input_dim)
        Y = self._apply(X)
        return Y

    def _apply(self, X: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)

    def then(self, *others: "Hypothesis") -> "Composition":
        """``self`` followed by ``others`` (left to right)."""
        return compose(self, *others)

    def inverse(self) -> "Hypothesis":
        raise ValueError(f"{self.form} hypothesis has no closed-form inverse")

    def to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.input_dim}->{self.output_dim}>"


def evaluate(h: Hypothesis, x) -> np.ndarray:
    p = as_point(x)
    if p.size != h.input_dim:
        raise DimensionError(f"hypothesis expects dimension {h.input_dim}, got {p.size}")
    out = h._apply(p.reshape(1, -1))[0]
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False, repr=False)
class Identity(Hypothesis):
    dim: int
    form = "identity"

    @property
    def input_dim(self):
        return self.dim

    @property
    def output_dim(self):
        return self.dim

    def _apply(self, X):
        return X.copy()

    def inverse(self):
        return self

    def to_dict(self):
        return {"form": "identity", "dim": self.dim}


@dataclass(frozen=True, eq=False, repr=False)
class Affine(Hypothesis):
    """x -> weight @ x + bias."""

    weight: np.ndarray
    bias: np.ndarray
    form = "affine"

    def __post_init__(self):
        W = np.asarray(self.weight, dtype=np.float64)
        if W.ndim != 2 or 0 in W.shape:
            raise DimensionError("affine weight must be a non-empty matrix")
        b = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if b.size != W.shape[0]:
            raise DimensionError(f"bias has size {b.size}, weight has {W.shape[0]} rows")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ValueError("affine parameters must be finite")
        object.__setattr__(self, "weight", _frozen(W))
        object.__setattr__(self, "bias", _frozen(b))

    @classmethod
    def constant(cls, value, input_dim: int) -> "Affine":
        c = as_point(value)
        return cls(np.zeros((c.size, input_dim)), c)

    @property
    def input_dim(self):
        return self.weight.shape[1]

    @property
    def output_dim(self):
        return self.weight.shape[0]

    def _apply(self, X):
        return X @ self.weight.T + self.bias

    def inverse(self) -> "Affine":
        W = self.weight
        if W.shape[0] != W.shape[1]:
            raise ValueError("only square affine maps are invertible")
        Winv = _exact_inverse(W)
        return Affine(Winv, -(Winv @ self.bias))

    def to_dict(self):
        return {"form": "affine", "weight": self.weight.tolist(), "bias": self.bias.tolist()}


def _exact_inverse(W: np.ndarray) -> np.ndarray:
    # Closed forms keep dyadic matrices exact; LU would add rounding.
    n = W.shape[0]
    if n == 1:
        if W[0, 0] == 0:
            raise ValueError("singular 1x1 matrix")
        return np.array([[1.0 / W[0, 0]]])
    if n == 2:
        a, b, c, d = W[0, 0], W[0, 1], W[1, 0], W[1, 1]
        det = a * d - b * c
        if det == 0:
            raise ValueError("singular 2x2 matrix")
        return np.array([[d, -b], [-c, a]]) / det
    return np.linalg.inv(W)


@dataclass(frozen=True, eq=False, repr=False)
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        W = np.asarray(self.weight, dtype=np.float64)
        if W.ndim != 2 or 0 in W.shape:
            raise DimensionError("layer weight must be a non-empty matrix")
        b = np.zeros(W.shape[0]) if self.bias is None else np.asarray(self.bias, np.float64).reshape(-1)
        if b.size != W.shape[0]:
            raise DimensionError("layer bias does not match weight rows")
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError("PReLU slope must be a finite non-negative number")
        object.__setattr__(self, "weight", _frozen(W))
        object.__setattr__(self, "bias", _frozen(b))
        object.__setattr__(self, "alpha", float(self.alpha))


def prelu(x: np.ndarray, alpha: float) -> np.ndarray:
    return np.maximum(x, 0.0) + alpha * np.minimum(x, 0.0)


@dataclass(frozen=True, eq=False, repr=False)
class PReLUNet(Hypothesis):
    """Feedforward net; each layer computes PReLU_alpha(W x + b).

    A layer with alpha == 1 is linear, which is how output layers are written.
    """

    layers: tuple
    form = "prelu_net"

    def __post_init__(self):
        layers = tuple(l if isinstance(l, Layer) else Layer(**l) for l in self.layers)
        if not layers:
            raise ValueError("a PReLU net needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.weight.shape[0] != nxt.weight.shape[1]:
                raise DimensionError("PReLU layer shapes do not chain")
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self):
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self):
        return self.layers[-1].weight.shape[0]

    def _apply(self, X):
        for layer in self.layers:
            X = X @ layer.weight.T + layer.bias
            if layer.alpha != 1.0:
                X = prelu(X, layer.alpha)
        return X

    def to_dict(self):
        return {"form": "prelu_net", "layers": [
            {"weight": l.weight.tolist(), "bias": l.bias.tolist(), "alpha": l.alpha}
            for l in self.layers]}


@dataclass(frozen=True, eq=False, repr=False)
class Table(Hypothesis):
    """A finite lookup map; evaluating outside ``keys`` raises TableMissError."""

    keys: np.ndarray
    values: np.ndarray
    form = "table"

    def __post_init__(self):
        K = as_points(self.keys)
        V = as_points(self.values)
        if len(K) != len(V):
            raise ValueError("table needs one value per key")
        index = {}
        for i, row in enumerate(K.tolist()):
            t = tuple(row)
            if t in index:
                raise ValueError(f"duplicate table key {t}")
            index[t] = i
        object.__setattr__(self, "keys", _frozen(K))
        object.__setattr__(self, "values", _frozen(V))
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_function(cls, h: Hypothesis, points) -> "Table":
        """Restrict ``h`` to the distinct rows of ``points``."""
        X = np.unique(as_points(points, h.input_dim), axis=0)
        return cls(X, h.apply(X))

    @property
    def input_dim(self):
        return self.keys.shape[1]

    @property
    def output_dim(self):
        return self.values.shape[1]

    def _apply(self, X):
        try:
            idx = [self._index[tuple(row)] for row in X.tolist()]
        except KeyError as exc:
            raise TableMissError(f"point {exc.args[0]} is not in the table domain") from None
        return self.values[idx].copy()

    def inverse(self) -> "Table":
        if len(np.unique(self.values, axis=0)) != len(self.values):
            raise ValueError("table is not injective")
        return Table(self.values, self.keys)

    def to_dict(self):
        return {"form": "table", "keys": self.keys.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True, eq=False, repr=False)
class Codebook(Hypothesis):
    """Projection onto the nearest codebook point (squared Euclidean, lowest index on ties).

    Codebook points are fixed by the projection, so the map is idempotent.
    """

    points: np.ndarray
    form = "codebook"

    def __post_init__(self):
        P = as_points(self.points)
        if len(np.unique(P, axis=0)) != len(P):
            raise ValueError("codebook points must be distinct")
        object.__setattr__(self, "points", _frozen(P))

    @property
    def input_dim(self):
        return self.points.shape[1]

    @property
    def output_dim(self):
        return self.points.shape[1]

    def _apply(self, X):
        diff = X[:, None, :] - self.points[None, :, :]
        d2 = (diff * diff).sum(axis=-1)
        return self.points[np.argmin(d2, axis=1)].copy()

    def to_dict(self):
        return {"form": "codebook", "points": self.points.tolist()}


@dataclass(frozen=True, eq=False, repr=False)
class Composition(Hypothesis):
    """Apply ``parts`` left to right: [f, g] evaluates g(f(x))."""

    parts: tuple
    form = "composition"

    def __post_init__(self):
        flat = []
        for p in self.parts:
            if isinstance(p, Composition):
                flat.extend(p.parts)
            elif isinstance(p, Hypothesis):
                flat.append(p)
            else:
                raise TypeError(f"cannot compose {type(p).__name__}")
        if not flat:
            raise ValueError("empty composition")
        for a, b in zip(flat, flat[1:]):
            if a.output_dim != b.input_dim:
                raise DimensionError(
                    f"composition does not chain: {a.form} outputs {a.output_dim}, "
                    f"{b.form} expects {b.input_dim}")
        object.__setattr__(self, "parts", tuple(flat))

    @property
    def input_dim(self):
        return self.parts[0].input_dim

    @property
    def output_dim(self):
        return self.parts[-1].output_dim

    def _apply(self, X):
        for p in self.parts:
            X = p._apply(X)
        return X

    def inverse(self):
        return Composition(tuple(p.inverse() for p in reversed(self.parts)))

    def to_dict(self):
        return {"form": "composition", "parts": [p.to_dict() for p in self.parts]}


@dataclass(frozen=True, eq=False, repr=False)
class Disagreement(Hypothesis):
    """Indicator x -> [left(x) != right(x)]; members of the symmetric-difference class."""

    left: Hypothesis
    right: Hypothesis
    form = "disagreement"

    def __post_init__(self):
        if (self.left.input_dim, self.left.output_dim) != (self.right.input_dim, self.right.output_dim):
            raise DimensionError("disagreement needs two hypotheses with equal signatures")

    @property
    def input_dim(self):
        return self.left.input_dim

    @property
    def output_dim(self):
        return 1

    def _apply(self, X):
        a, b = self.left._apply(X), self.right._apply(X)
        return np.any(a != b, axis=1).astype(np.float64).reshape(-1, 1)

    def to_dict(self):
        return {"form": "disagreement", "left": self.left.to_dict(), "right": self.right.to_dict()}


def compose(*parts: Hypothesis) -> Hypothesis:
    """Left-to-right composition; a single part is returned unchanged."""
    if len(parts) == 1:
        return parts[0]
    return Composition(tuple(parts))


def hypothesis_from_dict(d: dict) -> Hypothesis:
    form = d["form"]
    if form == "identity":
        return Identity(int(d["dim"]))
    if form == "affine":
        return Affine(d["weight"], d["bias"])
    if form == "prelu_net":
        return PReLUNet(tuple(Layer(l["weight"], l["bias"], l["alpha"]) for l in d["layers"]))
    if form == "table":
        return Table(d["keys"], d["values"])
    if form == "codebook":
        return Codebook(d["points"])
    if form == "composition":
        return Composition(tuple(hypothesis_from_dict(p) for p in d["parts"]))
    if form == "disagreement":
        return Disagreement(hypothesis_from_dict(d["left"]), hypothesis_from_dict(d["right"]))
    raise ValueError(f"unknown hypothesis form {form!r}")


# ---------------------------------------------------------------------------
# pushforward


def pushforward(h: Hypothesis, D: FiniteDistribution) -> FiniteDistribution:
    """Distribution of h(x) for x ~ D.

    Images that coincide exactly are merged with summed weights; the merged
    support keeps first-occurrence order, so identity maps return D unchanged.
    """
    if D.dim != h.input_dim:
        raise DimensionError(f"distribution lives in R^{D.dim}, hypothesis expects R^{h.input_dim}")
    Y = h._apply(D.support)
    _, first, inverse = np.unique(Y, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    if len(first) == len(Y):
        return FiniteDistribution(Y, D.weights)
    if len(first) == 1:
        # Full collapse: exactly the point mass, whatever the rounding of sum(w).
        return FiniteDistribution(Y[:1], [1.0])
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    slot = rank[inverse]
    merged = np.bincount(slot, weights=D.weights, minlength=len(order))
    return FiniteDistribution(Y[first[order]], merged)


# ---------------------------------------------------------------------------
# hypothesis classes


@dataclass(frozen=True, eq=False)
class HypothesisClass:
    """A finite, ordered hypothesis class.

    ``lipschitz_L`` is a declared universal Lipschitz constant (checked
    empirically elsewhere, never inferred). ``inverse_class`` holds the
    member-wise inverses in the same order.
    """

    members: tuple
    lipschitz_L: Optional[float] = None
    inverse_class: Optional["HypothesisClass"] = None
    name: str = ""

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("a hypothesis class needs at least one member")
        sig = (members[0].input_dim, members[0].output_dim)
        for m in members:
            if (m.input_dim, m.output_dim) != sig:
                raise DimensionError("all class members must share input and output dimensions")
        if self.lipschitz_L is not None and not (self.lipschitz_L > 0):
            raise ValueError("declared Lipschitz constant must be positive")
        inv = self.inverse_class
        if inv is not None:
            if len(inv) != len(members):
                raise ValueError("inverse class must have one member per member")
            if (inv.input_dim, inv.output_dim) != (sig[1], sig[0]):
                raise DimensionError("inverse class has the wrong signature")
        object.__setattr__(self, "members", members)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i) -> Hypothesis:
        return self.members[i]

    @property
    def input_dim(self) -> int:
        return self.members[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.members[0].output_dim

    def outputs(self, X) -> np.ndarray:
        """Stacked member outputs, shape (|C|, n, output_dim)."""
        X = as_points(X, self.input_dim)
        return np.stack([m._apply(X) for m in self.members])

    def after(self, prefix: Hypothesis, name: str = "") -> "HypothesisClass":
        """The class {c o prefix : c in self} (prefix applied first)."""
        return HypothesisClass(tuple(compose(prefix, m) for m in self.members), name=name)

    def inverse_gap(self, probes, spec: LossSpec) -> float:
        """Largest loss between inverse(member(p)) and p over members and probes."""
        if self.inverse_class is None:
            raise ValueError("class has no inverse class")
        X = as_points(probes, self.input_dim)
        worst = 0.0
        for m, m_inv in zip(self.members, self.inverse_class.members):
            back = m_inv._apply(m._apply(X))
            worst = max(worst, float(pointwise_loss(spec.kind, back, X).max()))
        return worst

    @classmethod
    def with_inverses(cls, members: Sequence[Hypothesis], lipschitz_L=None,
                      inverse_L=None, name: str = "") -> "HypothesisClass":
        inv = cls(tuple(m.inverse() for m in members), lipschitz_L=inverse_L, name=name + "^-1")
        return cls(tuple(members), lipschitz_L=lipschitz_L, inverse_class=inv, name=name)

    def to_dict(self) -> dict:
        d = {"name": self.name, "lipschitz_L": self.lipschitz_L,
             "members": [m.to_dict() for m in self.members]}
        if self.inverse_class is not None:
            d["inverse_class"] = self.inverse_class.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HypothesisClass":
        inv = d.get("inverse_class")
        return cls(
            tuple(hypothesis_from_dict(m) for m in d["members"]),
            lipschitz_L=d.get("lipschitz_L"),
            inverse_class=cls.from_dict(inv) if inv is not None else None,
            name=d.get("name", ""),
        )


# ---------------------------------------------------------------------------
# Lipschitz upper bounds for parametric forms


def operator_norm(W: np.ndarray, kind: str) -> float:
    """Norm matching the loss: induced L1 norm for absolute, spectral for squared."""
    if kind == "absolute":
        return float(np.abs(W).sum(axis=0).max())
    if kind == "squared":
        return float(np.linalg.norm(W, 2))
    raise ValueError(f"no operator norm for loss kind {kind!r}")


def lipschitz_upper_bound(h: Hypothesis, kind: str) -> float:
    """A valid Lipschitz constant of ``h`` w.r.t. the given loss kind.

    Zero-one loss makes every function 1-Lipschitz. For squared loss the
    constant is the square of the norm-based constant. Returns inf for forms
    without a finite guarantee (tables off their domain, codebooks).
    """
    if kind == "zero_one":
        return 1.0
    if isinstance(h, Identity):
        return 1.0
    if isinstance(h, Affine):
        scale = operator_norm(h.weight, kind)
    elif isinstance(h, PReLUNet):
        scale = 1.0
        for l in h.layers:
            scale *= operator_norm(l.weight, kind) * max(1.0, l.alpha)
    elif isinstance(h, Composition):
        out = 1.0
        for p in h.parts:
            out *= lipschitz_upper_bound(p, kind)
        return out
    else:
        return math.inf
    return scale * scale if kind == "squared" else scale


def declared_lipschitz(members: Iterable[Hypothesis], kind: str, margin: float = 1e-9) -> float:
    """Universal constant for a class: max member bound, floored at 1, with a small
    relative margin so rounding in empirical estimates cannot exceed it."""
    L = max([1.0] + [lipschitz_upper_bound(m, kind) for m in members])
    return L * (1.0 + margin)
