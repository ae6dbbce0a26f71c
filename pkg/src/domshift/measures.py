"""Risks and discrepancy distances over finite hypothesis classes.

All suprema are exact: every ordered member pair is enumerated. Ties are
broken towards the lexicographically smallest index pair, and chunked or
parallel evaluation reduces on (value, index) so it always agrees with the
sequential result.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    DimensionError,
    Disagreement,
    FiniteDistribution,
    Hypothesis,
    HypothesisClass,
    LossSpec,
    Table,
    as_points,
    pointwise_loss,
)

# Upper bound on elements materialised per chunk of a pairwise risk matrix.
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class DiscrepancyResult:
    value: float
    witness: tuple

    def to_dict(self) -> dict:
        return {"value": self.value, "witness": list(self.witness)}


@dataclass(frozen=True)
class QuadDiscrepancyResult:
    value: float
    witness: tuple

    def to_dict(self) -> dict:
        return {"value": self.value, "witness": list(self.witness)}


def _check_output(spec: LossSpec, dim: int):
    if dim != spec.dimension:
        raise DimensionError(f"loss is defined on R^{spec.dimension}, outputs live in R^{dim}")


def weighted_loss(kind: str, A: np.ndarray, B: np.ndarray, w: np.ndarray) -> np.ndarray:
    """sum_k w_k * loss(A[..., k, :], B[..., k, :]) over the point axis.

    Every risk in the package goes through this function, so two routes that
    touch the same numbers produce bit-identical values.
    """
    return (pointwise_loss(kind, A, B) * w).sum(axis=-1)


def risk(D: FiniteDistribution, h1: Hypothesis, h2: Hypothesis, spec: LossSpec) -> float:
    """Generalization risk E_{x~D} loss(h1(x), h2(x))."""
    for h in (h1, h2):
        if h.input_dim != D.dim:
            raise DimensionError(f"hypothesis expects R^{h.input_dim}, distribution is on R^{D.dim}")
        _check_output(spec, h.output_dim)
    return float(weighted_loss(spec.kind, h1._apply(D.support), h2._apply(D.support), D.weights))


def empirical_risk(samples, spec: LossSpec) -> float:
    """Unweighted mean loss over (prediction, label) pairs."""
    samples = list(samples)
    if not samples:
        raise ValueError("empirical risk needs at least one sample")
    A = as_points([a for a, _ in samples], spec.dimension)
    B = as_points([b for _, b in samples], spec.dimension)
    return float(pointwise_loss(spec.kind, A, B).mean())


def mean_value(D: FiniteDistribution, h: Hypothesis) -> float:
    """E_{x~D} h(x) for a scalar-valued hypothesis."""
    if h.output_dim != 1:
        raise DimensionError("mean_value needs a scalar-valued hypothesis")
    return float((h._apply(D.support)[:, 0] * D.weights).sum())


def risk_matrix(kind: str, A: np.ndarray, B: np.ndarray, w: np.ndarray,
                rows: Optional[slice] = None) -> np.ndarray:
    """R[i, j] = sum_k w_k loss(A[i, k], B[j, k]) for A (m1, n, d), B (m2, n, d)."""
    if rows is not None:
        A = A[rows]
    m1, m2, n, d = A.shape[0], B.shape[0], A.shape[1], A.shape[2]
    step = max(1, _CHUNK_ELEMENTS // max(1, m2 * n * d))
    out = np.empty((m1, m2))
    for start in range(0, m1, step):
        block = A[start:start + step]
        out[start:start + step] = weighted_loss(kind, block[:, None], B[None, :], w)
    return out


def _first_max(M: np.ndarray, row_offset: int = 0):
    flat = int(np.argmax(M))
    i, j = divmod(flat, M.shape[1])
    return float(M[i, j]), (i + row_offset, j)


def _reduce(candidates):
    # (value, witness) pairs; larger value wins, then smaller witness.
    return min(candidates, key=lambda vw: (-vw[0], vw[1]))


def _pairwise_sup(kind, outs, weights, sign_pairs, m, workers):
    """max_{i,j} |sum_t s_t R_t[i,j]| over chunks of rows."""

    def block(rows: slice):
        total = None
        for (A, w), s in zip(zip(outs, weights), sign_pairs):
            R = risk_matrix(kind, A, A, w, rows)
            total = s * R if total is None else total + s * R
        return _first_max(np.abs(total), rows.start)

    if workers is None or workers <= 1 or m < 2:
        return _reduce([block(slice(0, m))])
    bounds = np.linspace(0, m, min(workers, m) + 1).astype(int)
    slices = [slice(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return _reduce(list(ex.map(block, slices)))


def _class_outputs(C: HypothesisClass, D: FiniteDistribution, spec: LossSpec) -> np.ndarray:
    if D.dim != C.input_dim:
        raise DimensionError(f"class expects R^{C.input_dim}, distribution is on R^{D.dim}")
    _check_output(spec, C.output_dim)
    return C.outputs(D.support)


def discrepancy(C: HypothesisClass, D1: FiniteDistribution, D2: FiniteDistribution,
                spec: LossSpec, workers: Optional[int] = None) -> DiscrepancyResult:
    """sup over ordered pairs (c1, c2) of |R_D1[c1, c2] - R_D2[c1, c2]|."""
    if len(C) == 0:
        raise ValueError("empty class")
    O1, O2 = _class_outputs(C, D1, spec), _class_outputs(C, D2, spec)
    value, witness = _pairwise_sup(spec.kind, (O1, O2), (D1.weights, D2.weights),
                                   (1.0, -1.0), len(C), workers)
    return DiscrepancyResult(value, witness)


def quad_discrepancy(C: HypothesisClass, D11: FiniteDistribution, D12: FiniteDistribution,
                     D21: FiniteDistribution, D22: FiniteDistribution, spec: LossSpec,
                     workers: Optional[int] = None) -> QuadDiscrepancyResult:
    """sup over pairs of |U_{D11,D12} - U_{D21,D22}| with U_{A,B} = R_A - R_B."""
    Ds = (D11, D12, D21, D22)
    outs = tuple(_class_outputs(C, D, spec) for D in Ds)

    # (R11 - R12) - (R21 - R22), grouped exactly as written.
    def block(rows: slice):
        R = [risk_matrix(spec.kind, O, O, D.weights, rows) for O, D in zip(outs, Ds)]
        return _first_max(np.abs((R[0] - R[1]) - (R[2] - R[3])), rows.start)

    m = len(C)
    if workers is None or workers <= 1 or m < 2:
        value, witness = block(slice(0, m))
    else:
        bounds = np.linspace(0, m, min(workers, m) + 1).astype(int)
        slices = [slice(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]
        with ThreadPoolExecutor(max_workers=workers) as ex:
            value, witness = _reduce(list(ex.map(block, slices)))
    return QuadDiscrepancyResult(value, witness)


def relation_gap(C: HypothesisClass, D1: FiniteDistribution, D2: FiniteDistribution,
                 spec: LossSpec) -> np.ndarray:
    """Matrix U[i, j] = R_D1[c_i, c_j] - R_D2[c_i, c_j]."""
    O1, O2 = _class_outputs(C, D1, spec), _class_outputs(C, D2, spec)
    return risk_matrix(spec.kind, O1, O1, D1.weights) - risk_matrix(spec.kind, O2, O2, D2.weights)


def _is_binary(values: np.ndarray) -> bool:
    return bool(np.all((values == 0.0) | (values == 1.0)))


def symmetric_difference_class(C: HypothesisClass, probes=None) -> HypothesisClass:
    """All disagreement indicators [c1(x) != c2(x)] over ordered pairs, row-major.

    Members must be binary-valued. Table members are checked on their whole
    domain; other forms on ``probes`` when given.
    """
    if C.output_dim != 1:
        raise ValueError("symmetric difference needs scalar binary hypotheses")
    for idx, m in enumerate(C.members):
        if isinstance(m, Table) and not _is_binary(m.values):
            raise ValueError(f"member {idx} takes non-binary values")
    if probes is not None:
        O = C.outputs(probes)
        if not _is_binary(O):
            bad = int(np.argmax(~np.all((O == 0.0) | (O == 1.0), axis=(1, 2))))
            raise ValueError(f"member {bad} takes non-binary values on the probes")
    pairs = tuple(Disagreement(a, b) for a in C.members for b in C.members)
    return HypothesisClass(pairs, name=f"{C.name}xor{C.name}" if C.name else "")


def max_mean_gap(C: HypothesisClass, D1: FiniteDistribution, D2: FiniteDistribution):
    """max over members d of |E_D1 d - E_D2 d|, with the first maximizing index."""
    g1 = (C.outputs(D1.support)[:, :, 0] * D1.weights).sum(axis=-1)
    g2 = (C.outputs(D2.support)[:, :, 0] * D2.weights).sum(axis=-1)
    gaps = np.abs(g1 - g2)
    k = int(np.argmax(gaps))
    return float(gaps[k]), k


# ---------------------------------------------------------------------------
# empirical constants


def _as_tuples(probes, arity: int, dim: int) -> np.ndarray:
    P = np.asarray(probes, dtype=np.float64)
    if P.ndim == 2 and arity * dim == P.shape[1]:
        P = P.reshape(len(P), arity, dim)
    if P.ndim == 2 and dim == 1:
        P = P[:, :, None]
    if P.ndim != 3 or P.shape[1] != arity or P.shape[2] != dim or len(P) == 0:
        raise DimensionError(f"expected a non-empty array of {arity}-tuples of R^{dim} points")
    return P


def estimate_K(spec: LossSpec, probes) -> float:
    """Largest loss(y1,y3) / (loss(y1,y2) + loss(y2,y3)) over probe triples.

    A lower bound on the smallest valid factor-triangle constant. Triples with
    a vanishing denominator and vanishing numerator are skipped.
    """
    P = _as_tuples(probes, 3, spec.dimension)
    num = pointwise_loss(spec.kind, P[:, 0], P[:, 2])
    den = pointwise_loss(spec.kind, P[:, 0], P[:, 1]) + pointwise_loss(spec.kind, P[:, 1], P[:, 2])
    zero = den == 0
    if np.any(zero & (num > 0)):
        raise ValueError("triple with zero denominator and positive numerator: no finite K")
    keep = ~zero
    return float((num[keep] / den[keep]).max()) if np.any(keep) else 0.0


def estimate_L(h: Hypothesis, spec: LossSpec, probes) -> float:
    """Largest loss(h(a1), h(a2)) / loss(a1, a2) over probe pairs.

    ``spec`` names the loss kind; it is applied on the input and output spaces
    of ``h`` at their own dimensions.
    """
    P = _as_tuples(probes, 2, h.input_dim)
    kind = spec.kind
    den = pointwise_loss(kind, P[:, 0], P[:, 1])
    num = pointwise_loss(kind, h._apply(P[:, 0]), h._apply(P[:, 1]))
    zero = den == 0
    if np.any(zero & (num > 0)):
        raise ValueError("pair with equal inputs but different outputs: not Lipschitz")
    keep = ~zero
    return float((num[keep] / den[keep]).max()) if np.any(keep) else 0.0
