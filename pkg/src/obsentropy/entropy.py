"""Entropy functionals: von Neumann, discrete and grid-integrated
observational entropy, the Kullback-Leibler decomposition, and the
saturation predicates of the bounding theorems.

Conventions: 0 ln 0 = 0; probabilities below 1e-300 are dropped; values in
[-1e-12, 0) coming from eigenvalue round-off are clamped to zero before
taking logarithms.  All entropies are computed in nats internally; base
conversion happens at presentation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coarsegrain import (
    CoarseGrainingVector,
    DensityMatrix,
    OutcomeTable,
    outcome_table,
)
from .errors import ShapeError, ValidationError

P_FLOOR = 1e-300
LN2 = math.log(2.0)


@dataclass(frozen=True)
class EntropyValue:
    """An entropy with its presentation base."""

    nats: float
    log_base: str = "natural"  # "natural" | "bits"

    def __post_init__(self):
        if self.log_base not in ("natural", "bits"):
            raise ValidationError(f"unknown log base {self.log_base!r}")
        nats = float(self.nats)
        if nats < 0.0:
            if nats < -1e-9:
                raise ValidationError(f"negative entropy {nats}")
            nats = 0.0
        object.__setattr__(self, "nats", nats)

    @property
    def bits(self) -> float:
        return self.nats / LN2

    @property
    def value(self) -> float:
        return self.bits if self.log_base == "bits" else self.nats

    def to_base(self, log_base: str) -> "EntropyValue":
        return EntropyValue(self.nats, log_base)


@dataclass(frozen=True)
class GridFunction:
    """Non-negative samples on a uniform (multi-)grid."""

    axes: tuple[np.ndarray, ...]
    values: np.ndarray

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        values = np.asarray(self.values, dtype=float)
        if values.shape != tuple(len(a) for a in axes):
            raise ShapeError(f"values shape {values.shape} does not match axes")
        for a in axes:
            if len(a) < 2:
                raise ValidationError("each grid axis needs at least two points")
            steps = np.diff(a)
            if steps.min() <= 0 or np.ptp(steps) > 1e-9 * steps[0]:
                raise ValidationError("grid axes must be uniform with positive step")
        if not np.all(np.isfinite(values)):
            raise ValidationError("grid values must be finite")
        if values.min() < -1e-12:
            raise ValidationError(f"grid values must be >= -1e-12, got {values.min():.3e}")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", values)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple(float(a[1] - a[0]) for a in self.axes)


def trapezoid_weights(axis: np.ndarray) -> np.ndarray:
    """1-D trapezoid weights: dx everywhere, dx/2 at the endpoints."""
    dx = float(axis[1] - axis[0])
    w = np.full(len(axis), dx)
    w[0] = w[-1] = dx / 2
    return w


def grid_integral(f: GridFunction) -> float:
    """Iterated-trapezoid integral over the full (multi-)grid."""
    v = f.values
    for ax in reversed(range(f.ndim)):
        v = np.tensordot(v, trapezoid_weights(f.axes[ax]), axes=([v.ndim - 1], [0]))
    return float(v)


def entropy_terms(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Elementwise -p ln(p/V) with the 0 ln 0 convention."""
    p = np.where((p < 0) & (p >= -1e-12), 0.0, p)
    v = np.where((v < 0) & (v >= -1e-12), 0.0, v)
    out = np.zeros_like(p)
    mask = p > P_FLOOR
    if np.any(mask & (v <= 0)):
        raise ValidationError("nonzero probability on a zero-volume outcome")
    out[mask] = -p[mask] * np.log(p[mask] / v[mask])
    return out


def von_neumann(rho: DensityMatrix, log_base: str = "natural") -> EntropyValue:
    """-tr[rho ln rho] from the eigenvalue spectrum."""
    evals = np.linalg.eigvalsh(rho.matrix)
    evals = np.clip(evals, 0.0, None)
    mask = evals > P_FLOOR
    nats = float(-(evals[mask] * np.log(evals[mask])).sum())
    return EntropyValue(nats, log_base)


def observational_from_table(table: OutcomeTable, log_base: str = "natural") -> EntropyValue:
    nats = float(entropy_terms(table.probabilities, table.volumes).sum())
    return EntropyValue(nats, log_base)


def observational(
    v: CoarseGrainingVector, rho: DensityMatrix, log_base: str = "natural"
) -> EntropyValue:
    """Observational entropy -sum_i p_i ln(p_i / V_i) of a measurement sequence."""
    return observational_from_table(outcome_table(v, rho), log_base)


def observational_grid(
    p: GridFunction,
    v: GridFunction,
    dim: int | None = None,
    norm_tol: float = 1e-6,
    log_base: str = "natural",
) -> EntropyValue:
    """Trapezoid approximation of -integral p ln(p/V) over a shared grid.

    Validates that p integrates to 1 and V to the Hilbert-space dimension
    within ``norm_tol`` (a failure indicates an insufficient grid buffer).
    """
    if p.values.shape != v.values.shape or len(p.axes) != len(v.axes):
        raise ShapeError("p and V must share one grid")
    for a, b in zip(p.axes, v.axes):
        if len(a) != len(b) or not np.allclose(a, b, atol=1e-12, rtol=0):
            raise ShapeError("p and V must share one grid")
    p_int = grid_integral(p)
    v_int = grid_integral(v)
    if dim is None:
        dim = int(round(v_int))
    if abs(p_int - 1.0) > norm_tol:
        raise ValidationError(f"p integrates to {p_int}, expected 1 within {norm_tol:g}")
    if abs(v_int - dim) > norm_tol * dim:
        raise ValidationError(f"V integrates to {v_int}, expected {dim} within {norm_tol * dim:g}")

    terms = entropy_terms(p.values, v.values)
    for ax in reversed(range(p.ndim)):
        terms = np.tensordot(terms, trapezoid_weights(p.axes[ax]), axes=([terms.ndim - 1], [0]))
    return EntropyValue(float(terms), log_base)


def kl_decomposition(table: OutcomeTable, dim: int | None = None) -> tuple[float, float]:
    """Split S = ln(dim) - D_KL(p || V/dim) and return (ln dim, D_KL) in nats."""
    if dim is None:
        dim = table.dim
    ln_v = math.log(dim)
    p = table.probabilities
    v = table.volumes
    p = np.where((p < 0) & (p >= -1e-12), 0.0, p)
    mask = p > P_FLOOR
    if np.any(mask & (v <= 0)):
        raise ValidationError("nonzero probability on a zero-volume outcome")
    kl = float((p[mask] * np.log(p[mask] * dim / v[mask])).sum())
    return ln_v, kl


@dataclass(frozen=True)
class EqualityCheck:
    holds: bool
    residual: float


@dataclass(frozen=True)
class EqualityReport:
    """Which saturation conditions of the entropy bounds hold.

    vn_equality: S equals the von Neumann entropy (lower bound reached).
    max_entropy: p_i = V_i / dim for every outcome (upper bound reached).
    last_cg_redundant: appending the final coarse-graining left the entropy
    unchanged, i.e. p_{i,k} = (V_{i,k}/V_i) p_i for all outcomes.
    """

    vn_equality: EqualityCheck
    max_entropy: EqualityCheck
    last_cg_redundant: EqualityCheck


def check_equality_conditions(
    v: CoarseGrainingVector, rho: DensityMatrix, tol: float = 1e-9
) -> EqualityReport:
    table = outcome_table(v, rho)
    s = observational_from_table(table).nats
    s_vn = von_neumann(rho).nats

    vn_res = abs(s - s_vn)
    max_res = float(np.max(np.abs(table.probabilities - table.volumes / v.dim)))

    if len(v.sequence) > 1:
        prefix = outcome_table(CoarseGrainingVector(v.sequence[:-1]), rho)
        prefix_pv = {idx: (p, vol) for idx, p, vol in prefix.entries}
    else:
        prefix_pv = {(): (1.0, float(v.dim))}
    red_res = 0.0
    for idx, p, vol in table.entries:
        p_pre, v_pre = prefix_pv[idx[:-1]]
        expected = (vol / v_pre) * p_pre if v_pre > 0 else 0.0
        red_res = max(red_res, abs(p - expected))

    return EqualityReport(
        vn_equality=EqualityCheck(vn_res < tol, vn_res),
        max_entropy=EqualityCheck(max_res < tol, max_res),
        last_cg_redundant=EqualityCheck(red_res < tol, red_res),
    )


def refinement_equality_residual(
    fine: CoarseGrainingVector,
    coarse: CoarseGrainingVector,
    assignment: dict,
    rho: DensityMatrix,
) -> float:
    """Max residual of p_i = (V_i / V_j) p_j over a refinement assignment.

    Zero residual is the condition for the fine and coarse measurement
    sequences to give equal observational entropy.
    """
    fine_table = outcome_table(fine, rho)
    coarse_table = outcome_table(coarse, rho)
    coarse_pv = {idx: (p, vol) for idx, p, vol in coarse_table.entries}
    res = 0.0
    for idx, p, vol in fine_table.entries:
        j = tuple(assignment[idx])
        p_j, v_j = coarse_pv[j]
        expected = (vol / v_j) * p_j if v_j > 0 else 0.0
        res = max(res, abs(p - expected))
    return res
