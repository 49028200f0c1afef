"""Coarse-grainings as complete sets of quantum operations (Kraus sets).

A coarse-graining models one generalized measurement: each outcome branch is
a quantum operation A_i(X) = sum_m K_im X K_im^dag, and the branches jointly
satisfy the completeness relation sum_im K_im^dag K_im = I.  Sequences of
coarse-grainings compose into a single coarse-graining with multi-indexed
outcomes whose probabilities p_i = tr[A_i(rho)] and macrostate volumes
V_i = tr[A_i(I)] feed the entropy module.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ShapeError, ValidationError
from .linalg import (
    HERMITICITY_TOL,
    as_matrix,
    dagger,
    frob,
    herm_eigen,
    require_hermitian,
)

COMPLETENESS_TOL = 1e-9

MultiIndex = tuple[int, ...]


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive-semidefinite, unit-trace matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = require_hermitian(self.matrix, what="density matrix")
        object.__setattr__(self, "matrix", m)
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -1e-10:
            raise ValidationError(f"density matrix has negative eigenvalue {evals.min():.3e}")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > 1e-10:
            raise ValidationError(f"density matrix trace {tr} != 1")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @staticmethod
    def maximally_mixed(dim: int) -> "DensityMatrix":
        return DensityMatrix(np.eye(dim) / dim)

    @staticmethod
    def pure(vec) -> "DensityMatrix":
        v = np.asarray(vec, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return DensityMatrix(np.outer(v, v.conj()))

    def eigensystem(self):
        """Eigenvalues (ascending) and eigenvector columns."""
        eig = herm_eigen(self.matrix)
        return eig.eigenvalues, eig.eigenvectors

    def rank(self, tol: float = 1e-10) -> int:
        return int(np.sum(np.linalg.eigvalsh(self.matrix) > tol))


@dataclass(frozen=True)
class QuantumOperation:
    """One measurement-outcome branch, given by a finite Kraus list."""

    kraus: tuple[np.ndarray, ...]
    label: object = None

    def __post_init__(self):
        ks = tuple(as_matrix(k) for k in self.kraus)
        if not ks:
            raise ValidationError("quantum operation needs at least one Kraus operator")
        d = ks[0].shape[0]
        for k in ks:
            if k.shape != (d, d):
                raise ShapeError("all Kraus operators must be square and same dimension")
        object.__setattr__(self, "kraus", ks)

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]


def apply(op: QuantumOperation, x: np.ndarray) -> np.ndarray:
    """A(x) = sum_m K_m x K_m^dag."""
    x = as_matrix(x)
    if x.shape != (op.dim, op.dim):
        raise ShapeError(f"operand shape {x.shape} does not match operation dim {op.dim}")
    out = np.zeros_like(x)
    for k in op.kraus:
        out += k @ x @ dagger(k)
    return out


def apply_adjoint(op: QuantumOperation, x: np.ndarray) -> np.ndarray:
    """Adjoint map A^dag(x) = sum_m K_m^dag x K_m."""
    x = as_matrix(x)
    if x.shape != (op.dim, op.dim):
        raise ShapeError(f"operand shape {x.shape} does not match operation dim {op.dim}")
    out = np.zeros_like(x)
    for k in op.kraus:
        out += dagger(k) @ x @ k
    return out


@dataclass(frozen=True)
class CoarseGraining:
    """A complete set of quantum operations describing one measurement."""

    ops: tuple[QuantumOperation, ...]

    def __post_init__(self):
        ops = tuple(self.ops)
        if not ops:
            raise ValidationError("coarse-graining needs at least one operation")
        d = ops[0].dim
        for op in ops:
            if op.dim != d:
                raise ShapeError("all operations must share one dimension")
        total = np.zeros((d, d), dtype=complex)
        for op in ops:
            for k in op.kraus:
                total += dagger(k) @ k
        if frob(total - np.eye(d)) > COMPLETENESS_TOL:
            raise ValidationError(
                f"Kraus completeness violated: ||sum K^dag K - I||_F = {frob(total - np.eye(d)):.3e}"
            )
        object.__setattr__(self, "ops", ops)

    @property
    def dim(self) -> int:
        return self.ops[0].dim

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)


def trivial_cg(dim: int) -> CoarseGraining:
    """Single-outcome coarse-graining {I (.) I}: one macrostate of volume dim."""
    return CoarseGraining((QuantumOperation((np.eye(dim),), label="all"),))


def projective_cg(observable: np.ndarray, degeneracy_tol: float | None = None) -> CoarseGraining:
    """Coarse-graining defined by a Hermitian observable.

    One projector per distinct eigenvalue cluster; eigenvalues closer than
    ``degeneracy_tol`` (default 1e-8 times the spectral range) are merged.
    """
    observable = require_hermitian(observable, what="observable")
    eig = herm_eigen(observable)
    w, v = eig.eigenvalues, eig.eigenvectors
    spread = float(w[-1] - w[0])
    if degeneracy_tol is None:
        degeneracy_tol = 1e-8 * spread if spread > 0 else 0.0
    ops = []
    start = 0
    n = len(w)
    for i in range(1, n + 1):
        if i == n or w[i] - w[i - 1] > degeneracy_tol:
            block = v[:, start:i]
            proj = block @ dagger(block)
            ops.append(QuantumOperation((proj,), label=float(np.mean(w[start:i]))))
            start = i
    return CoarseGraining(tuple(ops))


def rank1_basis_cg(basis: np.ndarray) -> CoarseGraining:
    """Rank-1 projective coarse-graining onto the columns of a unitary matrix."""
    basis = as_matrix(basis)
    ops = []
    for i in range(basis.shape[1]):
        v = basis[:, i]
        ops.append(QuantumOperation((np.outer(v, v.conj()),), label=i))
    return CoarseGraining(tuple(ops))


@dataclass(frozen=True)
class CoarseGrainingVector:
    """Ordered sequence of coarse-grainings applied one after another."""

    sequence: tuple[CoarseGraining, ...]

    def __post_init__(self):
        seq = tuple(self.sequence)
        if not seq:
            raise ValidationError("coarse-graining vector must be non-empty")
        d = seq[0].dim
        for cg in seq:
            if cg.dim != d:
                raise ShapeError("all coarse-grainings must share one dimension")
        object.__setattr__(self, "sequence", seq)

    @property
    def dim(self) -> int:
        return self.sequence[0].dim

    def __len__(self) -> int:
        return len(self.sequence)

    @property
    def outcome_shape(self) -> tuple[int, ...]:
        return tuple(len(cg) for cg in self.sequence)

    def indices(self):
        """All outcome multi-indices, lexicographic, first coarse-graining slowest."""
        return itertools.product(*(range(len(cg)) for cg in self.sequence))

    def _check_index(self, index: MultiIndex) -> MultiIndex:
        index = tuple(index)
        if len(index) != len(self.sequence):
            raise ValidationError(f"index length {len(index)} != sequence length {len(self.sequence)}")
        for k, (i, cg) in enumerate(zip(index, self.sequence)):
            if not 0 <= i < len(cg):
                raise ValidationError(f"index {i} out of range for coarse-graining {k}")
        return index

    @staticmethod
    def single(cg: CoarseGraining) -> "CoarseGrainingVector":
        return CoarseGrainingVector((cg,))


def compose(v: CoarseGrainingVector, index: MultiIndex) -> QuantumOperation:
    """Composed operation A_i = A_{i_n} ... A_{i_1} with product Kraus list."""
    index = v._check_index(index)
    kraus = [np.eye(v.dim, dtype=complex)]
    for i, cg in zip(index, v.sequence):
        kraus = [k2 @ k1 for k1 in kraus for k2 in cg.ops[i].kraus]
    return QuantumOperation(tuple(kraus), label=index)


@dataclass(frozen=True)
class PovmElement:
    """POVM element Pi_i = sum_m K_im^dag K_im of one outcome multi-index."""

    index: MultiIndex
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(self.index))
        m = require_hermitian(self.matrix, what="POVM element")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValidationError("POVM element is not positive semidefinite")
        object.__setattr__(self, "matrix", m)


def povm_element(v: CoarseGrainingVector, index: MultiIndex) -> PovmElement:
    """POVM element of a composed outcome, via the adjoint-map chain."""
    index = v._check_index(index)
    pi = np.eye(v.dim, dtype=complex)
    for i, cg in reversed(list(zip(index, v.sequence))):
        pi = apply_adjoint(cg.ops[i], pi)
    # symmetrize round-off before the hermiticity gate
    pi = (pi + dagger(pi)) / 2
    return PovmElement(index=index, matrix=pi)


def povm_elements(v: CoarseGrainingVector) -> list[PovmElement]:
    return [povm_element(v, i) for i in v.indices()]


@dataclass(frozen=True)
class OutcomeTable:
    """Per-outcome (probability, volume) pairs for a coarse-graining vector."""

    entries: tuple[tuple[MultiIndex, float, float], ...]
    dim: int

    def __post_init__(self):
        entries = tuple((tuple(i), float(p), float(vv)) for i, p, vv in self.entries)
        p_sum = sum(p for _, p, _ in entries)
        v_sum = sum(vv for _, _, vv in entries)
        for idx, p, vv in entries:
            if p < -1e-12 or vv < -1e-12:
                raise ValidationError(f"negative entry at {idx}: p={p:.3e}, V={vv:.3e}")
        if abs(p_sum - 1.0) > 1e-9:
            raise ValidationError(f"probabilities sum to {p_sum}, expected 1")
        if abs(v_sum - self.dim) > 1e-9:
            raise ValidationError(f"volumes sum to {v_sum}, expected dim={self.dim}")
        object.__setattr__(self, "entries", entries)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p, _ in self.entries])

    @property
    def volumes(self) -> np.ndarray:
        return np.array([vv for _, _, vv in self.entries])

    def __len__(self) -> int:
        return len(self.entries)


def outcome_table(v: CoarseGrainingVector, rho: DensityMatrix) -> OutcomeTable:
    """All (p_i, V_i): p_i = tr[A_i(rho)], V_i = tr[A_i(I)].

    Entries are produced in lexicographic index order (first coarse-graining
    slowest); shared branch prefixes are evaluated once.
    """
    if rho.dim != v.dim:
        raise ShapeError(f"state dim {rho.dim} != coarse-graining dim {v.dim}")
    entries = []

    def descend(level: int, prefix: MultiIndex, x_rho: np.ndarray, x_id: np.ndarray):
        if level == len(v.sequence):
            p = float(np.trace(x_rho).real)
            vol = float(np.trace(x_id).real)
            # clamp eigen-routine round-off
            entries.append((prefix, max(p, 0.0) if p > -1e-12 else p, max(vol, 0.0) if vol > -1e-12 else vol))
            return
        cg = v.sequence[level]
        for i, op in enumerate(cg.ops):
            descend(level + 1, prefix + (i,), apply(op, x_rho), apply(op, x_id))

    descend(0, (), rho.matrix, np.eye(v.dim, dtype=complex))
    return OutcomeTable(entries=tuple(entries), dim=v.dim)


def is_finer(
    fine: CoarseGrainingVector,
    coarse: CoarseGrainingVector,
    assignment: dict,
    tol: float = 1e-9,
) -> bool:
    """Check the refinement relation under an explicit index assignment.

    ``assignment`` maps every fine multi-index to one coarse multi-index;
    the relation holds when each coarse POVM element equals the sum of the
    fine POVM elements assigned to it, within ``tol`` Frobenius.
    """
    fine_indices = list(fine.indices())
    if set(assignment.keys()) != set(fine_indices):
        raise ValidationError("assignment must cover every fine outcome index exactly once")
    coarse_indices = list(coarse.indices())
    coarse_set = set(coarse_indices)
    for j in assignment.values():
        if tuple(j) not in coarse_set:
            raise ValidationError(f"assignment target {j} is not a coarse outcome index")
    sums = {j: np.zeros((fine.dim, fine.dim), dtype=complex) for j in coarse_indices}
    for i in fine_indices:
        sums[tuple(assignment[i])] += povm_element(fine, i).matrix
    for j in coarse_indices:
        if frob(sums[j] - povm_element(coarse, j).matrix) > tol:
            return False
    return True


REFINEMENT_SEARCH_CAP = 12


def find_refinement(
    fine: CoarseGrainingVector,
    coarse: CoarseGrainingVector,
    tol: float = 1e-9,
) -> dict | None:
    """Search for an assignment making ``is_finer`` true; None if none exists.

    Exhaustive with PSD pruning; capped at 12 fine outcomes.
    """
    fine_indices = list(fine.indices())
    if len(fine_indices) > REFINEMENT_SEARCH_CAP:
        raise CapacityError(
            f"{len(fine_indices)} fine outcomes exceed the exhaustive search cap "
            f"({REFINEMENT_SEARCH_CAP})"
        )
    coarse_indices = list(coarse.indices())
    fine_povm = [povm_element(fine, i).matrix for i in fine_indices]
    coarse_povm = [povm_element(coarse, j).matrix for j in coarse_indices]
    residuals = [m.copy() for m in coarse_povm]

    assignment: dict = {}

    def fits(residual: np.ndarray, candidate: np.ndarray) -> bool:
        # remaining POVM sums are PSD, so a valid branch keeps residual - candidate PSD
        gap = residual - candidate
        return bool(np.linalg.eigvalsh((gap + dagger(gap)) / 2).min() >= -tol)

    def search(k: int) -> bool:
        if k == len(fine_indices):
            return all(frob(r) <= tol * max(1.0, len(fine_indices)) for r in residuals)
        for j, _ in enumerate(coarse_indices):
            if fits(residuals[j], fine_povm[k]):
                residuals[j] -= fine_povm[k]
                assignment[fine_indices[k]] = coarse_indices[j]
                if search(k + 1):
                    return True
                residuals[j] += fine_povm[k]
                del assignment[fine_indices[k]]
        return False

    if search(0):
        if is_finer(fine, coarse, assignment, tol):
            return dict(assignment)
    return None


# ---------------------------------------------------------------------------
# serialization (schema consumed by the CLI; see README)
# ---------------------------------------------------------------------------


def matrix_to_lists(m: np.ndarray) -> list:
    """Matrix as nested row lists of [re, im] pairs."""
    m = as_matrix(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_lists(rows: list) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def cg_to_dict(cg: CoarseGraining) -> dict:
    return {
        "dim": cg.dim,
        "ops": [
            {"label": op.label, "kraus": [matrix_to_lists(k) for k in op.kraus]}
            for op in cg.ops
        ],
    }


def cg_from_dict(doc: dict) -> CoarseGraining:
    try:
        dim = int(doc["dim"])
        ops = tuple(
            QuantumOperation(
                tuple(matrix_from_lists(k) for k in op["kraus"]),
                label=op.get("label"),
            )
            for op in doc["ops"]
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed coarse-graining document: {exc}") from exc
    cg = CoarseGraining(ops)
    if cg.dim != dim:
        raise ValidationError(f"declared dim {dim} != matrix dim {cg.dim}")
    return cg


def density_to_dict(rho: DensityMatrix) -> dict:
    return {"dim": rho.dim, "matrix": matrix_to_lists(rho.matrix)}


def density_from_dict(doc: dict) -> DensityMatrix:
    try:
        dim = int(doc["dim"])
        m = matrix_from_lists(doc["matrix"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed density-matrix document: {exc}") from exc
    if m.shape != (dim, dim):
        raise ValidationError(f"declared dim {dim} != matrix shape {m.shape}")
    return DensityMatrix(m)
