"""Quantum-state inference from entropy-saturating measurement statistics.

When the observational entropy of a coarse-graining equals the von Neumann
entropy, the state's eigenprojectors are sums of POVM elements.  The
inference groups POVM elements by operator overlap into projectors, reads
each eigenvalue off the grouped outcome probabilities, and validates the
result against the measured data.  It either returns a physical state or
raises; it never returns a guess.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coarsegrain import CoarseGrainingVector, DensityMatrix, PovmElement, outcome_table
from .entropy import observational, von_neumann
from .errors import InconsistencyError, SaturationError, ValidationError
from .linalg import frob

PROJECTOR_TOL = 1e-7


@dataclass(frozen=True)
class InferenceInput:
    """A complete POVM with measured outcome probabilities.

    ``tol_overlap`` is the relative threshold deciding "nonzero" operator
    overlap when grouping elements; ``tol_probability`` gates how well the
    reconstructed state must reproduce the measured probabilities.
    Probabilities may be empirical, but finite-sample callers must widen the
    tolerances themselves; no statistical handling is applied here.
    """

    povm: tuple[PovmElement, ...]
    probabilities: tuple[float, ...]
    tol_overlap: float = 1e-8
    tol_probability: float = 1e-7

    def __post_init__(self):
        povm = tuple(self.povm)
        probs = tuple(float(p) for p in self.probabilities)
        if len(povm) != len(probs):
            raise ValidationError("probabilities must align with POVM elements")
        if not povm:
            raise ValidationError("empty POVM")
        if self.tol_overlap <= 0 or self.tol_probability <= 0:
            raise ValidationError("tolerances must be positive")
        indices = [e.index for e in povm]
        if len(set(indices)) != len(indices):
            raise ValidationError("POVM outcome indices must be unique")
        d = povm[0].matrix.shape[0]
        total = np.zeros((d, d), dtype=complex)
        for e in povm:
            if e.matrix.shape != (d, d):
                raise ValidationError("POVM elements must share one dimension")
            total += e.matrix
        if frob(total - np.eye(d)) > 1e-8:
            raise ValidationError("POVM does not sum to the identity within 1e-8")
        s = sum(probs)
        if abs(s - 1.0) > 1e-8:
            raise ValidationError(f"probabilities sum to {s}, expected 1 within 1e-8")
        if min(probs) < -1e-12:
            raise ValidationError("negative probability")
        object.__setattr__(self, "povm", povm)
        object.__setattr__(self, "probabilities", probs)

    @property
    def dim(self) -> int:
        return self.povm[0].matrix.shape[0]


@dataclass(frozen=True)
class Eigenspace:
    projector: np.ndarray
    eigenvalue: float
    index_set: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class InferenceResult:
    rho: DensityMatrix
    eigenspaces: tuple[Eigenspace, ...]

    def __post_init__(self):
        spaces = tuple(self.eigenspaces)
        d = self.rho.dim
        total = np.zeros((d, d), dtype=complex)
        weight = 0.0
        for a, ea in enumerate(spaces):
            total += ea.projector
            weight += ea.eigenvalue * float(np.trace(ea.projector).real)
            for eb in spaces[a + 1:]:
                if frob(ea.projector @ eb.projector) > 1e-8:
                    raise ValidationError("eigenspace projectors are not mutually orthogonal")
        if frob(total - np.eye(d)) > 1e-8:
            raise ValidationError("eigenspace projectors do not resolve the identity")
        if abs(weight - 1.0) > 1e-8:
            raise ValidationError(f"eigenvalue weights sum to {weight}, expected 1")
        object.__setattr__(self, "eigenspaces", spaces)


def infer_state(inp: InferenceInput) -> InferenceResult:
    """Reconstruct the state from a saturating POVM and its probabilities.

    Grows each eigenprojector by absorbing every unused POVM element with
    nonzero operator overlap (iterating indices in ascending lexicographic
    order), checks projectorhood, and assigns the eigenvalue
    (sum of grouped probabilities) / tr(projector).

    Raises SaturationError when a grouped sum fails to be a projector and
    InconsistencyError when the assembled state cannot reproduce the
    measured probabilities.
    """
    order = sorted(range(len(inp.povm)), key=lambda k: inp.povm[k].index)
    elements = [inp.povm[k] for k in order]
    probs = [inp.probabilities[k] for k in order]
    d = inp.dim

    used = [False] * len(elements)
    norms = [frob(e.matrix) for e in elements]
    eigenspaces: list[Eigenspace] = []
    rho_acc = np.zeros((d, d), dtype=complex)

    for start in range(len(elements)):
        if used[start]:
            continue
        proj = elements[start].matrix.copy()
        members = [start]
        used[start] = True
        grew = True
        while grew:
            grew = False
            p_norm = frob(proj)
            for k in range(len(elements)):
                if used[k]:
                    continue
                if frob(elements[k].matrix @ proj) > inp.tol_overlap * norms[k] * p_norm:
                    proj = proj + elements[k].matrix
                    members.append(k)
                    used[k] = True
                    grew = True
        residual = frob(proj @ proj - proj)
        if residual >= PROJECTOR_TOL:
            raise SaturationError(
                f"grouped POVM elements {tuple(elements[k].index for k in members)} are not a "
                f"projector (||P^2 - P||_F = {residual:.3e}); the coarse-graining does not "
                f"saturate the entropy bound for this state"
            )
        trace = float(np.trace(proj).real)
        lam = sum(probs[k] for k in members) / trace
        eigenspaces.append(
            Eigenspace(
                projector=proj,
                eigenvalue=lam,
                index_set=tuple(elements[k].index for k in sorted(members)),
            )
        )
        rho_acc += lam * proj

    reconstructed = np.array([float(np.trace(e.matrix @ rho_acc).real) for e in elements])
    mismatch = float(np.max(np.abs(reconstructed - np.array(probs))))
    if mismatch > inp.tol_probability:
        raise InconsistencyError(
            f"inferred state misses the measured probabilities by {mismatch:.3e} "
            f"(tolerance {inp.tol_probability:g}); the data is inconsistent with a "
            f"saturating coarse-graining"
        )
    trace = float(np.trace(rho_acc).real)
    rho = DensityMatrix((rho_acc + rho_acc.conj().T) / (2 * trace))
    return InferenceResult(rho=rho, eigenspaces=tuple(eigenspaces))


def check_saturation(v: CoarseGrainingVector, rho: DensityMatrix, tol: float = 1e-9) -> bool:
    """True iff the observational entropy matches the von Neumann entropy."""
    return abs(observational(v, rho).nats - von_neumann(rho).nats) < tol
