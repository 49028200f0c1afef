"""Probe-mediated (indirect) measurements and the coarse-grainings they
induce on the system.

The protocol couples the system to a probe with a unitary, measures the
probe projectively, and traces the probe out.  The induced coarse-graining
on the system has Kraus operators

    K_{i m m'} = sqrt(sigma_m) <m'| (I (x) P_i) U |m>,

with |m> running over the probe-state eigenbasis and <m'| over a fixed
orthonormal probe basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coarsegrain import (
    CoarseGraining,
    CoarseGrainingVector,
    DensityMatrix,
    QuantumOperation,
    outcome_table,
    rank1_basis_cg,
)
from .entropy import EntropyValue, observational_from_table
from .errors import CapacityError, ShapeError, ValidationError
from .linalg import dagger, frob, herm_eigen

UNITARITY_TOL = 1e-9


def _phase_fixed(vectors: np.ndarray) -> np.ndarray:
    """Fix each column's overall phase so its largest component is real positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        k = int(np.argmax(np.abs(col)))
        ph = col[k] / abs(col[k]) if abs(col[k]) > 0 else 1.0
        out[:, j] = col / ph
    return out


@dataclass(frozen=True)
class ProbeProtocol:
    """Configuration of one indirect measurement."""

    system_dim: int
    probe_dim: int
    probe_state: DensityMatrix
    interaction: np.ndarray
    probe_measurement: CoarseGraining

    def __post_init__(self):
        n, m = self.system_dim, self.probe_dim
        u = np.asarray(self.interaction, dtype=complex)
        if u.shape != (n * m, n * m):
            raise ShapeError(f"interaction must be {(n * m, n * m)}, got {u.shape}")
        if frob(dagger(u) @ u - np.eye(n * m)) > UNITARITY_TOL:
            raise ValidationError("interaction is not unitary within tolerance")
        if self.probe_state.dim != m:
            raise ShapeError("probe state dimension mismatch")
        if self.probe_measurement.dim != m:
            raise ShapeError("probe measurement dimension mismatch")
        for op in self.probe_measurement.ops:
            if len(op.kraus) != 1:
                raise ValidationError("probe measurement must be projective (single Kraus)")
            p = op.kraus[0]
            if frob(p @ p - p) > 1e-9 or frob(p - dagger(p)) > 1e-9:
                raise ValidationError("probe measurement operators must be projectors")
        object.__setattr__(self, "interaction", u)


def induced_cg(protocol: ProbeProtocol) -> CoarseGraining:
    """Coarse-graining induced on the system by the probe protocol."""
    n, m = protocol.system_dim, protocol.probe_dim
    sig = herm_eigen(protocol.probe_state.matrix)
    # U reshaped to [s_out, a_out, s_in, a_in]
    u4 = protocol.interaction.reshape(n, m, n, m)
    ops = []
    for op in protocol.probe_measurement.ops:
        p_i = op.kraus[0]
        piu = np.einsum("ab,sbtc->satc", p_i, u4)
        kraus = []
        for k in range(m):
            w = sig.eigenvalues[k]
            if w < 1e-15:
                continue
            # <.|(I x P_i) U |., phi_k>, all probe output rows at once
            block = np.einsum("satc,c->sat", piu, sig.eigenvectors[:, k])
            for a in range(m):
                kraus.append(np.sqrt(w) * block[:, a, :])
        ops.append(QuantumOperation(tuple(kraus), label=op.label))
    return CoarseGraining(tuple(ops))


def swap_unitary(n: int) -> np.ndarray:
    """Permutation exchanging two n-dimensional tensor factors."""
    if n < 1:
        raise ValidationError("dimension must be >= 1")
    u = np.zeros((n * n, n * n), dtype=complex)
    for k in range(n):
        for m in range(n):
            u[m * n + k, k * n + m] = 1.0
    return u


def full_swap_protocol(
    rho: DensityMatrix, probe_state: DensityMatrix, probe_basis: np.ndarray | None = None
) -> ProbeProtocol:
    """Swap-gate protocol on an equal-size probe, measured in ``probe_basis``
    (default: the eigenbasis of ``rho``, which saturates the entropy bound)."""
    n = rho.dim
    if probe_state.dim != n:
        raise ShapeError("full swap needs probe_dim == system_dim")
    if probe_basis is None:
        probe_basis = _phase_fixed(herm_eigen(rho.matrix).eigenvectors)
    return ProbeProtocol(
        system_dim=n,
        probe_dim=n,
        probe_state=probe_state,
        interaction=swap_unitary(n),
        probe_measurement=rank1_basis_cg(probe_basis),
    )


def _diagonalizer(m: np.ndarray, descending: bool) -> tuple[np.ndarray, np.ndarray]:
    """Unitary D with D m D^dag diagonal, and the diagonal eigenvalues.

    Already-diagonal input is left untouched so that basis-state probe
    preparations keep their level index.
    """
    if frob(m - np.diag(np.diag(m))) <= 1e-12:
        return np.eye(m.shape[0], dtype=complex), np.diag(m).real.copy()
    eig = herm_eigen(m)
    order = np.argsort(-eig.eigenvalues, kind="stable") if descending else np.arange(len(eig.eigenvalues))
    v = _phase_fixed(eig.eigenvectors[:, order])
    return dagger(v), eig.eigenvalues[order]


def partial_swap_unitary(n: int, m: int) -> np.ndarray:
    """Swap the probe with the first m levels of an n-dimensional system."""
    u = np.zeros((n * m, n * m), dtype=complex)
    for k in range(n):
        for a in range(m):
            if k < m:
                u[a * m + k, k * m + a] = 1.0
            else:
                u[k * m + a, k * m + a] = 1.0
    return u


def partial_swap_protocol(rho: DensityMatrix, sigma: DensityMatrix) -> ProbeProtocol:
    """Diagonalize system and probe, then swap the probe into the leading
    (descending-eigenvalue) levels of the system.

    The probe is measured in its diagonal basis.
    """
    n, m = rho.dim, sigma.dim
    if m > n:
        raise CapacityError(f"probe dim {m} exceeds system dim {n}")
    d_rho, _ = _diagonalizer(rho.matrix, descending=True)
    d_sig, _ = _diagonalizer(sigma.matrix, descending=False)
    u = partial_swap_unitary(n, m) @ np.kron(d_rho, d_sig)
    return ProbeProtocol(
        system_dim=n,
        probe_dim=m,
        probe_state=sigma,
        interaction=u,
        probe_measurement=rank1_basis_cg(np.eye(m)),
    )


def protocol_entropy(protocol: ProbeProtocol, rho: DensityMatrix) -> EntropyValue:
    """Observational entropy of the induced coarse-graining on the system."""
    v = CoarseGrainingVector.single(induced_cg(protocol))
    return observational_from_table(outcome_table(v, rho))


def optimal_probe_entropy(rho: DensityMatrix, probe_dim: int) -> EntropyValue:
    """Partial swap onto a basis-state probe one level above the state's rank.

    Requires probe_dim >= rank(rho) + 1; the returned entropy equals the von
    Neumann entropy of ``rho``.
    """
    r = rho.rank(1e-10)
    if probe_dim < r + 1:
        raise ValidationError(f"probe_dim {probe_dim} < rank + 1 = {r + 1}")
    e = np.zeros(probe_dim)
    e[r] = 1.0
    sigma = DensityMatrix(np.diag(e))
    return protocol_entropy(partial_swap_protocol(rho, sigma), rho)
