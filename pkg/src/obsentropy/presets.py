"""Named matrix presets and the parametrized qubit state family.

``M49`` is the default two-level measurement observable diag(0, 2); ``H50``
is a Hamiltonian commuting with it; ``H51`` is a non-commuting one.  These
tokens are accepted anywhere the CLI expects a matrix.
"""

from __future__ import annotations

import math

import numpy as np

from .coarsegrain import DensityMatrix
from .errors import ValidationError

M49 = np.array([[0.0, 0.0], [0.0, 2.0]], dtype=complex)
H50 = np.array([[0.0, 0.0], [0.0, 2.0]], dtype=complex)
H51 = np.array([[0.0, 1.0 + 1.0j], [1.0 - 1.0j, 2.0]], dtype=complex)

MATRIX_PRESETS = {"M49": M49, "H50": H50, "H51": H51}


def matrix_preset(name: str) -> np.ndarray:
    try:
        return MATRIX_PRESETS[name].copy()
    except KeyError:
        raise ValidationError(
            f"unknown matrix preset {name!r}; known presets: {sorted(MATRIX_PRESETS)}"
        ) from None


def qubit_state(phi: float, theta: float, alpha: float) -> DensityMatrix:
    """Qubit family U diag(cos^2 alpha, sin^2 alpha) U^dag with
    U = diag(e^{i phi}, e^{-i phi}) . rotation(theta)."""
    rot = np.array(
        [[math.cos(theta), math.sin(theta)], [-math.sin(theta), math.cos(theta)]],
        dtype=complex,
    )
    u = np.diag([np.exp(1j * phi), np.exp(-1j * phi)]) @ rot
    diag = np.diag([math.cos(alpha) ** 2, math.sin(alpha) ** 2]).astype(complex)
    return DensityMatrix(u @ diag @ u.conj().T)
