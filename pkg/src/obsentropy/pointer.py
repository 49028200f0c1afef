"""Position-pointer measurement schemes.

A Gaussian-localized pointer is translated by exp(-i kappa M (x) p_hat),
correlating its position with the measured observable M.  Four schemes are
simulated: a single measurement (closed-form Gaussian mixtures), repeated
measurements with N fresh pointers (an N-dimensional outcome grid), repeated
contacts of one pointer measured once at the end (a 1-D grid fed by an
exponential path sum), and the fixed-total-time continuum limit generated by
exp(-i (H (x) I + R M (x) p_hat) T), evaluated in the pointer momentum
representation.

All heavy evaluations are data-parallel over fixed grid chunks with
chunk-ordered reductions, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coarsegrain import CoarseGrainingVector, DensityMatrix, projective_cg
from .entropy import EntropyValue, GridFunction, observational, observational_grid, trapezoid_weights
from .errors import CapacityError, ValidationError
from .linalg import dagger, herm_eigen, herm_expm, require_hermitian
from .parallel import parallel_map

PATH_PRUNE_TOL = 1e-14
RC_COST_BUDGET = 6.0e9       # path count x grid points
RM_STREAM_BUDGET = 2.2e10    # total grid points of the outcome hypercube
RM_MATERIALIZE_BUDGET = 1.5e7  # grid points held in memory per array


@dataclass(frozen=True)
class PointerConfig:
    """Gaussian pointer: position spread, coupling, grid step and margin."""

    omega: float = 1.0
    kappa: float = 1.0
    dx: float = 0.1
    buffer: float = 4.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValidationError("omega must be > 0")
        if not self.dx > 0:
            raise ValidationError("dx must be > 0")
        if self.buffer < 0:
            raise ValidationError("buffer must be >= 0")


@dataclass(frozen=True)
class SchemeConfig:
    """Measurement observable, free Hamiltonian, step count and pointer."""

    m_op: np.ndarray
    h_op: np.ndarray
    dt: float = 1.0
    n: int = 1
    pointer: PointerConfig = PointerConfig()

    def __post_init__(self):
        m = require_hermitian(self.m_op, what="measurement operator")
        h = require_hermitian(self.h_op, what="Hamiltonian")
        if m.shape != h.shape:
            raise ValidationError("measurement operator and Hamiltonian dims differ")
        if self.dt < 0:
            raise ValidationError("dt must be >= 0")
        if int(self.n) < 1:
            raise ValidationError("n must be >= 1")
        object.__setattr__(self, "m_op", m)
        object.__setattr__(self, "h_op", h)
        object.__setattr__(self, "n", int(self.n))

    @property
    def dim(self) -> int:
        return self.m_op.shape[0]


@dataclass(frozen=True)
class LimitConfig:
    """Fixed-total-time continuum limit: joint generator H + R k M."""

    m_op: np.ndarray
    h_op: np.ndarray
    total_time: float
    rate_ratio: float
    pointer: PointerConfig = PointerConfig()

    def __post_init__(self):
        m = require_hermitian(self.m_op, what="measurement operator")
        h = require_hermitian(self.h_op, what="Hamiltonian")
        if m.shape != h.shape:
            raise ValidationError("measurement operator and Hamiltonian dims differ")
        object.__setattr__(self, "m_op", m)
        object.__setattr__(self, "h_op", h)

    @property
    def dim(self) -> int:
        return self.m_op.shape[0]


def gaussian(x, omega: float):
    """Normal density with standard deviation omega."""
    x = np.asarray(x, dtype=float)
    return np.exp(-(x * x) / (2 * omega * omega)) / math.sqrt(2 * math.pi * omega * omega)


def sqrt_gaussian(x, omega: float):
    """Amplitude sqrt(g_omega(x))."""
    x = np.asarray(x, dtype=float)
    return np.exp(-(x * x) / (4 * omega * omega)) / (2 * math.pi * omega * omega) ** 0.25


def normalization_tolerance(buffer: float, naxes: int = 1) -> float:
    """Grid-truncation allowance for the integral gates.

    Each truncated axis side loses at most erfc(buffer/sqrt(2))/2 of a unit
    Gaussian's mass; the default 4-sigma margin therefore cannot meet 1e-6.
    """
    return max(1e-6, 4.0 * naxes * math.erfc(buffer / math.sqrt(2.0)))


def _measurement_eigenbasis(m_op: np.ndarray):
    eig = herm_eigen(m_op)
    return eig.eigenvalues, eig.eigenvectors


def make_grid(cfg: SchemeConfig | LimitConfig, scheme: str = "sm") -> np.ndarray:
    """Uniform position grid covering every Gaussian peak plus the buffer.

    Peaks sit at kappa * mu for single/repeated measurements (one axis per
    pointer), at kappa * N * mu for repeated contacts, and at R * T * mu for
    the continuum limit.
    """
    mu, _ = _measurement_eigenbasis(cfg.m_op)
    ptr = cfg.pointer
    if isinstance(cfg, LimitConfig):
        reach = cfg.rate_ratio * cfg.total_time
    elif scheme == "rc":
        reach = ptr.kappa * cfg.n
    else:
        reach = ptr.kappa
    peaks = np.array([reach * mu[0], reach * mu[-1]])
    lo = peaks.min() - ptr.buffer * ptr.omega
    hi = peaks.max() + ptr.buffer * ptr.omega
    if hi - lo <= 0:
        raise ValidationError("degenerate spectral range with zero buffer")
    steps = int(math.ceil((hi - lo) / ptr.dx - 1e-9))
    return lo + np.arange(steps + 1) * ptr.dx


def _state_in_basis(rho: DensityMatrix, basis: np.ndarray) -> np.ndarray:
    return dagger(basis) @ rho.matrix @ basis


def _check_norms(p_int: float, v_int: float, dim: int, tol: float, where: str):
    if abs(p_int - 1.0) > tol or abs(v_int - dim) > tol * dim:
        raise ValidationError(
            f"{where}: integrals p={p_int:.8f}, V={v_int:.8f} miss (1, {dim}) "
            f"beyond {tol:.2e}; increase the grid buffer"
        )


# ---------------------------------------------------------------------------
# single measurement (closed-form Gaussian mixtures)
# ---------------------------------------------------------------------------


def single_measurement(cfg: SchemeConfig, rho: DensityMatrix) -> tuple[GridFunction, GridFunction]:
    """p(x) = sum_m rho_mm g(x - kappa mu_m), V(x) = sum_m g(x - kappa mu_m)."""
    if cfg.n != 1:
        raise ValidationError("single measurement requires n == 1")
    if rho.dim != cfg.dim:
        raise ValidationError("state dimension does not match the observable")
    mu, basis = _measurement_eigenbasis(cfg.m_op)
    weights = np.diag(_state_in_basis(rho, basis)).real
    axis = make_grid(cfg, "sm")
    ptr = cfg.pointer
    g = gaussian(axis[:, None] - ptr.kappa * mu[None, :], ptr.omega)
    p = g @ weights
    v = g.sum(axis=1)
    w = trapezoid_weights(axis)
    _check_norms(float(w @ p), float(w @ v), cfg.dim,
                 normalization_tolerance(ptr.buffer), "single measurement")
    return GridFunction((axis,), p), GridFunction((axis,), v)


# ---------------------------------------------------------------------------
# repeated contacts (1-D grid, exponential path sum)
# ---------------------------------------------------------------------------


def _rc_path_table(u_f: np.ndarray, mu: np.ndarray, kappa: float, n: int):
    """Enumerate system paths (m_0, ..., m_N).

    Each path carries the free-evolution amplitude product and the
    accumulated pointer shift kappa * (mu_{m_0} + ... + mu_{m_{N-1}});
    paths with |amplitude| < 1e-14 are pruned as they arise.
    """
    d = len(mu)
    first = np.arange(d)
    last = np.arange(d)
    amp = np.ones(d, dtype=complex)
    shift = np.zeros(d)
    for _ in range(n):
        shift = np.repeat(shift + kappa * mu[last], d)
        amp = (u_f[:, last].T * amp[:, None]).reshape(-1)
        first = np.repeat(first, d)
        last = np.tile(np.arange(d), len(last))
        keep = np.abs(amp) > PATH_PRUNE_TOL
        if not keep.all():
            first, last, amp, shift = first[keep], last[keep], amp[keep], shift[keep]
    return first, last, amp, shift


def _rc_chunk(item, payload):
    start, stop = item
    axis, shift, amp, groups, rho_eb, omega, dim = payload
    x = axis[start:stop]
    g = sqrt_gaussian(x[:, None] - shift[None, :], omega)
    k = np.zeros((len(x), dim, dim), dtype=complex)
    for (b, a), sl in groups:
        k[:, b, a] = g[:, sl] @ amp[sl]
    p = np.einsum("cba,aA,cbA->c", k, rho_eb, k.conj()).real
    v = (k.real ** 2 + k.imag ** 2).sum(axis=(1, 2))
    return p, v


RC_CHUNK = 64


def rc_cost_estimate(cfg: SchemeConfig) -> float:
    """Leading-order work: grid points x N^2 x dim^N."""
    mu, _ = _measurement_eigenbasis(cfg.m_op)
    ptr = cfg.pointer
    span = abs(ptr.kappa) * cfg.n * (mu[-1] - mu[0]) + 2 * ptr.buffer * ptr.omega
    return (span / ptr.dx) * cfg.n ** 2 * cfg.dim ** cfg.n


def repeated_contacts(
    cfg: SchemeConfig, rho: DensityMatrix, workers: int | None = None
) -> tuple[GridFunction, GridFunction]:
    """One pointer touched n times, measured once at the end."""
    if rho.dim != cfg.dim:
        raise ValidationError("state dimension does not match the observable")
    mu, basis = _measurement_eigenbasis(cfg.m_op)
    ptr = cfg.pointer
    axis = make_grid(cfg, "rc")
    n_paths = cfg.dim ** (cfg.n + 1)
    if n_paths * len(axis) > RC_COST_BUDGET:
        raise CapacityError(
            f"repeated contacts with n={cfg.n} needs ~{n_paths * len(axis):.2e} "
            f"path-point evaluations (budget {RC_COST_BUDGET:.0e}); "
            f"cost estimate {rc_cost_estimate(cfg):.2e}",
            estimated_cost=rc_cost_estimate(cfg),
        )
    rho_eb = _state_in_basis(rho, basis)
    h_eb = dagger(basis) @ cfg.h_op @ basis
    u_f = herm_expm(h_eb, -1j * cfg.dt)
    first, last, amp, shift = _rc_path_table(u_f, mu, ptr.kappa, cfg.n)

    # contiguous path groups per (row, col) Kraus entry
    order = np.argsort(last * cfg.dim + first, kind="stable")
    first, last, amp, shift = first[order], last[order], amp[order], shift[order]
    groups = []
    key = last * cfg.dim + first
    for val in np.unique(key):
        lo, hi = np.searchsorted(key, val), np.searchsorted(key, val, side="right")
        groups.append(((int(val) // cfg.dim, int(val) % cfg.dim), slice(lo, hi)))

    payload = (axis, shift, amp, groups, rho_eb, ptr.omega, cfg.dim)
    items = [(s, min(s + RC_CHUNK, len(axis))) for s in range(0, len(axis), RC_CHUNK)]
    parts = parallel_map(_rc_chunk, items, workers=workers, payload=payload)
    p = np.concatenate([pp for pp, _ in parts])
    v = np.concatenate([vv for _, vv in parts])
    w = trapezoid_weights(axis)
    _check_norms(float(w @ p), float(w @ v), cfg.dim,
                 normalization_tolerance(ptr.buffer), "repeated contacts")
    return GridFunction((axis,), p), GridFunction((axis,), v)


# ---------------------------------------------------------------------------
# repeated measurements (N-dimensional grid, per-axis transfer contraction)
# ---------------------------------------------------------------------------


def _hermitian_basis(d: int) -> list[np.ndarray]:
    """Orthonormal (trace inner product) basis of Hermitian d x d matrices."""
    basis = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = 1 / math.sqrt(2)
            basis.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1j / math.sqrt(2)
            e[j, i] = -1j / math.sqrt(2)
            basis.append(e)
    return basis


def _rm_transfer(cfg: SchemeConfig, axis: np.ndarray, basis: np.ndarray, mu: np.ndarray):
    """Real transfer tensors of one measure-then-evolve round.

    The round maps X -> U_f (G_x . X) U_f^dag with (G_x)_{mn} the product of
    pointer amplitudes; in an orthonormal Hermitian operator basis this is a
    real (d^2 x d^2) matrix per grid point.
    """
    d = cfg.dim
    ptr = cfg.pointer
    h_eb = dagger(basis) @ cfg.h_op @ basis
    u_f = herm_expm(h_eb, -1j * cfg.dt)
    herm = _hermitian_basis(d)
    sq = sqrt_gaussian(axis[:, None] - ptr.kappa * mu[None, :], ptr.omega)  # (X, d)
    t_all = np.empty((len(axis), d * d, d * d))
    for b, bb in enumerate(herm):
        # U_f (G_x . B_b) U_f^dag for all x at once
        gb = sq[:, :, None] * sq[:, None, :] * bb[None, :, :]
        yb = np.einsum("ma,xab,cb->xmc", u_f, gb, u_f.conj())
        for a, ba in enumerate(herm):
            t_all[:, a, b] = np.einsum("mn,xnm->x", ba, yb).real
    return t_all, herm


def _rm_vectors(rho_eb: np.ndarray, herm: list[np.ndarray]):
    d2 = len(herm)
    v0 = np.empty((d2, 2))
    t_vec = np.empty(d2)
    eye = np.eye(rho_eb.shape[0], dtype=complex)
    for a, ba in enumerate(herm):
        v0[a, 0] = np.trace(ba @ rho_eb).real
        v0[a, 1] = np.trace(ba @ eye).real
        t_vec[a] = np.trace(ba).real
    return v0, t_vec


def rm_cost_estimate(cfg: SchemeConfig) -> float:
    """Leading-order work: (grid points per axis)^N x N^2 x dim^N."""
    mu, _ = _measurement_eigenbasis(cfg.m_op)
    ptr = cfg.pointer
    span = abs(ptr.kappa) * (mu[-1] - mu[0]) + 2 * ptr.buffer * ptr.omega
    return (span / ptr.dx) ** cfg.n * cfg.n ** 2 * cfg.dim ** cfg.n


def _rm_prepare(cfg: SchemeConfig, rho: DensityMatrix):
    if rho.dim != cfg.dim:
        raise ValidationError("state dimension does not match the observable")
    mu, basis = _measurement_eigenbasis(cfg.m_op)
    axis = make_grid(cfg, "rm")
    t_all, herm = _rm_transfer(cfg, axis, basis, mu)
    v0, t_vec = _rm_vectors(_state_in_basis(rho, basis), herm)
    return axis, t_all, v0, t_vec


def _rm_weighted_integrals(axis, t_all, v0, t_vec, n):
    """Exact trapezoid integrals of p and V via per-axis weighted transfers."""
    m_w = np.einsum("xab,x->ab", t_all, trapezoid_weights(axis))
    vec = v0.copy()
    for _ in range(n):
        vec = m_w @ vec
    out = t_vec @ vec
    return float(out[0]), float(out[1])


def repeated_measurements(
    cfg: SchemeConfig, rho: DensityMatrix, workers: int | None = None
) -> tuple[GridFunction, GridFunction]:
    """n fresh pointers, each measured after its interaction.

    Materializes the full n-dimensional outcome grids; use
    ``scheme_entropy(..., "rm")`` for entropies beyond the memory budget.
    """
    axis, t_all, v0, t_vec = _rm_prepare(cfg, rho)
    n, d2 = cfg.n, t_all.shape[1]
    if len(axis) ** n > RM_MATERIALIZE_BUDGET:
        raise CapacityError(
            f"materializing {len(axis)}^{n} grid points exceeds the memory budget "
            f"({RM_MATERIALIZE_BUDGET:.0e}); cost estimate {rm_cost_estimate(cfg):.2e}",
            estimated_cost=rm_cost_estimate(cfg),
        )
    arr = v0.reshape((1,) * 0 + (d2, 2))
    for _ in range(n):
        arr = np.einsum("xab,...bs->...xas", t_all, arr)
    out = np.einsum("...as,a->...s", arr, t_vec)
    p = np.ascontiguousarray(out[..., 0])
    v = np.ascontiguousarray(out[..., 1])
    p_int, v_int = _rm_weighted_integrals(axis, t_all, v0, t_vec, n)
    _check_norms(p_int, v_int, cfg.dim,
                 normalization_tolerance(cfg.pointer.buffer, n), "repeated measurements")
    axes = (axis,) * n
    return GridFunction(axes, np.clip(p, 0.0, None)), GridFunction(axes, np.clip(v, 0.0, None))


RM_CHUNK = 256


def _rm_entropy_chunk(item, payload):
    start, stop = item
    t_all, u_last, w2d, v_pref, w_pref = payload
    vc = v_pref[start:stop]
    w4 = np.einsum("xab,cbs->cxas", t_all, vc)
    c, x, d2, _ = w4.shape
    tmp = np.ascontiguousarray(w4.transpose(0, 1, 3, 2)).reshape(-1, d2)
    pv = (tmp @ u_last.T).reshape(c, x, 2, -1)
    p = pv[:, :, 0, :]
    v = pv[:, :, 1, :]
    np.maximum(p, 0.0, out=p)
    np.maximum(v, 1e-300, out=v)
    r = p / v
    np.maximum(r, 1e-300, out=r)
    np.log(r, out=r)
    r *= p
    r *= w2d[None, :, :]
    return float(r.sum(axis=(1, 2)) @ w_pref[start:stop])


def rm_entropy(cfg: SchemeConfig, rho: DensityMatrix, workers: int | None = None) -> EntropyValue:
    """Repeated-measurement entropy, streamed over the outcome hypercube.

    Never materializes the full n-dimensional grids; partial sums reduce in
    fixed chunk order so the value is identical for any worker count.
    """
    axis, t_all, v0, t_vec = _rm_prepare(cfg, rho)
    n = cfg.n
    x = len(axis)
    if float(x) ** n > RM_STREAM_BUDGET:
        raise CapacityError(
            f"repeated measurements with n={n} spans {x}^{n} grid points "
            f"(budget {RM_STREAM_BUDGET:.0e}); cost estimate {rm_cost_estimate(cfg):.2e}",
            estimated_cost=rm_cost_estimate(cfg),
        )
    trapw = trapezoid_weights(axis)
    p_int, v_int = _rm_weighted_integrals(axis, t_all, v0, t_vec, n)
    _check_norms(p_int, v_int, cfg.dim,
                 normalization_tolerance(cfg.pointer.buffer, n), "repeated measurements")

    if n == 1:
        final = np.einsum("xab,bs->xas", t_all, v0)
        pv = np.einsum("xas,a->xs", final, t_vec)
        p = np.clip(pv[:, 0], 0.0, None)
        v = np.clip(pv[:, 1], 0.0, None)
        return observational_grid(
            GridFunction((axis,), p), GridFunction((axis,), v), dim=cfg.dim,
            norm_tol=normalization_tolerance(cfg.pointer.buffer, n),
        )

    u_last = np.einsum("xab,a->xb", t_all, t_vec)
    w2d = np.outer(trapw, trapw)
    v_pref = v0.reshape(1, -1, 2)
    w_pref = np.ones(1)
    for _ in range(n - 2):
        v_pref = np.einsum("xab,cbs->cxas", t_all, v_pref).reshape(-1, t_all.shape[1], 2)
        w_pref = np.outer(w_pref, trapw).reshape(-1)

    payload = (t_all, u_last, w2d, v_pref, w_pref)
    items = [(s, min(s + RM_CHUNK, len(v_pref))) for s in range(0, len(v_pref), RM_CHUNK)]
    parts = parallel_map(_rm_entropy_chunk, items, workers=workers, payload=payload)
    return EntropyValue(-float(np.sum(parts)))


# ---------------------------------------------------------------------------
# continuum limit (momentum-space evaluation)
# ---------------------------------------------------------------------------


def limit_scheme(
    cfg: LimitConfig, rho: DensityMatrix, workers: int | None = None
) -> tuple[GridFunction, GridFunction]:
    """Pointer-momentum evaluation of the fixed-total-time limit.

    The joint generator is block-diagonal over pointer momentum k, where it
    acts as H + R k M on the system; each momentum sample is propagated with
    a Hermitian exponential and transformed back to the position grid.
    """
    if rho.dim != cfg.dim:
        raise ValidationError("state dimension does not match the observable")
    mu, basis = _measurement_eigenbasis(cfg.m_op)
    ptr = cfg.pointer
    axis = make_grid(cfg)
    m = len(axis)
    kvals = 2 * math.pi * np.fft.fftfreq(m, d=ptr.dx)
    if math.pi / ptr.dx < 6.0 / ptr.omega:
        raise ValidationError(
            f"grid too coarse for the pointer momentum bandwidth: need dx <= "
            f"{math.pi * ptr.omega / 6.0:.4g} at omega={ptr.omega}"
        )
    phi = (2 * ptr.omega ** 2 / math.pi) ** 0.25 * np.exp(-(ptr.omega * kvals) ** 2)

    h_eb = dagger(basis) @ cfg.h_op @ basis
    rho_eb = _state_in_basis(rho, basis)
    gen = h_eb[None, :, :] + cfg.rate_ratio * kvals[:, None, None] * np.diag(mu)[None, :, :]
    evals, evecs = np.linalg.eigh(gen)
    phase = np.exp(-1j * evals * cfg.total_time)
    w = np.einsum("kab,kb,kcb->kac", evecs, phase, evecs.conj())

    lam, psi = np.linalg.eigh(rho_eb)
    keep = lam > 1e-15
    lam, psi = lam[keep], psi[:, keep]
    cols = np.concatenate([psi, np.eye(cfg.dim, dtype=complex)], axis=1)

    b = np.einsum("kst,tc->ksc", w, cols)
    b *= (phi * np.exp(1j * kvals * axis[0]))[:, None, None]
    dk = 2 * math.pi / (m * ptr.dx)
    psi_x = np.fft.ifft(b, axis=0) * (m * dk / math.sqrt(2 * math.pi))
    dens = psi_x.real ** 2 + psi_x.imag ** 2
    n_branch = psi.shape[1]
    p = np.einsum("xsr,r->x", dens[:, :, :n_branch], lam)
    v = dens[:, :, n_branch:].sum(axis=(1, 2))

    wts = trapezoid_weights(axis)
    _check_norms(float(wts @ p), float(wts @ v), cfg.dim,
                 normalization_tolerance(ptr.buffer), "limit scheme")
    return GridFunction((axis,), p), GridFunction((axis,), v)


# ---------------------------------------------------------------------------
# entropy dispatch
# ---------------------------------------------------------------------------

SCHEMES = ("pm", "sm", "rm", "rc", "limit")


def scheme_entropy(
    cfg: SchemeConfig | LimitConfig,
    rho: DensityMatrix,
    scheme: str,
    log_base: str = "natural",
    workers: int | None = None,
) -> EntropyValue:
    """Observational entropy of one pointer-measurement scheme."""
    if scheme == "pm":
        v = CoarseGrainingVector.single(projective_cg(cfg.m_op))
        return observational(v, rho, log_base)
    if scheme == "sm":
        p, vol = single_measurement(cfg, rho)
        tol = normalization_tolerance(cfg.pointer.buffer)
        return observational_grid(p, vol, dim=cfg.dim, norm_tol=tol, log_base=log_base)
    if scheme == "rm":
        return rm_entropy(cfg, rho, workers=workers).to_base(log_base)
    if scheme == "rc":
        p, vol = repeated_contacts(cfg, rho, workers=workers)
        tol = normalization_tolerance(cfg.pointer.buffer)
        return observational_grid(p, vol, dim=cfg.dim, norm_tol=tol, log_base=log_base)
    if scheme == "limit":
        if not isinstance(cfg, LimitConfig):
            raise ValidationError("limit scheme requires a LimitConfig")
        p, vol = limit_scheme(cfg, rho, workers=workers)
        tol = normalization_tolerance(cfg.pointer.buffer)
        return observational_grid(p, vol, dim=cfg.dim, norm_tol=tol, log_base=log_base)
    raise ValidationError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
