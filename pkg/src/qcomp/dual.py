"""Virtual-uplink dual for a fixed diagonal noise covariance.

For every BS ``i`` the received-signal covariance of the virtual uplink is::

    K_i = diag(D_i) + alpha * sum_{j,v} lam[j,v] h[i,j,v] h[i,j,v]^H
                    + beta * diag(H_i Lam H_i^H)

and the per-user uplink powers ``lam`` are the fixed point of::

    lam[i,u] = 1 / (alpha * (1 + 1/gamma[i,u]) * h[i,i,u]^H K_i^{-1} h[i,i,u])
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.linalg.lapack

from .netgen import ChannelSet
from .quant import QuantModel

log = logging.getLogger(__name__)

LAMBDA_INIT = 1e-3
LAMBDA_CAP_FACTOR = 1e12


class SolverError(RuntimeError):
    """Base class for numerical failures of the beamforming solvers."""


class InfeasibleError(SolverError):
    """Target SINRs cannot be met: the uplink powers diverge."""

    def __init__(self, message: str, lam: Optional[np.ndarray] = None):
        super().__init__(message)
        self.lam = lam


class NumericalError(SolverError):
    """A covariance that must be positive definite is not."""


@dataclass
class FixedPointResult:
    lam: np.ndarray
    iterations: int
    residual: float
    converged: bool


@dataclass
class DualState:
    """Snapshot of the dual variables and the quantities derived from them.

    ``lam`` is ``(N_c, N_u)``, ``D`` is ``(N_c, N_b)``, ``K`` is
    ``(N_c, N_b, N_b)`` and ``f`` holds the MMSE combiners ``(N_c, N_u, N_b)``.
    """

    lam: np.ndarray
    D: np.ndarray
    K: np.ndarray
    f: np.ndarray
    inner_iterations: int = 0
    inner_residual: float = 0.0
    inner_converged: bool = True
    extra: dict = field(default_factory=dict)

    def objective(self, noise_var: float) -> float:
        """Dual objective ``sum(lam) * sigma^2``."""
        return float(np.sum(self.lam) * noise_var)


def hermitian_part(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.conj().T)


def build_K(ch: ChannelSet, quant: QuantModel, lam: np.ndarray, D_i: np.ndarray, i: int) -> np.ndarray:
    """Received-signal covariance of BS ``i`` in the virtual uplink."""
    H = ch.stacked(i)
    w = np.asarray(lam, dtype=float).reshape(-1)
    K = quant.alpha * (H * w) @ H.conj().T
    idx = np.arange(K.shape[0])
    K[idx, idx] = K[idx, idx].real + np.asarray(D_i, dtype=float) + quant.beta * ((H.real**2 + H.imag**2) @ w)
    return K


def build_Z(ch: ChannelSet, quant: QuantModel, lam: np.ndarray, D_i: np.ndarray, i: int, u: int) -> np.ndarray:
    """Interference-plus-noise covariance seen by user ``(i, u)`` at BS ``i``.

    Quantization noise of the whole received signal (own user included)
    counts as noise, the remaining users' signals as interference.
    """
    a, b = quant.alpha, quant.beta
    H = ch.stacked(i)
    w = np.asarray(lam, dtype=float).reshape(-1).copy()
    D_i = np.asarray(D_i, dtype=float)
    quant_diag = a * b * (np.abs(H) ** 2 @ w + D_i)
    w[i * ch.n_users + u] = 0.0
    Z = a * a * (H * w) @ H.conj().T
    idx = np.arange(Z.shape[0])
    Z[idx, idx] = Z[idx, idx].real + a * a * D_i + quant_diag
    return Z


def _cholesky(A: np.ndarray, where: str) -> np.ndarray:
    """Lower Cholesky factor of a Hermitian positive definite matrix."""
    A = hermitian_part(np.asarray(A, dtype=complex))
    c, info = scipy.linalg.lapack.zpotrf(A, lower=1, clean=1)
    if info != 0 or not np.all(np.isfinite(c)):
        raise NumericalError(f"covariance not positive definite at {where} (potrf info={info})")
    return c


def _cho_solve(c: np.ndarray, b: np.ndarray) -> np.ndarray:
    x, info = scipy.linalg.lapack.zpotrs(c, np.asarray(b, dtype=complex), lower=1)
    if info != 0:
        raise NumericalError(f"triangular solve failed (potrs info={info})")
    return x


def mmse_combiner(Z: np.ndarray, h: np.ndarray, where: str = "?") -> np.ndarray:
    """Solve ``Z f = h`` with a Cholesky factorization of ``Z``."""
    return _cho_solve(_cholesky(Z, where), h)


def ul_sinr(lam_iu: float, f: np.ndarray, Z: np.ndarray, h: np.ndarray, quant: QuantModel) -> float:
    """Virtual-uplink SINR ``alpha^2 lam |f^H h|^2 / (f^H Z f)``."""
    num = quant.alpha**2 * lam_iu * abs(np.vdot(f, h)) ** 2
    den = np.real(np.vdot(f, Z @ f))
    return float(num / den)


def lambda_reference(ch: ChannelSet, quant: QuantModel, D: np.ndarray, gamma: np.ndarray) -> float:
    """Interference-free single-user power scale used for the divergence cap."""
    direct = np.einsum("iiun->iun", ch.h)
    gain = np.sum(np.abs(direct) ** 2, axis=-1)
    scale = max(1.0, float(np.max(np.sum(D, axis=1))) / ch.n_antennas)
    return float(np.max(gamma / (quant.alpha * gain))) * scale


def fixed_point_lambda(
    ch: ChannelSet,
    quant: QuantModel,
    D: np.ndarray,
    gamma: np.ndarray,
    tol: float = 1e-9,
    max_iter: int = 10_000,
    lam0: Optional[np.ndarray] = None,
    callback: Optional[Callable[[np.ndarray], None]] = None,
) -> FixedPointResult:
    """Block Gauss-Seidel fixed-point iteration for the uplink powers.

    Cells are swept in order; ``K_i`` is rebuilt from the freshest powers
    before the users of cell ``i`` are updated together. Iteration stops
    once the largest relative change in a sweep drops to ``tol``. A
    non-converged result is returned rather than raised; diverging powers
    raise :class:`InfeasibleError`.
    """
    n_c, n_u = ch.n_cells, ch.n_users
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (n_c, n_u))
    D = np.asarray(D, dtype=float)
    lam = np.full((n_c, n_u), LAMBDA_INIT) if lam0 is None else np.array(lam0, dtype=float)
    cap = LAMBDA_CAP_FACTOR * lambda_reference(ch, quant, D, gamma)
    scale = quant.alpha * (1.0 + 1.0 / gamma)
    direct = [np.ascontiguousarray(ch.h[i, i].T) for i in range(n_c)]  # N_b x N_u

    residual = np.inf
    for it in range(1, max_iter + 1):
        residual = 0.0
        for i in range(n_c):
            K = build_K(ch, quant, lam, D[i], i)
            X = _cho_solve(_cholesky(K, f"cell {i}"), direct[i])
            s = np.real(np.sum(direct[i].conj() * X, axis=0))
            if not np.all(s > 0):
                raise NumericalError(f"non-positive h^H K^-1 h in cell {i}")
            new = 1.0 / (scale[i] * s)
            change = np.abs(new - lam[i]) / new
            residual = max(residual, float(change.max()))
            lam[i] = new
        if callback is not None:
            callback(lam.copy())
        if not np.all(np.isfinite(lam)) or np.max(lam) > cap:
            raise InfeasibleError(
                f"uplink powers exceeded cap {cap:.3e} after {it} sweeps; "
                "target SINRs are infeasible", lam=lam.copy()
            )
        if residual <= tol:
            return FixedPointResult(lam=lam, iterations=it, residual=residual, converged=True)
    log.warning("fixed point not converged after %d sweeps (residual %.3e)", max_iter, residual)
    return FixedPointResult(lam=lam, iterations=max_iter, residual=residual, converged=False)


def combiners(ch: ChannelSet, quant: QuantModel, lam: np.ndarray, D: np.ndarray) -> np.ndarray:
    """MMSE combiners ``f[i, u] = Z_{i,u}^{-1} h[i, i, u]`` for every user."""
    f = np.empty((ch.n_cells, ch.n_users, ch.n_antennas), dtype=complex)
    for i in range(ch.n_cells):
        for u in range(ch.n_users):
            Z = build_Z(ch, quant, lam, D[i], i, u)
            f[i, u] = mmse_combiner(Z, ch.h[i, i, u], where=f"cell {i}, user {u}")
    return f


def solve_dual(
    ch: ChannelSet,
    quant: QuantModel,
    D: np.ndarray,
    gamma: np.ndarray,
    tol: float = 1e-9,
    max_iter: int = 10_000,
    lam0: Optional[np.ndarray] = None,
) -> DualState:
    """Inner solve for fixed ``D``: converged powers plus MMSE combiners."""
    D = np.asarray(D, dtype=float)
    res = fixed_point_lambda(ch, quant, D, gamma, tol=tol, max_iter=max_iter, lam0=lam0)
    K = np.stack([build_K(ch, quant, res.lam, D[i], i) for i in range(ch.n_cells)])
    f = combiners(ch, quant, res.lam, D)
    return DualState(
        lam=res.lam, D=D.copy(), K=K, f=f,
        inner_iterations=res.iterations, inner_residual=res.residual,
        inner_converged=res.converged,
    )
