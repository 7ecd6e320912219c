"""Downlink precoder recovery from the uplink MMSE combiners.

The optimal precoders are scaled combiners ``w = sqrt(tau) * f``. The
scalings follow from making every downlink SINR constraint active, which
is a linear system ``Sigma tau = sigma^2 * 1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dual import SolverError
from .netgen import ChannelSet
from .quant import QuantModel

NEGATIVE_TAU_RTOL = 1e-10


class PrecoderRecoveryError(SolverError):
    """The power scalings are not a valid (nonnegative) solution."""

    def __init__(self, message: str, tau: np.ndarray | None = None):
        super().__init__(message)
        self.tau = tau


@dataclass
class BeamformerSet:
    """Precoders ``w[i, u]`` (``N_c x N_u x N_b``) with their scalings and source combiners."""

    w: np.ndarray
    tau: np.ndarray
    f: np.ndarray

    def per_cell(self, i: int) -> np.ndarray:
        """``W_i`` as an ``N_b x N_u`` matrix."""
        return self.w[i].T


def normalize_combiners(f: np.ndarray) -> np.ndarray:
    """Unit-norm combiners; only their directions enter the precoders."""
    norms = np.linalg.norm(f, axis=-1, keepdims=True)
    if not np.all(norms > 0):
        raise PrecoderRecoveryError("zero combiner")
    return f / norms


def cross_gains(ch: ChannelSet, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coherent and per-antenna gains between every combiner and every user.

    Returns ``(G, E)`` indexed ``[i, u, j, v]`` (victim ``(i,u)``, source
    ``(j,v)``): ``G = |h[j,i,u]^H f[j,v]|^2`` and
    ``E = sum_m |h[j,i,u,m]|^2 |f[j,v,m]|^2``.
    """
    inner = np.einsum("jium,jvm->iujv", ch.h.conj(), f)
    G = np.abs(inner) ** 2
    E = np.einsum("jium,jvm->iujv", np.abs(ch.h) ** 2, np.abs(f) ** 2)
    return G, E


def build_sigma(ch: ChannelSet, quant: QuantModel, f: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Real ``(N_c N_u) x (N_c N_u)`` matrix of the active downlink SINR constraints.

    Rows are victims ``(i, u)``, columns sources ``(j, v)``, both in
    lexicographic order. Intra-cell interference (``i == j``, ``u != v``)
    is treated as an off-diagonal term like any other interferer.
    """
    a, b = quant.alpha, quant.beta
    S = ch.n_cells * ch.n_users
    G, E = cross_gains(ch, f)
    G = G.reshape(S, S)
    E = E.reshape(S, S)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (ch.n_cells, ch.n_users)).reshape(-1)
    sigma = -(a * a) * G - a * b * E
    idx = np.arange(S)
    sigma[idx, idx] = (a * a / gamma) * G[idx, idx] - a * b * E[idx, idx]
    return sigma


def recover_precoders(sigma: np.ndarray, f: np.ndarray, noise_var: float) -> BeamformerSet:
    """Solve ``sigma @ tau = noise_var * 1`` and scale the combiners.

    Rows are equilibrated by their diagonal first; with channel gains
    spanning many decades this is what keeps the system well conditioned.
    Tiny negative scalings from round-off (down to ``-1e-10 * max|tau|``)
    are clamped to zero; anything more negative raises.
    """
    S = sigma.shape[0]
    d = np.abs(np.diag(sigma))
    if not np.all(d > 0):
        raise PrecoderRecoveryError("zero diagonal in SINR constraint matrix")
    try:
        tau = scipy.linalg.solve(sigma / d[:, None], float(noise_var) / d)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise PrecoderRecoveryError(f"singular SINR constraint matrix: {exc}") from exc
    if not np.all(np.isfinite(tau)):
        raise PrecoderRecoveryError("non-finite power scalings", tau=tau)
    floor = -NEGATIVE_TAU_RTOL * max(float(np.max(np.abs(tau))), np.finfo(float).tiny)
    if np.any(tau < floor):
        raise PrecoderRecoveryError(
            f"negative power scalings (min {tau.min():.3e}); dual not converged or targets infeasible",
            tau=tau,
        )
    tau = np.maximum(tau, 0.0).reshape(f.shape[:2])
    w = np.sqrt(tau)[..., None] * f
    return BeamformerSet(w=w, tau=tau, f=f.copy())
