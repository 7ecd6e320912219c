"""Audits of a beamforming solution: SINRs, antenna powers, PAPR and duality gap.

All powers stay linear (mW) here; conversion to dB happens only in the
reporting helpers at the bottom of the module.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .netgen import ChannelSet
from .quant import QuantModel, quant_noise_cov

OPERATING_RANGE_FLOOR = 1e-12


@dataclass
class SolveReport:
    """Scalar and per-antenna summary of one solve.

    ``antenna_power`` is ``(N_c, N_b)`` in mW, ``achieved_sinr`` is linear
    ``(N_c, N_u)``. ``dual_trace`` and ``primal_trace`` hold the dual
    objective and the max antenna power of every outer iterate.
    """

    algorithm: str
    achieved_sinr: np.ndarray
    antenna_power: np.ndarray
    max_antenna_power: float
    total_power: float
    dual_objective: float
    duality_gap_rel: float
    papr_db: float
    operating_range_db: float
    inner_iterations: int
    outer_iterations: int
    converged: bool
    dual_trace: list = field(default_factory=list)
    primal_trace: list = field(default_factory=list)
    best_iteration: int = 0
    stop_reason: str = ""
    final_D: Optional[np.ndarray] = None

    def sinr_error(self, gamma: np.ndarray) -> float:
        """Largest relative deviation of achieved from target SINR."""
        return float(np.max(np.abs(self.achieved_sinr - gamma) / gamma))


def _gain_tensor(ch: ChannelSet, W: np.ndarray) -> np.ndarray:
    """``G[i, u, j, v] = |h[j,i,u]^H w[j,v]|^2``."""
    return np.abs(np.einsum("jium,jvm->iujv", ch.h.conj(), W)) ** 2


def quant_noise_terms(ch: ChannelSet, quant: QuantModel, W: np.ndarray) -> np.ndarray:
    """Quantization noise power at every user from the per-BS noise covariances."""
    Q = np.zeros((ch.n_cells, ch.n_users))
    for j in range(ch.n_cells):
        C = quant_noise_cov(quant, W[j].T)
        hj = ch.h[j]  # (N_c, N_u, N_b)
        Q += np.real(np.einsum("ium,mn,iun->iu", hj.conj(), C, hj))
    return Q


def quant_noise_terms_by_stream(ch: ChannelSet, quant: QuantModel, W: np.ndarray) -> np.ndarray:
    """Same quantity summed stream by stream: ``ab * sum_{j,v} w^H diag(h h^H) w``."""
    a, b = quant.alpha, quant.beta
    E = np.einsum("jium,jvm->iujv", np.abs(ch.h) ** 2, np.abs(W) ** 2)
    return a * b * E.sum(axis=(2, 3))


def dl_sinr(ch: ChannelSet, quant: QuantModel, W: np.ndarray, noise_var: float) -> np.ndarray:
    """Downlink SINR of every user, quantization noise included.

    ``W`` is ``(N_c, N_u, N_b)``; returns an ``(N_c, N_u)`` linear array.
    """
    a2 = quant.alpha**2
    G = _gain_tensor(ch, W)
    n_c, n_u = ch.n_cells, ch.n_users
    own = np.einsum("iuiu->iu", G)
    interference = G.sum(axis=(2, 3)) - own
    Q = quant_noise_terms(ch, quant, W)
    return a2 * own / (a2 * interference + Q + noise_var)


def antenna_powers(quant: QuantModel, W: np.ndarray) -> np.ndarray:
    """Expected power of every quantized transmit antenna, ``alpha * diag(W_i W_i^H)``."""
    return quant.alpha * np.sum(np.abs(W) ** 2, axis=1)


def papr_db(powers: np.ndarray, per_bs: bool = False) -> float:
    """Peak-to-average ratio in dB of the antenna powers.

    With ``per_bs`` the ratio is taken inside each BS (rows of ``powers``)
    and the dB values are averaged over BSs.
    """
    p = np.asarray(powers, dtype=float)
    if per_bs:
        p = np.atleast_2d(p)
        return float(np.mean([papr_db(row) for row in p]))
    p = p.reshape(-1)
    if p.size == 0 or not np.any(p > 0):
        raise ValueError("PAPR undefined: no positive antenna power")
    return float(10.0 * np.log10(p.max() / p.mean()))


def operating_range_db(powers: np.ndarray) -> float:
    """Spread ``10 log10(p_max / p_min)`` with ``p_min`` floored at ``1e-12 p_max``."""
    p = np.asarray(powers, dtype=float).reshape(-1)
    pmax = float(p.max())
    if not pmax > 0:
        raise ValueError("operating range undefined: no positive antenna power")
    pmin = max(float(p.min()), OPERATING_RANGE_FLOOR * pmax)
    return float(10.0 * np.log10(pmax / pmin))


def empirical_cdf(values: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Distinct sorted values and ``P(X <= value)`` at each of them."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 0:
        raise ValueError("empirical CDF of an empty sample")
    xs = np.sort(v, kind="stable")
    uniq, last = np.unique(xs, return_index=False, return_counts=True)
    prob = np.cumsum(last) / v.size
    return uniq, prob


def duality_gap(max_antenna_power: float, n_cells: int, n_antennas: int, dual_objective: float) -> float:
    """Relative gap ``|N_c N_b p0 - dual| / dual``."""
    primal = n_cells * n_antennas * max_antenna_power
    return float(abs(primal - dual_objective) / abs(dual_objective))


def make_report(
    algorithm: str,
    ch: ChannelSet,
    quant: QuantModel,
    W: np.ndarray,
    dual_objective: float,
    *,
    inner_iterations: int,
    outer_iterations: int,
    converged: bool,
    dual_trace: Optional[list] = None,
    primal_trace: Optional[list] = None,
    best_iteration: int = 0,
    papr_per_bs: bool = False,
) -> SolveReport:
    powers = antenna_powers(quant, W)
    p0 = float(powers.max())
    return SolveReport(
        algorithm=algorithm,
        achieved_sinr=dl_sinr(ch, quant, W, ch.noise_var),
        antenna_power=powers,
        max_antenna_power=p0,
        total_power=float(powers.sum()),
        dual_objective=float(dual_objective),
        duality_gap_rel=duality_gap(p0, ch.n_cells, ch.n_antennas, dual_objective),
        papr_db=papr_db(powers, per_bs=papr_per_bs),
        operating_range_db=operating_range_db(powers),
        inner_iterations=int(inner_iterations),
        outer_iterations=int(outer_iterations),
        converged=bool(converged),
        dual_trace=list(dual_trace or []),
        primal_trace=list(primal_trace or []),
        best_iteration=best_iteration,
    )


def to_db(x):
    return 10.0 * np.log10(x)
