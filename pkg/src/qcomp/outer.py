"""Outer loop over the virtual-uplink noise covariances ``D``.

``solve_pa`` minimizes the largest per-antenna transmit power subject to
the SINR targets by ascending the concave dual function
``f(D) = sum(lam(D)) * sigma^2`` over ``{D >= 0, trace budget}``. The
antenna powers of the recovered precoders are a supergradient of ``f``.
``solve_baseline`` is the total-power design: one inner solve
with ``D = I``.

Two update rules are available:

``mirror`` (default)
    Exponentiated-gradient step ``D <- D * exp(eta * p / max(p))``
    renormalized to the trace budget, with a step that grows after every
    dual improvement and halves on failure.
``euclidean``
    ``D <- project(D + eta_n * p)`` with exact Euclidean projection and
    ``eta_n = eta0 / sqrt(n)`` (or constant with ``step_rule="fixed"``).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import dual, primal
from .metrics import SolveReport, antenna_powers, make_report
from .netgen import ChannelSet
from .quant import QuantModel

log = logging.getLogger(__name__)

UPDATES = ("mirror", "euclidean")
STEP_RULES = ("diminishing", "fixed")
TRACE_SCOPES = ("network", "cell")


@dataclass
class OuterConfig:
    """Settings of the outer loop and of the inner fixed-point solves.

    ``trace_scope`` selects whether the trace budget is shared by the whole
    network (``sum_i tr D_i <= N_c N_b``, the exact dual of a network-wide
    antenna power cap) or imposed per BS (``tr D_i <= N_b``).
    ``d_floor`` keeps every entry of ``D`` above ``d_floor`` times the
    uniform level. The loop stops when the certified relative duality gap
    falls below ``gap_tol``, when ``D`` moves less than ``outer_tol``
    (relative, inf-norm), or after ``stall_iters`` iterations without a
    dual improvement.
    """

    update: str = "mirror"
    step_rule: str = "diminishing"
    step_scale: float = 0.1
    mirror_step: float = 1.0
    outer_tol: float = 1e-5
    gap_tol: float = 1e-4
    max_outer_iters: int = 2000
    stall_iters: int = 25
    inner_tol: float = 1e-9
    inner_max_iter: int = 10_000
    trace_scope: str = "network"
    d_floor: float = 1e-6
    warm_start: bool = True
    papr_per_bs: bool = False

    def __post_init__(self):
        if self.update not in UPDATES:
            raise ValueError(f"update must be one of {UPDATES}, got {self.update!r}")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"step_rule must be one of {STEP_RULES}, got {self.step_rule!r}")
        if self.trace_scope not in TRACE_SCOPES:
            raise ValueError(f"trace_scope must be one of {TRACE_SCOPES}, got {self.trace_scope!r}")
        for name in ("step_scale", "mirror_step", "outer_tol", "inner_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.gap_tol < 0 or not 0 <= self.d_floor < 1:
            raise ValueError("gap_tol must be >= 0 and d_floor in [0, 1)")
        if self.max_outer_iters < 1 or self.stall_iters < 1 or self.inner_max_iter < 1:
            raise ValueError("iteration limits must be >= 1")


def subgradient(W: np.ndarray) -> np.ndarray:
    """Per-antenna ``sum_u |w[i,u,m]|^2``, shape ``(N_c, N_b)``.

    Accepts a single cell ``(N_u, N_b)`` as well.
    """
    return np.sum(np.abs(np.asarray(W)) ** 2, axis=-2)


def project_D(d: np.ndarray, cap: float) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum(x) <= cap}``."""
    d = np.asarray(d, dtype=float)
    clipped = np.maximum(d, 0.0)
    if clipped.sum() <= cap:
        return clipped
    # trace constraint active: projection onto the scaled simplex
    s = np.sort(d.reshape(-1))[::-1]
    css = np.cumsum(s) - cap
    k = np.arange(1, s.size + 1)
    rho = np.nonzero(s - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(d - theta, 0.0)


def _blocks(D: np.ndarray, scope: str) -> list:
    """Index sets sharing one trace budget, with the budget."""
    n_c, n_b = D.shape
    if scope == "network":
        return [(slice(None), n_c * n_b)]
    return [(i, n_b) for i in range(n_c)]


def project_all(D: np.ndarray, scope: str, floor: float = 0.0) -> np.ndarray:
    """Project ``D`` onto the feasible set, keeping entries ``>= floor``."""
    out = np.empty_like(D, dtype=float)
    for idx, cap in _blocks(D, scope):
        block = D[idx]
        out[idx] = project_D(block - floor, cap - floor * block.size) + floor
    return out


def mirror_step(D: np.ndarray, g: np.ndarray, eta: float, scope: str, floor: float) -> np.ndarray:
    """Exponentiated-gradient step renormalized to the trace budget."""
    gmax = float(np.max(g))
    x = D * np.exp(eta * (g / gmax - 1.0)) if gmax > 0 else D.copy()
    out = np.empty_like(D, dtype=float)
    for idx, cap in _blocks(D, scope):
        block = x[idx]
        block = block * (cap / block.sum())
        uniform = cap / block.size
        out[idx] = (1.0 - floor) * block + floor * uniform
    return out


def _inner(ch, quant, D, gamma, cfg: OuterConfig, lam0=None):
    state = dual.solve_dual(ch, quant, D, gamma, tol=cfg.inner_tol, max_iter=cfg.inner_max_iter, lam0=lam0)
    f = primal.normalize_combiners(state.f)
    sigma = primal.build_sigma(ch, quant, f, gamma)
    bf = primal.recover_precoders(sigma, f, ch.noise_var)
    return state, bf


def solve_baseline(
    ch: ChannelSet, quant: QuantModel, gamma: np.ndarray, cfg: Optional[OuterConfig] = None
) -> tuple[primal.BeamformerSet, dual.DualState, SolveReport]:
    """Total transmit power minimization (``D_i = I``, single inner solve)."""
    cfg = cfg or OuterConfig()
    D = np.ones((ch.n_cells, ch.n_antennas))
    state, bf = _inner(ch, quant, D, gamma, cfg)
    report = make_report(
        "baseline", ch, quant, bf.w, state.objective(ch.noise_var),
        inner_iterations=state.inner_iterations, outer_iterations=0,
        converged=state.inner_converged, papr_per_bs=cfg.papr_per_bs,
    )
    return bf, state, report


def solve_pa(
    ch: ChannelSet, quant: QuantModel, gamma: np.ndarray, cfg: Optional[OuterConfig] = None
) -> tuple[primal.BeamformerSet, dual.DualState, SolveReport]:
    """Per-antenna power minimax beamforming.

    Starts from ``D_i = I``, so the first iterate is the baseline design.
    Returns the iterate with the smallest max antenna power together with
    its dual state; the report carries the best dual objective seen and
    the certified gap between the two.
    """
    cfg = cfg or OuterConfig()
    n_c, n_b = ch.n_cells, ch.n_antennas
    budget = n_c * n_b
    D = np.ones((n_c, n_b))
    lam = None
    best_dual = -np.inf
    best = None  # (p0, iteration, state, bf)
    anchor = None  # mirror rule: (D, powers, lam) of the last accepted iterate
    eta = cfg.mirror_step
    eta0 = None
    dual_trace, primal_trace = [], []
    inner_total = 0
    inner_ok = True
    stop = "max_iter"
    last_improve = 0

    n = 0
    for n in range(1, cfg.max_outer_iters + 1):
        state, bf = _inner(ch, quant, D, gamma, cfg, lam0=lam if cfg.warm_start else None)
        inner_total += state.inner_iterations
        inner_ok &= state.inner_converged
        obj = state.objective(ch.noise_var)
        powers = antenna_powers(quant, bf.w)
        p0 = float(powers.max())
        dual_trace.append(obj)
        primal_trace.append(p0)

        improved = obj > best_dual
        if improved:
            best_dual = obj
            last_improve = n
        if best is None or p0 < best[0]:
            best = (p0, n, state, bf)

        gap = (budget * best[0] - best_dual) / best_dual
        if gap <= cfg.gap_tol:
            stop = "gap"
            break
        if n - last_improve >= cfg.stall_iters:
            stop = "stall"
            break

        if cfg.update == "mirror":
            if anchor is None or improved:
                if anchor is not None:
                    eta *= 1.5
                anchor = (D, powers, state.lam)
            else:
                eta *= 0.5
            D_prev, g, lam = anchor
            D_new = mirror_step(D_prev, g, eta, cfg.trace_scope, cfg.d_floor)
        else:
            lam = state.lam
            D_prev = D
            if eta0 is None:
                eta0 = cfg.step_scale * budget / float(np.sum(powers))
            step = eta0 / math.sqrt(n) if cfg.step_rule == "diminishing" else eta0
            D_new = project_all(D + step * powers, cfg.trace_scope, cfg.d_floor)

        change = float(np.max(np.abs(D_new - D_prev)) / np.max(np.abs(D_prev)))
        D = D_new
        if change <= cfg.outer_tol:
            stop = "d_change"
            break

    p0, best_n, state, bf = best
    converged = stop != "max_iter" and inner_ok
    report = make_report(
        "pa", ch, quant, bf.w, best_dual,
        inner_iterations=inner_total, outer_iterations=n,
        converged=converged,
        dual_trace=dual_trace, primal_trace=primal_trace,
        best_iteration=best_n, papr_per_bs=cfg.papr_per_bs,
    )
    report.stop_reason = stop
    report.final_D = D
    if not converged:
        log.warning("outer loop stopped (%s) after %d iterations without converging", stop, n)
    return bf, state, report
