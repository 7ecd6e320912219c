"""Quick numerical self-checks, runnable without pytest (``qcomp selftest``)."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import integrate, stats

from . import dual, metrics, outer, primal
from .netgen import from_vectors
from .quant import from_bits, quant_noise_cov


def lloyd_max_distortion(bits: int, iters: int = 500) -> float:
    """MSE of the Lloyd-Max quantizer for a unit Gaussian, by direct iteration."""
    n = 2**bits
    levels = stats.norm.ppf((np.arange(n) + 0.5) / n)
    for _ in range(iters):
        edges = np.concatenate([[-np.inf], 0.5 * (levels[1:] + levels[:-1]), [np.inf]])
        mass = np.diff(stats.norm.cdf(edges))
        # E[x | cell] = (phi(a) - phi(b)) / mass
        levels = (stats.norm.pdf(edges[:-1]) - stats.norm.pdf(edges[1:])) / mass
    edges = np.concatenate([[-np.inf], 0.5 * (levels[1:] + levels[:-1]), [np.inf]])
    mse = 0.0
    for k in range(n):
        val, _ = integrate.quad(lambda x, c=levels[k]: (x - c) ** 2 * stats.norm.pdf(x), edges[k], edges[k + 1])
        mse += val
    return mse


def _rand_channels(rng, n_c, n_u, n_b):
    shape = (n_c, n_c, n_u, n_b)
    return from_vectors((rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2))


def _close(a, b, rtol):
    return bool(np.allclose(a, b, rtol=rtol, atol=0.0))


def check_ideal_quantizer():
    q = from_bits(math.inf)
    return q.alpha == 1.0 and q.beta == 0.0


def check_one_bit_beta():
    return abs(from_bits(1).beta - (1 - 2 / math.pi)) < 5e-4


def check_three_bit_beta():
    return abs(from_bits(3).beta - lloyd_max_distortion(3)) / from_bits(3).beta < 5e-4


def check_papr_example():
    return abs(metrics.papr_db(np.array([4, 1, 1, 1, 1, 1, 1, 1.0])) - 10 * math.log10(4 / 1.375)) < 1e-12


def check_cdf_example():
    x, p = metrics.empirical_cdf([1, 2, 2, 3])
    return list(x) == [1, 2, 3] and _close(p, [0.25, 0.75, 1.0], 1e-15)


def check_unit_vector_power():
    W = np.zeros((1, 1, 4), dtype=complex)
    W[0, 0, 0] = 1.0
    return _close(metrics.antenna_powers(from_bits(math.inf), W), [[1, 0, 0, 0]], 1e-15)


def check_quant_noise_identity():
    rng = np.random.default_rng(1)
    ch = _rand_channels(rng, 2, 2, 6)
    W = rng.standard_normal((2, 2, 6)) + 1j * rng.standard_normal((2, 2, 6))
    q = from_bits(2)
    return _close(metrics.quant_noise_terms(ch, q, W), metrics.quant_noise_terms_by_stream(ch, q, W), 1e-12)


def check_z_identity():
    rng = np.random.default_rng(2)
    ch = _rand_channels(rng, 2, 2, 5)
    q = from_bits(3)
    lam = rng.uniform(0.1, 1, (2, 2))
    D = rng.uniform(0.5, 1.5, (2, 5))
    K = dual.build_K(ch, q, lam, D[0], 0)
    Z = dual.build_Z(ch, q, lam, D[0], 0, 1)
    h = ch.direct(0, 1)
    ref = q.alpha * K - q.alpha**2 * lam[0, 1] * np.outer(h, h.conj())
    return _close(Z, ref, 1e-12)


def check_projection():
    rng = np.random.default_rng(3)
    for _ in range(200):
        d = rng.normal(0, 2, 8)
        p = outer.project_D(d, 3.0)
        if np.any(p < 0) or p.sum() > 3.0 + 1e-9 or not _close(outer.project_D(p, 3.0), p, 1e-12):
            return False
    return True


def check_single_user_closed_form():
    rng = np.random.default_rng(4)
    ch = _rand_channels(rng, 1, 1, 4)
    gamma = np.array([[2.0]])
    _, _, rep = outer.solve_pa(ch, from_bits(math.inf), gamma, outer.OuterConfig(gap_tol=1e-7))
    closed = gamma[0, 0] * ch.noise_var / np.sum(np.abs(ch.h[0, 0, 0])) ** 2
    return abs(rep.max_antenna_power - closed) / closed < 1e-3


def check_pa_solve():
    rng = np.random.default_rng(5)
    ch = _rand_channels(rng, 2, 2, 4)
    gamma = np.full((2, 2), 1.5)
    q = from_bits(3)
    _, _, base = outer.solve_baseline(ch, q, gamma)
    _, _, rep = outer.solve_pa(ch, q, gamma)
    return (
        rep.converged
        and rep.sinr_error(gamma) < 1e-6
        and rep.duality_gap_rel < 0.01
        and rep.max_antenna_power <= base.max_antenna_power * (1 + 1e-9)
    )


def check_sigma_recovery():
    rng = np.random.default_rng(6)
    ch = _rand_channels(rng, 2, 1, 3)
    q = from_bits(2)
    gamma = np.full((2, 1), 1.0)
    st = dual.solve_dual(ch, q, np.ones((2, 3)), gamma)
    bf = primal.recover_precoders(primal.build_sigma(ch, q, st.f, gamma), st.f, ch.noise_var)
    return _close(metrics.dl_sinr(ch, q, bf.w, ch.noise_var), gamma, 1e-8)


def check_cov_consistency():
    rng = np.random.default_rng(7)
    q = from_bits(2)
    W = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    total = np.real(np.diag(q.alpha**2 * W @ W.conj().T + quant_noise_cov(q, W)))
    return _close(total, metrics.antenna_powers(q, W.T[None])[0], 1e-12)


CHECKS: list[tuple[str, Callable[[], bool]]] = [
    ("quant: b=inf gives alpha=1, beta=0", check_ideal_quantizer),
    ("quant: b=1 beta = 1 - 2/pi", check_one_bit_beta),
    ("quant: b=3 beta matches Lloyd-Max", check_three_bit_beta),
    ("quant: alpha^2 WW^H + C_q diagonal = antenna powers", check_cov_consistency),
    ("metrics: PAPR of (4,1,...,1)", check_papr_example),
    ("metrics: CDF of (1,2,2,3)", check_cdf_example),
    ("metrics: unit vector antenna power", check_unit_vector_power),
    ("metrics: quantization noise two ways", check_quant_noise_identity),
    ("dual: Z = alpha K - alpha^2 lam h h^H", check_z_identity),
    ("primal: recovered precoders meet targets", check_sigma_recovery),
    ("outer: projection feasible and idempotent", check_projection),
    ("outer: single-user closed form", check_single_user_closed_form),
    ("outer: small network PA solve", check_pa_solve),
]


def run(echo: Callable[[str], None] = print) -> bool:
    ok = True
    for name, fn in CHECKS:
        try:
            passed = bool(fn())
            detail = ""
        except Exception as exc:  # report and keep going
            passed = False
            detail = f" ({type(exc).__name__}: {exc})"
        ok &= passed
        echo(f"{'PASS' if passed else 'FAIL'}  {name}{detail}")
    return ok
