import math

import numpy as np
import pytest

from conftest import random_channels
from oracles import dense_K, dense_Z, single_user_lambda, two_user_lambda
from qcomp import dual
from qcomp.quant import from_bits


@pytest.mark.parametrize("bits", [1, 3, math.inf])
def test_K_matches_dense_oracle(rng, bits):
    ch = random_channels(rng, 3, 2, 5)
    q = from_bits(bits)
    lam = rng.uniform(0.1, 2.0, (3, 2))
    D = rng.uniform(0.2, 2.0, (3, 5))
    for i in range(3):
        K = dual.build_K(ch, q, lam, D[i], i)
        assert np.allclose(K, dense_K(ch.h, q.alpha, q.beta, lam, D[i], i), rtol=1e-13, atol=1e-14)
        assert np.allclose(K, K.conj().T)


@pytest.mark.parametrize("bits", [1, 3, math.inf])
def test_Z_matches_dense_oracle_and_identity(rng, bits):
    ch = random_channels(rng, 2, 3, 4)
    q = from_bits(bits)
    lam = rng.uniform(0.1, 2.0, (2, 3))
    D = rng.uniform(0.2, 2.0, (2, 4))
    for i in range(2):
        K = dual.build_K(ch, q, lam, D[i], i)
        for u in range(3):
            Z = dual.build_Z(ch, q, lam, D[i], i, u)
            assert np.allclose(Z, dense_Z(ch.h, q.alpha, q.beta, lam, D[i], i, u), rtol=1e-13, atol=1e-14)
            h = ch.direct(i, u)
            ident = q.alpha * K - q.alpha**2 * lam[i, u] * np.outer(h, h.conj())
            assert np.max(np.abs(Z - ident)) <= 1e-12 * np.max(np.abs(Z))


def test_single_user_fixed_point_matches_root(rng):
    ch = random_channels(rng, 1, 1, 6)
    q = from_bits(2)
    D = rng.uniform(0.5, 1.5, (1, 6))
    res = dual.fixed_point_lambda(ch, q, D, np.array([[2.0]]), tol=1e-13)
    ref = single_user_lambda(ch.h[0, 0, 0], q.alpha, q.beta, 2.0, D[0])
    assert res.converged
    assert res.lam[0, 0] == pytest.approx(ref, rel=1e-10)


def test_two_cell_fixed_point_matches_root(rng):
    ch = random_channels(rng, 2, 1, 3)
    q = from_bits(3)
    D = np.ones((2, 3))
    gamma = np.array([[1.5], [0.8]])
    res = dual.fixed_point_lambda(ch, q, D, gamma, tol=1e-13)
    ref = two_user_lambda(ch.h, q.alpha, q.beta, gamma, D)
    assert np.allclose(res.lam, ref, rtol=1e-9)


def test_uplink_sinr_equals_target_at_fixed_point(rng):
    ch = random_channels(rng, 2, 2, 4)
    q = from_bits(3)
    gamma = np.full((2, 2), 1.2)
    D = np.ones((2, 4))
    st = dual.solve_dual(ch, q, D, gamma, tol=1e-13)
    for i in range(2):
        for u in range(2):
            Z = dual.build_Z(ch, q, st.lam, D[i], i, u)
            s = dual.ul_sinr(st.lam[i, u], st.f[i, u], Z, ch.direct(i, u), q)
            assert s == pytest.approx(gamma[i, u], rel=1e-9)


def test_fixed_point_monotone_from_below(rng):
    # standard interference function started below the fixed point increases monotonically
    ch = random_channels(rng, 2, 2, 4)
    q = from_bits(2)
    seen = []
    dual.fixed_point_lambda(ch, q, np.ones((2, 4)), np.full((2, 2), 1.0), lam0=np.full((2, 2), 1e-9), callback=seen.append)
    for a, b in zip(seen, seen[1:]):
        assert np.all(b >= a * (1 - 1e-12))


def test_infeasible_targets_raise():
    # a single 1-bit antenna cannot beat the quantization noise ceiling alpha/beta
    h = np.ones((1, 1, 1, 1), dtype=complex)
    from qcomp.netgen import from_vectors

    ch = from_vectors(h)
    q = from_bits(1)
    gamma = np.array([[10.0 * q.alpha / q.beta]])
    with pytest.raises(dual.InfeasibleError) as info:
        dual.fixed_point_lambda(ch, q, np.ones((1, 1)), gamma)
    assert info.value.lam is not None


def test_nonconverged_is_reported(rng):
    ch = random_channels(rng, 2, 2, 4)
    res = dual.fixed_point_lambda(ch, from_bits(3), np.ones((2, 4)), np.full((2, 2), 2.0), tol=1e-15, max_iter=2)
    assert not res.converged
    assert res.iterations == 2


def test_non_pd_covariance_raises():
    with pytest.raises(dual.NumericalError):
        dual.mmse_combiner(np.array([[1.0, 2.0], [2.0, 1.0]]), np.ones(2))


def test_objective_is_scaled_sum(rng):
    ch = random_channels(rng, 1, 2, 3, noise_var=0.5)
    st = dual.solve_dual(ch, from_bits(3), np.ones((1, 3)), np.ones((1, 2)))
    assert st.objective(0.5) == pytest.approx(0.5 * st.lam.sum())
