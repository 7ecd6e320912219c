import math

import numpy as np
import pytest

from conftest import random_channels
from oracles import dense_sigma, downlink_sinr
from qcomp import dual, primal
from qcomp.quant import from_bits


@pytest.mark.parametrize("bits", [1, 3, math.inf])
def test_sigma_matches_dense_oracle(rng, bits):
    ch = random_channels(rng, 2, 2, 4)
    q = from_bits(bits)
    f = rng.standard_normal((2, 2, 4)) + 1j * rng.standard_normal((2, 2, 4))
    gamma = rng.uniform(0.5, 2.0, (2, 2))
    S = primal.build_sigma(ch, q, f, gamma)
    assert np.allclose(S, dense_sigma(ch.h, q.alpha, q.beta, f, gamma), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("bits", [2, 3, math.inf])
def test_recovered_precoders_meet_targets_exactly(rng, bits):
    ch = random_channels(rng, 3, 2, 6, noise_var=0.3, spread_db=20)
    q = from_bits(bits)
    gamma = rng.uniform(0.6, 1.6, (3, 2))
    st = dual.solve_dual(ch, q, rng.uniform(0.5, 1.5, (3, 6)), gamma, tol=1e-13)
    f = primal.normalize_combiners(st.f)
    bf = primal.recover_precoders(primal.build_sigma(ch, q, f, gamma), f, ch.noise_var)
    assert np.all(bf.tau >= 0)
    sinr = downlink_sinr(ch.h, q.alpha, q.beta, bf.w, ch.noise_var)
    assert np.allclose(sinr, gamma, rtol=1e-9)


def test_combiner_scale_does_not_change_precoders(rng):
    ch = random_channels(rng, 2, 1, 3)
    q = from_bits(3)
    gamma = np.ones((2, 1))
    f = dual.solve_dual(ch, q, np.ones((2, 3)), gamma).f
    a = primal.recover_precoders(primal.build_sigma(ch, q, f, gamma), f, 1.0)
    g = f * np.array([[[7.0]], [[0.01]]])
    b = primal.recover_precoders(primal.build_sigma(ch, q, g, gamma), g, 1.0)
    assert np.allclose(a.w, b.w, rtol=1e-10)


def test_negative_tau_raises():
    sigma = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(primal.PrecoderRecoveryError) as info:
        primal.recover_precoders(sigma, np.ones((2, 1, 1)), 1.0)
    assert info.value.tau is not None


def test_singular_sigma_raises():
    with pytest.raises(primal.PrecoderRecoveryError):
        primal.recover_precoders(np.ones((2, 2)), np.ones((1, 2, 1)), 1.0)


def test_per_cell_layout(rng):
    w = rng.standard_normal((2, 3, 4))
    bf = primal.BeamformerSet(w=w, tau=np.ones((2, 3)), f=w)
    assert bf.per_cell(1).shape == (4, 3)
    assert np.array_equal(bf.per_cell(1)[:, 2], w[1, 2])
