import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_channels
from oracles import project_bisection, socp_minimax
from qcomp import dual, outer
from qcomp.metrics import antenna_powers
from qcomp.quant import from_bits


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=30), st.floats(0.01, 100))
def test_projection_matches_bisection(values, cap):
    d = np.array(values)
    p = outer.project_D(d, cap)
    assert np.all(p >= 0)
    assert p.sum() <= cap * (1 + 1e-12) + 1e-12
    assert np.allclose(p, project_bisection(d, cap), atol=1e-9)
    assert np.allclose(outer.project_D(p, cap), p, atol=1e-12)


def test_projection_is_closest_feasible_point(rng):
    d = rng.normal(0, 3, 6)
    p = outer.project_D(d, 2.0)
    for _ in range(2000):
        y = outer.project_D(rng.normal(0, 3, 6), 2.0)
        assert np.linalg.norm(d - p) <= np.linalg.norm(d - y) + 1e-12


@pytest.mark.parametrize("scope", outer.TRACE_SCOPES)
def test_project_all_respects_floor_and_budget(rng, scope):
    D = rng.normal(1, 2, (3, 5))
    P = outer.project_all(D, scope, floor=0.01)
    assert np.all(P >= 0.01 - 1e-15)
    if scope == "network":
        assert P.sum() <= 15 + 1e-9
    else:
        assert np.all(P.sum(axis=1) <= 5 + 1e-9)


@pytest.mark.parametrize("scope", outer.TRACE_SCOPES)
def test_mirror_step_stays_on_budget(rng, scope):
    D = np.ones((3, 4))
    g = rng.uniform(0, 1, (3, 4))
    N = outer.mirror_step(D, g, 2.0, scope, 1e-3)
    if scope == "network":
        assert N.sum() == pytest.approx(12)
    else:
        assert np.allclose(N.sum(axis=1), 4)
    assert np.all(N >= 1e-3 * (1 - 1e-12))
    # mass moves toward the antennas with the largest powers
    blocks = [N] if scope == "network" else list(N)
    grads = [g] if scope == "network" else list(g)
    for nb, gb in zip(blocks, grads):
        assert np.argmax(nb) == np.argmax(gb)


def _dual_and_powers(ch, q, D, gamma):
    state, bf = outer._inner(ch, q, D, gamma, outer.OuterConfig(inner_tol=1e-13))
    return state.objective(ch.noise_var), antenna_powers(q, bf.w)


@pytest.mark.parametrize("bits", [2, math.inf])
def test_antenna_powers_are_supergradient(rng, bits):
    ch = random_channels(rng, 2, 2, 4, noise_var=0.5)
    q = from_bits(bits)
    gamma = np.full((2, 2), 1.3)
    D = rng.uniform(0.3, 1.7, (2, 4))
    fD, g = _dual_and_powers(ch, q, D, gamma)
    # f is positively homogeneous, so f(D) = <g, D>
    assert fD == pytest.approx(float(np.sum(g * D)), rel=1e-9)
    for _ in range(5):
        E = rng.uniform(0.1, 2.0, (2, 4))
        fE, _ = _dual_and_powers(ch, q, E, gamma)
        assert fE <= fD + np.sum(g * (E - D)) + 1e-9 * fD


def test_baseline_total_power_equals_dual(rng):
    ch = random_channels(rng, 2, 2, 4)
    q = from_bits(3)
    _, _, rep = outer.solve_baseline(ch, q, np.full((2, 2), 1.5))
    assert rep.total_power == pytest.approx(rep.dual_objective, rel=1e-8)
    assert rep.outer_iterations == 0


def _socp_case(seed, bits):
    rng = np.random.default_rng(seed)
    ch = random_channels(rng, 2, 2, 4, spread_db=10)
    return ch, from_bits(bits), np.full((2, 2), rng.uniform(0.8, 2.0))


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("bits", [1, 3, math.inf])
def test_baseline_matches_socp_total_power(seed, bits):
    ch, q, gamma = _socp_case(seed, bits)
    ref = socp_minimax(ch.h, q.alpha, q.beta, gamma, total_power=True)
    if ref is None:
        with pytest.raises(dual.InfeasibleError):
            outer.solve_baseline(ch, q, gamma)
        return
    _, _, rep = outer.solve_baseline(ch, q, gamma)
    assert rep.total_power == pytest.approx(ref, rel=1e-5)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("bits", [1, 3, math.inf])
def test_pa_matches_socp_minimax(seed, bits):
    ch, q, gamma = _socp_case(seed, bits)
    ref = socp_minimax(ch.h, q.alpha, q.beta, gamma)
    if ref is None:
        with pytest.raises(dual.InfeasibleError):
            outer.solve_pa(ch, q, gamma)
        return
    _, _, rep = outer.solve_pa(ch, q, gamma)
    assert rep.converged
    assert rep.max_antenna_power == pytest.approx(ref, rel=1e-3)
    # the dual is a certified lower bound on N_c N_b p0
    assert rep.dual_objective <= 8 * ref * (1 + 1e-5)


def test_pa_dominates_baseline_and_trace_starts_at_baseline(rng):
    ch = random_channels(rng, 3, 2, 6, spread_db=15)
    q = from_bits(3)
    gamma = np.full((3, 2), 1.6)
    _, _, base = outer.solve_baseline(ch, q, gamma)
    _, _, pa = outer.solve_pa(ch, q, gamma)
    assert pa.max_antenna_power <= base.max_antenna_power * (1 + 1e-9)
    assert base.total_power <= pa.total_power * (1 + 1e-9)
    assert pa.primal_trace[0] == pytest.approx(base.max_antenna_power, rel=1e-8)
    assert pa.dual_trace[0] == pytest.approx(base.dual_objective, rel=1e-8)
    assert pa.sinr_error(gamma) < 1e-6


def test_single_user_closed_form(rng):
    for _ in range(5):
        ch = random_channels(rng, 1, 1, 6, noise_var=0.3)
        gamma = np.array([[2.5]])
        _, _, rep = outer.solve_pa(ch, from_bits(math.inf), gamma, outer.OuterConfig(gap_tol=1e-7))
        closed = 2.5 * 0.3 / np.sum(np.abs(ch.h[0, 0, 0])) ** 2
        assert rep.max_antenna_power == pytest.approx(closed, rel=1e-4)


def test_euclidean_update_improves_on_baseline(rng):
    ch = random_channels(rng, 2, 2, 4)
    q = from_bits(3)
    gamma = np.full((2, 2), 1.5)
    _, _, base = outer.solve_baseline(ch, q, gamma)
    _, _, mir = outer.solve_pa(ch, q, gamma)
    cfg = outer.OuterConfig(update="euclidean", max_outer_iters=400)
    _, _, euc = outer.solve_pa(ch, q, gamma, cfg)
    assert euc.max_antenna_power < base.max_antenna_power
    assert euc.max_antenna_power == pytest.approx(mir.max_antenna_power, rel=0.1)


def test_cell_scope_is_still_a_lower_bound(rng):
    ch = random_channels(rng, 2, 2, 4, spread_db=10)
    q = from_bits(3)
    gamma = np.full((2, 2), 1.5)
    _, _, net = outer.solve_pa(ch, q, gamma)
    _, _, cell = outer.solve_pa(ch, q, gamma, outer.OuterConfig(trace_scope="cell"))
    assert cell.dual_objective <= net.dual_objective * (1 + 1e-6)
    assert np.allclose(cell.final_D.sum(axis=1), 4)


def test_iteration_limit_reports_nonconverged(rng):
    ch = random_channels(rng, 2, 2, 4)
    _, _, rep = outer.solve_pa(ch, from_bits(3), np.full((2, 2), 1.5), outer.OuterConfig(max_outer_iters=2, gap_tol=0))
    assert not rep.converged
    assert rep.stop_reason == "max_iter"
    assert rep.outer_iterations == 2


def test_infeasible_propagates():
    from qcomp.netgen import from_vectors

    ch = from_vectors(np.ones((1, 1, 1, 1), dtype=complex))
    with pytest.raises(dual.InfeasibleError):
        outer.solve_pa(ch, from_bits(1), np.array([[20.0]]))


@pytest.mark.parametrize("kwargs", [dict(update="newton"), dict(trace_scope="bs"), dict(outer_tol=0), dict(d_floor=1.0)])
def test_bad_outer_config(kwargs):
    with pytest.raises(ValueError):
        outer.OuterConfig(**kwargs)


def test_subgradient_shape(rng):
    W = rng.standard_normal((3, 2, 5))
    assert outer.subgradient(W).shape == (3, 5)
    assert np.allclose(outer.subgradient(W), np.sum(W**2, axis=1))
