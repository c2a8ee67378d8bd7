"""Smoke tests for the python bindings."""

import math

import pytest

import macsic as mx


@pytest.fixture(scope="module")
def rule():
    return mx.gauss_hermite(300)


def test_version():
    assert mx.__version__


def test_scalar_kernels():
    assert mx.gaussian_q(0.0) == pytest.approx(0.5)
    assert mx.gaussian_q_inv(mx.gaussian_q(2.5)) == pytest.approx(2.5, abs=1e-10)
    assert mx.q_pow(-9.0, 2.0**64) == pytest.approx(0.1246957948, abs=1e-6)
    assert mx.binary_entropy(0.5) == pytest.approx(1.0)
    assert mx.marcum_q(1.0, 0.0, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-10)
    with pytest.raises(mx.EnvelopeError):
        mx.marcum_q(1.0, 1e6, 1.0)
    with pytest.raises(ValueError):
        mx.gaussian_q_inv(2.0)


def test_quadrature(rule):
    assert len(rule) == 300
    assert sum(rule.weights) == pytest.approx(1.0, abs=1e-12)


def test_asymptotics(rule):
    code = mx.CodeSpec(1, 1.0)
    assert mx.block_error_prob(code, 4.0, rule) == pytest.approx(
        mx.gaussian_q(math.sqrt(2.0)), abs=1e-10
    )
    v_u = mx.residual_fraction_upper(code, 0.0, rule)
    v_l = mx.residual_fraction_lower(code, 0.0, rule)
    assert v_u == pytest.approx(0.75, abs=1e-10)
    assert v_l <= v_u


def test_evolution(rule):
    profile = mx.PowerProfile([(1.0, 4.9)])
    traj = mx.evolve(mx.CodeSpec(8, 8.0), profile, rule)
    etas = [s.eta for s in traj]
    assert etas == sorted(etas)
    assert etas[-1] > 0.98


def test_simplex():
    lp = mx.LpProblem()
    lp.objective = [1.0, 2.0]
    lp.eq_lhs = [[1.0, 1.0]]
    lp.eq_rhs = [1.0]
    sol = mx.simplex_solve(lp)
    assert sol.status == mx.LpStatus.Optimal
    assert sol.x == pytest.approx([1.0, 0.0], abs=1e-9)


def test_optimize(rule):
    code = mx.CodeSpec(8, 8.0)
    grid = mx.default_power_grid(code, 1e-3, rule, count=48)
    res = mx.optimize_profile(
        code, 1e-3, grid, mx.BoundKind.UpperResidual, rule, nest_steps=6
    )
    assert res.feasible
    assert res.achieved_pe <= 1e-3
    assert res.profile().aggregate_power() == pytest.approx(res.total_power)


def test_simulation():
    code = mx.CodeSpec(2, 2.0)
    profile = mx.PowerProfile([(1.0, 20.0)])
    rep = mx.run_simulation(8, code, profile, trials=50, seed=3, threads=2)
    assert rep.decisions == 400
    assert 0.0 <= rep.error_rate <= 1.0
    again = mx.run_simulation(8, code, profile, trials=50, seed=3, threads=1)
    assert again.error_rate == rep.error_rate


def test_sim_state_iteration():
    code = mx.CodeSpec(2, 2.0)
    profile = mx.PowerProfile([(1.0, 20.0)])
    state = mx.initial_sim_state(8, code, profile, trial_seed=11)
    assert state.iteration == 0
    assert state.interference_power == pytest.approx(21.0)
    nxt = mx.soft_cancel_iteration(state, 8, code, profile)
    assert nxt.iteration == 1
    assert 1.0 <= nxt.interference_power <= state.interference_power
    assert all(0.0 <= p <= 1.0 for p in nxt.error_probs)
