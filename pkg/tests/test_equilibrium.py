from fractions import Fraction

import numpy as np
import pytest

from aratgame import equilibrium
from aratgame.best_response import BestResponseResult, slater_point
from aratgame.equilibrium import (
    IterationConfig,
    iterate,
    mix_restore_feasibility,
    mixture_lower_bound,
    perturbation_constant,
    perturbed_instance,
    perturbed_sequence,
    verify_epsilon_nash,
)
from aratgame.game import generate_random
from aratgame.numerics import LpStatus
from aratgame.occupation import (
    MarginalMeasure,
    constraint_value,
    evaluate,
    occupation_measure,
    uniform_policy,
)
from aratgame.validation import StationaryPolicy

from builders import decoupled, single_state, solo_policy


@pytest.mark.parametrize("kw", [dict(max_iterations=-1), dict(damping=0.0), dict(damping=1.5),
                                dict(tol=0.0), dict(epsilon=-1.0), dict(max_iterations=2.5)])
def test_config_ranges(kw):
    with pytest.raises(ValueError):
        IterationConfig(**kw)


def test_zero_iterations_reports_uniform_profile():
    g = generate_random(1, 3, 2, 2, 1, 0.9)
    report = iterate(g, IterationConfig(max_iterations=0))
    assert not report.converged and report.iterations == 0
    u1, u2 = uniform_policy(g, 1), uniform_policy(g, 2)
    np.testing.assert_array_equal(report.pi1.table, u1.table)
    _, payoffs, _ = evaluate(g, u1, u2)
    assert report.payoffs == pytest.approx(payoffs, abs=1e-15)


def test_constant_game_converges_immediately():
    g = single_state([[0.7, 0.7]], r1_opp=[[0.1, 0.1]], r2_own=[[2.0, 2.0]], r2_opp=[[0.0, 0.0]],
                     c1_own=[[[1.0], [1.0]]], c2_own=[[[1.0], [1.0]]], rho1=[0.0], rho2=[0.0])
    report = iterate(g)
    assert report.converged and report.iterations == 1
    assert report.regrets == pytest.approx((0.0, 0.0), abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_undamped_decoupled_game_converges_in_two_steps(seed):
    g = decoupled(seed)
    report = iterate(g, IterationConfig(damping=1.0))
    assert report.converged and report.iterations <= 2
    mx = occupation_measure(g, report.pi1, report.pi2).x_marginal
    for player, pi in ((1, report.pi1), (2, report.pi2)):
        table, _ = solo_policy(g, player)
        live = mx > 1e-9
        np.testing.assert_allclose(pi.table[live], table[live], atol=1e-6)


def test_static_regret_fails_verification():
    g = single_state([[1.0, 0.0]], r1_opp=[[0.0]])
    v = verify_epsilon_nash(g, StationaryPolicy(1, [[0.0, 1.0]]), StationaryPolicy(2, [[1.0]]), 1e-6)
    assert v.regrets[0] == pytest.approx(1.0, abs=1e-12)
    assert not v.passed and v.no_profitable_deviation == (False, True)


def test_constraint_violation_reports_slack():
    g = single_state([[0.0, 0.0]], c1_own=[[[0.3], [0.3]]], rho1=[0.5], rho2=[-1.0])
    v = verify_epsilon_nash(g, uniform_policy(g, 1), uniform_policy(g, 2), 1e-6)
    assert v.slacks[0] == pytest.approx(-0.2, abs=1e-12)
    assert v.feasible == (False, True) and not v.passed
    assert v.regrets[0] is None  # no feasible deviation exists
    assert v.defect == pytest.approx(0.2, abs=1e-12)


def _two_point_game(delta=0.5, eps=0.01, rho=0.2):
    """Single state where action 0 misses the level by ``eps`` and action 1 clears it by ``delta``."""
    return single_state([[0.0, 0.0]], c1_own=[[[rho - eps], [rho + delta]]], rho1=[rho])


def test_mixture_endpoints():
    a = MarginalMeasure(1, [[0.2, 0.8]])
    b = MarginalMeasure(1, [[0.9, 0.1]])
    np.testing.assert_array_equal(mix_restore_feasibility(a, b, 1.0).table, b.table)
    near = mix_restore_feasibility(a, b, 1e-12).table
    np.testing.assert_allclose(near, a.table, atol=1e-5)
    with pytest.raises(ValueError):
        mix_restore_feasibility(a, b, 0.0)
    with pytest.raises(ValueError):
        mix_restore_feasibility(a, b, 1.5)


def test_mixture_bound_example():
    g = _two_point_game()
    target = MarginalMeasure(1, [[1.0, 0.0]])
    sp = slater_point(g, 1, StationaryPolicy(2, [[1.0]]))
    assert sp.margin == pytest.approx(0.5, abs=1e-12)
    mixed = mix_restore_feasibility(target, sp.gamma, 0.01)
    mu = occupation_measure(g, StationaryPolicy(1, mixed.table), StationaryPolicy(2, [[1.0]]))
    value = constraint_value(g, mu, 1)[0]
    # 0.9 * 0.19 + 0.1 * 0.7
    assert value == pytest.approx(0.241, abs=1e-12)
    bound = float(mixture_lower_bound(0.2, 0.5, 0.01)[()])
    # 0.2 + 0.1 * (0.5 - 0.9 * 0.1); the bound is tight when the target misses by exactly eps
    assert bound == pytest.approx(0.241, abs=1e-15)
    assert value >= bound - 1e-12
    assert value >= 0.2401


def test_restore_branch_mixes_towards_slater_point(monkeypatch):
    """Force the best-response solver to report infeasibility while a Slater point exists."""
    g = _two_point_game(delta=0.5, eps=0.01)
    monkeypatch.setattr(equilibrium, "constrained_best_response",
                        lambda inst, player, opp: BestResponseResult(LpStatus.INFEASIBLE, player))
    events = []
    current = StationaryPolicy(1, [[1.0, 0.0]])
    out = equilibrium._response(g, 1, current, StationaryPolicy(2, [[1.0]]), 0.0, -0.01, events, 1)
    np.testing.assert_allclose(out.table, [[0.9, 0.1]], atol=1e-12)
    assert events[0]["event"] == "feasibility_restored"
    assert events[0]["eps"] == pytest.approx(0.01, abs=1e-12)


def test_infeasible_game_is_reported_not_converged():
    g = single_state([[1.0, 0.0]], c1_own=[[[0.0], [0.5]]], rho1=[0.9])
    report = iterate(g)
    assert report.status == "infeasible" and not report.converged
    assert report.nonpositive_slater
    assert report.events[0]["event"] == "infeasible_best_response"


@pytest.mark.parametrize("seed", range(12))
def test_reports_never_overstate(seed):
    g = generate_random(seed, 3, 2, 2, 1, 0.9)
    report = iterate(g, IterationConfig(max_iterations=200))
    if report.converged:
        assert report.status == "stationary"
        assert report.trace[-1] <= 1e-8
        assert verify_epsilon_nash(g, report.pi1, report.pi2, 1e-6).passed
    for slack, regret in zip(report.slacks, report.regrets):
        if regret is not None and slack >= 0:
            assert regret >= -1e-7


def test_perturbation_formulas_exact():
    g = generate_random(3, 4, 2, 2, 1, 0.9).with_changes(eta=[0.5, 0.25, 0.25, 0.0])
    c = perturbation_constant(g)
    for n in (0, 1, 9):
        gn = perturbed_instance(g, n)
        expected = [Fraction(n, n + 1) * Fraction(v) + Fraction(1, n + 1) * Fraction(1, 4)
                    for v in ("0.5", "0.25", "0.25", "0")]
        np.testing.assert_allclose(gn.eta, [float(e) for e in expected], atol=1e-15)
        np.testing.assert_allclose(gn.rho1, g.rho1 - c / (n + 1), atol=1e-15)
    np.testing.assert_allclose(perturbed_instance(g, 0).eta, 0.25, atol=1e-15)


def test_uniform_initial_law_is_fixed():
    g = generate_random(3, 5, 2, 2, 1, 0.9).with_changes(eta=np.full(5, 0.2))
    for n in range(6):
        np.testing.assert_allclose(perturbed_instance(g, n).eta, 0.2, atol=1e-15)


def test_level_shift_arithmetic():
    g = generate_random(3, 2, 2, 2, 1, 0.9).with_changes(rho1=[0.3], rho2=[0.3])
    gn = perturbed_instance(g, 9, constant=2.0)
    assert gn.rho1[0] == pytest.approx(0.1, abs=1e-15)
    assert gn.rho2[0] == pytest.approx(0.1, abs=1e-15)


def test_perturbation_constant_bounds_constraint_drift():
    g = generate_random(9, 4, 2, 2, 2, 0.9).with_changes(eta=[0.7, 0.3, 0.0, 0.0])
    c = perturbation_constant(g)
    rng = np.random.default_rng(9)
    for n in (0, 1, 5):
        gn = perturbed_instance(g, n)
        for _ in range(5):
            pi1 = StationaryPolicy(1, rng.dirichlet(np.ones(2), size=4))
            pi2 = StationaryPolicy(2, rng.dirichlet(np.ones(2), size=4))
            for player in (1, 2):
                drift = (constraint_value(gn, occupation_measure(gn, pi1, pi2), player)
                         - constraint_value(g, occupation_measure(g, pi1, pi2), player))
                assert np.abs(drift).max() <= c / (n + 1) + 1e-12


def test_perturbed_sequence_shape():
    g = generate_random(2, 3, 2, 2, 1, 0.9)
    result = perturbed_sequence(g, 2, IterationConfig(max_iterations=100))
    assert [s.n for s in result.steps] == [0, 1, 2]
    assert result.final is result.steps[-1].original
    doc = result.to_dict()
    assert len(doc["steps"]) == 3 and "final_on_original" in doc
    with pytest.raises(ValueError):
        perturbed_sequence(g, -1)
