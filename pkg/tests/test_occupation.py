import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aratgame.game import GameInstance, assemble_kernel, generate_random
from aratgame.occupation import (
    MarginalMeasure,
    balance_residual,
    constraint_value,
    disintegrate,
    kernel_under_profile,
    occupation_measure,
    occupation_x_marginal,
    payoff,
    total_variation,
    truncated_series_oracle,
    uniform_policy,
)
from aratgame.validation import PolicyError, StationaryPolicy

from builders import single_state


def random_policy(rng, game, player, sharp=False):
    mask = game.mask(player)
    w = rng.dirichlet(np.full(mask.shape[1], 0.3 if sharp else 1.0), size=mask.shape[0]) * mask
    w[w.sum(axis=1) == 0] = mask[w.sum(axis=1) == 0]
    return StationaryPolicy(player, w / w.sum(axis=1, keepdims=True))


def deterministic_policy(game, player, choice):
    t = np.zeros(game.mask(player).shape)
    t[np.arange(t.shape[0]), choice] = 1.0
    return StationaryPolicy(player, t)


def action_free_game(v, nX=3, n1=2, n2=2, beta=0.8, eta=None):
    """Transitions to ``v(y)`` regardless of state and actions."""
    q = np.broadcast_to(0.5 * np.asarray(v)[:, None, None], (nX, nX, 1))
    return GameInstance(
        r1_own=np.zeros((nX, n1)), r1_opp=np.zeros((nX, n2)),
        r2_own=np.zeros((nX, n2)), r2_opp=np.zeros((nX, n1)),
        q1=np.repeat(q, n1, axis=2), q2=np.repeat(q, n2, axis=2), beta=beta,
        eta=np.full(nX, 1.0 / nX) if eta is None else eta,
    )


def test_action_independent_kernel():
    v = np.array([0.2, 0.5, 0.3])
    g = action_free_game(v)
    rng = np.random.default_rng(0)
    for _ in range(5):
        P = kernel_under_profile(g, random_policy(rng, g, 1), random_policy(rng, g, 2))
        np.testing.assert_allclose(P, np.tile(v, (3, 1)), atol=1e-15)


def test_deterministic_profile_kernel():
    g = generate_random(4, 3, 3, 2, 0, 0.9)
    a, b = np.array([2, 0, 1]), np.array([1, 1, 0])
    P = kernel_under_profile(g, deterministic_policy(g, 1, a), deterministic_policy(g, 2, b))
    Q = assemble_kernel(g)
    for x in range(3):
        np.testing.assert_array_equal(P[x], Q[x, a[x], b[x]])


def test_two_state_kernel_hand_computed():
    g = generate_random(11, 2, 2, 2, 0, 0.9)
    pi1 = StationaryPolicy(1, np.full((2, 2), 0.5))
    pi2 = deterministic_policy(g, 2, [0, 1])
    P = kernel_under_profile(g, pi1, pi2)
    for x, b in ((0, 0), (1, 1)):
        for y in range(2):
            slice0 = g.q1[y, x, 0] + g.q2[y, x, b]
            slice1 = g.q1[y, x, 1] + g.q2[y, x, b]
            assert P[x, y] == pytest.approx(0.5 * slice0 + 0.5 * slice1, abs=1e-15)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)


def test_absorbing_chain_keeps_eta():
    q1 = np.zeros((3, 3, 2))
    for x in range(3):
        q1[x, x, :] = 1.0
    eta = np.array([0.1, 0.6, 0.3])
    g = GameInstance(r1_own=np.zeros((3, 2)), r1_opp=np.zeros((3, 2)), r2_own=np.zeros((3, 2)),
                     r2_opp=np.zeros((3, 2)), q1=q1, q2=np.zeros((3, 3, 2)), beta=0.95, eta=eta)
    mx = occupation_x_marginal(g, uniform_policy(g, 1), uniform_policy(g, 2))
    np.testing.assert_allclose(mx, eta, atol=1e-15)


def test_uniform_stationary_chain():
    g = action_free_game(np.full(3, 1 / 3))
    mx = occupation_x_marginal(g, uniform_policy(g, 1), uniform_policy(g, 2))
    np.testing.assert_allclose(mx, 1 / 3, atol=1e-15)


def test_single_state_product_form():
    g = single_state([[0.0, 0.0]], r1_opp=[[0.0]])
    mu = occupation_measure(g, StationaryPolicy(1, [[0.3, 0.7]]), StationaryPolicy(2, [[1.0]]))
    np.testing.assert_allclose(mu.table[0, :, 0], [0.3, 0.7], atol=1e-15)


def test_linear_equations_seed3():
    g = generate_random(3, 4, 3, 3, 1, 0.9)
    rng = np.random.default_rng(3)
    for _ in range(10):
        mu = occupation_measure(g, random_policy(rng, g, 1), random_policy(rng, g, 2))
        assert balance_residual(g, mu) <= 1e-9


def test_deterministic_profile_support():
    g = generate_random(8, 3, 2, 3, 0, 0.9)
    a, b = np.array([1, 0, 1]), np.array([2, 2, 0])
    mu = occupation_measure(g, deterministic_policy(g, 1, a), deterministic_policy(g, 2, b))
    for x in range(3):
        support = np.argwhere(mu.table[x] > 0)
        assert support.tolist() == [[a[x], b[x]]]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5), st.sampled_from([0.3, 0.9, 0.99]))
def test_occupation_properties(seed, nX, beta):
    g = generate_random(seed, nX, 3, 2, 1, beta)
    rng = np.random.default_rng(seed)
    pi1, pi2 = random_policy(rng, g, 1, sharp=True), random_policy(rng, g, 2, sharp=True)
    mu = occupation_measure(g, pi1, pi2)
    mx = occupation_x_marginal(g, pi1, pi2)
    expected = mx[:, None, None] * pi1.table[:, :, None] * pi2.table[:, None, :]
    np.testing.assert_array_equal(mu.table, expected)
    assert balance_residual(g, mu) <= 1e-9
    assert np.all(mx >= (1 - beta) * g.eta - 1e-15)
    assert mu.mass == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(mu.marginal1, mu.table.sum(axis=2), atol=1e-12)
    # disintegration recovers each policy where the state carries mass
    live = mx > 1e-9
    np.testing.assert_allclose(disintegrate(mu.marginal(1), g).table[live], pi1.table[live], atol=1e-9)
    np.testing.assert_allclose(disintegrate(mu.marginal(2), g).table[live], pi2.table[live], atol=1e-9)


def test_series_oracle_first_term():
    g = generate_random(2, 3, 2, 2, 0, 0.7)
    pi1, pi2 = uniform_policy(g, 1), uniform_policy(g, 2)
    mu0 = truncated_series_oracle(g, pi1, pi2, 0)
    expected = 0.3 * g.eta[:, None, None] * pi1.table[:, :, None] * pi2.table[:, None, :]
    np.testing.assert_allclose(mu0.table, expected, atol=1e-15)


def test_series_oracle_mass_and_gap_random_4_state():
    g = generate_random(12, 4, 2, 3, 0, 0.95)
    rng = np.random.default_rng(12)
    pi1, pi2 = random_policy(rng, g, 1), random_policy(rng, g, 2)
    mu = occupation_measure(g, pi1, pi2)
    for T in (0, 5, 50, 400):
        approx = truncated_series_oracle(g, pi1, pi2, T)
        assert approx.mass == pytest.approx(1 - 0.95 ** (T + 1), abs=1e-12)
        assert np.abs(approx.table - mu.table).max() <= 0.95 ** (T + 1) + 1e-9


def test_series_oracle_rejects_negative_horizon():
    g = generate_random(2, 2, 2, 2, 0, 0.7)
    with pytest.raises(ValueError):
        truncated_series_oracle(g, uniform_policy(g, 1), uniform_policy(g, 2), -1)


def test_constant_reward_payoff():
    g = single_state([[5.0]], r1_opp=[[0.0]], beta=0.9)
    mu = occupation_measure(g, StationaryPolicy(1, [[1.0]]), StationaryPolicy(2, [[1.0]]))
    assert payoff(g, mu, 1) == pytest.approx(5.0, abs=1e-12)
    assert payoff(g, mu, 2) == 0.0


def test_payoff_and_constraint_against_assembled_tables():
    from aratgame.game import assemble_constraint, assemble_reward

    g = generate_random(21, 3, 2, 3, 2, 0.85)
    rng = np.random.default_rng(21)
    mu = occupation_measure(g, random_policy(rng, g, 1), random_policy(rng, g, 2))
    for player in (1, 2):
        assert payoff(g, mu, player) == pytest.approx(
            float((assemble_reward(g, player) * mu.table).sum()), abs=1e-12)
        np.testing.assert_allclose(
            constraint_value(g, mu, player),
            np.einsum("xabk,xab->k", assemble_constraint(g, player), mu.table), atol=1e-12)


def test_disintegrate_product_input():
    g = generate_random(5, 3, 3, 2, 0, 0.9)
    eta = np.array([0.2, 0.5, 0.3])
    pi = random_policy(np.random.default_rng(5), g, 1)
    out = disintegrate(MarginalMeasure(1, eta[:, None] * pi.table), g)
    np.testing.assert_allclose(out.table, pi.table, atol=1e-15)


def test_disintegrate_zero_mass_state_is_uniform():
    g = generate_random(5, 3, 3, 2, 0, 0.9).with_changes(
        mask1=np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]], dtype=bool),
        actions1=(("a", "b", "c"), ("a", "c"), ("a", "b", "c")))
    gamma = np.array([[0.5, 0.0, 0.0], [0.0, 0.0, 0.0], [0.25, 0.25, 0.0]])
    out = disintegrate(gamma, g, 1)
    np.testing.assert_array_equal(out.table[1], [0.5, 0.0, 0.5])
    np.testing.assert_array_equal(out.table[0], [1.0, 0.0, 0.0])


@pytest.mark.parametrize("seed", range(10))
def test_marginal_set_is_convex(seed):
    g = generate_random(300 + seed, 3, 3, 2, 0, 0.9)
    rng = np.random.default_rng(seed)
    pi2 = random_policy(rng, g, 2)
    g1 = occupation_measure(g, random_policy(rng, g, 1, sharp=True), pi2).marginal1
    g2 = occupation_measure(g, random_policy(rng, g, 1, sharp=True), pi2).marginal1
    for a in (0.0, 0.3, 0.5, 0.9, 1.0):
        mix = a * g1 + (1 - a) * g2
        pi = disintegrate(MarginalMeasure(1, mix), g)
        np.testing.assert_allclose(occupation_measure(g, pi, pi2).marginal1, mix, atol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_continuity_in_initial_law(seed):
    g = generate_random(400 + seed, 4, 2, 2, 0, 0.9)
    rng = np.random.default_rng(seed)
    pi1, pi2 = random_policy(rng, g, 1), random_policy(rng, g, 2)
    other = rng.dirichlet(np.ones(4))
    for w in (1.0, 0.5, 0.1):
        eta2 = (1 - w) * g.eta + w * other
        d_eta = total_variation(g.eta, eta2)
        d_mu = total_variation(occupation_measure(g, pi1, pi2).table,
                               occupation_measure(g.with_changes(eta=eta2), pi1, pi2).table)
        assert d_mu <= d_eta + 1e-12


def test_policy_checks():
    g = generate_random(1, 2, 2, 2, 0, 0.9).with_changes(
        mask1=np.array([[1, 0], [1, 1]], dtype=bool), actions1=(("a",), ("a", "b")))
    with pytest.raises(PolicyError):
        occupation_measure(g, StationaryPolicy(1, [[0.5, 0.5], [0.5, 0.5]]), uniform_policy(g, 2))
    with pytest.raises(PolicyError):
        occupation_measure(g, StationaryPolicy(1, [[1.0, 0.0], [0.6, 0.6]]), uniform_policy(g, 2))
    with pytest.raises(PolicyError):
        occupation_measure(g, StationaryPolicy(1, [[1.0], [1.0]]), uniform_policy(g, 2))
