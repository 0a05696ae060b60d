"""Occupation measures, payoffs and constraint values of stationary profiles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import GameInstance, assemble_kernel
from .numerics import solve_linear
from .validation import StationaryPolicy, check_instance, check_player, check_policy, check_profile

ZERO_MASS = 1e-12


@dataclass(frozen=True, eq=False)
class OccupationMeasure:
    """Discounted state-action visitation table ``mu[x, a1, a2]``.

    Marginals are computed once at construction.
    """

    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float, copy=True)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        for name, axes in (("x_marginal", (1, 2)), ("marginal1", 2), ("marginal2", 1)):
            m = t.sum(axis=axes)
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @property
    def mass(self) -> float:
        return float(self.table.sum())

    def marginal(self, player: int) -> "MarginalMeasure":
        return MarginalMeasure(player, self.marginal1 if player == 1 else self.marginal2)

    def to_dict(self) -> dict:
        return {
            "mu": self.table.tolist(),
            "mu_x": self.x_marginal.tolist(),
            "mu_x_a1": self.marginal1.tolist(),
            "mu_x_a2": self.marginal2.tolist(),
        }


@dataclass(frozen=True, eq=False)
class MarginalMeasure:
    """One player's state-action marginal ``gamma[x, a_i]``."""

    player: int
    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float, copy=True)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        m = t.sum(axis=1)
        m.setflags(write=False)
        object.__setattr__(self, "x_marginal", m)

    @property
    def mass(self) -> float:
        return float(self.table.sum())


def uniform_policy(instance: GameInstance, player: int) -> StationaryPolicy:
    mask = instance.mask(check_player(player)).astype(float)
    return StationaryPolicy(player, mask / mask.sum(axis=1, keepdims=True))


def kernel_under_profile(instance: GameInstance, pi1, pi2) -> np.ndarray:
    """State-to-state kernel ``P[x, y]`` induced by a stationary profile."""
    pi1, pi2 = check_profile(instance, pi1, pi2)
    Q = assemble_kernel(instance)
    return np.einsum("xaby,xa,xb->xy", Q, pi1.table, pi2.table)


def _x_marginal_from_kernel(instance: GameInstance, P: np.ndarray) -> np.ndarray:
    beta = instance.beta
    A = np.eye(instance.n_states) - beta * P.T
    return solve_linear(A, (1.0 - beta) * instance.eta)


def occupation_x_marginal(instance: GameInstance, pi1, pi2) -> np.ndarray:
    """State marginal of the occupation measure, from the discounted balance equation."""
    return _x_marginal_from_kernel(instance, kernel_under_profile(instance, pi1, pi2))


def occupation_measure(instance: GameInstance, pi1, pi2) -> OccupationMeasure:
    pi1, pi2 = check_profile(instance, pi1, pi2)
    mx = occupation_x_marginal(instance, pi1, pi2)
    return OccupationMeasure(mx[:, None, None] * pi1.table[:, :, None] * pi2.table[:, None, :])


def balance_residual(instance: GameInstance, mu: OccupationMeasure) -> float:
    """Max-norm residual of ``mu^X - (1-beta) eta - beta mu Q`` plus the mass defect."""
    Q = assemble_kernel(instance)
    flow = np.einsum("xab,xaby->y", mu.table, Q)
    r = mu.x_marginal - (1.0 - instance.beta) * instance.eta - instance.beta * flow
    return max(float(np.abs(r).max()), abs(mu.mass - 1.0))


def _mu_check(instance, mu):
    if not isinstance(mu, OccupationMeasure):
        raise TypeError(f"expected an OccupationMeasure, got {type(mu).__name__}")
    shape = (instance.n_states, instance.n_actions1, instance.n_actions2)
    if mu.table.shape != shape:
        raise ValueError(f"occupation table has shape {mu.table.shape}, expected {shape}")


def payoff(instance: GameInstance, mu: OccupationMeasure, player: int) -> float:
    """Normalized discounted payoff of ``player`` integrated against the marginals."""
    _mu_check(instance, mu)
    if check_player(player) == 1:
        own, opp = instance.r1_own, instance.r1_opp
        return float((own * mu.marginal1).sum() + (opp * mu.marginal2).sum())
    own, opp = instance.r2_own, instance.r2_opp
    return float((opp * mu.marginal1).sum() + (own * mu.marginal2).sum())


def constraint_value(instance: GameInstance, mu: OccupationMeasure, player: int) -> np.ndarray:
    _mu_check(instance, mu)
    if check_player(player) == 1:
        own, opp = instance.c1_own, instance.c1_opp
        return np.einsum("xak,xa->k", own, mu.marginal1) + np.einsum("xbk,xb->k", opp, mu.marginal2)
    own, opp = instance.c2_own, instance.c2_opp
    return np.einsum("xak,xa->k", opp, mu.marginal1) + np.einsum("xbk,xb->k", own, mu.marginal2)


def disintegrate(gamma, instance: GameInstance, player: int | None = None) -> StationaryPolicy:
    """Recover the policy ``pi`` with ``gamma = gamma^X (x) pi``.

    States carrying (numerically) no mass get the uniform row over their
    feasible actions.
    """
    if isinstance(gamma, MarginalMeasure):
        player = gamma.player if player is None else player
        table = gamma.table
    else:
        table = np.asarray(gamma, dtype=float)
    player = check_player(player)
    mask = instance.mask(player)
    if table.shape != mask.shape:
        raise ValueError(f"marginal has shape {table.shape}, expected {mask.shape}")
    table = np.where(mask, np.maximum(table, 0.0), 0.0)
    gx = table.sum(axis=1)
    uniform = mask / mask.sum(axis=1, keepdims=True)
    live = gx > ZERO_MASS
    out = np.where(live[:, None], table / np.where(live, gx, 1.0)[:, None], uniform)
    return StationaryPolicy(player, out)


def truncated_series_oracle(instance: GameInstance, pi1, pi2, horizon: int) -> OccupationMeasure:
    """Sum the first ``horizon + 1`` terms of the discounted visitation series."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    pi1, pi2 = check_profile(instance, pi1, pi2)
    P = kernel_under_profile(instance, pi1, pi2)
    beta = instance.beta
    dist = instance.eta.copy()
    acc = np.zeros(instance.n_states)
    w = 1.0 - beta
    for _ in range(horizon + 1):
        acc += w * dist
        dist = dist @ P
        w *= beta
    return OccupationMeasure(acc[:, None, None] * pi1.table[:, :, None] * pi2.table[:, None, :])


def evaluate(instance: GameInstance, pi1, pi2):
    """Occupation measure with both players' payoffs and constraint values."""
    mu = occupation_measure(instance, pi1, pi2)
    return mu, (payoff(instance, mu, 1), payoff(instance, mu, 2)), (
        constraint_value(instance, mu, 1), constraint_value(instance, mu, 2))


def total_variation(a, b) -> float:
    """Total-variation distance ``sup_D |a(D) - b(D)|`` of two finite measures."""
    return 0.5 * float(np.abs(np.asarray(a) - np.asarray(b)).sum())


__all__ = [
    "OccupationMeasure", "MarginalMeasure", "StationaryPolicy", "uniform_policy",
    "kernel_under_profile", "occupation_x_marginal", "occupation_measure",
    "balance_residual", "payoff", "constraint_value", "disintegrate",
    "truncated_series_oracle", "evaluate", "total_variation",
    "check_instance", "check_policy",
]
