"""Constrained best responses as linear programs over state-action marginals.

Against a fixed stationary opponent the player faces a constrained MDP
whose kernel averages the joint kernel over the opponent's action.  Both
the payoff and the constraint functionals are linear in the player's
marginal ``gamma(x, a_i)``: the opponent-driven terms only depend on the
state marginal ``gamma^X``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import GameInstance, assemble_kernel
from .numerics import LpProblem, LpStatus, lp_solve
from .occupation import MarginalMeasure, disintegrate
from .validation import StationaryPolicy, check_instance, check_player, check_policy


@dataclass(frozen=True, eq=False)
class BestResponseProblem:
    """Single-agent data seen by ``player`` when the opponent is frozen.

    ``kernel[x, a, y]`` is the induced transition kernel, ``reward[x, a]`` and
    ``constraints[x, a, k]`` are the per-unit-mass coefficients of the
    payoff and constraint functionals (opponent terms folded in).
    """

    instance: GameInstance
    player: int
    opponent: StationaryPolicy
    kernel: np.ndarray
    reward: np.ndarray
    constraints: np.ndarray
    levels: np.ndarray

    @classmethod
    def build(cls, instance: GameInstance, player: int, opponent) -> "BestResponseProblem":
        check_instance(instance)
        player = check_player(player)
        other = 3 - player
        opponent = check_policy(instance, opponent, other)
        Q = assemble_kernel(instance)
        pi = opponent.table
        if player == 1:
            kernel = np.einsum("xaby,xb->xay", Q, pi)
            r_own, r_opp = instance.r1_own, instance.r1_opp
            c_own, c_opp = instance.c1_own, instance.c1_opp
        else:
            kernel = np.einsum("xaby,xa->xby", Q, pi)
            r_own, r_opp = instance.r2_own, instance.r2_opp
            c_own, c_opp = instance.c2_own, instance.c2_opp
        r_bar = (pi * r_opp).sum(axis=1)
        c_bar = np.einsum("xb,xbk->xk", pi, c_opp)
        reward = r_own + r_bar[:, None]
        constraints = c_own + c_bar[:, None, :]
        return cls(instance, player, opponent, kernel, reward, constraints, instance.rho(player))

    @property
    def mask(self) -> np.ndarray:
        return self.instance.mask(self.player)

    @property
    def index(self):
        """Feasible ``(x, a)`` pairs in row-major order: the LP variable order."""
        return np.nonzero(self.mask)

    def equalities(self):
        """Discounted balance rows ``gamma^X(y) - beta sum gamma P(y|.) = (1-beta) eta(y)``."""
        xs, as_ = self.index
        beta = self.instance.beta
        A = -beta * self.kernel[xs, as_, :].T
        A[xs, np.arange(xs.size)] += 1.0
        b = (1.0 - beta) * self.instance.eta
        return A, b

    def constraint_rows(self):
        xs, as_ = self.index
        return self.constraints[xs, as_, :].T, self.levels

    def objective(self):
        xs, as_ = self.index
        return self.reward[xs, as_]

    def unpack(self, z) -> np.ndarray:
        table = np.zeros(self.mask.shape)
        table[self.index] = z[: self.index[0].size]
        return table

    def lp(self) -> LpProblem:
        A_eq, b_eq = self.equalities()
        A_ge, b_ge = self.constraint_rows()
        return LpProblem(self.objective(), A_eq=A_eq, b_eq=b_eq, A_ge=A_ge, b_ge=b_ge)

    def value_of(self, gamma: np.ndarray) -> float:
        return float((self.reward * gamma).sum())

    def constraint_of(self, gamma: np.ndarray) -> np.ndarray:
        return np.einsum("xak,xa->k", self.constraints, gamma)


def build_feasible_lp(instance: GameInstance, player: int, opponent) -> LpProblem:
    """LP whose feasible points are exactly the marginals meeting ``player``'s constraints."""
    return BestResponseProblem.build(instance, player, opponent).lp()


@dataclass(frozen=True, eq=False)
class BestResponseResult:
    status: LpStatus
    player: int
    gamma: MarginalMeasure | None = None
    value: float | None = None
    policy: StationaryPolicy | None = None
    constraint_values: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def to_dict(self, instance: GameInstance | None = None) -> dict:
        out = {"status": self.status.value, "player": self.player}
        if self.optimal:
            out.update(
                value=self.value,
                gamma=self.gamma.table.tolist(),
                policy=self.policy.table.tolist(),
                constraint_values=self.constraint_values.tolist(),
            )
        return out


def constrained_best_response(instance: GameInstance, player: int, opponent) -> BestResponseResult:
    """Maximize ``player``'s payoff over feasible marginals against a fixed opponent.

    The returned marginal is the basic optimal solution selected by the
    simplex; ``Infeasible`` signals that no policy meets the constraint
    levels against this opponent.
    """
    prob = BestResponseProblem.build(instance, player, opponent)
    sol = lp_solve(prob.lp())
    if sol.status is not LpStatus.OPTIMAL:
        return BestResponseResult(sol.status, prob.player)
    gamma = prob.unpack(sol.x)
    return BestResponseResult(
        LpStatus.OPTIMAL,
        prob.player,
        gamma=MarginalMeasure(prob.player, gamma),
        value=prob.value_of(gamma),
        policy=disintegrate(gamma, instance, prob.player),
        constraint_values=prob.constraint_of(gamma),
    )


@dataclass(frozen=True, eq=False)
class SlaterPoint:
    margin: float
    gamma: MarginalMeasure | None


def slater_point(instance: GameInstance, player: int, opponent) -> SlaterPoint:
    """Maximize the uniform constraint slack ``t`` with ``C_i(gamma) >= rho_i + t``.

    With no constraints (``p == 0``) the margin is ``+inf``.
    """
    prob = BestResponseProblem.build(instance, player, opponent)
    A_eq, b_eq = prob.equalities()
    A_ge, b_ge = prob.constraint_rows()
    nv = A_eq.shape[1]
    if A_ge.shape[0] == 0:
        return SlaterPoint(float("inf"), None)
    c = np.zeros(nv + 1)
    c[-1] = 1.0
    lp = LpProblem(
        c,
        A_eq=np.hstack([A_eq, np.zeros((A_eq.shape[0], 1))]),
        b_eq=b_eq,
        A_ge=np.hstack([A_ge, -np.ones((A_ge.shape[0], 1))]),
        b_ge=b_ge,
        lb=np.concatenate([np.zeros(nv), [-np.inf]]),
    )
    sol = lp_solve(lp)
    if sol.status is LpStatus.INFEASIBLE:
        return SlaterPoint(float("-inf"), None)
    # t is bounded above by the bounded constraint functionals, so Unbounded cannot occur
    gamma = prob.unpack(sol.x)
    return SlaterPoint(float(sol.x[-1]), MarginalMeasure(prob.player, gamma))


def slater_margin(instance: GameInstance, player: int, opponent) -> float:
    return slater_point(instance, player, opponent).margin
