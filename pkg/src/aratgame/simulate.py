"""Monte Carlo estimates of occupation measures, payoffs and constraints.

Episodes are simulated in fixed blocks of ``BLOCK_SIZE``.  Block ``b`` draws
from ``numpy.random.Generator(numpy.random.Philox(key=seed).jumped(b))``, so
its output depends only on ``(seed, b)`` and blocks can be computed in any
order.  Per step every episode consumes three uniforms (player 1 action,
player 2 action, next state), plus one for the initial state.  Block sums
are reduced in increasing block order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import GameInstance, assemble_constraint, assemble_kernel, assemble_reward
from .validation import check_profile

BLOCK_SIZE = 4096


@dataclass(frozen=True)
class SimulationConfig:
    horizon: int = 200
    episodes: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon!r}")
        if int(self.episodes) != self.episodes or self.episodes < 1:
            raise ValueError(f"episodes must be a positive integer, got {self.episodes!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")


@dataclass(frozen=True, eq=False)
class SimulationEstimate:
    occupation: np.ndarray
    occupation_se: np.ndarray
    payoffs: np.ndarray
    payoff_se: np.ndarray
    constraints: np.ndarray
    constraint_se: np.ndarray
    truncated_mass: float
    config: SimulationConfig

    def to_dict(self) -> dict:
        return {
            "episodes": self.config.episodes,
            "horizon": self.config.horizon,
            "seed": self.config.seed,
            "truncated_mass": self.truncated_mass,
            "payoffs": self.payoffs.tolist(),
            "payoff_se": self.payoff_se.tolist(),
            "constraints": self.constraints.tolist(),
            "constraint_se": self.constraint_se.tolist(),
            "occupation": self.occupation.tolist(),
        }


def _inverse_cdf(probs: np.ndarray) -> np.ndarray:
    """Cumulative table whose entries past the last positive weight are pushed to 2."""
    cdf = np.cumsum(probs, axis=-1)
    pos = probs > 0
    last = probs.shape[-1] - 1 - np.argmax(pos[..., ::-1], axis=-1)
    idx = np.arange(probs.shape[-1])
    cdf = np.where(idx >= last[..., None], 2.0, cdf)
    return cdf


def _draw(cdf_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    return (u[:, None] >= cdf_rows).sum(axis=1)


def simulate(instance: GameInstance, pi1, pi2, config: SimulationConfig | None = None) -> SimulationEstimate:
    """Simulate discounted trajectories of length ``horizon + 1`` under a stationary profile."""
    config = config or SimulationConfig()
    pi1, pi2 = check_profile(instance, pi1, pi2)
    nX, n1, n2 = instance.n_states, instance.n_actions1, instance.n_actions2
    beta = instance.beta
    Q = assemble_kernel(instance)
    cdf_eta = _inverse_cdf(instance.eta)
    cdf1 = _inverse_cdf(pi1.table)
    cdf2 = _inverse_cdf(pi2.table)
    safe_Q = np.where(Q.sum(axis=-1, keepdims=True) > 0, Q, 1.0)
    cdfQ = _inverse_cdf(safe_Q).reshape(nX * n1 * n2, nX)

    ncell = nX * n1 * n2
    # per-cell payoff/constraint coefficients, columns: r1, r2, c1[0..p), c2[0..p)
    coef = np.column_stack([
        assemble_reward(instance, 1).reshape(ncell),
        assemble_reward(instance, 2).reshape(ncell),
        assemble_constraint(instance, 1).reshape(ncell, -1),
        assemble_constraint(instance, 2).reshape(ncell, -1),
    ])
    weights = (1.0 - beta) * beta ** np.arange(config.horizon + 1)

    sum_w = np.zeros(ncell)
    sum_w2 = np.zeros(ncell)
    sum_g = np.zeros(coef.shape[1])
    sum_g2 = np.zeros(coef.shape[1])
    M = config.episodes
    n_blocks = -(-M // BLOCK_SIZE)
    for b in range(n_blocks):
        nb = min(BLOCK_SIZE, M - b * BLOCK_SIZE)
        rng = np.random.Generator(np.random.Philox(key=config.seed).jumped(b))
        W = np.zeros((nb, ncell))
        rows = np.arange(nb)
        x = _draw(np.broadcast_to(cdf_eta, (nb, nX)), rng.random(nb))
        for w in weights:
            u = rng.random((3, nb))
            a1 = _draw(cdf1[x], u[0])
            a2 = _draw(cdf2[x], u[1])
            cell = (x * n1 + a1) * n2 + a2
            W[rows, cell] += w
            x = _draw(cdfQ[cell], u[2])
        G = W @ coef
        sum_w += W.sum(axis=0)
        sum_w2 += (W * W).sum(axis=0)
        sum_g += G.sum(axis=0)
        sum_g2 += (G * G).sum(axis=0)

    def mean_se(s, s2):
        mean = s / M
        var = np.maximum(s2 / M - mean * mean, 0.0) * (M / (M - 1) if M > 1 else 0.0)
        return mean, np.sqrt(var / M)

    occ, occ_se = mean_se(sum_w, sum_w2)
    g, g_se = mean_se(sum_g, sum_g2)
    p = instance.p
    return SimulationEstimate(
        occupation=occ.reshape(nX, n1, n2),
        occupation_se=occ_se.reshape(nX, n1, n2),
        payoffs=g[:2],
        payoff_se=g_se[:2],
        constraints=np.stack([g[2:2 + p], g[2 + p:]]),
        constraint_se=np.stack([g_se[2:2 + p], g_se[2 + p:]]),
        truncated_mass=float(weights.sum()),
        config=config,
    )
