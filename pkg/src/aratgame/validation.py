"""Input validation helpers shared by the public entry points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import GameInstance, require_valid

POLICY_TOL = 1e-12


class PolicyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StationaryPolicy:
    """Per-state action distribution ``table[x, a]`` of one player."""

    player: int
    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float, copy=True)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def __array__(self, dtype=None, copy=None):
        return self.table if dtype is None else self.table.astype(dtype)

    def row(self, x: int) -> np.ndarray:
        return self.table[x]


def check_player(player) -> int:
    if player not in (1, 2):
        raise ValueError(f"player must be 1 or 2, got {player!r}")
    return int(player)


def check_instance(instance) -> GameInstance:
    if not isinstance(instance, GameInstance):
        raise TypeError(f"expected a GameInstance, got {type(instance).__name__}")
    require_valid(instance)
    return instance


def check_policy(instance: GameInstance, policy, player: int, tol: float = POLICY_TOL) -> StationaryPolicy:
    """Coerce ``policy`` to a :class:`StationaryPolicy` and check it against ``instance``.

    Accepts a ``StationaryPolicy`` or any array of shape ``(nX, n_i)``.
    """
    player = check_player(player)
    if isinstance(policy, StationaryPolicy):
        if policy.player != player:
            raise PolicyError(f"policy belongs to player {policy.player}, expected {player}")
        table = policy.table
    else:
        table = np.asarray(policy, dtype=float)
    mask = instance.mask(player)
    if table.shape != mask.shape:
        raise PolicyError(f"policy for player {player} has shape {table.shape}, expected {mask.shape}")
    if not np.all(np.isfinite(table)):
        raise PolicyError("policy has non-finite entries")
    if np.any(table < -tol):
        raise PolicyError("policy has negative probabilities")
    if np.any(np.abs(table[~mask]) > tol):
        raise PolicyError("policy puts mass on infeasible actions")
    gaps = np.abs(table.sum(axis=1) - 1.0)
    if np.any(gaps > tol):
        x = int(np.argmax(gaps))
        raise PolicyError(f"policy row {x} sums to {table[x].sum():.15g}")
    if isinstance(policy, StationaryPolicy):
        return policy
    return StationaryPolicy(player, np.where(mask, np.maximum(table, 0.0), 0.0))


def check_profile(instance: GameInstance, pi1, pi2):
    check_instance(instance)
    return check_policy(instance, pi1, 1), check_policy(instance, pi2, 2)
