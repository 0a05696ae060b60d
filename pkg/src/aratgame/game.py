"""Finite two-player ARAT game instances.

Rewards, constraints and transition densities split additively into a part
driven by player 1's action and a part driven by player 2's action.  Action
axes are padded to the largest per-state action count; ``mask1``/``mask2``
mark the feasible entries.  Tables are stored as read-only numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

STOCH_TOL = 1e-12

_TABLES = ("r1_own", "r1_opp", "r2_own", "r2_opp",
           "c1_own", "c1_opp", "c2_own", "c2_opp", "q1", "q2")


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GameInstance:
    """A constrained ARAT game on finite state and action sets.

    Shapes (``nX`` states, ``n1``/``n2`` padded action counts, ``p``
    constraints)::

        r1_own (nX, n1)   r1_opp (nX, n2)   r2_own (nX, n2)   r2_opp (nX, n1)
        c1_own (nX, n1, p)  c1_opp (nX, n2, p)  c2_own (nX, n2, p)  c2_opp (nX, n1, p)
        q1 (nX, nX, n1) indexed [y, x, a1]     q2 (nX, nX, n2) indexed [y, x, a2]

    "own" tables are indexed by the player's own action, "opp" tables by the
    opponent's action.  Constraint tables may be omitted when ``p == 0``.
    """

    r1_own: np.ndarray
    r1_opp: np.ndarray
    r2_own: np.ndarray
    r2_opp: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    beta: float
    eta: np.ndarray
    c1_own: np.ndarray | None = None
    c1_opp: np.ndarray | None = None
    c2_own: np.ndarray | None = None
    c2_opp: np.ndarray | None = None
    rho1: np.ndarray | None = None
    rho2: np.ndarray | None = None
    mask1: np.ndarray | None = None
    mask2: np.ndarray | None = None
    states: tuple | None = None
    actions1: tuple | None = None
    actions2: tuple | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        r1 = np.asarray(self.r1_own, dtype=float)
        r1o = np.asarray(self.r1_opp, dtype=float)
        if r1.ndim != 2 or r1o.ndim != 2:
            raise ValueError("reward tables must be two-dimensional [state, action]")
        nX, n1 = r1.shape
        n2 = r1o.shape[1]
        p = 0
        for name in ("c1_own", "c1_opp", "c2_own", "c2_opp"):
            c = getattr(self, name)
            if c is not None:
                p = np.asarray(c).shape[-1] if np.asarray(c).ndim == 3 else p
        expected = {
            "r1_own": (nX, n1), "r1_opp": (nX, n2), "r2_own": (nX, n2), "r2_opp": (nX, n1),
            "c1_own": (nX, n1, p), "c1_opp": (nX, n2, p),
            "c2_own": (nX, n2, p), "c2_opp": (nX, n1, p),
            "q1": (nX, nX, n1), "q2": (nX, nX, n2),
        }
        set_ = object.__setattr__
        for name in _TABLES:
            val = getattr(self, name)
            if val is None:
                val = np.zeros(expected[name])
            val = np.asarray(val, dtype=float)
            if val.shape != expected[name]:
                raise ValueError(f"{name} has shape {val.shape}, expected {expected[name]}")
            if not np.all(np.isfinite(val)):
                raise ValueError(f"{name} contains non-finite entries")
            set_(self, name, _frozen(val))
        eta = np.asarray(self.eta, dtype=float).ravel()
        if eta.shape != (nX,):
            raise ValueError(f"eta has length {eta.shape[0]}, expected {nX}")
        set_(self, "eta", _frozen(eta))
        for name in ("rho1", "rho2"):
            val = getattr(self, name)
            val = np.zeros(p) if val is None else np.asarray(val, dtype=float).ravel()
            if val.shape != (p,):
                raise ValueError(f"{name} has length {val.shape[0]}, expected {p}")
            set_(self, name, _frozen(val))
        for name, n in (("mask1", n1), ("mask2", n2)):
            m = getattr(self, name)
            m = np.ones((nX, n), dtype=bool) if m is None else np.asarray(m, dtype=bool)
            if m.shape != (nX, n):
                raise ValueError(f"{name} has shape {m.shape}, expected {(nX, n)}")
            m = m.copy()
            m.setflags(write=False)
            set_(self, name, m)
        set_(self, "beta", float(self.beta))
        states = self.states if self.states is not None else tuple(f"s{x}" for x in range(nX))
        if len(states) != nX:
            raise ValueError(f"{len(states)} state labels given for {nX} states")
        set_(self, "states", tuple(str(s) for s in states))
        for name, mask in (("actions1", self.mask1), ("actions2", self.mask2)):
            labels = getattr(self, name)
            if labels is None:
                labels = tuple(tuple(f"a{j}" for j in np.flatnonzero(mask[x])) for x in range(nX))
            labels = tuple(tuple(str(a) for a in row) for row in labels)
            if len(labels) != nX or any(len(labels[x]) != mask[x].sum() for x in range(nX)):
                raise ValueError(f"{name} labels do not match the feasibility mask")
            set_(self, name, labels)

    @property
    def n_states(self) -> int:
        return self.r1_own.shape[0]

    @property
    def n_actions1(self) -> int:
        return self.r1_own.shape[1]

    @property
    def n_actions2(self) -> int:
        return self.r1_opp.shape[1]

    @property
    def p(self) -> int:
        return self.c1_own.shape[2]

    def mask(self, player: int) -> np.ndarray:
        return self.mask1 if player == 1 else self.mask2

    def rho(self, player: int) -> np.ndarray:
        return self.rho1 if player == 1 else self.rho2

    def with_changes(self, **changes) -> "GameInstance":
        """Copy with some fields replaced (e.g. ``eta`` or ``rho1``)."""
        return replace(self, _cache={}, **changes)

    def tables_equal(self, other: "GameInstance") -> bool:
        """Bitwise comparison of every numeric table and label."""
        if self.beta != other.beta or self.states != other.states:
            return False
        if self.actions1 != other.actions1 or self.actions2 != other.actions2:
            return False
        names = _TABLES + ("eta", "rho1", "rho2", "mask1", "mask2")
        return all(getattr(self, n).tobytes() == getattr(other, n).tobytes()
                   and getattr(self, n).shape == getattr(other, n).shape for n in names)


class ViolationCode(str, Enum):
    STOCHASTICITY = "StochasticityViolation"
    ARAT = "ARATInconsistency"
    EMPTY_ACTIONS = "EmptyActionSet"
    BAD_DISCOUNT = "BadDiscount"
    BAD_INITIAL = "BadInitialDistribution"
    NEGATIVE_DENSITY = "NegativeDensity"


@dataclass(frozen=True)
class Violation:
    code: ViolationCode
    indices: tuple
    residual: float

    def __str__(self):
        return f"{self.code.value} at {self.indices}: residual {self.residual:.3g}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set:
        return {v.code for v in self.violations}

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"code": v.code.value, "indices": list(v.indices), "residual": v.residual}
                for v in self.violations
            ],
        }


class InvalidInstance(ValueError):
    """Raised by operations that require a valid instance."""

    def __init__(self, report: ValidationReport):
        self.report = report
        first = report.violations[0]
        super().__init__(f"invalid game instance: {first} ({len(report.violations)} violation(s))")


def validate(instance: GameInstance) -> ValidationReport:
    """Check every structural invariant; failures are collected, never raised."""
    out = []
    nX = instance.n_states
    if not 0.0 < instance.beta < 1.0:
        out.append(Violation(ViolationCode.BAD_DISCOUNT, (), float(instance.beta)))

    eta = instance.eta
    for x in np.flatnonzero(eta < 0):
        out.append(Violation(ViolationCode.BAD_INITIAL, (int(x),), float(-eta[x])))
    mass_gap = abs(float(eta.sum()) - 1.0)
    if mass_gap > STOCH_TOL:
        out.append(Violation(ViolationCode.BAD_INITIAL, (), mass_gap))

    for player, mask in ((1, instance.mask1), (2, instance.mask2)):
        for x in np.flatnonzero(~mask.any(axis=1)):
            out.append(Violation(ViolationCode.EMPTY_ACTIONS, (player, int(x)), 0.0))

    for player, q, mask in ((1, instance.q1, instance.mask1), (2, instance.q2, instance.mask2)):
        neg = (q < 0) & mask[None, :, :]
        for y, x, a in zip(*np.nonzero(neg)):
            out.append(Violation(ViolationCode.NEGATIVE_DENSITY,
                                 (player, int(y), int(x), int(a)), float(-q[y, x, a])))

    s1 = instance.q1.sum(axis=0)  # (nX, n1)
    s2 = instance.q2.sum(axis=0)
    for x in range(nX):
        f1 = np.flatnonzero(instance.mask1[x])
        f2 = np.flatnonzero(instance.mask2[x])
        for player, s, f in ((1, s1, f1), (2, s2, f2)):
            if f.size > 1:
                spread = float(s[x, f].max() - s[x, f].min())
                if spread > STOCH_TOL:
                    out.append(Violation(ViolationCode.ARAT, (player, int(x)), spread))
        if f1.size and f2.size:
            total = s1[x, f1][:, None] + s2[x, f2][None, :]
            gap = np.abs(total - 1.0)
            for i, j in zip(*np.nonzero(gap > STOCH_TOL)):
                out.append(Violation(ViolationCode.STOCHASTICITY,
                                     (int(x), int(f1[i]), int(f2[j])), float(gap[i, j])))
    return ValidationReport(tuple(out))


def require_valid(instance: GameInstance) -> None:
    cached = instance._cache.get("validation")
    if cached is None:
        cached = validate(instance)
        instance._cache["validation"] = cached
    if not cached.ok:
        raise InvalidInstance(cached)


def assemble_kernel(instance: GameInstance) -> np.ndarray:
    """Full transition table ``Q[x, a1, a2, y] = q1[y, x, a1] + q2[y, x, a2]``.

    Infeasible action pairs are left as zero rows.
    """
    require_valid(instance)
    if "kernel" not in instance._cache:
        q1 = np.transpose(instance.q1, (1, 2, 0))[:, :, None, :]
        q2 = np.transpose(instance.q2, (1, 2, 0))[:, None, :, :]
        Q = q1 + q2
        K = instance.mask1[:, :, None] & instance.mask2[:, None, :]
        Q = np.where(K[..., None], Q, 0.0)
        Q.setflags(write=False)
        instance._cache["kernel"] = Q
    return instance._cache["kernel"]


def _combine(own1, opp2, mask1, mask2):
    out = own1[:, :, None, ...] + opp2[:, None, :, ...]
    K = mask1[:, :, None] & mask2[:, None, :]
    if out.ndim == 4:
        K = K[..., None]
    return np.where(K, out, 0.0)


def assemble_reward(instance: GameInstance, player: int) -> np.ndarray:
    """Full reward table ``r_i[x, a1, a2]`` of one player."""
    require_valid(instance)
    if player == 1:
        return _combine(instance.r1_own, instance.r1_opp, instance.mask1, instance.mask2)
    if player == 2:
        return _combine(instance.r2_opp, instance.r2_own, instance.mask1, instance.mask2)
    raise ValueError(f"player must be 1 or 2, got {player!r}")


def assemble_constraint(instance: GameInstance, player: int) -> np.ndarray:
    """Full constraint table ``c_i[x, a1, a2, k]`` of one player."""
    require_valid(instance)
    if player == 1:
        return _combine(instance.c1_own, instance.c1_opp, instance.mask1, instance.mask2)
    if player == 2:
        return _combine(instance.c2_opp, instance.c2_own, instance.mask1, instance.mask2)
    raise ValueError(f"player must be 1 or 2, got {player!r}")


def constraint_bound(instance: GameInstance) -> float:
    """Sup-norm of the assembled constraint functions over both players."""
    if instance.p == 0:
        return 0.0
    return max(float(np.abs(assemble_constraint(instance, i)).max()) for i in (1, 2))


def generate_random(seed: int, n_states: int, n_actions1: int, n_actions2: int,
                    p: int, beta: float, margin: float = 0.05) -> GameInstance:
    """Draw a valid random ARAT game.

    Player 1 controls a state-dependent share ``s1(x) ~ U[0.2, 0.8]`` of the
    transition mass and player 2 the rest.  Rewards and constraint
    components are uniform on ``[-1, 1]``; ``eta`` is uniform on the simplex.
    Constraint levels are set ``margin`` below the values reached by the
    uniform profile, so that profile is strictly feasible.
    """
    for name, v in (("n_states", n_states), ("n_actions1", n_actions1), ("n_actions2", n_actions2)):
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v!r}")
    if int(p) != p or p < 0:
        raise ValueError(f"p must be a nonnegative integer, got {p!r}")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta!r}")

    rng = np.random.default_rng(seed)
    nX, n1, n2 = int(n_states), int(n_actions1), int(n_actions2)
    share = rng.uniform(0.2, 0.8, size=nX)
    d1 = rng.uniform(0.05, 1.0, size=(nX, nX, n1))
    d2 = rng.uniform(0.05, 1.0, size=(nX, nX, n2))
    q1 = d1 / d1.sum(axis=0, keepdims=True) * share[None, :, None]
    q2 = d2 / d2.sum(axis=0, keepdims=True) * (1.0 - share)[None, :, None]
    u = lambda *shape: rng.uniform(-1.0, 1.0, size=shape)  # noqa: E731
    tables = dict(
        r1_own=u(nX, n1), r1_opp=u(nX, n2), r2_own=u(nX, n2), r2_opp=u(nX, n1),
        c1_own=u(nX, n1, p), c1_opp=u(nX, n2, p), c2_own=u(nX, n2, p), c2_opp=u(nX, n1, p),
    )
    eta = rng.dirichlet(np.ones(nX))
    game = GameInstance(q1=q1, q2=q2, beta=float(beta), eta=eta, **tables)
    return calibrate_levels(game, margin)


def calibrate_levels(instance: GameInstance, margin: float = 0.05) -> GameInstance:
    """Set ``rho_i`` to the uniform profile's constraint values minus ``margin``."""
    from .occupation import constraint_value, occupation_measure, uniform_policy

    if instance.p == 0:
        return instance
    mu = occupation_measure(instance, uniform_policy(instance, 1), uniform_policy(instance, 2))
    rho1 = constraint_value(instance, mu, 1) - margin
    rho2 = constraint_value(instance, mu, 2) - margin
    return instance.with_changes(rho1=rho1, rho2=rho2)
