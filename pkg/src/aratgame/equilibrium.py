"""Search for and certify constrained Nash equilibria in stationary policies.

The search iterates the composed map "best-response marginals, then
disintegrate back to policies" with damping.  Existence of a fixed point
does not make the iteration convergent, so non-convergence is a normal
outcome and is reported as such.  Candidates are certified by re-solving
each player's constrained best response exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .best_response import constrained_best_response, slater_point
from .game import GameInstance, constraint_bound
from .occupation import MarginalMeasure, disintegrate, evaluate, uniform_policy
from .validation import StationaryPolicy, check_instance, check_profile

log = logging.getLogger(__name__)

REGRET_TOL = 1e-7
_KEEP_TOL = 1e-9


@dataclass(frozen=True)
class IterationConfig:
    max_iterations: int = 500
    damping: float = 0.5
    tol: float = 1e-8
    epsilon: float = 1e-6

    def __post_init__(self):
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 0:
            raise ValueError(f"max_iterations must be a nonnegative integer, got {self.max_iterations!r}")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError(f"damping must lie in (0, 1], got {self.damping!r}")
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")


def _min_slack(values: np.ndarray, levels: np.ndarray) -> float:
    if values.size == 0:
        return math.inf
    return float((values - levels).min())


@dataclass(frozen=True, eq=False)
class Verification:
    """Outcome of the epsilon-Nash check for one profile.

    ``regrets[i]`` is ``None`` when player ``i`` has no feasible deviation at
    all (its best-response LP is infeasible); the no-deviation condition then
    holds vacuously.
    """

    epsilon: float
    payoffs: tuple
    constraints: tuple
    slacks: tuple
    br_values: tuple
    regrets: tuple

    @property
    def feasible(self) -> tuple:
        return tuple(s >= -self.epsilon for s in self.slacks)

    @property
    def no_profitable_deviation(self) -> tuple:
        return tuple(r is None or r <= self.epsilon for r in self.regrets)

    @property
    def passed(self) -> bool:
        return all(self.feasible) and all(self.no_profitable_deviation)

    @property
    def defect(self) -> float:
        """Smallest epsilon at which the profile would pass."""
        parts = [0.0] + [-s for s in self.slacks] + [r for r in self.regrets if r is not None]
        return float(max(parts))

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "passed": self.passed,
            "defect": self.defect,
            "payoffs": list(self.payoffs),
            "constraints": [c.tolist() for c in self.constraints],
            "slacks": [_num(s) for s in self.slacks],
            "best_response_values": list(self.br_values),
            "regrets": list(self.regrets),
            "checks": {
                "feasible_1": self.feasible[0],
                "feasible_2": self.feasible[1],
                "no_deviation_1": self.no_profitable_deviation[0],
                "no_deviation_2": self.no_profitable_deviation[1],
            },
        }


def _num(v):
    return None if v is None or not math.isfinite(v) else float(v)


def verify_epsilon_nash(instance: GameInstance, pi1, pi2, epsilon: float = 1e-6) -> Verification:
    """Check feasibility and absence of profitable feasible deviations, each within ``epsilon``.

    Deviations range over stationary policies, which attain every payoff and
    constraint vector reachable by history-dependent ones in this model.
    """
    pi1, pi2 = check_profile(instance, pi1, pi2)
    _, payoffs, constraints = evaluate(instance, pi1, pi2)
    slacks = (_min_slack(constraints[0], instance.rho1), _min_slack(constraints[1], instance.rho2))
    br_values, regrets = [], []
    for player, opp in ((1, pi2), (2, pi1)):
        br = constrained_best_response(instance, player, opp)
        if br.optimal:
            br_values.append(br.value)
            regrets.append(br.value - payoffs[player - 1])
        else:
            br_values.append(None)
            regrets.append(None)
    return Verification(epsilon, payoffs, constraints, slacks, tuple(br_values), tuple(regrets))


def mix_restore_feasibility(gamma_target, gamma_slater, eps: float) -> MarginalMeasure:
    """Return ``(1 - sqrt(eps)) gamma_target + sqrt(eps) gamma_slater``.

    If the Slater marginal clears every constraint by ``delta`` and the target
    misses by at most ``eps``, the mixture clears the levels by at least
    ``sqrt(eps) * (delta - (1 - sqrt(eps)) * sqrt(eps))``.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps!r}")
    t = np.asarray(getattr(gamma_target, "table", gamma_target), dtype=float)
    s = np.asarray(getattr(gamma_slater, "table", gamma_slater), dtype=float)
    if t.shape != s.shape:
        raise ValueError(f"marginal shapes differ: {t.shape} vs {s.shape}")
    player = getattr(gamma_target, "player", getattr(gamma_slater, "player", 1))
    w = math.sqrt(eps)
    return MarginalMeasure(player, (1.0 - w) * t + w * s)


def mixture_lower_bound(rho, delta: float, eps: float):
    """Guaranteed constraint level of :func:`mix_restore_feasibility`'s output."""
    w = math.sqrt(eps)
    return np.asarray(rho, dtype=float) + w * (delta - (1.0 - w) * w)


@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    pi1: StationaryPolicy
    pi2: StationaryPolicy
    payoffs: tuple
    constraints: tuple
    slacks: tuple
    regrets: tuple
    converged: bool
    iterations: int
    trace: tuple
    slater_margins: tuple
    verification: Verification
    status: str = "max_iterations"
    events: tuple = field(default=())

    @property
    def nonpositive_slater(self) -> bool:
        return any(m <= 0 for pair in self.slater_margins for m in pair)

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "status": self.status,
            "iterations": self.iterations,
            "pi1": self.pi1.table.tolist(),
            "pi2": self.pi2.table.tolist(),
            "payoffs": list(self.payoffs),
            "constraints": [c.tolist() for c in self.constraints],
            "slacks": [_num(s) for s in self.slacks],
            "regrets": list(self.regrets),
            "trace": list(self.trace),
            "slater_margins": [[_num(m) for m in pair] for pair in self.slater_margins],
            "slater_nonpositive": self.nonpositive_slater,
            "verification": self.verification.to_dict(),
            "events": list(self.events),
        }


def _response(instance, player, current, opponent, payoff_now, slack_now, events, it):
    """Policy the player moves towards, or ``None`` if nothing feasible can be found."""
    br = constrained_best_response(instance, player, opponent)
    if br.optimal:
        keep = (payoff_now >= br.value - _KEEP_TOL * (1.0 + abs(br.value))
                and slack_now >= -_KEEP_TOL)
        return current if keep else br.policy
    sp = slater_point(instance, player, opponent)
    if sp.gamma is None or not sp.margin > 0:
        events.append({"iteration": it, "player": player, "event": "infeasible_best_response",
                       "slater_margin": _num(sp.margin)})
        return None
    mu, _, constraints = evaluate(instance, *((current, opponent) if player == 1 else (opponent, current)))
    violation = max(0.0, -_min_slack(constraints[player - 1], instance.rho(player)))
    eps = min(1.0, max(violation, 1e-12))
    mixed = mix_restore_feasibility(mu.marginal(player), sp.gamma, eps)
    events.append({"iteration": it, "player": player, "event": "feasibility_restored",
                   "eps": eps, "slater_margin": sp.margin})
    return disintegrate(mixed, instance, player)


def iterate(instance: GameInstance, config: IterationConfig | None = None,
            initial: tuple | None = None) -> EquilibriumReport:
    """Damped best-response iteration from the uniform profile (or ``initial``)."""
    config = config or IterationConfig()
    check_instance(instance)
    if initial is None:
        pi1, pi2 = uniform_policy(instance, 1), uniform_policy(instance, 2)
    else:
        pi1, pi2 = check_profile(instance, *initial)
    alpha = config.damping
    trace, margins, events = [], [], []
    status = "max_iterations"
    change = math.inf
    it = 0
    while it < config.max_iterations:
        it += 1
        margins.append((slater_point(instance, 1, pi2).margin, slater_point(instance, 2, pi1).margin))
        _, payoffs, constraints = evaluate(instance, pi1, pi2)
        slack1 = _min_slack(constraints[0], instance.rho1)
        slack2 = _min_slack(constraints[1], instance.rho2)
        new1 = _response(instance, 1, pi1, pi2, payoffs[0], slack1, events, it)
        new2 = _response(instance, 2, pi2, pi1, payoffs[1], slack2, events, it)
        if new1 is None or new2 is None:
            status = "infeasible"
            break
        t1 = (1.0 - alpha) * pi1.table + alpha * new1.table
        t2 = (1.0 - alpha) * pi2.table + alpha * new2.table
        change = float(max(np.abs(t1 - pi1.table).max(), np.abs(t2 - pi2.table).max()))
        pi1, pi2 = StationaryPolicy(1, t1), StationaryPolicy(2, t2)
        trace.append(change)
        if change <= config.tol:
            status = "stationary"
            break

    margins.append((slater_point(instance, 1, pi2).margin, slater_point(instance, 2, pi1).margin))
    verification = verify_epsilon_nash(instance, pi1, pi2, config.epsilon)
    converged = status == "stationary" and verification.passed
    if status == "stationary" and not verification.passed:
        status = "stationary_unverified"
    log.debug("iterate: status=%s iterations=%d defect=%.3g", status, it, verification.defect)
    return EquilibriumReport(
        pi1=pi1,
        pi2=pi2,
        payoffs=verification.payoffs,
        constraints=verification.constraints,
        slacks=verification.slacks,
        regrets=verification.regrets,
        converged=converged,
        iterations=it,
        trace=tuple(trace),
        slater_margins=tuple(margins),
        verification=verification,
        status=status,
        events=tuple(events),
    )


def perturbation_constant(instance: GameInstance) -> float:
    """Constant ``c`` with ``|C_i(eta_n) - C_i(nu)| <= c / (n + 1)`` for every profile.

    Occupation measures are 1-Lipschitz in the initial law for total
    variation and ``||eta_n - nu||_TV <= 1 / (n + 1)``, so twice the sup-norm
    of the assembled constraint functions suffices.
    """
    return 2.0 * constraint_bound(instance)


def perturbed_instance(instance: GameInstance, n: int, constant: float | None = None) -> GameInstance:
    """Game with ``eta_n = n/(n+1) nu + 1/(n+1) uniform`` and ``rho_{i,n} = theta_i - c/(n+1)``."""
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")
    c = perturbation_constant(instance) if constant is None else float(constant)
    nX = instance.n_states
    eta_n = n / (n + 1.0) * instance.eta + 1.0 / (n + 1.0) * np.full(nX, 1.0 / nX)
    shift = c / (n + 1.0)
    return instance.with_changes(eta=eta_n, rho1=instance.rho1 - shift, rho2=instance.rho2 - shift)


@dataclass(frozen=True, eq=False)
class PerturbationStep:
    n: int
    instance: GameInstance
    report: EquilibriumReport
    original: Verification

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "eta": self.instance.eta.tolist(),
            "rho1": self.instance.rho1.tolist(),
            "rho2": self.instance.rho2.tolist(),
            "report": self.report.to_dict(),
            "defect_on_original": self.original.defect,
        }


@dataclass(frozen=True, eq=False)
class PerturbationResult:
    constant: float
    steps: tuple
    final: Verification

    @property
    def reports(self) -> list:
        return [s.report for s in self.steps]

    def to_dict(self) -> dict:
        return {
            "constant": self.constant,
            "steps": [s.to_dict() for s in self.steps],
            "final_on_original": self.final.to_dict(),
        }


def perturbed_sequence(instance: GameInstance, n_max: int,
                       config: IterationConfig | None = None,
                       constant: float | None = None) -> PerturbationResult:
    """Solve the perturbed games ``n = 0..n_max`` and check each answer on the original game."""
    check_instance(instance)
    if int(n_max) != n_max or n_max < 0:
        raise ValueError(f"n_max must be a nonnegative integer, got {n_max!r}")
    config = config or IterationConfig()
    c = perturbation_constant(instance) if constant is None else float(constant)
    steps = []
    for n in range(int(n_max) + 1):
        game_n = perturbed_instance(instance, n, c)
        report = iterate(game_n, config)
        original = verify_epsilon_nash(instance, report.pi1, report.pi2, config.epsilon)
        steps.append(PerturbationStep(n, game_n, report, original))
    return PerturbationResult(c, tuple(steps), steps[-1].original)
