"""Command-line entry point: ``aratgame <command> ...``.

Exit codes: 0 success, 1 reported failure (invalid instance, failed
verification, no convergence, infeasible best response), 2 usage error or
unreadable/ill-formed input.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import io
from .best_response import constrained_best_response
from .equilibrium import IterationConfig, iterate, perturbed_sequence, verify_epsilon_nash
from .game import generate_random, validate
from .occupation import occupation_measure
from .simulate import SimulationConfig, simulate

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _open_valid(path):
    game = io.load_instance(path)
    report = validate(game)
    if not report.ok:
        print(f"instance {path} is invalid:")
        for v in report.violations:
            print(f"  {v}")
        return game, False
    return game, True


def _emit(args, payload):
    out = getattr(args, "out", None)
    if out:
        io.write_json(out, payload)
    if getattr(args, "json", False):
        print(io.dumps(payload))


def cmd_validate(args):
    game = io.load_instance(args.instance)
    report = validate(game)
    if report.ok:
        print(f"{args.instance}: ok ({game.n_states} states, p={game.p})")
    else:
        print(f"{args.instance}: {len(report.violations)} violation(s)")
        for v in report.violations:
            print(f"  {v}")
    _emit(args, report.to_dict())
    return EXIT_OK if report.ok else EXIT_FAIL


def _config(args):
    try:
        return IterationConfig(max_iterations=args.max_iter, damping=args.damping,
                               tol=args.tol, epsilon=args.epsilon)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_solve(args):
    config = _config(args)
    game, ok = _open_valid(args.instance)
    if not ok:
        return EXIT_FAIL
    report = iterate(game, config)
    v = report.verification
    print(f"status: {report.status} after {report.iterations} iteration(s); converged={report.converged}")
    print(f"payoffs: R1={report.payoffs[0]:.10g} R2={report.payoffs[1]:.10g}")
    print(f"epsilon-Nash defect: {v.defect:.3g} (epsilon={config.epsilon:g}, passed={v.passed})")
    if report.nonpositive_slater:
        print("warning: nonpositive Slater margin observed at some opponent policy")
    payload = report.to_dict()
    payload.update(io.profile_to_dict(game, report.pi1, report.pi2))
    _emit(args, payload)
    if args.dump_occupation:
        mu = occupation_measure(game, report.pi1, report.pi2)
        io.write_json(args.dump_occupation, {"states": list(game.states), **mu.to_dict()})
    return EXIT_OK if report.converged else EXIT_FAIL


def cmd_best_response(args):
    game, ok = _open_valid(args.instance)
    if not ok:
        return EXIT_FAIL
    doc = io.read_json(args.opponent)
    other = 3 - args.player
    key = f"pi{other}"
    if isinstance(doc, dict) and key not in doc and "policy" in doc:
        doc = {**doc, key: doc["policy"]}
    (opponent,) = io.profile_from_dict(game, doc, keys=(key,))
    result = constrained_best_response(game, args.player, opponent)
    print(f"player {args.player} best response: {result.status.value}")
    payload = result.to_dict()
    if result.optimal:
        print(f"value: {result.value:.10g}")
        payload["policy"] = io.policy_to_rows(game, result.policy)
        payload[f"pi{args.player}"] = payload["policy"]
    _emit(args, payload)
    return EXIT_OK if result.optimal else EXIT_FAIL


def cmd_verify(args):
    if not args.epsilon > 0:
        raise UsageError("--epsilon must be positive")
    game, ok = _open_valid(args.instance)
    if not ok:
        return EXIT_FAIL
    pi1, pi2 = io.profile_from_dict(game, io.read_json(args.profile))
    v = verify_epsilon_nash(game, pi1, pi2, args.epsilon)
    for i in (0, 1):
        regret = "n/a (no feasible policy)" if v.regrets[i] is None else f"{v.regrets[i]:.3g}"
        print(f"player {i + 1}: slack {v.slacks[i]:.3g} feasible={v.feasible[i]}  "
              f"regret {regret} ok={v.no_profitable_deviation[i]}")
    print("PASS" if v.passed else "FAIL")
    _emit(args, v.to_dict())
    return EXIT_OK if v.passed else EXIT_FAIL


def cmd_simulate(args):
    try:
        config = SimulationConfig(horizon=args.horizon, episodes=args.episodes, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    game, ok = _open_valid(args.instance)
    if not ok:
        return EXIT_FAIL
    pi1, pi2 = io.profile_from_dict(game, io.read_json(args.profile))
    est = simulate(game, pi1, pi2, config)
    for i in (0, 1):
        print(f"R{i + 1} = {est.payoffs[i]:.6g} +/- {est.payoff_se[i]:.2g}")
        for k in range(game.p):
            print(f"  C{i + 1}[{k}] = {est.constraints[i, k]:.6g} +/- {est.constraint_se[i, k]:.2g}")
    print(f"truncated mass: {est.truncated_mass:.12g}")
    _emit(args, est.to_dict())
    return EXIT_OK


def cmd_generate(args):
    try:
        game = generate_random(args.seed, args.states, args.actions1, args.actions2, args.p, args.beta)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    io.save_instance(args.out, game)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_perturb(args):
    if args.n_max < 0:
        raise UsageError("--n-max must be nonnegative")
    config = _config(args)
    game, ok = _open_valid(args.instance)
    if not ok:
        return EXIT_FAIL
    result = perturbed_sequence(game, args.n_max, config)
    print(f"constant c = {result.constant:.6g}")
    for step in result.steps:
        r = step.report
        print(f"n={step.n:3d} status={r.status:22s} iterations={r.iterations:4d} "
              f"defect(original)={step.original.defect:.3g}")
    print("final profile on original game: " + ("PASS" if result.final.passed else "FAIL"))
    _emit(args, result.to_dict())
    return EXIT_OK if result.final.passed else EXIT_FAIL


def _add_iteration_flags(p):
    d = IterationConfig()
    p.add_argument("--damping", type=float, default=d.damping)
    p.add_argument("--max-iter", type=int, default=d.max_iterations)
    p.add_argument("--tol", type=float, default=d.tol)
    p.add_argument("--epsilon", type=float, default=d.epsilon)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aratgame",
                                     description="Constrained ARAT stochastic game solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("instance")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true", help="print the JSON report")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="search for a constrained Nash equilibrium")
    p.add_argument("instance")
    _add_iteration_flags(p)
    p.add_argument("--out")
    p.add_argument("--dump-occupation")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("best-response", help="constrained best response to a fixed opponent")
    p.add_argument("instance")
    p.add_argument("--player", type=int, choices=(1, 2), required=True)
    p.add_argument("--opponent", required=True)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_best_response)

    p = sub.add_parser("verify", help="epsilon-Nash check of a profile")
    p.add_argument("instance")
    p.add_argument("--profile", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo estimate for a profile")
    p.add_argument("instance")
    p.add_argument("--profile", required=True)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("generate", help="write a random valid instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--actions1", type=int, required=True)
    p.add_argument("--actions2", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("perturb", help="solve the perturbed game sequence")
    p.add_argument("instance")
    p.add_argument("--n-max", type=int, required=True)
    _add_iteration_flags(p)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_perturb)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except io.FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
