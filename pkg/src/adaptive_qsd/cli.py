"""Command-line driver: ``adaptive-qsd <command> [options]``.

Exit codes: 0 success, 2 solver non-convergence, 3 invariant or bound violation.
"""
from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from . import experiments as ex
from .actions import DEFAULT_Q
from .errors import BoundViolation, ConvergenceError

EXIT_OK, EXIT_CONVERGENCE, EXIT_VIOLATION = 0, 2, 3


def policy_to_dict(policy):
    return {
        "name": policy.name,
        "value": policy.value,
        "decisions": [
            {"history": list(h), "subsystem": a.subsystem, "povm": a.povm}
            for h, a in sorted(policy.decisions.items(), key=lambda kv: (len(kv[0]), kv[0]))
        ],
    }


def _spec(args):
    return ex.TrialSpec(
        m=args.m, n=args.n, Q=args.quantization, pure=not args.mixed,
        noise_range=(args.noise_min, args.noise_max), seed=args.seed,
        iterations=args.iterations, trials=args.trials, ppo=_ppo_overrides(args),
    )


def _ppo_overrides(args):
    given = {"epochs": args.epochs, "episodes_per_iteration": args.episodes}
    return {k: v for k, v in given.items() if v is not None}


def _ensemble(args):
    if args.ensemble:
        return ex.load_ensemble(args.ensemble)
    return ex.generate_ensemble(_spec(args))


def _emit(args, payload=None, text=None):
    if text is None:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_generate(args):
    _emit(args, ex.ensemble_to_dict(_ensemble(args)))


def cmd_solve(args):
    ens = _ensemble(args)
    if args.solver == "collective":
        from .collective import sdp_min_error
        from .qstate import joint_density

        joint = np.array([joint_density(s, range(ens.n)) for s in ens.states])
        sol = sdp_min_error(joint, ens.prior)
        payload = {"solver": "collective", "value": sol.success_probability,
                   "duality_gap": sol.duality_gap, "iterations": sol.iterations}
    else:
        policy = ex.local_policy(ens, args.solver, args.quantization)
        payload = {"solver": args.solver, "value": policy.value, "policy": policy_to_dict(policy)}
    _emit(args, payload)


def cmd_train(args):
    from .rl.checkpoint import save_checkpoint
    from .rl.ppo import PpoConfig, train

    ens = _ensemble(args)

    def log(it, reward, info):
        if args.verbose:
            print(f"iter {it:5d}  mean reward {reward:.6f}", file=sys.stderr)

    config = PpoConfig(**_ppo_overrides(args))
    result = train(ens, config, iterations=args.iterations, seed=args.seed, Q=args.quantization, log=log)
    if args.checkpoint:
        save_checkpoint(args.checkpoint, result.net, ens.n, ens.m, args.quantization,
                        extra={"seed": args.seed, "iterations": args.iterations})
    _emit(args, {"value": result.value, "mean_rewards": result.mean_rewards,
                 "policy": policy_to_dict(result.policy)})


def cmd_evaluate(args):
    from .local import evaluate_policy
    from .rl.checkpoint import load_checkpoint
    from .rl.ppo import greedy_policy

    ens = _ensemble(args)
    net, header = load_checkpoint(args.checkpoint)
    if (header["n"], header["m"]) != (ens.n, ens.m):
        raise ValueError(f"checkpoint is for n={header['n']}, m={header['m']}")
    policy = greedy_policy(net, ens, header["Q"])
    policy.value = evaluate_policy(ens, policy)
    _emit(args, {"value": policy.value, "policy": policy_to_dict(policy)})


def cmd_compare(args):
    spec = _spec(args)
    spec.solvers = tuple(args.solvers.split(","))
    spec.rl_repeats = args.rl_repeats
    rows = ex.run_comparison(spec)
    if args.format == "csv":
        buf = io.StringIO()
        ex.write_csv(rows, buf)
        _emit(args, text=buf.getvalue())
    else:
        _emit(args, {"spec": spec.to_dict(), "rows": rows})


def cmd_noise_sweep(args):
    ens = _ensemble(args)
    policy = ex.local_policy(ens, args.policy, args.quantization)
    thetas = [float(t) for t in args.thetas.split(",")]
    result = ex.noise_sweep(ens, policy, thetas, check=False)
    if args.format == "csv":
        buf = io.StringIO()
        buf.write("theta,p_original,p_perturbed,diff,bound,bound_linear\n")
        for r in result.records:
            buf.write(",".join(repr(float(v)) for v in
                               (r.theta, r.p_original, r.p_perturbed, r.diff, r.bound, r.bound_linear)) + "\n")
        _emit(args, text=buf.getvalue())
    else:
        _emit(args, result.to_dict())
    if result.violations:
        raise BoundViolation(f"{len(result.violations)} rotation angle(s) exceed the bound")


def cmd_trine_demo(args):
    report = ex.trine_demo()
    _emit(args, report)
    if not report["local_below_collective"]:
        raise BoundViolation("local strategies reached the collective optimum")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--m", type=int, default=2, help="number of hypotheses")
    common.add_argument("--n", type=int, default=3, help="number of qubits per hypothesis")
    common.add_argument("--quantization", "-Q", type=int, default=DEFAULT_Q, help="binary measurements per qubit")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=1)
    common.add_argument("--iterations", type=int, default=1000, help="PPO iterations")
    common.add_argument("--epochs", type=int, help="PPO passes over each batch (default 4)")
    common.add_argument("--episodes", type=int, help="PPO episodes per iteration (default 512)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--mixed", action="store_true", help="depolarize each factor")
    common.add_argument("--noise-min", type=float, default=0.0)
    common.add_argument("--noise-max", type=float, default=0.5)
    common.add_argument("--ensemble", help="read the ensemble from a JSON file instead of generating it")

    parser = argparse.ArgumentParser(prog="adaptive-qsd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common], help="write a random ensemble as JSON").set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", parents=[common], help="run one classical solver")
    p.add_argument("solver", choices=("collective", "dp", "greedy", "minentropy"))
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("train", parents=[common], help="train the PPO agent")
    p.add_argument("--checkpoint", help="save the trained network here")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="exact value of a saved network's greedy policy")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", parents=[common], help="solver comparison over seeded trials")
    p.add_argument("--solvers", default=",".join(ex.SOLVERS))
    p.add_argument("--rl-repeats", type=int, default=5)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("noise-sweep", parents=[common], help="rotation-noise robustness of a fixed policy")
    p.add_argument("--policy", choices=("dp", "greedy", "minentropy"), default="dp")
    p.add_argument("--thetas", default=",".join(str(t) for t in (0.0,) + ex.THETA_GRID))
    p.set_defaults(func=cmd_noise_sweep)

    sub.add_parser("trine-demo", parents=[common], help="two-copy trine values").set_defaults(func=cmd_trine_demo)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except BoundViolation as exc:
        print(f"violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
