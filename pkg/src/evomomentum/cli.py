"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 runtime failure (a sweep run that
does not converge, or an I/O error).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments
from .core import MatrixLandscape, SimplexPoint, make_cyclic_matrix
from .dynamics import DynamicsConfig, continuous_integrate, iterate
from .exceptions import (
    BetaSingularity,
    DidNotConverge,
    EvoMomentumError,
    NearZeroMeanFitness,
    ParseError,
    ValidationError,
)
from .fileio import (
    CONFIG_KEYS,
    _matrix,
    _vector,
    build_run_spec,
    parse_config,
    trajectory_summary,
    write_summary_json,
    write_trajectory_csv,
)
from .lyapunov import verify_ess
from .serialization import canonical_json, config_digest
from .ternary import render_ternary_svg

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


def _add_landscape(p):
    g = p.add_argument_group("landscape (give --a and --b, or --matrix)")
    g.add_argument("--a", type=float, help="cyclic payoff a (rows (0,a,b), (b,0,a), (a,b,0))")
    g.add_argument("--b", type=float, help="cyclic payoff b")
    g.add_argument("--matrix", help="explicit square payoff matrix, rows separated by ';', e.g. '0,1,-1;-1,0,1;1,-1,0'")


def _add_run_flags(p, with_beta=True):
    p.add_argument("--dynamic", choices=("replicator", "projection"), default="replicator",
                   help="vector field (default: replicator)")
    p.add_argument("--momentum", choices=("none", "polyak", "nesterov"), default="polyak",
                   help="momentum variant (default: polyak)")
    p.add_argument("--alpha", type=float, default=None, help="learning rate / step size")
    if with_beta:
        p.add_argument("--beta", type=float, default=0.0, help="momentum coefficient (default: 0)")
    p.add_argument("--normalize", action="store_true", help="divide the field by the mean fitness")
    p.add_argument("--x0", help=f"initial state, comma separated (default: {','.join(map(str, experiments.DEFAULT_X0))})")
    p.add_argument("--max-steps", type=int, default=10_000_000, help="step cap (default: 1e7)")
    p.add_argument("--boundary-delta", type=float, default=1e-9,
                   help="a coordinate at or below this ends the run as Diverged (default: 1e-9)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evomomentum",
        description="Replicator and projection dynamics with Polyak/Nesterov momentum.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", help="run one configuration and write CSV/JSON/SVG outputs",
                       description="Run one dynamic. Flags override values read from --config.")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--dump-config", metavar="PATH", help="write the effective configuration to PATH")
    _add_landscape(p)
    p.add_argument("--dynamic", choices=("replicator", "projection", "continuous"),
                   help="replicator, projection, or continuous (RK4 momentum replicator)")
    p.add_argument("--momentum", choices=("none", "polyak", "nesterov"), help="momentum variant (discrete only)")
    p.add_argument("--alpha", type=float, help="learning rate (discrete)")
    p.add_argument("--beta", type=float, help="momentum coefficient")
    p.add_argument("--normalize", action="store_const", const=True, help="divide the field by the mean fitness")
    p.add_argument("--x0", help="initial state, comma separated (required)")
    p.add_argument("--reference", help="reference state for Lyapunov values (default: barycenter)")
    p.add_argument("--max-steps", type=int, help="discrete step cap")
    p.add_argument("--epsilon", type=float, help="convergence threshold on the Lyapunov value")
    p.add_argument("--boundary-delta", type=float, help="divergence threshold on coordinates")
    p.add_argument("--horizon", type=float, help="end time T for the continuous dynamic")
    p.add_argument("--step-size", dest="h", type=float, help="RK4 step h for the continuous dynamic")
    p.add_argument("--seed", type=int, help="recorded seed")
    p.add_argument("--out", dest="output", help="output path prefix (default: run)")
    p.add_argument("--formats", help="comma separated subset of csv,json,svg")
    p.add_argument("--record-every", type=int, help="keep every k-th step in the outputs")

    p = sub.add_parser("sweep", help="convergence-step ratios over a list of betas")
    _add_landscape(p)
    _add_run_flags(p, with_beta=False)
    p.add_argument("--betas", required=True, help="comma separated betas, each below 1")
    p.add_argument("--reference", help="target state (default: barycenter)")
    p.add_argument("--epsilon", type=float, default=1e-6, help="convergence threshold (default: 1e-6)")
    p.add_argument("--workers", type=int, default=None, help="parallel processes (default: sequential)")
    p.add_argument("--out", help="JSON output path (default: stdout)")

    p = sub.add_parser("classify", help="converging/diverging/cycling verdict on a zero-sum landscape")
    _add_landscape(p)
    _add_run_flags(p)
    p.add_argument("--steps", type=int, default=100_000, help="steps to run (default: 100000)")
    p.add_argument("--window", type=int, default=1000, help="KL averaging window (default: 1000)")
    p.add_argument("--out", help="JSON output path (default: stdout)")

    p = sub.add_parser("verify-scaling", help="check dV_beta/dt * (1-beta) = dV_0/dt at random states")
    _add_landscape(p)
    p.add_argument("--betas", default="-1,0.5,0.9,1.5", help="comma separated betas (default: -1,0.5,0.9,1.5)")
    p.add_argument("--reference", help="reference state (default: barycenter)")
    p.add_argument("--samples", type=int, default=100, help="random states (default: 100)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    p.add_argument("--out", help="JSON output path (default: stdout)")

    p = sub.add_parser("verify-ess", help="sample the ESS inequality around a candidate state")
    _add_landscape(p)
    p.add_argument("--candidate", help="candidate state (default: barycenter)")
    p.add_argument("--radius", type=float, default=0.2, help="neighbourhood radius (default: 0.2)")
    p.add_argument("--samples", type=int, default=10_000, help="sample count (default: 10000)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed (default: 0)")
    p.add_argument("--out", help="JSON output path (default: stdout)")
    return parser


def _landscape_from(args):
    has_ab = args.a is not None or args.b is not None
    if has_ab and args.matrix is not None:
        raise ValidationError("matrix", "give either --a/--b or --matrix, not both")
    if args.matrix is not None:
        try:
            return MatrixLandscape(_matrix("matrix", args.matrix))
        except ValueError as exc:
            raise ValidationError("matrix", str(exc)) from None
    if args.a is None or args.b is None:
        raise ValidationError("landscape", "give both --a and --b, or --matrix")
    return make_cyclic_matrix(args.a, args.b)


def _point(key, text, n, default=None):
    if text is None:
        if default is None:
            return SimplexPoint.barycenter(n)
        text = default
    values = _vector(key, text)
    if len(values) != n:
        raise ValidationError(key, f"expected {n} coordinates, got {len(values)}")
    try:
        return SimplexPoint(values)
    except ValueError as exc:
        raise ValidationError(key, str(exc)) from None


def _betas(text):
    return list(_vector("betas", text))


def _emit(payload, out):
    if out:
        write_summary_json(payload, out)
    else:
        sys.stdout.write(canonical_json(payload if isinstance(payload, dict) else payload.as_dict()) + "\n")


def _discrete_config(args, beta=0.0, alpha_default=1e-3, epsilon=1e-6):
    try:
        return DynamicsConfig(
            dynamic=args.dynamic,
            momentum=args.momentum,
            learning_rate=args.alpha if args.alpha is not None else alpha_default,
            beta=beta,
            normalize_by_mean=args.normalize,
            max_steps=args.max_steps,
            convergence_epsilon=epsilon,
            boundary_delta=args.boundary_delta,
        )
    except ValueError as exc:
        raise ValidationError("config", str(exc)) from None


def cmd_simulate(args) -> int:
    raw = {}
    if args.config:
        raw.update(parse_config(args.config).as_dict())
        raw = {k: v for k, v in raw.items() if v is not None}
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    if args.matrix is not None or args.a is not None or args.b is not None:
        # flags replace the whole landscape from the file
        for key in ("a", "b", "matrix"):
            if getattr(args, key) is None:
                raw.pop(key, None)
    spec = build_run_spec(raw)
    if args.dump_config:
        Path(args.dump_config).write_text(spec.to_config_text())

    landscape = spec.landscape()
    reference = spec.reference_point()
    if spec.dynamic == "continuous":
        traj = continuous_integrate(
            landscape, spec.x0, spec.beta, spec.horizon, spec.h,
            reference=reference, boundary_delta=spec.boundary_delta, record_every=spec.record_every,
        )
    else:
        traj = iterate(spec.dynamics_config(), landscape, spec.x0, reference, record_every=spec.record_every)

    prefix = Path(spec.output)
    if prefix.parent != Path("."):
        prefix.parent.mkdir(parents=True, exist_ok=True)
    if "csv" in spec.formats:
        write_trajectory_csv(traj, f"{prefix}.csv")
    if "json" in spec.formats:
        write_summary_json(trajectory_summary(traj, spec), f"{prefix}.json")
    if "svg" in spec.formats:
        label = f"{spec.dynamic} {spec.momentum} beta={spec.beta!r}"
        render_ternary_svg([traj], f"{prefix}.svg", [label])
    print(f"status={traj.status.value} steps={traj.final_step if len(traj) else 0}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    landscape = _landscape_from(args)
    n = landscape.n
    x0 = _point("x0", args.x0, n, ",".join(map(str, experiments.DEFAULT_X0)) if n == 3 else None)
    reference = _point("reference", args.reference, n)
    betas = _betas(args.betas)
    if any(not b < 1.0 for b in betas):
        raise ValidationError("betas", "every beta must be below 1")
    config = _discrete_config(args, epsilon=args.epsilon)
    result = experiments.beta_sweep_ratio(config, landscape, x0, reference, betas, max_workers=args.workers)
    _emit(result, args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    landscape = _landscape_from(args)
    if not landscape.is_skew_symmetric():
        raise ValidationError("landscape", "classify needs a zero-sum (skew-symmetric) payoff matrix")
    n = landscape.n
    x0 = _point("x0", args.x0, n, ",".join(map(str, experiments.DEFAULT_X0)) if n == 3 else None)
    config = _discrete_config(args, beta=args.beta, alpha_default=1 / 200)
    verdict = experiments.classify_cycling(config, landscape, x0, args.steps, args.window)
    _emit(verdict, args.out)
    return EXIT_OK


def cmd_verify_scaling(args) -> int:
    landscape = _landscape_from(args)
    reference = _point("reference", args.reference, landscape.n)
    betas = _betas(args.betas)
    if any(abs(1.0 - b) < 1e-9 for b in betas):
        raise ValidationError("betas", "beta = 1 is singular")
    if args.samples < 1:
        raise ValidationError("samples", "must be at least 1")
    error = experiments.scaling_identity_check(landscape, reference, betas, args.samples, args.seed)
    inputs = {
        "matrix": landscape.matrix.tolist(),
        "reference": list(reference),
        "betas": betas,
        "samples": args.samples,
        "seed": args.seed,
    }
    _emit({"max_relative_error": error, **inputs, "config_digest": config_digest(inputs)}, args.out)
    return EXIT_OK


def cmd_verify_ess(args) -> int:
    landscape = _landscape_from(args)
    candidate = _point("candidate", args.candidate, landscape.n)
    if not args.radius > 0:
        raise ValidationError("radius", "must be positive")
    if args.samples < 1:
        raise ValidationError("samples", "must be at least 1")
    report = verify_ess(landscape, candidate, args.radius, args.samples, args.seed)
    _emit(report, args.out)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "classify": cmd_classify,
    "verify-scaling": cmd_verify_scaling,
    "verify-ess": cmd_verify_ess,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are invalid input here
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, ParseError, BetaSingularity, NearZeroMeanFitness) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (DidNotConverge, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except EvoMomentumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
