"""Command-line entry point.

Subcommands::

    eqpnp solve <config.json>        reconstruction (pnp_fb or red_gd)
    eqpnp sample <config.json>       Langevin sampling (mean/variance images)
    eqpnp denoise <config.json>      single denoiser application
    eqpnp analyze <config.json>      Jacobian diagnostics over random patches
    eqpnp toy2d --out DIR            the two-pixel demonstration, both sets
    eqpnp verify-props --out DIR     structural verifier suite

Exit codes: 0 success, 2 solver divergence reported, 3 configuration error,
4 verifier failure.
"""

import argparse
import sys

from .config import ConfigError, parse_config_file
from .experiments import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_VERIFIER,
    run_analyze,
    run_denoise,
    run_experiment,
    run_toy2d,
    run_verify_props,
)

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqpnp",
        description="Equivariant plug-and-play solvers for linear inverse imaging problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("solve", "run a reconstruction experiment (pnp_fb or red_gd)"),
        ("sample", "run Langevin sampling and write chain mean/variance"),
        ("denoise", "apply the configured denoiser once"),
        ("analyze", "Jacobian symmetry/Lipschitz patch sweep"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("config", help="path to the experiment JSON config")
    p = sub.add_parser("toy2d", help="two-pixel perturbed-prox demonstration")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--max-iters", type=int, default=20_000)
    p = sub.add_parser("verify-props", help="run the structural verifier suite")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--risk-samples", type=int, default=10_000)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "toy2d":
            results = run_toy2d(args.out, max_iters=args.max_iters)
            for name, record in results.items():
                print(
                    f"{name}: standard={record['standard']['status']} "
                    f"equivariant={record['equivariant']['status']} "
                    f"equivariant_distance={record['equivariant']['distance_to_oracle']}"
                )
            return EXIT_OK
        if args.command == "verify-props":
            ok, verdicts = run_verify_props(args.out, seed=args.seed, risk_samples=args.risk_samples)
            for verdict in verdicts:
                print(f"{'PASS' if verdict.passed else 'FAIL'} {verdict.prop_id}")
            return EXIT_OK if ok else EXIT_VERIFIER

        cfg = parse_config_file(args.config)
        if args.command == "solve":
            if cfg.solver["algorithm"] not in ("pnp_fb", "red_gd"):
                raise ConfigError(f"{cfg.source}: solver.algorithm: solve expects pnp_fb or red_gd")
            outcome = run_experiment(cfg)
        elif args.command == "sample":
            if cfg.solver["algorithm"] != "ula":
                raise ConfigError(f"{cfg.source}: solver.algorithm: sample expects ula")
            outcome = run_experiment(cfg)
        elif args.command == "denoise":
            outcome = run_denoise(cfg)
        else:
            outcome = run_analyze(cfg)
        for key in sorted(outcome.summary):
            print(f"{key}={outcome.summary[key]}")
        print(f"status={outcome.status}")
        return outcome.exit_code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        # inconsistent parameter combinations surface here (shape mismatches,
        # unreadable files); they are configuration problems, not crashes
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
