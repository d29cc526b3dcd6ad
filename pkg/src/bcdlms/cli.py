"""Command-line entry point.

Subcommands: ``run`` (Monte-Carlo experiments from presets or manifest
files), ``predict`` (theory-only steady-state and transient output),
``bounds`` (per-node step-size stability limits) and ``inspect``
(topology and profile sanity report).

Exit codes: 0 success, 2 configuration/usage errors, 3 divergence or
instability.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness, theory
from .datamodel import SystemProfile
from .harness import (AlgorithmSpec, ExperimentConfig, build_matrices,
                      load_manifest, preset, preset_names, run_experiment)
from .network import random_geometric_topology
from .theory import InstabilityError, to_db

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

PROFILE_CHOICES = sorted(harness.PROFILES)
RULE_CHOICES = list(harness.COMBINATION_RULES)


def _profile(name: str, num_nodes: int) -> SystemProfile:
    profile = harness.PROFILES[name]()
    if num_nodes == profile.num_nodes:
        return profile
    if num_nodes > profile.num_nodes:
        raise ValueError(f"profile {name!r} defines {profile.num_nodes} nodes; "
                         f"--num-nodes can only restrict to the first ones")
    return SystemProfile(
        w_o=profile.w_o,
        regressor_cov=profile.regressor_cov[:num_nodes],
        regression_noise_var=profile.regression_noise_var[:num_nodes],
        output_noise_var=profile.output_noise_var[:num_nodes],
        field=profile.field,
    )


def _topology(args):
    return random_geometric_topology(args.num_nodes, args.radius, args.topology_seed)


def _add_network_flags(parser):
    parser.add_argument("--profile", choices=PROFILE_CHOICES, default="table1",
                        help="built-in signal/noise profile")
    parser.add_argument("--topology-seed", type=int, default=11033,
                        help="seed of the random geometric layout")
    parser.add_argument("--num-nodes", type=int, default=20)
    parser.add_argument("--radius", type=float, default=0.4,
                        help="maximum communication distance on the unit square")


def cmd_run(args) -> int:
    if args.experiment == "custom":
        if not args.config:
            print("error: --experiment custom requires --config", file=sys.stderr)
            return EXIT_CONFIG
        config = load_manifest(args.config)
    else:
        config = preset(args.experiment)
        if args.config:
            config = load_manifest(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["num_trials"] = args.trials
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
        if config.steady_window > args.horizon + 1:
            overrides["steady_window"] = args.horizon + 1
    if args.threads is not None:
        overrides["threads"] = args.threads
    if overrides:
        from dataclasses import replace
        config = replace(config, **overrides)

    result = run_experiment(config)
    out_dir = Path(args.out)
    written = result.write_outputs(out_dir)
    print(result.summary())
    print("wrote:")
    for path in written:
        print(f"  {path}")
    if result.total_diverged:
        print(f"error: {result.total_diverged} trial(s) diverged "
              f"(weight norm > {harness.DIVERGENCE_NORM:.0e})", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_predict(args) -> int:
    profile = _profile(args.profile, args.num_nodes)
    topo = _topology(args)
    rules = build_matrices(topo, profile)
    a2 = rules[args.combine]
    c = rules[args.fuse]
    a1 = rules["identity"]
    ops = theory.build_operators(profile, a1, a2, c, args.mu, topology=topo)
    try:
        pred = theory.transient(ops, profile, args.horizon)
    except InstabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED

    lines = [f"theory prediction: profile={args.profile}, mu={args.mu}, "
             f"combine={args.combine}, fuse={args.fuse}",
             f"network steady state: MSD {to_db(pred.network_msd):.2f} dB "
             f"({pred.network_msd:.6e}), EMSE {to_db(pred.network_emse):.2f} dB "
             f"({pred.network_emse:.6e})",
             f"{'node':>6}{'MSD dB':>12}{'MSD lin':>15}{'EMSE dB':>12}{'EMSE lin':>15}"]
    for k in range(profile.num_nodes):
        lines.append(f"{k + 1:>6}{to_db(pred.msd[k]):>12.2f}{pred.msd[k]:>15.6e}"
                     f"{to_db(pred.emse[k]):>12.2f}{pred.emse[k]:>15.6e}")
    table = "\n".join(lines)
    print(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "predict_steady_state.txt").write_text(table + "\n")
        harness._write_curve_csv(out / "predict_msd.csv", pred.msd_curve,
                                 pred.network_msd_curve, pred.network_msd_curve)
        harness._write_curve_csv(out / "predict_emse.csv", pred.emse_curve,
                                 pred.network_emse_curve, pred.network_emse_curve)
        print(f"wrote theory tables under {out}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    profile = _profile(args.profile, args.num_nodes)
    topo = _topology(args)
    c = build_matrices(topo, profile)[args.fuse]
    bounds = theory.step_size_bounds(profile, c)
    print(f"step-size upper bounds (fuse rule: {args.fuse}); "
          "valid range is 0 < mu_k < bound")
    print(f"{'node':>6}{'compensated':>15}{'uncompensated':>16}")
    for k in range(profile.num_nodes):
        print(f"{k + 1:>6}{bounds.compensated[k]:>15.6f}{bounds.uncompensated[k]:>16.6f}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    profile = _profile(args.profile, args.num_nodes)
    topo = _topology(args)
    rules = build_matrices(topo, profile)
    deg = topo.degrees
    print(f"topology: N={topo.num_nodes}, radius={topo.comm_radius}, "
          f"seed={args.topology_seed}, connected=yes")
    print(f"degrees (incl. self): min={int(deg.min())}, max={int(deg.max())}, "
          f"mean={deg.mean():.2f}")
    for name in ("metropolis", "relative-variance"):
        entries = rules[name].entries
        print(f"{name}: col sums in [{entries.sum(axis=0).min():.12f}, "
              f"{entries.sum(axis=0).max():.12f}], row sums in "
              f"[{entries.sum(axis=1).min():.12f}, {entries.sum(axis=1).max():.12f}]")
    ratios = profile.assumption2_ratio()
    print(f"noise-dominance margin sigma2_n*|w|^2/sigma2_v: min={ratios.min():.2f}, "
          f"max={ratios.max():.2f} (adaptive estimation wants >> 1)")
    print(f"{'node':>6}{'degree':>8}{'sigma2_v':>12}{'tr(R_u)':>12}{'sigma2_n':>12}{'margin':>10}")
    for k in range(profile.num_nodes):
        tr = float(np.trace(profile.regressor_cov[k]).real)
        print(f"{k + 1:>6}{int(deg[k]):>8}{profile.output_noise_var[k]:>12.4f}"
              f"{tr:>12.4f}{profile.regression_noise_var[k]:>12.4f}{ratios[k]:>10.1f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bcdlms",
        description="Bias-compensated diffusion LMS: simulation and performance theory")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo experiment")
    run.add_argument("--experiment", default="custom",
                     choices=[*preset_names(), "custom"],
                     help="named preset, or 'custom' with --config")
    run.add_argument("--config", type=Path, help="experiment manifest (JSON)")
    run.add_argument("--seed", type=int, help="override the master data seed")
    run.add_argument("--trials", type=int, help="override the number of trials")
    run.add_argument("--horizon", type=int, help="override the iteration horizon")
    run.add_argument("--threads", type=int,
                     help="worker threads over trial chunks (never changes results)")
    run.add_argument("--out", default="out", help="output directory")
    run.set_defaults(func=cmd_run)

    predict = sub.add_parser("predict", help="theory-only steady-state and transient curves")
    _add_network_flags(predict)
    predict.add_argument("--mu", type=float, default=0.05, help="common step size")
    predict.add_argument("--combine", choices=RULE_CHOICES, default="relative-variance",
                         help="rule for the estimate-combination matrix")
    predict.add_argument("--fuse", choices=RULE_CHOICES, default="metropolis",
                         help="rule for the gradient-fusion matrix")
    predict.add_argument("--horizon", type=int, default=1000)
    predict.add_argument("--out", help="directory for the CSV/table output")
    predict.set_defaults(func=cmd_predict)

    bounds = sub.add_parser("bounds", help="per-node step-size stability bounds")
    _add_network_flags(bounds)
    bounds.add_argument("--fuse", choices=RULE_CHOICES, default="metropolis")
    bounds.set_defaults(func=cmd_bounds)

    inspect = sub.add_parser("inspect", help="topology and profile report")
    _add_network_flags(inspect)
    inspect.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InstabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
