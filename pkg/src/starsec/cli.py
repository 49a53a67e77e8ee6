"""Command-line interface: single runs, sweeps, selftest, and program dumps."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .conic import dump_program
from .harness import SweepSpec, figure_protocols, run_sweep, selftest, run_single
from .scenario import (
    PRESETS,
    derive_run_seed,
    load_config,
    sample_geometry,
)
from .channel import sample_channels
from .subproblems import (
    apply_baseline,
    build_v_step,
    build_w_step,
    initial_design,
    restore_feasibility,
    sensing_only,
)


def _load_cfg(args):
    if args.config:
        return load_config(args.config)
    preset = PRESETS.get(args.preset)
    if preset is None:
        raise SystemExit(f"unknown preset {args.preset!r}; choices: {sorted(PRESETS)}")
    return preset()


def _cmd_run(args) -> int:
    config = _load_cfg(args)
    if args.tol is not None:
        config = replace(config, tol=args.tol).validate()
    if args.max_iter is not None:
        config = replace(config, max_iters=args.max_iter).validate()
    seed = args.seed if args.seed is not None else derive_run_seed(config.master_seed, 0)
    trace, feas = run_single(config, args.baseline, seed)
    record = {
        "baseline": args.baseline,
        "seed": seed,
        "status": trace.status,
        "omega": trace.oracle_omega,
        "omega_solver": trace.solver_omega,
        "iterations": trace.n_iterations,
        "omega_trace": trace.omega_values,
        "feasible": feas.feasible(),
        "worst_slack": feas.worst,
        "total_time_s": trace.total_time,
    }
    text = json.dumps(record, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0 if trace.status != "infeasible" else 1


def _cmd_sweep(args) -> int:
    if args.figure:
        spec = figure_protocols(args.figure, scale=args.scale)
    elif args.spec:
        data = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        data["values"] = tuple(data["values"])
        data["baselines"] = tuple(data["baselines"])
        if "secondary_values" in data:
            data["secondary_values"] = tuple(data["secondary_values"])
        spec = SweepSpec(**data).validate()
    else:
        raise SystemExit("either --figure or --spec is required")
    if args.runs is not None:
        spec = replace(spec, runs=args.runs).validate()
    result = run_sweep(spec, jobs=args.jobs, out_dir=args.out)
    print(result.to_csv(), end="")
    return 0


def _cmd_selftest(args) -> int:
    failures = selftest(verbose=True)
    return 1 if failures else 0


def _cmd_dump_program(args) -> int:
    config = _load_cfg(args)
    seed = args.seed if args.seed is not None else derive_run_seed(config.master_seed, 0)
    geometry = sample_geometry(config, seed)
    channels = sample_channels(config, geometry, seed)
    plan = apply_baseline(args.baseline)
    consts = sensing_only(channels, config)
    start = initial_design(channels, config, plan, seed)
    restored, _ = restore_feasibility(channels, start, consts, config, plan)
    if restored is None or restored.status != "optimal":
        raise SystemExit("could not produce a feasible expansion point")
    expansion = restored.design
    if args.kind == "w":
        prog = build_w_step(channels, expansion, consts, config, plan)
    else:
        prog = build_v_step(
            channels, expansion, consts, config, plan,
            conventional=(plan.ris_mode == "conventional"),
        )
    dump_program(prog.canonicalize(), args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="starsec",
        description="Secure ISAC design: min-secrecy-rate maximization with a STAR-RIS",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single channel realization, one baseline")
    p_run.add_argument("--config", help="YAML config path")
    p_run.add_argument("--preset", default="desk-default", choices=sorted(PRESETS))
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--baseline", default="rsma-star-opt")
    p_run.add_argument("--tol", type=float)
    p_run.add_argument("--max-iter", type=int)
    p_run.add_argument("--out", help="write the JSON run record here")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="Monte Carlo parameter sweep")
    p_sweep.add_argument("--figure", choices=["fig2", "fig3a", "fig3b", "fig3c", "fig3d"])
    p_sweep.add_argument("--scale", default="desk", choices=["desk", "paper"])
    p_sweep.add_argument("--spec", help="JSON SweepSpec path")
    p_sweep.add_argument("--runs", type=int)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", help="output directory for CSV + run records")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_self = sub.add_parser("selftest", help="fast invariant suites")
    p_self.set_defaults(func=_cmd_selftest)

    p_dump = sub.add_parser("dump-program", help="canonicalized subproblem dump")
    p_dump.add_argument("--config")
    p_dump.add_argument("--preset", default="desk-default", choices=sorted(PRESETS))
    p_dump.add_argument("--seed", type=int)
    p_dump.add_argument("--baseline", default="rsma-star-opt")
    p_dump.add_argument("--kind", default="w", choices=["w", "v"])
    p_dump.add_argument("--out", required=True)
    p_dump.set_defaults(func=_cmd_dump_program)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
