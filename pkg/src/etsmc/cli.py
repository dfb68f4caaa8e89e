"""Command-line interface.

Subcommands:
  design        validate a scenario's surfaces, angle, and gain condition
  simulate      run the closed loop and export trajectory/trigger/summary files
  verify-bounds check every observed inter-event time against its bound
  report        summarise a previous run directory

Exit codes: 0 ok, 1 error (bad input, failed run), 2 monitor violation
(cone violations after entry, or a failed bound row for verify-bounds).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .engine import simulate
from .errors import EtsmcError
from .reports import (
    design_report,
    render_design_report,
    render_verification_report,
    verification_report,
    write_summary_json,
    write_trajectory_csv,
    write_triggers_csv,
)
from .scenarios import BUILTIN_NAMES, load_scenario


def _load_with_overrides(source: str, args) -> "Scenario":
    sc = load_scenario(source)
    if getattr(args, "strategy", None):
        sc = replace(sc, etm=replace(sc.etm, strategy=args.strategy))
    sim_updates = {}
    if getattr(args, "dt", None) is not None:
        sim_updates["dt"] = args.dt
    if getattr(args, "t_final", None) is not None:
        sim_updates["t_final"] = args.t_final
    if sim_updates:
        sc = replace(sc, sim=replace(sc.sim, **sim_updates))
    return sc


def _cmd_design(args) -> int:
    sc = _load_with_overrides(args.scenario, args)
    rep = design_report(sc)
    if args.json:
        print(json.dumps(rep, indent=2, sort_keys=True))
    else:
        sys.stdout.write(render_design_report(rep))
    return 0


def _run_and_export(source: str, args) -> tuple[str, int, str]:
    """Worker body shared by single and batch simulation. Returns
    (scenario name, exit code, one status line)."""
    sc = _load_with_overrides(source, args)
    out_root = getattr(args, "out_root", None)
    if args.out:
        out_dir = args.out
    elif out_root:
        out_dir = os.path.join(out_root, sc.name)
    else:
        out_dir = os.path.join("runs", sc.name)
    os.makedirs(out_dir, exist_ok=True)
    result = simulate(sc.model, sc.sliding, sc.etm, sc.gain, sc.sim,
                      input_scale=sc.input_scale)
    write_trajectory_csv(result, os.path.join(out_dir, "trajectory.csv"),
                         stride=sc.sim.record_stride)
    write_triggers_csv(sc, result, os.path.join(out_dir, "triggers.csv"))
    write_summary_json(sc, result, os.path.join(out_dir, "summary.json"))
    mon = result.monitors
    code = 2 if mon.cone_violations > 0 else 0
    line = (
        f"{sc.name}: {result.summary['trigger_count']} triggers, "
        f"final ||x|| = {result.summary['final_state_norm']:.6g}, "
        f"violations = {mon.cone_violations}, wrote {out_dir}"
    )
    return sc.name, code, line


def _batch_worker(payload):
    source, args_dict = payload
    args = argparse.Namespace(**args_dict)
    try:
        return _run_and_export(source, args)
    except EtsmcError as exc:
        return source, 1, f"{source}: error: {exc}"


def _cmd_simulate(args) -> int:
    if args.batch:
        # Fan scenarios out to one engine per worker; merge results by name
        # so output order does not depend on completion order.
        args_dict = {
            "strategy": args.strategy,
            "dt": args.dt,
            "t_final": args.t_final,
            "out": None,
            "out_root": args.out,
        }
        payloads = [(source, args_dict) for source in args.scenario]
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_batch_worker, payloads))
        worst = 0
        for _, code, line in sorted(results, key=lambda r: r[0]):
            print(line)
            worst = max(worst, code)
        return worst
    if len(args.scenario) != 1:
        print("error: multiple scenarios require --batch", file=sys.stderr)
        return 1
    _, code, line = _run_and_export(args.scenario[0], args)
    print(line)
    return code


def _cmd_verify_bounds(args) -> int:
    sc = _load_with_overrides(args.scenario, args)
    result = simulate(sc.model, sc.sliding, sc.etm, sc.gain, sc.sim,
                      input_scale=sc.input_scale)
    rep = verification_report(sc, result)
    sys.stdout.write(render_verification_report(rep))
    return 0 if rep["all_pass"] else 2


def _cmd_report(args) -> int:
    path = os.path.join(args.run_dir, "summary.json")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            summary = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: {path}:{exc.lineno}:{exc.colno}: {exc.msg}", file=sys.stderr)
        return 1
    keys = [
        "scenario", "strategy", "t_final", "trigger_count", "min_inter_event",
        "mean_inter_event", "max_inter_event", "final_state_norm",
        "cone_entry_time", "switch_time", "cone_violations",
        "omega_radius", "omega_tail_contained",
    ]
    width = max(len(k) for k in keys)
    for key in keys:
        if key in summary:
            print(f"{key:<{width}}  {summary[key]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etsmc",
        description="Event-triggered sliding mode control: design checks, "
        "closed-loop simulation, and inter-event bound verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    scenario_help = (
        f"scenario JSON path or built-in name ({', '.join(BUILTIN_NAMES)})"
    )

    p_design = sub.add_parser("design", help="validate design conditions")
    p_design.add_argument("scenario", help=scenario_help)
    p_design.add_argument("--json", action="store_true", help="emit JSON")
    p_design.set_defaults(func=_cmd_design)

    p_sim = sub.add_parser("simulate", help="run the closed loop")
    p_sim.add_argument("scenario", nargs="+", help=scenario_help)
    p_sim.add_argument("--strategy", choices=["thm1", "thm3", "thm5"],
                       help="override the scenario's triggering strategy")
    p_sim.add_argument("--dt", type=float, help="integrator step (s)")
    p_sim.add_argument("--t-final", type=float, dest="t_final",
                       help="simulation horizon (s)")
    p_sim.add_argument("--out", help="output directory (default runs/<name>)")
    p_sim.add_argument("--batch", action="store_true",
                       help="run multiple scenarios on a worker pool")
    p_sim.set_defaults(func=_cmd_simulate)

    p_ver = sub.add_parser("verify-bounds",
                           help="check inter-event times against their bounds")
    p_ver.add_argument("scenario", help=scenario_help)
    p_ver.add_argument("--strategy", choices=["thm1", "thm3", "thm5"])
    p_ver.add_argument("--dt", type=float)
    p_ver.add_argument("--t-final", type=float, dest="t_final")
    p_ver.set_defaults(func=_cmd_verify_bounds)

    p_rep = sub.add_parser("report", help="summarise a run directory")
    p_rep.add_argument("run_dir")
    p_rep.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EtsmcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
