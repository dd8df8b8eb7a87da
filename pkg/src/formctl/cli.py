"""Command-line front end: formctl synth|validate|run <scenario.json>.

Exit codes: 0 success, 1 validation/synthesis failure, 2 runtime
divergence, 3 I/O failure.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import DivergenceError, FormctlError, ScenarioError
from .formation import ZeroFormation, validate_spec
from .protocols import Regime
from .scenario import load_scenario
from .sim import export, integrate
from .synthesis import verify_gainset

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_DIVERGENCE = 2
EXIT_IO = 3


def _out_dir(output, override):
    if override:
        return Path(override)
    if output.get("dir"):
        return Path(output["dir"])
    return Path(os.environ.get("FORMCTL_OUT_DIR", "."))


def _load(path):
    if not os.path.exists(path):
        raise OSError(f"scenario file not found: {path}")
    return load_scenario(path)


def _print_rows(rows):
    width = max(len(name) for name, _, _ in rows)
    for name, value, ok in rows:
        print(f"  {name:<{width}}  {value:>12}  {'pass' if ok else 'FAIL'}")


def validation_rows(scenario):
    """Named assumption/consistency checks for the scenario's regime."""
    from .protocols import validate_regime_topology

    rows = []
    try:
        validate_regime_topology(scenario.regime, scenario.topology,
                                  scenario.leader_input)
        rows.append(("topology_assumptions", "ok", True))
    except FormctlError as exc:
        rows.append(("topology_assumptions", str(exc)[:40], False))

    if isinstance(scenario.spec, ZeroFormation):
        rows.append(("formation_residual", "0", True))
    else:
        switch = set(scenario.spec.switch_times)
        grid = [t for t in np.linspace(0.0, min(scenario.t_final, 20.0), 41)
                if min((abs(t - s) for s in switch), default=1.0) > 1e-3]
        resid = validate_spec(scenario.spec, scenario.model.a,
                              scenario.model.b, scenario.gains.k1, grid)
        rows.append(("formation_residual", f"{resid:.2e}", resid < 1e-6))

    bound = (scenario.leader_input.bound
             if scenario.leader_input is not None else None)
    report = verify_gainset(scenario.model, scenario.gains, scenario.regime,
                            leader_bound=bound)
    for name, value, ok in report.entries:
        rows.append((name, f"{value:.3e}", ok))

    if scenario.regime is Regime.DIRECTED_TRACKING_BOUNDED_INPUT:
        c_ok = (scenario.init.c_node is None
                and scenario.init.c_range[0] >= 1.0) or (
                    scenario.init.c_node is not None
                    and np.min(scenario.init.c_node) >= 1.0)
        rows.append(("initial_weights_ge_1", "ok" if c_ok else "violated",
                     c_ok))
    return rows


def cmd_synth(args):
    scenario, output = _load(args.scenario)
    bound = (scenario.leader_input.bound
             if scenario.leader_input is not None else None)
    report = verify_gainset(scenario.model, scenario.gains, scenario.regime,
                            leader_bound=bound)
    print(f"synthesized gains for '{scenario.name}' "
          f"({scenario.regime.value}):")
    print(report)
    out_dir = _out_dir(output, args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{scenario.name}.gains.json"
    path.write_text(scenario.gains.to_json() + "\n")
    print(f"wrote {path}")
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_validate(args):
    scenario, _ = _load(args.scenario)
    rows = validation_rows(scenario)
    print(f"validation report for '{scenario.name}' "
          f"({scenario.regime.value}):")
    _print_rows(rows)
    return EXIT_OK if all(ok for _, _, ok in rows) else EXIT_VALIDATION


def run_one(path, overrides):
    """Load, run and export one scenario; returns (exit code, message)."""
    scenario, output = _load(path)
    if overrides.get("seed") is not None:
        scenario.seed = overrides["seed"]
    if overrides.get("dt") is not None:
        scenario.dt = overrides["dt"]
    if overrides.get("t_final") is not None:
        scenario.t_final = overrides["t_final"]
    if overrides.get("smooth_z"):
        scenario.options.smooth_z = True
    if not overrides.get("force"):
        rows = validation_rows(scenario)
        if not all(ok for _, _, ok in rows):
            bad = [name for name, _, ok in rows if not ok]
            return EXIT_VALIDATION, f"{path}: validation failed: {bad}"
    try:
        result = integrate(scenario, check_certificates=False)
    except DivergenceError as exc:
        return EXIT_DIVERGENCE, f"{path}: {exc}"
    out_dir = _out_dir(output, overrides.get("out"))
    snapshots = overrides.get("snapshots")
    if snapshots is None:
        snapshots = output.get("snapshots", [])
    written = export(result, out_dir, plots=output.get("plots", False),
                     snapshot_times=snapshots,
                     position_components=scenario.position_components)
    msg = (f"{path}: final error {result.summary['final_error']:.3e}, "
           f"wall {result.summary['wall_clock_s']:.1f}s, "
           f"wrote {len(written)} files to {out_dir}")
    accept = output.get("acceptance", {})
    if accept:
        window = float(accept.get("final_window", 5.0))
        thresh = float(accept.get("final_error", np.inf))
        err = (result.track_err if result.track_err is not None
               else result.stab_err.max(axis=2))
        tail = err[result.times >= result.times[-1] - window].max()
        if tail > thresh:
            return EXIT_VALIDATION, (
                f"{msg}\n{path}: acceptance failed: tail error "
                f"{tail:.3e} > {thresh:.3e}")
    return EXIT_OK, msg


def cmd_run(args):
    overrides = {
        "seed": args.seed, "dt": args.dt, "t_final": args.t_final,
        "out": args.out, "smooth_z": args.smooth_z, "force": args.force,
        "snapshots": ([float(v) for v in args.snapshots.split(",")]
                      if args.snapshots else None),
    }
    paths = args.scenario
    codes = []
    if args.jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(run_one, p, overrides) for p in paths]
            for fut in futures:
                code, msg = fut.result()
                print(msg)
                codes.append(code)
    else:
        for p in paths:
            code, msg = run_one(p, overrides)
            print(msg)
            codes.append(code)
    return max(codes)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="formctl",
        description="Synthesize gains and simulate distributed adaptive "
                    "time-varying formation control scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="synthesize gains and "
                                           "certificates")
    p_synth.add_argument("scenario")
    p_synth.add_argument("--out", default=None, help="output directory")
    p_synth.set_defaults(func=cmd_synth)

    p_val = sub.add_parser("validate", help="check assumptions, formation "
                                            "residual and certificates")
    p_val.add_argument("scenario")
    p_val.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="integrate and export results")
    p_run.add_argument("scenario", nargs="+")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--dt", type=float, default=None)
    p_run.add_argument("--t-final", type=float, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--smooth-z", action="store_true",
                       help="force the continuous saturation variant")
    p_run.add_argument("--snapshots", default=None,
                       help="comma-separated snapshot times")
    p_run.add_argument("--force", action="store_true",
                       help="run even if validation fails")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="parallel workers for a scenario batch")
    p_run.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ScenarioError, FormctlError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
