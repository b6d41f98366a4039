"""Command-line entry point: run, verify, sweep and check subcommands.

Exit status: 0 success, 1 configuration or IO error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

from . import verify as oracle
from .config import (
    config_from_tree,
    config_to_tree,
    load_config,
    parse_axis_values,
    parse_config,
    reference_config_text,
    set_path,
)
from .errors import ConfigError, InitialConditionError
from .simulator import BREACH_POLICIES, build_scenario, run, run_batch
from .traceio import write_plot_data, write_report, write_trace_csv

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION = 0, 1, 2

REFERENCE = "reference.yaml"
VERIFY_DEFAULT = "reference_slow.yaml"
VERIFY_DURATION = 10.0
SWEEP_DT_DURATION = 5.0

# short names accepted by `sweep --axis`
AXIS_ALIASES = {
    "k_d": "gains.k_d",
    "k_beta": "gains.k_beta",
    "l_d": "envelope.distance.decay",
    "l_beta": "envelope.bearing.decay",
    "rho_inf_d": "envelope.distance.rho_inf",
    "rho_inf_beta": "envelope.bearing.rho_inf",
    "d_des": "platoon.d_des",
    "dt": "simulation.dt",
    "duration": "simulation.duration",
}

log = logging.getLogger("platoon_ppc")


def _reject(err: ConfigError) -> None:
    print("configuration rejected:", file=sys.stderr)
    lines = list(err.errors)
    if not lines and isinstance(err, InitialConditionError):
        lines = [
            f"vehicle {v['vehicle']}: {v['channel']} error {v['value']!r} outside ({v['lower']!r}, {v['upper']!r})"
            for v in err.violations
        ]
    for msg in lines:
        print(f"  {msg}", file=sys.stderr)


def _load(path):
    if path is None:
        return parse_config(reference_config_text(REFERENCE))
    return load_config(path)


def _apply_overrides(cfg, args):
    if getattr(args, "breach_policy", None):
        cfg = dataclasses.replace(cfg, breach_policy=args.breach_policy)
    if getattr(args, "decimation", None) is not None:
        if args.decimation < 1:
            raise ConfigError([f"--decimation must be >= 1, got {args.decimation}"])
        cfg = dataclasses.replace(cfg, output=dataclasses.replace(cfg.output, decimation=args.decimation))
    return cfg


def cmd_run(args) -> int:
    cfg = _apply_overrides(_load(args.config), args)
    scenario = build_scenario(cfg)
    out = cfg.output
    os.makedirs(args.out_dir, exist_ok=True)
    result = run(scenario, seed=args.seed)

    trace_path = os.path.join(args.out_dir, out.trace)
    rows = write_trace_csv(result.trace, trace_path, out.decimation)
    write_report(result.report, os.path.join(args.out_dir, out.report))
    if out.plot_data:
        plot_dir = os.path.join(args.out_dir, out.plot_data)
        write_plot_data(result.trace, scenario.constraints, plot_dir, out.decimation)
        if out.figures or args.figures:
            from .plotting import render_figures

            render_figures(plot_dir)
    elif args.figures:
        log.warning("--figures ignored: output.plot_data is disabled")

    rep = result.report
    print(
        f"{rep['rows']} ticks to t={rep['end_time']:.3f} s, {rows} rows written to {trace_path}; "
        f"envelope violations {sum(rep['envelope_violations'].values())}, "
        f"constraint violations {sum(rep['constraint_violations'].values())}, "
        f"wall {rep['wall_clock_s']:.2f} s"
    )
    if result.halted:
        print(f"halted: {result.diagnostic}", file=sys.stderr)
    return EXIT_OK if rep["passed"] else EXIT_VIOLATION


def _verify_scenario(path):
    if path is not None:
        return build_scenario(load_config(path))
    cfg = parse_config(reference_config_text(VERIFY_DEFAULT))
    return dataclasses.replace(build_scenario(cfg), duration=VERIFY_DURATION)


def cmd_verify(args) -> int:
    scenario = _verify_scenario(args.config)
    sign = -1.0 if args.wrong_bearing_sign else 1.0
    results = oracle.run_checks(scenario, bearing_sign=sign)
    if args.dt_sweep:
        rows = oracle.dt_sweep(scenario, duration=min(scenario.duration, SWEEP_DT_DURATION))
        print(f"{'dt [s]':>10} {'distance residual':>18} {'bearing residual':>18}")
        for dt, rd, rb in rows:
            print(f"{dt:>10.4g} {rd:>18.4e} {rb:>18.4e}")
        results.extend(oracle.check_convergence(rows))
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    sys.stdout.flush()
    if failed:
        print(f"verify: {len(failed)} of {len(results)} checks FAILED", file=sys.stderr)
        for r in failed:
            print(f"  {r.name}", file=sys.stderr)
        return EXIT_VIOLATION
    print(f"verify: all {len(results)} checks passed")
    return EXIT_OK


def _parse_axis(spec: str):
    if "=" not in spec:
        raise ConfigError([f"sweep axis {spec!r} must look like path=v1,v2,..."])
    path, values = spec.split("=", 1)
    path = path.strip()
    return AXIS_ALIASES.get(path, path), parse_axis_values(values)


def cmd_sweep(args) -> int:
    base = _apply_overrides(_load(args.config), args)
    path, values = _parse_axis(args.axis)
    scenarios = []
    for value in values:
        tree = config_to_tree(base)
        set_path(tree, path, value)
        scenarios.append(build_scenario(config_from_tree(tree)))
    if path == "simulation.dt" and args.duration is None:
        # the convergence study only needs a short horizon
        scenarios = [dataclasses.replace(s, duration=min(s.duration, SWEEP_DT_DURATION)) for s in scenarios]
    elif args.duration is not None:
        scenarios = [dataclasses.replace(s, duration=args.duration) for s in scenarios]

    results = run_batch(scenarios, jobs=args.jobs, seed=args.seed, audit=True)
    entries = []
    for value, res in zip(values, results):
        rep = res["report"]
        entries.append(
            {
                "value": value,
                "passed": rep["passed"],
                "envelope_violations": rep["envelope_violations"],
                "constraint_violations": rep["constraint_violations"],
                "halted": rep["halted"],
                "max_abs_v": rep["max_abs_v"],
                "max_abs_omega": rep["max_abs_omega"],
                "settling_time": rep["settling_time"],
                "steady_state": rep["steady_state"],
                "audit": res["audit"],
                "report": rep,
            }
        )
    summary = {"axis": path, "values": values, "runs": entries}
    os.makedirs(args.out_dir, exist_ok=True)
    write_report(summary, os.path.join(args.out_dir, "sweep.json"))

    print(f"{'value':>12} {'viol':>5} {'max|v|':>11} {'max|w|':>11} {'audit d':>11} {'audit b':>11}")
    for e in entries:
        viol = sum(e["envelope_violations"].values()) + sum(e["constraint_violations"].values())
        print(
            f"{str(e['value']):>12} {viol:>5} {e['max_abs_v']:>11.4e} {e['max_abs_omega']:>11.4e} "
            f"{e['audit']['distance']:>11.4e} {e['audit']['bearing']:>11.4e}"
        )
    return EXIT_OK if all(e["passed"] for e in entries) else EXIT_VIOLATION


def cmd_check(args) -> int:
    cfg = _apply_overrides(_load(args.config), args)
    scenario = build_scenario(cfg)
    print(
        f"config OK: {scenario.n_followers} followers, dt={scenario.dt!r} s, "
        f"duration={scenario.duration!r} s, {scenario.n_steps} steps"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="platoon-ppc", description=__doc__.splitlines()[0])
    p.add_argument("--log-level", default="WARNING", help="logging level on stderr (default WARNING)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_output=True):
        sp.add_argument("--config", metavar="PATH", help="scenario YAML (default: bundled reference)")
        sp.add_argument("--breach-policy", choices=BREACH_POLICIES)
        sp.add_argument("--seed", type=int, help="recorded in the report; the pipeline is noise-free")
        if with_output:
            sp.add_argument("--out-dir", metavar="PATH", default=".")
            sp.add_argument("--decimation", type=int, metavar="N", help="write every N-th row")

    sp = sub.add_parser("run", help="simulate a scenario and write trace, report and plot data")
    common(sp)
    sp.add_argument("--figures", action="store_true", help="also render PNG figures from the plot data")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("verify", help="run the analytic oracle checks")
    sp.add_argument("--config", metavar="PATH", help="scenario for the finite-difference audit")
    sp.add_argument("--dt-sweep", action="store_true", help="add the residual-vs-dt convergence table")
    sp.add_argument("--wrong-bearing-sign", action="store_true",
                    help="test hook: audit against the reversed bearing convention (must fail)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="one run per value of a numeric config entry")
    common(sp)
    sp.add_argument("--axis", required=True, metavar="PATH=V1,V2,...",
                    help="dotted config path or alias (k_d, k_beta, l_d, dt, ...) and values")
    sp.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes")
    sp.add_argument("--duration", type=float, metavar="S", help="override the simulated duration [s]")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("check", help="validate a configuration without simulating")
    common(sp, with_output=False)
    sp.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as err:
        _reject(err)
        return EXIT_CONFIG
    except OSError as err:
        print(f"IO error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
