"""Command-line entry point.

Exit status: 0 when every check in the report passes, 1 when any check fails
or an output file cannot be written, 2 on usage or scenario errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import CVTeleError, ScenarioError
from .experiments import (
    ExperimentScenario,
    ScenarioReport,
    Target,
    calibrated_setup,
    calibration_entries,
    make_entry,
    run,
    sweep,
)
from .gaussian import vacuum
from .metrics import duan, fidelity_coherent, fidelity_from_duan_symmetric
from .protocol import EprSpec, TeleporterConfig, make_epr, teleport_coherent
from .report_io import emit_plot_data, to_structured, to_table
from .scenario_io import builtin_path, builtin_scenarios, load_scenario

log = logging.getLogger("cvtele")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of standard output")
    common.add_argument("--format", choices=("table", "structured"), default="table")
    common.add_argument("-v", "--verbose", action="count", default=0)

    scen = argparse.ArgumentParser(add_help=False)
    scen.add_argument("name", nargs="?", help="built-in scenario name or path to a scenario file")
    scen.add_argument("--scenario", help="path to a scenario file")
    scen.add_argument("--seed", type=int, help="override the Monte-Carlo seed (default 0)")
    scen.add_argument("--shots", type=int, help="override the Monte-Carlo shot count")
    scen.add_argument("--plot-dir", help="also write <name>.csv plot data and <name>.png figures here")

    p = argparse.ArgumentParser(prog="cvtele", description="Gaussian CV teleportation simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common, scen], help="run a scenario and report")
    sub.add_parser("calibrate", parents=[common, scen], help="run only the calibration stages")
    sw = sub.add_parser("sweep", parents=[common, scen], help="sweep one parameter")
    sw.add_argument("--param", help="parameter path, overrides the file's [sweep] section")
    sw.add_argument("--values", help="comma-separated values, overrides the file's [sweep] section")
    sub.add_parser("selftest", parents=[common], help="ideal and classical boundary checks")
    sub.add_parser("list", help="list the built-in scenarios")
    return p


def _resolve(args) -> Path:
    given = args.scenario or args.name
    if not given:
        raise ScenarioError("no scenario given (pass a name or --scenario PATH)")
    path = Path(given)
    if path.is_file():
        return path
    builtin = builtin_path(given)
    if builtin is not None and not args.scenario:
        return builtin
    raise ScenarioError(f"scenario file not found: {given}")


def _load(args) -> ExperimentScenario:
    scenario = load_scenario(_resolve(args))
    if args.seed is not None:
        if args.seed < 0:
            raise ScenarioError("--seed must be non-negative")
        scenario = replace(scenario, seed=args.seed)
    if args.shots is not None:
        if args.shots < 1:
            raise ScenarioError("--shots must be positive")
        scenario = replace(scenario, shots=args.shots)
    return scenario


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _render(report, fmt) -> str:
    return to_structured(report) if fmt == "structured" else to_table(report)


def _plots(plot_dir, name, results, sweep_info=None):
    from .plotting import render_levels, render_sweep

    d = Path(plot_dir)
    d.mkdir(parents=True, exist_ok=True)
    emit_plot_data(results, d / f"{name}.csv")
    if sweep_info is not None:
        param, values, reports = sweep_info
        quantity = "F_c" if "F_c" in reports[0] else reports[0].entries[-1].name
        render_sweep(param, values, reports, d / f"{name}.png", quantity)
    else:
        render_levels(results, d / f"{name}.png")


def cmd_run(args) -> int:
    scenario = _load(args)
    report = run(scenario)
    _write(_render(report, args.format), args.out)
    if args.plot_dir:
        _plots(args.plot_dir, scenario.name, report)
    return EXIT_OK if report.all_pass else EXIT_FAIL


def cmd_calibrate(args) -> int:
    scenario = _load(args)
    if not scenario.calibration:
        raise ScenarioError(f"{scenario.name}: no [[calibrate]] stages to run")
    setup, results = calibrated_setup(scenario)
    report = ScenarioReport(scenario.name, "calibrate", calibration_entries(scenario, results), results, setup)
    _write(_render(report, args.format), args.out)
    if args.plot_dir:
        _plots(args.plot_dir, scenario.name + "_calibration", report)
    return EXIT_OK if report.all_pass else EXIT_FAIL


def cmd_sweep(args) -> int:
    scenario = _load(args)
    param = args.param or (scenario.sweep.param if scenario.sweep else None)
    if args.values:
        try:
            values = [float(v) for v in args.values.split(",")]
        except ValueError:
            raise ScenarioError(f"--values: not a comma-separated list of numbers: {args.values!r}") from None
    else:
        values = list(scenario.sweep.values) if scenario.sweep else []
    if not param or not values:
        raise ScenarioError("sweep needs a parameter and values (from --param/--values or a [sweep] section)")
    base = replace(scenario, kind="coherent_teleport" if scenario.kind in ("gain_sweep", "squeeze_sweep") else scenario.kind,
                   sweep=None, targets={})
    reports = sweep(base, param, values)
    for v, r in zip(values, reports):
        r.name = f"{scenario.name}[{param}={v:g}]"
    if args.format == "structured":
        text = to_structured(reports)
    else:
        text = "\n".join(to_table(r) for r in reports)
    _write(text, args.out)
    if args.plot_dir:
        _plots(args.plot_dir, scenario.name, list(zip(values, reports)), (param, values, reports))
    return EXIT_OK if all(r.all_pass for r in reports) else EXIT_FAIL


def selftest_report() -> ScenarioReport:
    """Ideal-resource, classical-bound and separability-boundary checks."""
    rep = ScenarioReport("selftest", "selftest")

    def add(name, value, target, tol):
        e = make_entry(name, value)
        e.check(Target(target, tol))
        rep.entries.append(e)

    ideal = teleport_coherent((1.0, -2.0), TeleporterConfig(epr=EprSpec.pure(1e-6)))
    f_ideal = fidelity_coherent(ideal.cov[0, 0], ideal.cov[1, 1]).fidelity
    add("F_c ideal resource", f_ideal, 1.0, 1e-5)
    classical = teleport_coherent((1.0, -2.0), TeleporterConfig(epr=EprSpec.vacuum()))
    add("sigma_x classical", classical.cov[0, 0], 0.75, 1e-12)
    add("F_c classical", fidelity_coherent(classical.cov[0, 0], classical.cov[1, 1]).fidelity, 0.5, 1e-12)
    add("delta two-mode vacuum", duan(vacuum(2), 0, 1).delta, 1.0, 1e-12)
    add("delta vacuum-fed splitter", duan(make_epr(EprSpec.vacuum()), 0, 1).delta, 1.0, 1e-12)
    add("F_c at delta = 1", fidelity_from_duan_symmetric(1.0), 0.5, 1e-12)
    add("F_c at delta = 1/2", fidelity_from_duan_symmetric(0.5), 2 / 3, 1e-12)
    return rep


def cmd_selftest(args) -> int:
    report = selftest_report()
    _write(_render(report, args.format), args.out)
    return EXIT_OK if report.all_pass else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(getattr(args, "verbose", 0), 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "list":
        print("\n".join(builtin_scenarios()))
        return EXIT_OK
    handler = {"run": cmd_run, "calibrate": cmd_calibrate, "sweep": cmd_sweep, "selftest": cmd_selftest}[args.command]
    try:
        return handler(args)
    except ScenarioError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except CVTeleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
