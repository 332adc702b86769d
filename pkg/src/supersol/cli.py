"""
Command-line interface.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import experiments as ex
from .config import ExperimentSpec, expand_sweep, parse_config, parse_text
from .diagnostics import fit_rate
from .errors import ConfigError, SupersolError
from .specfun import KummerParams, kummer_m_derivative

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# scenario -> flags accepted by its subcommand (config keys; ``lambda`` is ``--lambda``)
SCENARIO_FLAGS = {
    "potential-check": ("dim", "alpha", "a0", "kind", "rmax", "dr", "eps"),
    "supersol-cert": ("dim", "alpha", "a0", "kind", "sigma", "eps", "delta", "t0", "rmax", "dr",
                      "times", "modified"),
    "heat-decay": ("dim", "alpha", "a0", "kind", "sigma", "r0", "rmax", "dr", "dt", "horizon",
                   "scheme", "initial", "width", "snapshots", "window"),
    "wave-energy": ("dim", "alpha", "a0", "kind", "sigma", "eps", "delta", "lambda", "t0", "nu",
                    "r0", "rmax", "dr", "dt", "horizon", "width", "snapshots"),
    "diffusion-compare": ("dim", "alpha", "a0", "kind", "sigma", "rmax", "dr", "dt", "horizon",
                          "width", "snapshots", "window"),
}


def _add_scenario_flags(parser: argparse.ArgumentParser, scenario: str, config: bool = True) -> None:
    for key in SCENARIO_FLAGS[scenario]:
        parser.add_argument(f"--{key}", dest=f"opt_{key}", metavar="VALUE",
                            help="comma-separated list to sweep" if key in ("dim", "alpha", "sigma", "eps") else None)
    if config:
        parser.add_argument("--config", help="key=value configuration file; flags override it")
    parser.add_argument("--jobs", type=int, default=1, help="parallel sweep entries")


def _spec_from_args(args, scenario: str) -> ExperimentSpec:
    """Config file (if any) overlaid with explicit flags, parsed by the config schema."""
    base = parse_config(args.config) if getattr(args, "config", None) else \
        ExperimentSpec(scenario, scenario)
    if base.scenario != scenario:
        raise ConfigError(f"config scenario {base.scenario!r} does not match subcommand ({scenario})",
                          key="scenario")
    lines = [f"scenario = {scenario}", f"name = {base.name}"]
    params = dict(base.parameters)
    for key in SCENARIO_FLAGS[scenario]:
        raw = getattr(args, f"opt_{key}", None)
        if raw is not None:
            lines.append(f"{key} = {raw}")
            params.pop(key, None)
    flagged = parse_text("\n".join(lines))
    params.update(flagged.parameters)
    return ExperimentSpec(base.name, scenario, params, dict(base.outputs))


def _run_one(spec: ExperimentSpec, tables: dict):
    """Worker: run one spec and write the requested tables; returns (report, error)."""
    try:
        result = ex.run_scenario(spec)
        for table, path in tables.items():
            header, rows = result.tables[table]()
            result.report.files.append(ex.write_csv(path, header, rows))
        return result.report, None
    except ConfigError as exc:
        return None, f"configuration error: {exc}"
    except SupersolError as exc:
        return None, f"error: {exc}"


def _suffix_paths(tables: dict, spec: ExperimentSpec, base: ExperimentSpec) -> dict:
    if spec.name == base.name:
        return tables
    suffix = spec.name[len(base.name) + 1:]
    out = {}
    for table, path in tables.items():
        stem, dot, ext = path.rpartition(".")
        out[table] = f"{stem}-{suffix}.{ext}" if dot else f"{path}-{suffix}"
    return out


def _run_specs(spec: ExperimentSpec, tables: dict, jobs: int) -> int:
    entries = expand_sweep(spec)
    work = [(s, _suffix_paths(tables, s, spec)) for s in entries]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, *zip(*work)))
    else:
        results = [_run_one(s, t) for s, t in work]
    code = EXIT_OK
    for (s, _), (report, err) in zip(work, results):
        if err is not None:
            print(f"{s.name}: {err}", file=sys.stderr)
            code = EXIT_USAGE
            continue
        print(report.headline())
        for line in report.lines():
            print("  " + line)
        for path in report.files:
            print(f"  wrote {path}")
        if not report.passed and code == EXIT_OK:
            code = EXIT_FAIL
    return code


# ---------------------------------------------------------------------------
# subcommands


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_specfun_eval(args) -> int:
    p = KummerParams(float(args.b), float(args.c))
    s = np.array(_floats(args.s))
    values = np.atleast_1d(kummer_m_derivative(p, s, args.deriv_order))
    for v in values:
        print("%.17g" % v)
    return EXIT_OK


def cmd_scenario(scenario: str, primary: str | None, extra: str | None = None):
    def run(args) -> int:
        spec = _spec_from_args(args, scenario)
        tables = {}
        out = args.out or spec.outputs.get("output")
        if out:
            tables[primary] = out
        if extra and getattr(args, "series_out", None):
            tables[extra] = args.series_out
        return _run_specs(spec, tables, args.jobs)
    return run


def cmd_run(args) -> int:
    code = EXIT_OK
    for path in args.config:
        spec = parse_config(path)
        tables = {}
        if "output" in spec.outputs:
            # the primary table of each scenario
            primary = {"kummer-suite": "checks", "potential-check": "report",
                       "supersol-cert": "certificate"}.get(spec.scenario, "series")
            tables[primary] = spec.outputs["output"]
        code = max(code, _run_specs(spec, tables, args.jobs))
    return code


def cmd_rates_fit(args) -> int:
    series = ex.read_series_csv(args.input, args.column)
    window = tuple(_floats(args.window)) if args.window else None
    if window is not None and len(window) != 2:
        raise ConfigError("--window needs two numbers tmin,tmax", key="window")
    fit = fit_rate(series, window, log_corrected=args.log_corrected)
    if args.target is None:
        print(f"slope {fit.slope:.6g} r^2 {fit.rsq:.6f} points {fit.n_points}")
        return EXIT_OK
    check = ex.check_close("rates.fit", "fitted slope", fit.slope, args.target, args.tol)
    print(f"slope {fit.slope:.6g} target {args.target:.6g} tol {args.tol:.3g} "
          f"{'PASS' if check.passed else 'FAIL'}")
    return EXIT_OK if check.passed else EXIT_FAIL


def cmd_suite(args) -> int:
    wanted = [int(x) for x in args.criteria.split(",")] if args.criteria else sorted(ex.CRITERIA)
    unknown = [n for n in wanted if n not in ex.CRITERIA]
    if unknown:
        raise ConfigError(f"unknown criteria {unknown}; choose from {sorted(ex.CRITERIA)}",
                          key="criteria")
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(ex.run_criterion, wanted, [args.seed] * len(wanted)))
    else:
        reports = [ex.run_criterion(n, args.seed) for n in wanted]
    for report in reports:
        print(report.headline())
        if args.verbose or not report.passed:
            for line in report.lines():
                print("  " + line)
    failed = [r.name.split()[0] for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} criteria pass"
          + (f"; failing: {', '.join(failed)}" if failed else ""))
    return EXIT_OK if not failed else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="supersol", allow_abbrev=False,
                                     description="Decay-rate experiments for radial diffusion and damped waves.")
    sub = parser.add_subparsers(dest="group", required=True)

    g = sub.add_parser("specfun", allow_abbrev=False).add_subparsers(dest="action", required=True)
    p = g.add_parser("eval", allow_abbrev=False, help="Kummer function or its derivatives")
    p.add_argument("--b", required=True)
    p.add_argument("--c", required=True)
    p.add_argument("--s", required=True, help="comma-separated arguments")
    p.add_argument("--deriv-order", type=int, default=0, choices=range(5))
    p.set_defaults(func=cmd_specfun_eval)

    def scenario_cmd(group, action, scenario, primary, extra=None, help_=None):
        g = sub.choices[group] if group in sub.choices else sub.add_parser(group, allow_abbrev=False)
        if not getattr(g, "_actions_sub", None):
            g._actions_sub = g.add_subparsers(dest="action", required=True)
        p = g._actions_sub.add_parser(action, allow_abbrev=False, help=help_)
        _add_scenario_flags(p, scenario)
        p.add_argument("--out", help=f"CSV path for the {primary} table")
        if extra:
            p.add_argument("--series-out", help=f"CSV path for the {extra} table")
        p.set_defaults(func=cmd_scenario(scenario, primary, extra))

    scenario_cmd("potential", "build", "potential-check", "report", help_="build and verify A")
    scenario_cmd("supersol", "check", "supersol-cert", "certificate", help_="supersolution certificate")
    scenario_cmd("heat", "run", "heat-decay", "snapshots", "series", help_="parabolic decay run")
    scenario_cmd("wave", "run", "wave-energy", "snapshots", "series", help_="damped wave energy run")
    scenario_cmd("compare", "run", "diffusion-compare", "series", help_="wave against parabolic")

    g = sub.add_parser("rates", allow_abbrev=False).add_subparsers(dest="action", required=True)
    p = g.add_parser("fit", allow_abbrev=False, help="log-log slope of a CSV series")
    p.add_argument("--in", dest="input", required=True, help="CSV with a 't' column")
    p.add_argument("--column", help="value column (default: first non-t column)")
    p.add_argument("--window", help="tmin,tmax (default [T/10, T])")
    p.add_argument("--log-corrected", action="store_true", help="divide by sqrt(log(2+t)) first")
    p.add_argument("--target", type=float)
    p.add_argument("--tol", type=float, default=ex.RATE_TOL)
    p.set_defaults(func=cmd_rates_fit)

    p = sub.add_parser("run", allow_abbrev=False, help="run configuration files")
    p.add_argument("config", nargs="+")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("suite", allow_abbrev=False, help="run the acceptance criteria")
    p.add_argument("--criteria", help="comma-separated criterion numbers (default: all)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=42, help="seed for random test functions")
    p.add_argument("--verbose", action="store_true", help="print every check")
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SupersolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
