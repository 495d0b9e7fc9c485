"""Command line entry point.

Subcommands: simulate, fit, test, region, mc-table1, mc-power, mc-aae.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from darglade.errors import (
    ConfigError,
    DarError,
    DataError,
    DegenerateSeries,
    NoRoot,
    SignedLogOverflow,
)
from darglade.estimation import glade
from darglade.harness import csvio
from darglade.harness.config import StudyConfig, load_config
from darglade.harness.studies import (
    AAE_HEADER,
    PowerCell,
    Table1Row,
    power_grid_configs,
    run_aae_study,
    run_power_study,
    table1_replicates,
)
from darglade.inference import rw_variance, test_stationarity
from darglade.lyapunov import TruncationWindow, boundary_alpha, gamma_truncated
from darglade.model import DarParams, get_innovation, residuals, simulate
from darglade.numerics import derive_stream

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_design(p, n_default=400):
    p.add_argument("--phi", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--innovation", help="normal, laplace or st3")
    p.add_argument("--n", type=int)
    p.add_argument("--burn-in", type=int)


def _add_globals(p, default):
    p.add_argument("--seed", type=int, default=default, help="root random seed")
    p.add_argument("--threads", type=int, default=default,
                   help="worker threads for replicate loops")
    p.add_argument("--config", default=default, help="key = value config file with [sections]")
    p.add_argument("-v", "--verbose", action="store_true",
                   default=default if default is not None else False)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="darglade", description=__doc__.splitlines()[0])
    _add_globals(parser, None)
    # global flags are accepted after the subcommand too
    common = _Parser(add_help=False)
    _add_globals(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _orig = sub.add_parser

    def add_parser(name, **kw):
        return _orig(name, parents=[common], **kw)

    sub.add_parser = add_parser

    p = sub.add_parser("simulate", help="simulate a DAR(1) path to CSV")
    _add_design(p)
    p.add_argument("--y-start", type=float, default=0.0, help="initial value (default 0)")
    p.add_argument("--signed-log", action="store_true",
                   help="write sign,logmag columns (for paths beyond double range)")
    p.add_argument("--out", help="output path (default stdout)")

    p = sub.add_parser("fit", help="fit a CSV series and test for strict stationarity")
    p.add_argument("csv")
    p.add_argument("--B", type=int, default=1000, help="resampling size")
    p.add_argument("--level", type=float, default=0.05)

    p = sub.add_parser("test", help="one-sided tests from a Lyapunov estimate and its SE")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--se", type=float, required=True, help="per-sample standard error")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--csv", action="store_true", help="emit a header and one CSV row")

    p = sub.add_parser("region", help="stationarity boundary alpha(phi) as CSV")
    p.add_argument("--innovation", default="normal")
    p.add_argument("--phi-min", type=float, default=-1.5)
    p.add_argument("--phi-max", type=float, default=1.5)
    p.add_argument("--phi-step", type=float, default=0.1)
    p.add_argument("--phis", help="explicit comma-separated phi grid")
    p.add_argument("--out")

    for name, help_ in (("mc-table1", "bias/SE/SEE/CP summary study"),
                        ("mc-power", "rejection frequencies over a phi grid"),
                        ("mc-aae", "paired GLADE/QMLE AAE per replicate")):
        p = sub.add_parser(name, help=help_)
        _add_design(p)
        p.add_argument("--replications", type=int)
        p.add_argument("--B", type=int)
        p.add_argument("--level", type=float)
        p.add_argument("--out")
        if name == "mc-power":
            p.add_argument("--which", choices=["ST", "NS"], type=str.upper)
            p.add_argument("--phis")
            p.add_argument("--ns")
    return parser


def _study_config(args) -> tuple[StudyConfig, object]:
    cfg, grid = load_config(args.config) if args.config else load_config()
    changes = {}
    params = cfg.params
    if any(getattr(args, k, None) is not None for k in ("phi", "alpha", "omega")):
        params = DarParams(
            args.phi if args.phi is not None else params.phi,
            args.alpha if args.alpha is not None else params.alpha,
            args.omega if args.omega is not None else params.omega,
        )
        changes["params"] = params
    if getattr(args, "innovation", None):
        changes["spec"] = get_innovation(args.innovation)
    for key, attr in (("n", "n"), ("burn_in", "burn_in"), ("replications", "replications"),
                      ("B", "B"), ("level", "level"), ("seed", "seed"), ("threads", "threads")):
        v = getattr(args, key, None)
        if v is not None:
            changes[attr] = v
    return cfg.with_(**changes), grid


def _open_out(path):
    return open(path, "w", encoding="utf-8", newline="\n") if path else sys.stdout


def cmd_simulate(args) -> int:
    cfg, _ = _study_config(args)
    burn = cfg.burn_in if cfg.burn_in is not None else 500
    series = simulate(cfg.params, cfg.spec, cfg.n, burn, derive_stream(cfg.seed, 0),
                      y_start=args.y_start)
    out = _open_out(args.out)
    try:
        if args.signed_log:
            # series data keep full precision; 6 significant digits are for reports
            out.write("sign,logmag\n")
            out.writelines(f"{s},{lg:.17g}\n" for s, lg in zip(series.sign.tolist(),
                                                               series.logmag.tolist()))
        else:
            values = series.to_values()
            out.write("y\n")
            out.writelines(f"{v:.17g}\n" for v in values)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def fit_report(series, B: int, level: float, seed: int, threads: int = 1) -> list[tuple[str, object]]:
    """Everything ``fit`` prints, as ordered ``(key, value)`` pairs."""
    fit = glade(series)
    th = fit.theta_hat
    gam = gamma_truncated(th.phi, th.alpha, residuals(series, th))
    summary = rw_variance(series, fit, B=B, window=TruncationWindow(series.n),
                          seed=seed, threads=threads)
    report = test_stationarity(gam.gamma_hat, summary.se_gamma, series.n, level)
    return [
        ("n", series.n),
        ("phi_hat", th.phi), ("se_phi", summary.se_phi),
        ("alpha_hat", th.alpha), ("se_alpha", summary.se_alpha),
        ("omega_hat", th.omega), ("se_omega", summary.se_omega),
        # omega is only consistent under stationarity
        ("omega_reliable", report.ns_reject),
        ("objective", fit.objective_value),
        ("at_boundary", fit.at_boundary),
        ("B", B), ("replicates_failed", summary.n_failed),
        *[(k, v) for k, v in report.fields() if k != "n"],
    ]


def cmd_fit(args) -> int:
    series = csvio.read_series(args.csv)
    seed = args.seed if args.seed is not None else 0
    threads = args.threads or 1
    for key, value in fit_report(series, args.B, args.level, seed, threads):
        print(f"{key} = {csvio.fmt(value)}")
    return EXIT_OK


def cmd_test(args) -> int:
    report = test_stationarity(args.gamma, args.se, args.n, args.level)
    if args.csv:
        print(report.csv_header())
        print(report.to_csv_row())
    else:
        sys.stdout.write(report.to_text())
    return EXIT_OK


def region_rows(spec, phis, tol: float = 1e-8):
    for phi in phis:
        try:
            yield phi, boundary_alpha(spec, phi, tol)
        except NoRoot:
            yield phi, None


def cmd_region(args) -> int:
    spec = get_innovation(args.innovation)
    if args.phis:
        phis = [float(x) for x in args.phis.split(",") if x.strip()]
    else:
        if args.phi_step <= 0 or args.phi_max < args.phi_min:
            raise UsageError("need phi-step > 0 and phi-max >= phi-min")
        k = int(math.floor((args.phi_max - args.phi_min) / args.phi_step + 1e-9))
        phis = [round(args.phi_min + i * args.phi_step, 12) for i in range(k + 1)]
    out = _open_out(args.out)
    try:
        csvio.write_csv(("phi", "alpha_boundary"), region_rows(spec, phis), out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_mc_table1(args) -> int:
    cfg, _ = _study_config(args)
    reps = table1_replicates(cfg)
    out = _open_out(args.out)
    try:
        csvio.write_csv(Table1Row.HEADER, (r.as_tuple() for r in reps.rows(cfg.level)), out)
    finally:
        if out is not sys.stdout:
            out.close()
    if reps.n_failed:
        logging.getLogger("darglade").warning("%d replicates failed", reps.n_failed)
    return EXIT_OK


def cmd_mc_power(args) -> int:
    cfg, grid = _study_config(args)
    if args.phis:
        grid = type(grid)(phis=tuple(float(x) for x in args.phis.split(",")),
                          ns=grid.ns, alpha_ratio=grid.alpha_ratio, which=grid.which)
    if args.ns:
        grid = type(grid)(phis=grid.phis, ns=tuple(int(x) for x in args.ns.split(",")),
                          alpha_ratio=grid.alpha_ratio, which=grid.which)
    which = args.which or grid.which
    cells = run_power_study(power_grid_configs(cfg, grid), which)
    out = _open_out(args.out)
    try:
        csvio.write_csv(PowerCell.HEADER, (c.as_tuple() for c in cells), out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_mc_aae(args) -> int:
    cfg, _ = _study_config(args)
    rows = run_aae_study(cfg)
    out = _open_out(args.out)
    try:
        csvio.write_csv(AAE_HEADER, rows, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "test": cmd_test,
    "region": cmd_region,
    "mc-table1": cmd_mc_table1,
    "mc-power": cmd_mc_power,
    "mc-aae": cmd_mc_aae,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as err:
        print(f"darglade: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DegenerateSeries) as err:
        print(f"darglade: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except SignedLogOverflow as err:
        print(f"darglade: {err}; rerun with --signed-log", file=sys.stderr)
        return EXIT_NUMERIC
    except (DarError, ArithmeticError, np.linalg.LinAlgError) as err:
        print(f"darglade: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as err:
        print(f"darglade: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
