"""Command-line entry point.

Subcommands
-----------
simulate          run a polarization recipe from a config file
dos               run a density-of-states recipe from a config file
spread            run the slow-spreading (strong disorder) recipe
dispersion        tabulate the clean two-band dispersion
analytic          tabulate the closed-form critical distribution
phase             evaluate the bare topological angle and phase label
check-symmetries  report symmetry deviations of one dense realization
compare           contrast a finished run with the closed-form prediction

Exit codes: 0 success, 1 recipe assertion failed, 2 configuration error.
Worker count comes from --workers or the CHIRALWALK_WORKERS variable.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import __version__
from .analytic import (
    classify_phase,
    correlation_scale,
    critical_distribution,
    frequency_propagator,
    phase_diagnostics,
)
from .disorder import sample_realization
from .experiments import (
    ConfigError,
    config_hash,
    parse_config,
    run_comparison,
    run_dos_experiment,
    run_polarization_experiment,
    run_sinai_experiment,
)
from .lattice import WalkSpec, floquet_matrix
from .spectral import clean_dispersion, symmetry_report
from .tableio import write_table

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"override must look like key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def _echo_config(config) -> None:
    print(f"# resolved configuration (hash {config_hash(config)})")
    for key, value in config.as_dict().items():
        print(f"{key} = {value}")


def _report_checks(checks) -> int:
    status = EXIT_OK
    for check in checks:
        tag = "PASS" if check.passed else "FAIL"
        print(f"{tag} {check.name}: {check.detail}")
        if not check.passed:
            status = EXIT_ASSERTION
    return status


def _cmd_simulate(args) -> int:
    config = parse_config(args.config, _parse_overrides(args.set), args.paper_scale)
    _echo_config(config)
    result = run_polarization_experiment(
        config, out_dir=args.out, n_workers=args.workers,
        max_new_realizations=args.max_new,
    )
    if not result.complete:
        print(f"checkpointed after {result.record.n_realizations} realizations")
        return EXIT_OK
    print(f"completed {result.record.n_realizations} realizations")
    return _report_checks(result.checks)


def _cmd_dos(args) -> int:
    config = parse_config(args.config, _parse_overrides(args.set), args.paper_scale)
    _echo_config(config)
    result = run_dos_experiment(config, out_dir=args.out, n_workers=args.workers)
    for name, value in result.peaks.items():
        print(f"peak {name}: density {value:.6g} (median {result.median_density:.6g})")
    return _report_checks(result.checks)


def _cmd_spread(args) -> int:
    config = parse_config(args.config, _parse_overrides(args.set), args.paper_scale)
    _echo_config(config)
    result = run_sinai_experiment(config, out_dir=args.out, n_workers=args.workers)
    for i, t in enumerate(result.times):
        print(f"t = {int(t):5d}  <|q|> = {result.displacement[i]:.6g}")
    return _report_checks(result.checks)


def _cmd_dispersion(args) -> int:
    rows = []
    for m in range(args.points):
        p = -math.pi + 2.0 * math.pi * (m + 1) / args.points
        plus, minus = clean_dispersion(args.theta, args.phi, p)
        rows.append((p, plus, minus))
    meta = {
        "theta": f"{args.theta:.17g}",
        "phi": f"{args.phi:.17g}",
        "code_version": __version__,
    }
    path = Path(args.out) / "dispersion.csv"
    write_table(rows, [("p", "float"), ("eps_plus", "float"), ("eps_minus", "float")],
                path, metadata=meta)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_analytic(args) -> int:
    meta = {"code_version": __version__, "n_terms": args.n_terms}
    rows = []
    if args.frequency_domain:
        meta["domain"] = "frequency"
        for q in range(args.q_max + 1):
            for alignment in (1, -1):
                value = frequency_propagator(args.eta, q, alignment, full=True)
                rows.append((args.eta, q, alignment, value))
    else:
        meta["domain"] = "time"
        meta["normalization"] = "four-channel lattice sum equals 1/(4 ln^2 t)"
        for t in args.times:
            if t <= 1:
                raise ConfigError(f"analytic times must exceed 1, got {t}")
            q_max = args.q_max if args.q_max > 0 else int(math.ceil(6 * correlation_scale(t)))
            for q in range(q_max + 1):
                for alignment in (1, -1):
                    value = critical_distribution(t, q, alignment, n_terms=args.n_terms)
                    rows.append((t, q, alignment, value))
    path = Path(args.out) / "analytic.csv"
    write_table(
        rows,
        [("t_or_eta", "float"), ("q", "int"), ("alignment", "int"), ("value", "float")],
        path, metadata=meta,
    )
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_phase(args) -> int:
    diag = phase_diagnostics(args.theta_mean, args.phi_mean,
                             args.theta_halfwidth, args.phi_halfwidth)
    print(f"chi_0   = {diag.chi0.real:.12g}")
    print(f"chi_pi  = {diag.chi_pi.real:.12g}")
    print(f"bare conductance = {diag.bare_conductance}")
    print(f"phase: {diag.label}")
    if args.out is not None:
        rows = [(args.theta_mean, args.phi_mean, args.theta_halfwidth,
                 args.phi_halfwidth, diag.chi0.real, diag.chi_pi.real, diag.label)]
        write_table(
            rows,
            [("theta_mean", "float"), ("phi_mean", "float"),
             ("theta_halfwidth", "float"), ("phi_halfwidth", "float"),
             ("chi_0", "float"), ("chi_pi", "float"), ("phase", "str")],
            Path(args.out) / "phase.csv",
            metadata={"code_version": __version__},
        )
    return EXIT_OK


def _cmd_check_symmetries(args) -> int:
    spec = WalkSpec(
        n_sites=args.sites,
        boundary="periodic",
        theta_mean=args.theta_mean,
        phi_mean=args.phi_mean,
        theta_halfwidth=args.theta_halfwidth,
        phi_halfwidth=args.phi_halfwidth,
        chiral_constraint=not args.break_constraint,
    )
    angles = sample_realization(spec, args.seed)
    report = symmetry_report(floquet_matrix(angles, spec))
    for name, deviation in report.items():
        print(f"{name}: max deviation {deviation:.3e}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    report = run_comparison(args.run, out_dir=args.out)
    lo, hi = report["window"]
    print(f"recipe {report['recipe']} (staggered={report['staggered']})")
    print(
        f"sign agreement over t in [{lo}, {hi}]: "
        f"{report['agreement_fraction']:.3f} of {report['n_compared']} steps"
    )
    return EXIT_OK


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to a key = value config file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a configuration key (repeatable)")
    parser.add_argument("--paper-scale", action="store_true",
                        help="switch the recipe to its publication-scale preset")
    parser.add_argument("--workers", type=int, default=None,
                        help="process count for the ensemble (default: env or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chiralwalk",
        description="Disordered chiral quantum walk simulations and analysis",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a polarization recipe")
    _add_run_options(p)
    p.add_argument("--max-new", type=int, default=None,
                   help="stop (and checkpoint) after this many new realizations")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("dos", help="run a density-of-states recipe")
    _add_run_options(p)
    p.set_defaults(func=_cmd_dos)

    p = sub.add_parser("spread", help="run the slow-spreading recipe")
    _add_run_options(p)
    p.set_defaults(func=_cmd_spread)

    p = sub.add_parser("dispersion", help="tabulate the clean dispersion")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--points", type=int, default=256)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_dispersion)

    p = sub.add_parser("analytic", help="tabulate the closed-form critical distribution")
    p.add_argument("--times", type=float, nargs="+", default=[10.0, 100.0, 1000.0])
    p.add_argument("--q-max", type=int, default=0,
                   help="largest offset (default: six correlation lengths)")
    p.add_argument("--n-terms", type=int, default=24)
    p.add_argument("--frequency-domain", action="store_true")
    p.add_argument("--eta", type=float, default=1e-6,
                   help="frequency regulator for --frequency-domain")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_analytic)

    p = sub.add_parser("phase", help="bare topological angle and phase label")
    p.add_argument("--theta-mean", type=float, required=True)
    p.add_argument("--phi-mean", type=float, required=True)
    p.add_argument("--theta-halfwidth", type=float, default=0.0)
    p.add_argument("--phi-halfwidth", type=float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_phase)

    p = sub.add_parser("check-symmetries", help="symmetry deviations of one realization")
    p.add_argument("--sites", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta-mean", type=float, default=0.0)
    p.add_argument("--phi-mean", type=float, default=0.0)
    p.add_argument("--theta-halfwidth", type=float, default=math.pi / 8)
    p.add_argument("--phi-halfwidth", type=float, default=math.pi / 8)
    p.add_argument("--break-constraint", action="store_true",
                   help="draw the pre-shift coin angles independently")
    p.set_defaults(func=_cmd_check_symmetries)

    p = sub.add_parser("compare", help="contrast a run with the closed-form prediction")
    p.add_argument("--run", required=True, help="directory of a finished simulate run")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
