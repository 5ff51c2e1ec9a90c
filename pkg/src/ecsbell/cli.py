"""Command-line front end: figure data, single evaluations, oracle checks, config sweeps.

Exit status: 0 on success, 1 on invalid input, 2 when an oracle check fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fock, oracle_check
from .coherent import EcsSpec
from .decoherence import DecoherenceClock
from .errors import EcsError, OptimizationError, ValidationError
from .figures import (FIGURES, FORMATS, JSON_SCHEMA_VERSION, ConfigError, SweepJob,
                      default_seed_box, figure_jobs, run_jobs, summary_lines)
from .measures import MEASURES, damped_ecs, objective_for
from .optimize import SearchConfig, SettingsLayout, maximize
from .qubit import bmax_closed_form, tt_eigenvalues_closed_form

log = logging.getLogger("ecsbell")

EXIT_OK, EXIT_INVALID, EXIT_ORACLE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1; status 2 is reserved for oracle failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_search_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, help="optimizer RNG seed")
    p.add_argument("--starts", type=int, help="number of optimizer starts")
    p.add_argument("--axis", choices=("real", "imag", "full"), help="settings axis restriction")
    p.add_argument("--symmetry", action=argparse.BooleanOptionalAction, default=None,
                   help="impose the party-exchange symmetry on the settings")
    p.add_argument("--nmax", type=int, help="Fock truncation for oracle work")


def _add_output_flags(p: argparse.ArgumentParser):
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=FORMATS, help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ecsbell", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("figure", help="compute the data behind one figure")
    p.add_argument("tag", choices=FIGURES)
    p.add_argument("--alpha", help="override the amplitude list (e.g. '2' or '0.5:5:0.5')")
    p.add_argument("--r", help="override the normalized-time list")
    p.add_argument("--workers", type=int, help="thread pool size (disables warm starts)")
    p.add_argument("--dump-config", action="store_true",
                   help="print the resolved job configs and exit")
    _add_output_flags(p)
    _add_search_flags(p)

    p = sub.add_parser("eval", help="one Bell evaluation or optimization as a JSON record")
    p.add_argument("--state", default="minus", help="plus or minus")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--measure", choices=MEASURES, default="cv-generalized")
    clock = p.add_mutually_exclusive_group()
    clock.add_argument("--r", type=float, default=None, help="normalized time r in [0, 1)")
    clock.add_argument("--gamma-tau", type=float, default=None, help="dimensionless time")
    p.add_argument("--settings", default="optimize",
                   help="'optimize' or four complex numbers a,b,a',b' (e.g. '0,0,0.1j,-0.1j')")
    p.add_argument("--verify", action="store_true",
                   help="also evaluate the CV settings in the truncated Fock basis")
    _add_output_flags(p)
    _add_search_flags(p)

    p = sub.add_parser("oracle-check", help="closed-form versus Fock-oracle suites")
    p.add_argument("suite", nargs="?", default="all", choices=oracle_check.SUITES + ("all",))
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nmax", type=int, default=64)
    p.add_argument("--tol", type=float, default=oracle_check.DEFAULT_TOL)
    _add_output_flags(p)

    p = sub.add_parser("sweep", help="run a sweep job from a key = value config file")
    p.add_argument("config", help="config file path")
    p.add_argument("--workers", type=int)
    _add_output_flags(p)
    _add_search_flags(p)
    return parser


def _job_overrides(args) -> dict:
    over = {}
    if getattr(args, "seed", None) is not None:
        over["rng_seed"] = args.seed
    if getattr(args, "starts", None) is not None:
        over["starts"] = args.starts
    if getattr(args, "axis", None) is not None:
        over["axis_mode"] = args.axis
    if getattr(args, "symmetry", None) is not None:
        over["symmetry_constraint"] = args.symmetry
    if getattr(args, "nmax", None) is not None:
        over["n_max"] = args.nmax
    if getattr(args, "workers", None) is not None:
        over["workers"] = args.workers
        over["warm_start"] = args.workers <= 1
    return over


def parse_settings(text: str) -> np.ndarray:
    """Four comma-separated complex numbers; errors name the offending item and column."""
    items = text.split(",")
    if len(items) != 4:
        raise ValidationError(f"--settings: expected 4 comma-separated values, got {len(items)}")
    out, col = [], 1
    for i, item in enumerate(items, start=1):
        try:
            out.append(complex(item.strip().replace(" ", "")))
        except ValueError:
            raise ValidationError(
                f"--settings: item {i} {item.strip()!r} at column {col} is not a complex number"
            ) from None
        col += len(item) + 1
    return np.array(out)


def _clock(args) -> DecoherenceClock:
    if args.gamma_tau is not None:
        return DecoherenceClock.from_gamma_tau(args.gamma_tau)
    return DecoherenceClock.from_r(args.r if args.r is not None else 0.0)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_eval(args) -> int:
    spec = EcsSpec.from_label(args.state, args.alpha)
    clock = _clock(args)
    over = _job_overrides(args)
    config = SearchConfig(
        axis_mode=over.get("axis_mode", "full"),
        symmetry_constraint=over.get("symmetry_constraint", True),
        starts=over.get("starts", 64),
        seed_box_halfwidth=default_seed_box(abs(spec.alpha)),
        rng_seed=over.get("rng_seed", 0),
    )
    record = {
        "schema_version": JSON_SCHEMA_VERSION,
        "state": args.state, "alpha": args.alpha, "measure": args.measure,
        "clock": {"gamma_tau": clock.gamma_tau, "t": clock.t, "r": clock.r},
    }
    if args.measure == "qubit-ideal":
        record["value"] = bmax_closed_form(args.alpha, clock)
        record["tt_eigenvalues"] = list(tt_eigenvalues_closed_form(args.alpha, clock))
    else:
        objective = objective_for(args.measure, spec, clock)
        if args.settings.strip().lower() == "optimize":
            axis = "imag" if args.measure == "qubit-displaced" else config.axis_mode
            layout = SettingsLayout(axis, config.symmetry_constraint,
                                    pin_origin=args.measure == "cv-bw-restricted")
            report = maximize(objective, config, layout)
            record["search_config"] = config.to_dict()
            record["report"] = report.to_dict()
            record["value"] = report.best_value
            settings = report.best_settings
        else:
            settings = parse_settings(args.settings)
            if args.measure == "cv-bw-restricted" and np.any(settings[:2] != 0):
                raise ValidationError("cv-bw-restricted requires a = b = 0")
            record["value"] = float(objective(settings))
        record["settings"] = [[float(z.real), float(z.imag)] for z in settings]
        if args.verify and args.measure.startswith("cv-"):
            trunc = fock.FockTruncation(args.nmax or 64)
            rho = fock.from_dyad_sum(damped_ecs(spec, clock), trunc)
            a, b, ap, bp = settings
            corr = [fock.expectation(rho, (fock.displaced_parity_matrix(x, trunc),
                                           fock.displaced_parity_matrix(y, trunc))).real
                    for x, y in ((a, b), (a, bp), (ap, b), (ap, bp))]
            record["oracle_value"] = abs(corr[0] + corr[1] + corr[2] - corr[3])
            record["n_max"] = trunc.n_max
    _emit(json.dumps(record, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    reports = oracle_check.run_checks(args.suite, args.cases, args.seed, args.nmax, args.tol)
    if args.format == "json":
        _emit(json.dumps([r.to_dict() for r in reports], indent=2) + "\n", args.out)
    else:
        lines = [r.summary() for r in reports]
        for r in reports:
            lines += [f"  failing case {c}: deviation {d:.3e} ({s})" for c, d, s in r.failures]
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_ORACLE


def _run_and_report(jobs, args) -> int:
    fmt = args.format or jobs[0].format
    out = args.out if args.out is not None else (jobs[0].output or None)
    text, results = run_jobs(jobs, out, fmt)
    if not out:
        sys.stdout.write(text)
    for curves in results:
        for line in summary_lines(curves):
            print(line, file=sys.stderr if not out else sys.stdout)
    return EXIT_OK


def cmd_figure(args) -> int:
    from .figures import parse_number_list

    over = _job_overrides(args)
    if args.alpha:
        over["alpha"] = parse_number_list(args.alpha)
    if args.r:
        over["r"] = parse_number_list(args.r)
    if args.format:
        over["format"] = args.format
    if args.out:
        over["output"] = args.out
    jobs = figure_jobs(args.tag, **over)
    if args.dump_config:
        sys.stdout.write("\n".join(j.to_config() for j in jobs))
        return EXIT_OK
    return _run_and_report(jobs, args)


def cmd_sweep(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {args.config!r}: {exc}") from None
    job = SweepJob.from_config(text)
    over = _job_overrides(args)
    if args.format:
        over["format"] = args.format
    if args.out:
        over["output"] = args.out
    if over:
        job = replace(job, **over)
    return _run_and_report([job], args)


COMMANDS = {"figure": cmd_figure, "eval": cmd_eval, "oracle-check": cmd_oracle,
            "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OptimizationError as exc:
        print(f"optimization failed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValidationError, EcsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
