"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from softgreen import calibration, dse, energy_model, report, workload
from softgreen.errors import ConfigurationError, DatasetIntegrityError, DomainError
from softgreen.sim import (
    DEFAULT_F_CLK,
    DesignPoint,
    Schedule,
    anchor_seconds,
    calibrate_scale,
    reference_design_points,
    design_progression,
    simulate,
)
from softgreen.workload import LoopBound, PrimalityMode

EXIT_OK, EXIT_VALIDATION, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dataset", type=Path, help="measurement tables INI (default: embedded)")
    common.add_argument("--format", choices=report.FORMATS, default="csv")
    common.add_argument("--out", type=Path, help="write output here instead of stdout")

    wl = argparse.ArgumentParser(add_help=False)
    wl.add_argument("--n", type=int, default=workload.REFERENCE_N, help="upper bound of the search range")
    wl.add_argument("--mode", choices=[m.value for m in PrimalityMode], default="paper")
    wl.add_argument("--faithful-driver", action="store_true",
                    help="stop the driver loop at sqrt(n), as the listing does")
    wl.add_argument("--range-start", type=int, default=2)
    wl.add_argument("--cache-dir", type=Path, help="directory for memoized profiles")

    timing = argparse.ArgumentParser(add_help=False)
    timing.add_argument("--bound", choices=[b.value for b in LoopBound], default="linear",
                        help="trial-division bound of the timing workload")
    timing.add_argument("--fclk", type=float, default=DEFAULT_F_CLK, help="clock in Hz")
    timing.add_argument("--schedule", choices=[s.value for s in Schedule], default="dynamic")
    timing.add_argument("--anchor", choices=[d.value for d in DesignPoint if d is not DesignPoint.MULTI_CORE]
                        + ["none"], default="pipelined",
                        help="single-core design whose measured time fixes the workload scale")

    p = _Parser(prog="softgreen", description="Energy-efficiency models for soft-core accelerators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("model", parents=[common], help="K_tec tables and historical efficiency")
    m.add_argument("--config", type=Path, help="INI with [processor.<name>] sections")

    w = sub.add_parser("workload", parents=[common, wl], help="profile the prime-counting kernel")
    w.add_argument("--bound", choices=[b.value for b in LoopBound], default="sqrt")

    s = sub.add_parser("simulate", parents=[common, wl, timing], help="model one design point")
    s.add_argument("--design", choices=[d.value for d in DesignPoint], required=True)
    s.add_argument("--cores", type=_positive_int, default=1)
    s.add_argument("--units", type=_positive_int, default=10)
    s.add_argument("--latency", type=_positive_int, default=5)

    sub.add_parser("calibrate", parents=[common, wl, timing],
                   help="fit the workload scale and compare modeled tables with measurements")

    sw = sub.add_parser("sweep", parents=[common, wl, timing], help="design-space sweep with Pareto flags")
    sw.add_argument("--config", type=Path, help="INI with a [sweep] section")
    sw.add_argument("--units", type=_int_list, default=(5, 10, 20))
    sw.add_argument("--latency", type=_int_list, default=(5, 10, 20, 35))
    sw.add_argument("--cores", type=_int_list, default=(1, 8, 16, 24, 32))
    sw.add_argument("--fclk-list", type=_float_list, default=(DEFAULT_F_CLK,))
    sw.add_argument("--workers", type=_positive_int, default=1)

    sub.add_parser("validate", parents=[common], help="cross-check the measurement tables")

    r = sub.add_parser("report", parents=[common, wl, timing],
                       help="emit every table; --out names a directory")
    r.add_argument("--tables", type=lambda t: tuple(t.split(",")), default=report.KINDS)
    return p


def _dataset(args) -> calibration.Dataset:
    return calibration.load_dataset(args.dataset)


def _profile(args, bound: Optional[str] = None) -> workload.WorkloadProfile:
    return workload.cached_profile(
        args.n, PrimalityMode(args.mode), LoopBound(bound or args.bound),
        cache_dir=args.cache_dir, range_start=args.range_start,
        faithful_driver=args.faithful_driver,
    )


def _scale(args, prof, ds) -> float:
    if args.anchor == "none":
        return 1.0
    anchor = DesignPoint(args.anchor)
    ref = reference_design_points(args.fclk)[anchor]
    return calibrate_scale(prof, ref, anchor_seconds(anchor, ds))


def _emit(args, text: str) -> None:
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _join(parts: Sequence[str]) -> str:
    return "\n".join(parts)


def cmd_model(args) -> int:
    ds = _dataset(args)
    if args.config:
        recs = []
        for spec in energy_model.load_processor_specs(args.config):
            rec = {"processor": spec.name, "op_per_s": energy_model.throughput(spec.opc, spec.f_clk)}
            try:
                rec["power_w"] = energy_model.power_total(spec)
                rec["g_full"] = energy_model.greenness_full(spec)
                rec["g_dyn"] = energy_model.greenness_dynamic(spec)
            except ConfigurationError:
                rec.update(power_w=None, g_full=None, g_dyn=None)
            recs.append(rec)
        _emit(args, report.make_table("Processor models", recs).render(args.format))
        return EXIT_OK
    parts = [report.emit_table(k, args.format, ds) for k in ("T4", "T5", "HIST")]
    _emit(args, _join(parts))
    return EXIT_OK


def cmd_workload(args) -> int:
    prof = _profile(args)
    rec = {
        "n": prof.n, "mode": prof.mode.value, "bound": prof.bound.value,
        "range_start": prof.range_start, "faithful_driver": int(args.faithful_driver),
        "candidates": prof.candidates, "calls": int(prof.invokes.sum()),
        "primes": prof.primes, "total_iterations": prof.total_iterations,
        "ops_per_iteration": prof.ops_per_iteration, "total_ops": prof.total_ops,
    }
    table = report.Table("Workload profile", ("key", "value"), tuple(rec.items()))
    _emit(args, table.render(args.format))
    return EXIT_OK


def cmd_simulate(args) -> int:
    ds = _dataset(args)
    prof = _profile(args)
    design = DesignPoint(args.design)
    if design is not DesignPoint.MULTI_CORE and args.cores != 1:
        raise DomainError(f"{design.value} is single-core; use --design multi_core for --cores {args.cores}")
    sys_cfg = reference_design_points(args.fclk, units=args.units, latency=args.latency)[design]
    sys_cfg = replace(sys_cfg, cores=args.cores, schedule=Schedule(args.schedule),
                      workload_scale=_scale(args, prof, ds))
    watts, extrapolated = dse.power_for(sys_cfg, ds)
    res = simulate(prof, sys_cfg, watts, power_extrapolated=extrapolated)
    _emit(args, report.make_table("Simulation", [res.row()]).render(args.format))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    ds = _dataset(args)
    prof = _profile(args)
    anchor = DesignPoint.PIPELINED if args.anchor == "none" else DesignPoint(args.anchor)
    prog = design_progression(prof, anchor=anchor, f_clk=args.fclk,
                             schedule=Schedule(args.schedule), ds=ds)
    fit = calibration.fit_linear_power(
        [(int(r.label), r["p_dyn_w"]) for r in ds.table("T9")])
    summary = {"workload_scale": prog.workload_scale, "anchor": anchor.value,
               "power_base_w": fit.base_w, "power_per_core_w": fit.per_core_w,
               **report.speedup_summary(prog)}
    parts = [
        report.Table("Calibration", ("key", "value"), tuple(summary.items())).render(args.format),
        report.emit_table("T8-model", args.format, ds, prog),
        report.emit_table("T9-model", args.format, ds, prog),
    ]
    _emit(args, _join(parts))
    return EXIT_OK


def cmd_sweep(args) -> int:
    ds = _dataset(args)
    if args.config:
        space = dse.load_sweep_space(args.config)
    else:
        space = dse.SweepSpace(units=args.units, latencies=args.latency,
                               cores=args.cores, f_clk=args.fclk_list)
    prof = _profile(args)
    results = dse.sweep(space, prof, workload_scale=_scale(args, prof, ds), ds=ds,
                        workers=args.workers, schedule=Schedule(args.schedule))
    front = {id(r) for r in dse.pareto_front(results)}
    recs = [{**r.row(), "pareto": int(id(r) in front)} for r in results]
    _emit(args, report.make_table("Design-space sweep", recs).render(args.format))
    return EXIT_OK


def cmd_validate(args) -> int:
    rep = calibration.validate_dataset(_dataset(args))
    _emit(args, report.validation_table(rep).render(args.format))
    return EXIT_OK if rep.ok else EXIT_VALIDATION


def cmd_report(args) -> int:
    ds = _dataset(args)
    rep = calibration.validate_dataset(ds)
    prog = None
    if any(k.endswith("-model") for k in args.tables):
        anchor = DesignPoint.PIPELINED if args.anchor == "none" else DesignPoint(args.anchor)
        prog = design_progression(_profile(args), anchor=anchor, f_clk=args.fclk,
                                 schedule=Schedule(args.schedule), ds=ds)
    tables = {k: report.emit_table(k, args.format, ds, prog) for k in args.tables}
    tables["validation"] = report.validation_table(rep).render(args.format)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        for name, text in tables.items():
            (args.out / f"{name}.{args.format}").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(_join(list(tables.values())))
    return EXIT_OK if rep.ok else EXIT_VALIDATION


COMMANDS = {
    "model": cmd_model,
    "workload": cmd_workload,
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "report": cmd_report,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except DatasetIntegrityError as exc:
        print(f"softgreen: dataset integrity: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DomainError, ConfigurationError, LookupError, OSError, ValueError) as exc:
        print(f"softgreen: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> int:
    return run()


if __name__ == "__main__":
    sys.exit(main())
