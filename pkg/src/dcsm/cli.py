"""
Command-line front end.

    dcsm gen-trace  --out trace.csv [--seed N] [--config cfg.yaml] [--duration S]
    dcsm linkbudget --wet-delay CM --elevation DEG [--clear-sky] [--top K] [--format json|table]
    dcsm predict    [--config cfg.yaml] [--passes N] [--seed N] [--out DIR]
    dcsm simulate   [--config cfg.yaml] [--methods LIST] [--passes N] [--seed N]
                    [--out DIR] [--format json|csv|both] [--jobs N]

Exit status: 0 success, 1 runtime failure, 2 bad arguments or configuration.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (
    ChannelDomainError,
    atm_attenuation,
    atm_temp_31,
    atm_temp_32,
    bit_snr,
    opacity_from_wet_delay,
    operating_noise_temp,
    received_power,
    sky_temp_from_opacity,
)
from .config import OUTPUT_FORMATS, CliConfig, load_config, parse_methods
from .sim import (
    ConfigError,
    channel_for_pass,
    reports_to_csv,
    reports_to_json,
    run_ensemble,
    snr_series_to_csv,
    timelines_to_csv,
)
from .traces import TraceError, format_trace_csv, synth_trace

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dcsm", description="DCSM deep-space file-transfer simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="YAML/JSON run configuration (or 'quickstart')")
        sp.add_argument("--seed", type=int, help="base seed (overrides the config)")

    g = sub.add_parser("gen-trace", help="write a synthetic pass trace as CSV")
    common(g)
    g.add_argument("--out", required=True, help="output CSV path")
    g.add_argument("--duration", type=int, help="pass duration in seconds")
    g.add_argument("--peak-elevation", type=float)

    lb = sub.add_parser("linkbudget", help="evaluate the link budget stage by stage")
    common(lb)
    lb.add_argument("--wet-delay", type=float, default=0.0, help="zenith wet path delay (cm)")
    lb.add_argument("--elevation", type=float, default=90.0, help="elevation angle (deg)")
    lb.add_argument("--distance", type=float, help="Earth-spacecraft range (m)")
    lb.add_argument("--clear-sky", action="store_true", help="force zero atmospheric attenuation")
    lb.add_argument("--top", type=float, help="override the operating noise temperature (K)")
    lb.add_argument("--format", choices=("table", "json"), default="table")

    pr = sub.add_parser("predict", help="run the bit-SNR predictor on passes")
    common(pr)
    pr.add_argument("--passes", type=int)
    pr.add_argument("--out", help="directory for SNR series CSVs")

    sm = sub.add_parser("simulate", help="simulate passes for the selected methods")
    common(sm)
    sm.add_argument("--methods", help="comma-separated method[:policy] list")
    sm.add_argument("--passes", type=int)
    sm.add_argument("--out", help="output directory")
    sm.add_argument("--format", choices=OUTPUT_FORMATS)
    sm.add_argument("--jobs", type=int, help="worker processes")
    sm.add_argument("--backend", choices=("kernel", "reference"))
    return p


def _apply_overrides(cfg: CliConfig, args) -> CliConfig:
    run = cfg.run
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "passes", None) is not None:
        changes["passes"] = args.passes
    if getattr(args, "methods", None):
        changes["methods"] = parse_methods(args.methods)
    if getattr(args, "backend", None):
        changes["backend"] = args.backend
    if changes:
        try:
            run = replace(run, **changes)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
    out = cfg.out_dir if getattr(args, "out", None) is None else args.out
    fmt = getattr(args, "format", None) or cfg.format
    jobs = cfg.jobs if getattr(args, "jobs", None) is None else args.jobs
    if jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    return replace(cfg, run=run, out_dir=out, format=fmt, jobs=jobs, verbosity=args.verbose)


# --------------------------------------------------------------------------
# commands


def cmd_gen_trace(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    profile = cfg.run.synth
    try:
        if args.duration is not None:
            profile = replace(profile, duration=args.duration)
        if args.peak_elevation is not None:
            profile = replace(profile, peak_elevation=args.peak_elevation)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    trace = synth_trace(cfg.run.seed, profile)
    Path(args.out).write_text(format_trace_csv(trace), encoding="utf-8")
    wet = trace.wet_delay
    print(f"wrote {args.out}: {len(trace)} samples, {trace.duration} s")
    print(f"wet delay cm: mean {wet.mean():.3f} min {wet.min():.3f} max {wet.max():.3f}")
    print(f"elevation deg: min {trace.elevation.min():.2f} max {trace.elevation.max():.2f}")
    print(f"storm: {trace.meta['storm']}")
    return EXIT_OK


def linkbudget_stages(params, wet_delay: float, elevation: float, distance=None, clear_sky=False, top=None):
    """Stage values of the link budget as an ordered list of (name, value, unit)."""
    tau = opacity_from_wet_delay(wet_delay, params.opacity_offset, params.opacity_slope)
    sky = sky_temp_from_opacity(tau)
    t31 = atm_temp_31(sky)
    t32 = atm_temp_32(t31)
    att = 0.0 if clear_sky else atm_attenuation(t32, elevation, params.attenuation_interpretation)
    t_op = operating_noise_temp(params, att, elevation) if top is None else float(top)
    power = received_power(params, att, distance)
    stages = [
        ("opacity", tau, "Np"),
        ("sky_temp", sky, "K"),
        ("atm_temp_31", t31, "K"),
        ("atm_temp_32", t32, "K"),
        ("attenuation_db", att, "dB"),
        ("operating_temp", t_op, "K"),
        ("received_power", power, "W"),
    ]
    return stages, bit_snr(params, power, t_op)


def cmd_linkbudget(args) -> int:
    cfg = load_config(args.config)
    try:
        stages, snr = linkbudget_stages(cfg.run.link, args.wet_delay, args.elevation, args.distance,
                                        args.clear_sky, args.top)
    except ChannelDomainError as exc:
        raise ConfigError(str(exc)) from None
    if args.format == "json":
        doc = {"stages": {name: float(v) for name, v, _ in stages}, "bit_snr_db": float(snr)}
        print(json.dumps(doc, indent=2))
    else:
        for name, value, unit in stages:
            print(f"{name:<16} {float(value):>14.6g} {unit}")
        print(f"{'bit_snr':<16} {float(snr):>14.6g} dB")
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = Path(cfg.out_dir) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    accs = []
    for k in range(cfg.run.passes):
        ch = channel_for_pass(cfg.run, k)
        prelim_acc = float(np.trace(_beta(ch.actual, ch.preliminary)) * 100)
        accs.append(ch.accuracy_pct)
        print(f"pass {k}: accuracy preliminary {prelim_acc:.2f}% corrected {ch.accuracy_pct:.2f}%")
        if out:
            (out / f"snr_pass{k:03d}.csv").write_text(snr_series_to_csv(ch), encoding="utf-8")
    print(f"median corrected accuracy {np.median(accs):.2f}%")
    return EXIT_OK


def _beta(actual, predicted):
    from .predictor import range_prediction_matrix

    return range_prediction_matrix(actual, predicted)[0]


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = run_ensemble(cfg.run, jobs=cfg.jobs)
    if cfg.format in ("csv", "both"):
        (out / "report.csv").write_text(reports_to_csv(result.reports), encoding="utf-8")
    if cfg.format in ("json", "both"):
        (out / "report.json").write_text(reports_to_json(result, cfg.run), encoding="utf-8")
    (out / "delivery_timelines.csv").write_text(timelines_to_csv(result.reports), encoding="utf-8")
    ch = channel_for_pass(cfg.run, 0)
    (out / "snr_pass000.csv").write_text(snr_series_to_csv(ch), encoding="utf-8")
    summary = result.summary()
    print(f"{'method':<22}{'F_Tx':>8}{'F_Rcvd':>8}{'D_Tx Gb':>10}{'D_Rcvd Gb':>11}{'acc %':>8}")
    for label, row in summary.items():
        print(f"{label:<22}{row['F_Tx']:>8.2f}{row['F_RcvdSuccess']:>8.2f}{row['D_Tx_Gb']:>10.3f}"
              f"{row['D_Rcvd_Gb']:>11.3f}{row['accuracy_pct']:>8.2f}")
    print(f"reports written to {out}")
    return EXIT_OK


COMMANDS = {
    "gen-trace": cmd_gen_trace,
    "linkbudget": cmd_linkbudget,
    "predict": cmd_predict,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except (ConfigError, TraceError) as exc:
        print(f"dcsm: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"dcsm: I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - report any failure with a diagnostic
        print(f"dcsm: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
