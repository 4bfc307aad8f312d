"""Command-line front end.

Every subcommand builds a :class:`~mwsense.export.Table` and writes it as CSV
or JSON, to standard output or to ``<out>/<command>.<format>``. Failures are
reported on standard error as one JSON object and a nonzero exit status:

* 1: numerical failure (quadrature did not converge, non-decaying tail)
* 2: invalid configuration, arguments or physical inputs
* 3: ``reproduce-paper`` ran but at least one reference check failed
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .condensate import SpectralKernel, derive
from .config import ConfigError, RunConfig, apply_overrides, load_config, parse_config
from .constants import TWO_PI
from .cpw import (FieldVector, b_at_condensate, b_max_cqed, b_max_single_photon, capacitance_per_length,
                  conformal_moduli, elliptic_ratios, field_air_side, field_substrate_side, mode_volume)
from .export import Table, format_float, render
from .quadrature import QuadratureError
from .reference import REFERENCES, evaluate
from .sensing import atom_rate

EXIT_NUMERIC = 1
EXIT_INVALID = 2
EXIT_REFERENCE = 3

COMMANDS = ("cpw-info", "field-map", "mode-volume", "bmax", "dfunc-sweep", "atom-rate", "reproduce-paper", "sweep")


class CommandFailed(Exception):
    """A command produced output but must exit nonzero."""

    def __init__(self, code: int, message: str, table: Table | None = None):
        super().__init__(message)
        self.code = code
        self.table = table


def _grid(spec, scale):
    start, stop, count = spec
    count = int(count)
    if count < 1:
        raise ValueError("grid point count must be at least 1")
    return np.linspace(start * scale, stop * scale, count)


def cmd_cpw_info(cfg: RunConfig, args) -> Table:
    geom = cfg.build_geometry()
    mode = cfg.build_mode()
    k0, k1, k0p, k1p = conformal_moduli(geom)
    kappa0, kappa1 = elliptic_ratios(geom)
    table = Table("cpw-info", ["quantity", "value", "unit"])
    for name, value, unit in (
            ("k0", k0, "1"), ("k1", k1, "1"), ("k0_prime", k0p, "1"), ("k1_prime", k1p, "1"),
            ("kappa0", kappa0, "1"), ("kappa1", kappa1, "1"), ("eps_eff", mode.eps_eff, "1"),
            ("capacitance_per_length", capacitance_per_length(geom), "F/m"),
            ("half_width", geom.half_width, "m"), ("wavelength_free", mode.lambda_free, "m"),
            ("wavelength_guided", mode.lambda_g, "m"), ("length", mode.length, "m"),
            ("single_photon_voltage", mode.v0_volts, "V"), ("linewidth", mode.linewidth, "rad/s")):
        table.add(name, float(value), unit)
    return table


def cmd_field_map(cfg: RunConfig, args) -> Table:
    geom = cfg.build_geometry()
    mode = cfg.build_mode()
    xs = _grid(args.x_um, 1e-6)
    ys = _grid(args.y_um, 1e-6)
    zs = _grid(args.z_um, 1e-6) if args.z_um else np.array([mode.length / 2])
    x, y, z = (g.ravel() for g in np.meshgrid(xs, ys, zs, indexing="ij"))
    bx = np.zeros(x.size, complex)
    by = np.zeros(x.size, complex)
    bz = np.zeros(x.size, complex)
    notes = set()
    air = y <= 0
    if np.any(air):
        f = field_air_side(geom, mode, x[air], y[air], z[air])
        bx[air], by[air], bz[air] = f.bx, f.by, f.bz
    if np.any(~air):
        f = field_substrate_side(geom, mode, x[~air], y[~air], z[~air])
        bx[~air], by[~air], bz[~air] = f.bx, f.by, f.bz
        notes.update(f.warnings)
    mag = np.atleast_1d(FieldVector(bx, by, bz).peak_magnitude)
    table = Table("field-map", ["x_m", "y_m", "z_m", "bx_re_T", "bx_im_T", "by_re_T", "by_im_T",
                                "bz_re_T", "bz_im_T", "b_abs_T"], meta={"warnings": sorted(notes)})
    for i in range(x.size):
        table.add(float(x[i]), float(y[i]), float(z[i]), float(bx[i].real), float(bx[i].imag),
                  float(by[i].real), float(by[i].imag), float(bz[i].real), float(bz[i].imag), float(mag[i]))
    return table


def cmd_mode_volume(cfg: RunConfig, args) -> Table:
    geom = cfg.build_geometry()
    mode = cfg.build_mode()
    spec = replace(cfg.quadrature.build(), rel_tol=min(cfg.quadrature.rel_tol, 1e-6))
    mv = mode_volume(geom, mode, spec)
    table = Table("mode-volume", ["quantity", "value", "unit"], meta={"converged": mv.converged})
    table.add("closed_form", mv.closed_form, "m^3")
    table.add("numeric", mv.numeric, "m^3")
    table.add("numeric_error", mv.numeric_error, "m^3")
    table.add("relative_difference", mv.relative_difference, "1")
    if not mv.converged:
        raise CommandFailed(EXIT_NUMERIC, "mode-volume quadrature did not converge", table)
    return table


def cmd_bmax(cfg: RunConfig, args) -> Table:
    geom = cfg.build_geometry()
    mode = cfg.build_mode()
    b_mv = b_max_single_photon(geom, mode)
    b_cq = b_max_cqed(geom, mode)
    d = cfg.sensing.distance_um * 1e-6
    table = Table("bmax", ["quantity", "value", "unit"])
    table.add("b_max_mode_volume", b_mv, "T")
    table.add("b_max_cqed", b_cq, "T")
    table.add("relative_difference", abs(b_mv - b_cq) / b_mv, "1")
    table.add("attenuation", math.exp(-math.pi * d / geom.half_width), "1")
    table.add("b_at_condensate", b_at_condensate(geom, mode, d), "T")
    return table


def _dfunc_rows(derived, omd, positions, spec, method):
    kernel = SpectralKernel(derived, omd, spec, method=method)
    r = np.array([p[0] for p in positions])
    y = np.array([p[1] for p in positions])
    d_bar, err, converged = kernel.dbar(r, y)
    scale = derived.density_scale
    d_bar = np.atleast_1d(d_bar)
    return [(omd, float(r[i]), float(y[i]), float(d_bar[i] * scale), float(d_bar[i]), err * scale, converged)
            for i in range(r.size)]


def cmd_dfunc_sweep(cfg: RunConfig, args) -> Table:
    derived = derive(cfg.condensate.build())
    detunings = _grid(args.detuning_khz, TWO_PI * 1e3)
    positions = [(r * 1e-6, y * 1e-6) for r in args.r_um for y in args.y_um]
    spec = cfg.quadrature.build().tightened(100.0)
    method = cfg.quadrature.spectral_method
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        chunks = list(pool.map(lambda w: _dfunc_rows(derived, float(w), positions, spec, method), detunings))
    table = Table("dfunc-sweep", ["omega_minus_delta_rad_s", "r_perp_m", "y_m", "d_m3inv", "d_bar", "error_m3inv"])
    failed = False
    for rows in chunks:
        for row in rows:
            table.add(*row[:6])
            failed |= not row[6]
    if failed:
        raise CommandFailed(EXIT_NUMERIC, "spectral quadrature did not converge", table)
    return table


def _run_atom_rate(cfg: RunConfig):
    geom = cfg.build_geometry()
    mode = cfg.build_mode()
    derived = derive(cfg.condensate.build())
    return atom_rate(derived, geom, mode, cfg.sensing.distance_um * 1e-6, cfg.sensing.detection(),
                     cfg.quadrature.build(), b_x=cfg.drive_field(),
                     enforce_distance=cfg.sensing.enforce_distance, radius_report=cfg.sensing.radius_report,
                     spectral_method=cfg.quadrature.spectral_method), geom, mode, derived


def cmd_atom_rate(cfg: RunConfig, args) -> Table:
    result, geom, mode, derived = _run_atom_rate(cfg)
    table = Table("atom-rate", ["quantity", "value", "unit"],
                  meta={"config": cfg.to_dict(), "converged": result.converged,
                        "warnings": list(result.warnings)})
    for name, value, unit in (
            ("eps_eff", mode.eps_eff, "1"), ("length", mode.length, "m"),
            ("mode_volume_closed_form", mode.length * geom.half_width ** 2 / math.pi, "m^3"),
            ("b_max_mode_volume", result.b_max_mode_volume, "T"), ("b_max_cqed", result.b_max_cqed, "T"),
            ("b_attenuated", result.b_attenuated, "T"), ("b_x", result.b_x, "T"),
            ("eta", result.eta, "rad/s"), ("chemical_potential", derived.mu / derived.hbar, "rad/s"),
            ("airy_length", derived.l0, "m"), ("monochromatic_ratio", result.monochromatic_ratio, "1"),
            ("lateral_radius", result.lateral_radius, "m"),
            ("detection_integral", result.detection_integral, "m^3"),
            ("detection_integral_error", result.detection_integral_error, "m^3"),
            ("atom_rate", result.atom_rate, "1/s"), ("atom_rate_error", result.quadrature_error, "1/s"),
            ("atom_rate_identity_route", result.atom_rate_identity, "1/s"),
            ("atom_rate_attenuated_field", result.atom_rate_attenuated, "1/s")):
        table.add(name, float(value), unit)
    for radius, rate in result.radius_report:
        table.add(f"atom_rate_within_{radius / derived.a:.0f}a", float(rate), "1/s")
    if not result.converged:
        raise CommandFailed(EXIT_NUMERIC, "detection integral did not converge", table)
    return table


def cmd_reproduce_paper(cfg: RunConfig, args) -> Table:
    values, result = evaluate(cfg)
    table = Table("reproduce-paper", ["key", "description", "value", "target", "tolerance", "kind", "unit", "status"],
                  meta={"warnings": list(result.warnings),
                        "atom_rate_attenuated_field": result.atom_rate_attenuated,
                        "radius_report": [[r, n] for r, n in result.radius_report]})
    failures = []
    for ref in REFERENCES:
        ok = ref.passes(values[ref.key])
        if not ok:
            failures.append(ref.key)
        table.add(ref.key, ref.description, float(values[ref.key]), ref.target, ref.tolerance, ref.kind,
                  ref.unit, "pass" if ok else "FAIL")
    summary = "\n".join(
        f"{row[7]:4s}  {row[0]:22s} {format_float(row[2])} (target {format_float(row[3])}, "
        f"{row[5]} {format_float(row[4])}) {row[6]}" for row in table.rows)
    print(summary, file=sys.stderr if _writes_stdout(cfg, args) else sys.stdout)
    if failures:
        raise CommandFailed(EXIT_REFERENCE, "reference checks failed: " + ", ".join(failures), table)
    return table


def _sweep_point(cfg: RunConfig, key: str, value):
    point = apply_overrides(cfg, [f"{key}={value}"])
    result = _run_atom_rate(replace(point, sensing=replace(point.sensing, radius_report=False)))[0]
    return value, result


def cmd_sweep(cfg: RunConfig, args) -> Table:
    if "." not in args.param:
        raise ConfigError(args.param, "sweep parameter must be given as block.key")
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ValueError("no sweep values given")
    apply_overrides(cfg, [f"{args.param}={values[0]}"])  # validate the key before fanning out
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        results = list(pool.map(lambda v: _sweep_point(cfg, args.param, v), values))
    table = Table("sweep", [args.param, "b_x_T", "atom_rate_per_s", "error_per_s", "converged"],
                  meta={"warnings": sorted({w for _, r in results for w in r.warnings})})
    for value, r in results:
        table.add(float(value), r.b_x, r.atom_rate, r.quadrature_error, r.converged)
    if not all(r.converged for _, r in results):
        raise CommandFailed(EXIT_NUMERIC, "a sweep point did not converge", table)
    return table


HANDLERS = {
    "cpw-info": cmd_cpw_info, "field-map": cmd_field_map, "mode-volume": cmd_mode_volume, "bmax": cmd_bmax,
    "dfunc-sweep": cmd_dfunc_sweep, "atom-rate": cmd_atom_rate, "reproduce-paper": cmd_reproduce_paper,
    "sweep": cmd_sweep,
}


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors follow the JSON error convention."""

    def error(self, message):
        print(json.dumps({"error": "UsageError", "message": message, "exit_code": EXIT_INVALID}), file=sys.stderr)
        self.exit(EXIT_INVALID)


def _common_options() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS, help="TOML run configuration")
    common.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS,
                        help="write <DIR>/<command>.<format> instead of standard output")
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker threads for sweeps (default 1)")
    common.add_argument("--tol-override", metavar="KEY=VAL", action="append", default=argparse.SUPPRESS,
                        help="override a quadrature key (or block.key); repeatable")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(prog="mwsense", parents=[common],
                                     description="Single microwave photon detection with a trapped condensate.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("cpw-info", parents=[common], help="line parameters and resonator length")
    fm = sub.add_parser("field-map", parents=[common], help="single-photon field on a grid")
    fm.add_argument("--x-um", nargs=3, type=float, default=[0.0, 25.0, 6], metavar=("START", "STOP", "N"))
    fm.add_argument("--y-um", nargs=3, type=float, default=[-50.0, -5.0, 10], metavar=("START", "STOP", "N"))
    fm.add_argument("--z-um", nargs=3, type=float, default=None, metavar=("START", "STOP", "N"),
                    help="default: the resonator midpoint only")
    sub.add_parser("mode-volume", parents=[common], help="closed-form and integrated mode volume")
    sub.add_parser("bmax", parents=[common], help="single-photon field estimates")
    ds = sub.add_parser("dfunc-sweep", parents=[common], help="spectral resolution function versus detuning")
    ds.add_argument("--detuning-khz", nargs=3, type=float, default=[-20.0, 20.0, 9],
                    metavar=("START", "STOP", "N"), help="omega - Delta in kHz (times 2 pi)")
    ds.add_argument("--r-um", nargs="+", type=float, default=[0.0])
    ds.add_argument("--y-um", nargs="+", type=float, default=[-65.0], help="heights relative to the cloud centre")
    sub.add_parser("atom-rate", parents=[common], help="atoms per photon in the detection volume")
    sub.add_parser("reproduce-paper", parents=[common], help="check the reference values of the default setup")
    sw = sub.add_parser("sweep", parents=[common], help="atom count versus one configuration key")
    sw.add_argument("--param", required=True, help="block.key, e.g. sensing.distance_um")
    sw.add_argument("--values", required=True, help="comma-separated values")
    return parser


def _writes_stdout(cfg: RunConfig, args) -> bool:
    return not (getattr(args, "out", None) or cfg.output.directory)


def _load(args) -> RunConfig:
    path = getattr(args, "config", None)
    cfg = load_config(path) if path else parse_config("")
    overrides = getattr(args, "tol_override", None)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    fmt = getattr(args, "format", None)
    if fmt:
        cfg = replace(cfg, output=replace(cfg.output, format=fmt))
    return cfg


def _emit(table: Table, cfg: RunConfig, args) -> None:
    text = render(table, cfg.output.format)
    directory = getattr(args, "out", None) or cfg.output.directory
    if directory:
        os.makedirs(directory, exist_ok=True)
        path = os.path.join(directory, f"{table.command}.{cfg.output.format}")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _error(code: int, exc: BaseException) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    key = getattr(exc, "key", None)
    if key:
        doc["key"] = key
    print(json.dumps(doc), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.threads = getattr(args, "threads", 1)
    try:
        if args.threads < 1:
            raise ValueError("--threads must be at least 1")
        cfg = _load(args)
        table = HANDLERS[args.command](cfg, args)
        _emit(table, cfg, args)
        return 0
    except CommandFailed as exc:
        if exc.table is not None:
            _emit(exc.table, cfg, args)
        return _error(exc.code, exc)
    except QuadratureError as exc:
        return _error(EXIT_NUMERIC, exc)
    except (ValueError, OSError, OverflowError) as exc:
        return _error(EXIT_INVALID, exc)


if __name__ == "__main__":
    sys.exit(main())
