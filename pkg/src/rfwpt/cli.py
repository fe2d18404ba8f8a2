"""Command-line front end.

Subcommands::

    rfwpt scan             run the two-phase scan, write per-beam powers
    rfwpt phase-map        write the phase matrix of one beam
    rfwpt sweep            move the receiver and compare scan schemes
    rfwpt export-codebook  write per-beam, per-element phases / shifter words

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, load_config, load_mask, load_preset, preset_names
from .control import far_field_excitation, near_field_excitation, phase_words
from .geometry import DirectionUV
from .rectenna import combined_dc_power, transfer_efficiency
from .scanner import beam_scan, run_far_scan, simulated_probe

__all__ = ["main", "run_scan", "run_sweep", "sweep_points", "phase_map", "codebook_rows", "fmt"]

log = logging.getLogger("rfwpt")

OUT_ENV = "RFWPT_OUT"
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def fmt(x) -> str:
    """Stable 9-significant-digit float formatting; ``None`` becomes an empty field."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def dbm(power_w: float) -> float:
    return 10 * math.log10(power_w) + 30 if power_w > 0 else -math.inf


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    log.info("wrote %s", path)


def _probe(cfg: ScenarioConfig, point=None):
    return simulated_probe(cfg.context(), cfg.tx_geometry(), cfg.pose(point), cfg.rx_local(), cfg.model)


def run_scan(cfg: ScenarioConfig, point=None):
    """Run the full scan for the configured scenario; returns ``(outcome, probe)``."""
    probe = _probe(cfg, point)
    outcome = beam_scan(probe, cfg.context(), cfg.tx_geometry(), cfg.codebook(), cfg.transform())
    return outcome, probe


def sweep_points(start: float, stop: float, step: float) -> np.ndarray:
    if step <= 0:
        raise ValueError("sweep step must be > 0")
    if stop < start:
        raise ValueError("sweep stop must be >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def run_sweep(cfg: ScenarioConfig, axis: str, points, compare: str = "both"):
    """Move the receiver along ``axis`` ('z' or 'y') and evaluate each scheme.

    Returns a header and one row per point. The far-only scheme keeps the best
    far-field beam; the proposed scheme adds the focal-distance scan.
    """
    if axis not in ("z", "y"):
        raise ValueError(f"axis must be 'z' or 'y', got {axis!r}")
    if compare not in ("proposed", "far-only", "both"):
        raise ValueError(f"compare must be proposed, far-only or both, got {compare!r}")
    schemes = ["proposed", "far-only"] if compare == "both" else [compare]
    ctx, tx, codebook = cfg.context(), cfg.tx_geometry(), cfg.codebook()
    transform, model = cfg.transform(), cfg.efficiency_model()
    base = cfg.reference_point()
    header = ["z_m" if axis == "z" else "y_m"]
    for s in schemes:
        p = s.replace("-", "_")
        header += [f"{p}_k_star", f"{p}_r_opt_m", f"{p}_sensor_w", f"{p}_dc_w", f"{p}_efficiency"]
    rows = []
    for value in points:
        point = base.copy()
        point[2 if axis == "z" else 1] = value
        probe = _probe(cfg, point)
        row = [float(value)]
        for s in schemes:
            if s == "proposed":
                out = beam_scan(probe, ctx, tx, codebook, transform)
                x, k, r_opt = out.final_excitation, out.k_star, out.r_opt
            else:
                k, _ = run_far_scan(probe, ctx, tx, codebook, transform)
                x = far_field_excitation(ctx, tx, codebook.beam(k).xi)
                x = transform(x) if transform else x
                r_opt = None
            report = combined_dc_power(probe.receive(x), model, probe.anchor_index)
            eta = transfer_efficiency(report.combined_dc, tx.spec, x.active)
            row += [k, r_opt, report.sensor_power, report.combined_dc, eta]
        rows.append(row)
    return header, rows


def phase_map(cfg: ScenarioConfig, xi: DirectionUV, r: float | None = None) -> np.ndarray:
    """``n_rows x n_cols`` matrix of element phases in degrees, in [0, 360)."""
    ctx, tx = cfg.context(), cfg.tx_geometry()
    x = far_field_excitation(ctx, tx, xi) if r is None else near_field_excitation(ctx, tx, xi, r)
    transform = cfg.transform()
    if transform is not None:
        x = transform(x)
    deg = np.degrees(x.wrapped_phases)
    deg = np.where(deg >= 360.0, 0.0, deg)
    return deg.reshape(tx.spec.n_rows, tx.spec.n_cols)


def codebook_rows(cfg: ScenarioConfig):
    ctx, tx, codebook, lsb = cfg.context(), cfg.tx_geometry(), cfg.codebook(), cfg.lsb()
    transform = cfg.transform()
    header = ["beam_index", "u", "v", "element", "phase_deg"] + (["word"] if lsb is not None else [])
    rows = []
    for beam in codebook.valid_beams:
        x = far_field_excitation(ctx, tx, beam.xi)
        if transform is not None:
            x = transform(x)
        deg = np.degrees(x.wrapped_phases)
        deg = np.where(deg >= 360.0, 0.0, deg)
        words = phase_words(x, lsb) if lsb is not None else None
        for n in range(tx.n_elements):
            row = [beam.index, beam.xi.u, beam.xi.v, n + 1, float(deg[n])]
            if words is not None:
                row.append(int(words[n]))
            rows.append(row)
    return header, rows


def _load(args) -> ScenarioConfig:
    if args.preset and args.config:
        raise ConfigError("use either --config or --preset, not both")
    if args.preset:
        cfg = load_preset(args.preset)
    elif args.config:
        cfg = load_config(args.config)
    else:
        raise ConfigError(f"no scenario given; use --config PATH or --preset {{{','.join(preset_names())}}}")
    if args.model is not None:
        cfg = cfg.with_overrides("scenario", model=args.model)
    if args.quantize is not None:
        if not args.quantize > 0:
            raise ConfigError("--quantize must be > 0 degrees")
        cfg = cfg.with_overrides("scenario", quantize_deg=args.quantize)
    if args.mask is not None:
        load_mask(args.mask, cfg.tx_spec().n_elements)
        cfg = cfg.with_overrides("scenario", mask=str(Path(args.mask).resolve()))
    # fail early on config-level problems that only surface when building objects
    try:
        cfg.codebook()
        cfg.transform()
        cfg.efficiency_model()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{cfg.source}: {exc}") from None
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_scan(args) -> None:
    cfg = _load(args)
    outcome, _ = run_scan(cfg)
    out = _out_dir(args)
    codebook = cfg.codebook()
    _write_csv(
        out / "far_powers.csv",
        ["beam_index", "u", "v", "valid", "power_w", "power_dbm"],
        (
            [k, codebook.beam(k).xi.u, codebook.beam(k).xi.v, p is not None, p, None if p is None else dbm(p)]
            for k, p in outcome.far_powers
        ),
    )
    grid = dict(codebook.distance_grid)
    _write_csv(
        out / "near_powers.csv",
        ["grid_index", "r_m", "power_w", "power_dbm"],
        ([i, grid[i], p, dbm(p)] for i, p in outcome.near_powers),
    )
    summary = {
        "k_star": outcome.k_star,
        "u_opt": float(fmt(outcome.xi_opt.u)),
        "v_opt": float(fmt(outcome.xi_opt.v)),
        "i_star": outcome.i_star,
        "r_opt_m": float(fmt(outcome.r_opt)),
        "far_best_w": float(fmt(outcome.far_best)),
        "near_best_w": float(fmt(outcome.near_best)),
        "improvement_db": float(fmt(outcome.improvement_db)),
        "probe_calls": outcome.probe_call_count,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))


def cmd_phase_map(args) -> None:
    cfg = _load(args)
    if args.beam is not None:
        beam = cfg.codebook().beam(args.beam)
        if not beam.valid:
            raise ValueError(f"beam {args.beam} lies outside the unit disk")
        xi = beam.xi
    elif args.u is not None and args.v is not None:
        xi = DirectionUV(args.u, args.v)
    else:
        raise ConfigError("phase-map needs --beam K or both --u and --v")
    m = phase_map(cfg, xi, args.r)
    out = _out_dir(args) / (args.name or "phase_map.csv")
    with out.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        for row in m:
            writer.writerow([fmt(v) for v in row])
    log.info("wrote %s", out)


def cmd_sweep(args) -> None:
    cfg = _load(args)
    points = sweep_points(args.start, args.stop, args.step)
    header, rows = run_sweep(cfg, args.axis, points, args.compare)
    _write_csv(_out_dir(args) / (args.name or "sweep.csv"), header, rows)


def cmd_export_codebook(args) -> None:
    cfg = _load(args)
    header, rows = codebook_rows(cfg)
    _write_csv(_out_dir(args) / (args.name or "codebook.csv"), header, rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file")
    common.add_argument("--preset", help=f"built-in scenario ({', '.join(preset_names())})")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    common.add_argument("--model", choices=["exact", "decomposed"], help="channel model override")
    common.add_argument("--quantize", type=float, metavar="DEG", help="phase shifter LSB in degrees")
    common.add_argument("--mask", help="transmit element mask file (0/1 per element)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rfwpt", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", parents=[common], help="run the two-phase beam scan")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("phase-map", parents=[common], help="phase matrix of one beam")
    p.add_argument("--beam", type=int, help="far-field beam index from the codebook")
    p.add_argument("--u", type=float)
    p.add_argument("--v", type=float)
    p.add_argument("--r", type=float, help="focal distance in metres (near-field beam)")
    p.add_argument("--name", help="output file name")
    p.set_defaults(func=cmd_phase_map)

    p = sub.add_parser("sweep", parents=[common], help="move the receiver and compare schemes")
    p.add_argument("--axis", choices=["z", "y"], default="z")
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--compare", choices=["proposed", "far-only", "both"], default="both")
    p.add_argument("--name", help="output file name")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-codebook", parents=[common], help="per-beam element phases")
    p.add_argument("--name", help="output file name")
    p.set_defaults(func=cmd_export_codebook)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
