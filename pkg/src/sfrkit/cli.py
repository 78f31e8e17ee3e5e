"""Command-line entry point.

Subcommands
-----------
simulate     write boundary and interior snapshot CSVs for one cell
reconstruct  run one or more methods on simulated or imported data
sweep        run the full experiment matrix of a config
render       draw a snapshot CSV as an SVG heatmap
import       validate a snapshot CSV and write a normalised copy

Exit codes: 0 success, 1 invalid input or config, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiment import (ConfigError, ExperimentConfig, Scenario, _fit_method, build_scenario, field_model,
                         run_experiment)
from .field import PressureSnapshot, pressure
from .geometry import collocation_grid, layout_by_name, region_for, region_radius
from .heatmap import render_heatmap
from .io import SnapshotFormatError, export_snapshot, import_snapshot, write_text

log = logging.getLogger("sfrkit")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
_UNSET = object()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _snr(text: str):
    t = text.strip().lower()
    if t in ("none", "inf", "noiseless"):
        return None
    v = float(t)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError("SNR must be finite or 'none'")
    return v


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment config")
    p.add_argument("--seed", type=int, action="append", help="seed (repeatable; replaces config seeds)")
    p.add_argument("--out-dir", type=Path, help="output directory")
    p.add_argument("--snr-db", type=_snr, default=_UNSET, help="SNR in dB, or 'none' for noiseless data")
    p.add_argument("--freq", type=float, action="append", help="frequency in Hz (repeatable)")
    p.add_argument("--method", action="append", choices=["ch", "svd", "cainn", "dainn"],
                   help="reconstruction method (repeatable)")
    p.add_argument("--loudspeaker", type=int, action="append", help="loudspeaker index 1..60 (repeatable)")
    p.add_argument("--layout", choices=["planar64", "dual_circular"])
    p.add_argument("--epochs", type=int, help="training epochs for the network methods")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sfrkit", description="Sound field reconstruction experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="synthesise boundary and interior snapshots")
    _common(p)

    p = sub.add_parser("reconstruct", help="reconstruct with the selected methods")
    _common(p)
    p.add_argument("--snapshot", type=Path, help="reconstruct from this boundary CSV instead of simulating")
    p.add_argument("--source", type=float, nargs=2, metavar=("X", "Y"),
                   help="loudspeaker position for the svd method on imported data")

    p = sub.add_parser("sweep", help="run the full experiment matrix")
    _common(p)
    p.add_argument("--workers", type=int, help="process pool size")
    p.add_argument("--svg", action="store_true", help="also render truth/estimate heatmaps")

    p = sub.add_parser("render", help="render a snapshot CSV as an SVG heatmap")
    p.add_argument("input", type=Path)
    p.add_argument("--part", choices=["re", "im", "abs"], default="re")
    p.add_argument("--markers", type=Path, help="snapshot CSV whose positions are drawn as markers")
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("import", help="validate a snapshot CSV")
    p.add_argument("input", type=Path)
    p.add_argument("--freq", type=float, required=True)
    p.add_argument("--room-tag", default="measured")
    p.add_argument("--out-dir", type=Path)
    return ap


def config_from_args(args) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config).to_dict() if args.config else ExperimentConfig().to_dict()
    if args.seed:
        base["seeds"] = args.seed
    if args.out_dir:
        base["out_dir"] = str(args.out_dir)
    if args.snr_db is not _UNSET:
        base["snr_db"] = args.snr_db
    if args.freq:
        base["frequencies"] = args.freq
    if args.method:
        base["methods"] = args.method
    if args.loudspeaker:
        base["loudspeakers"] = args.loudspeaker
    if args.layout:
        base["layout"] = args.layout
    if args.epochs is not None:
        base["ainn"]["epochs"] = args.epochs
    if getattr(args, "workers", None):
        base["workers"] = args.workers
    if getattr(args, "svg", False):
        base["render_svg"] = True
    return ExperimentConfig.from_dict(base)


def _print_rows(table) -> None:
    sys.stdout.write(table.to_csv())


def cmd_simulate(args) -> int:
    cfg = config_from_args(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for ls in cfg.loudspeakers:
        for f in cfg.frequencies:
            for seed in cfg.seeds:
                sc = build_scenario(cfg, ls, f, seed)
                stem = f"ls{ls:02d}_f{f:g}_s{seed}"
                export_snapshot(sc.boundary, out / f"{stem}_boundary.csv")
                layout = layout_by_name(cfg.layout)
                model = field_model(cfg, ls)
                interior = PressureSnapshot(f, layout.interior, pressure(model, layout.interior, f))
                export_snapshot(interior, out / f"{stem}_interior.csv")
                print(out / f"{stem}_boundary.csv")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg = config_from_args(args)
    if args.snapshot is None:
        table = run_experiment(cfg)
        _print_rows(table)
        return EXIT_OK
    return _reconstruct_imported(cfg, args)


def _reconstruct_imported(cfg: ExperimentConfig, args) -> int:
    """Reconstruct the interior lattice from a measured boundary snapshot (no scoring)."""
    f = cfg.frequencies[0]
    snap = import_snapshot(args.snapshot, f)
    layout = layout_by_name(cfg.layout)
    region = region_for(layout)
    src = np.asarray(args.source if args.source else [0.0, 1.0], dtype=float)
    if "svd" in cfg.methods and args.source is None:
        raise ConfigError("--source X Y is required for the svd method on imported data")
    if cfg.ch.order_rule == "circumscribed":
        order_r = float(np.max(np.hypot(*snap.positions.T)))
    else:
        order_r = region_radius(layout)
    sc = Scenario(snap, {}, {}, src, order_r, region)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = collocation_grid(region, 0.01)
    for m in cfg.methods:
        est, params, _ = _fit_method(cfg, sc, m, f, cfg.seeds[0])
        path = out / f"{args.snapshot.stem}_{m}_estimate.csv"
        export_snapshot(PressureSnapshot(f, grid, est.pressure(grid), f"estimate:{m}"), path)
        print(path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = config_from_args(args)
    table = run_experiment(cfg)
    _print_rows(table)
    failed = sum(1 for r in table.rows if math.isnan(r.error_db))
    if failed:
        log.warning("%d result rows failed; see the cell JSON files", failed)
    return EXIT_OK


def cmd_render(args) -> int:
    snap = import_snapshot(args.input, 1.0)
    vals = {"re": snap.pressures.real, "im": snap.pressures.imag, "abs": np.abs(snap.pressures)}[args.part]
    markers = import_snapshot(args.markers, 1.0).positions if args.markers else None
    svg = render_heatmap(snap.positions, vals, markers=markers, title=f"{args.input.name} ({args.part})")
    out = args.output or args.input.with_suffix(".svg")
    write_text(out, svg)
    print(out)
    return EXIT_OK


def cmd_import(args) -> int:
    snap = import_snapshot(args.input, args.freq, provenance=f"import:{args.input.name};room={args.room_tag}")
    summary = {"path": str(args.input), "points": len(snap), "frequency_hz": snap.frequency_hz,
               "room_tag": args.room_tag, "max_abs_pa": float(np.max(np.abs(snap.pressures)))}
    if args.out_dir:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        export_snapshot(snap, args.out_dir / args.input.name)
        write_text(args.out_dir / f"{args.input.stem}.json", json.dumps(summary, sort_keys=True, indent=1) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "reconstruct": cmd_reconstruct, "sweep": cmd_sweep,
            "render": cmd_render, "import": cmd_import}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, SnapshotFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
