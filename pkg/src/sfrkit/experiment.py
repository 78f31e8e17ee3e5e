"""Declarative experiment configs and the sweep runner.

A sweep visits every (loudspeaker, frequency, seed, method) cell in config
order.  Each cell synthesises the boundary snapshot of a free-field source,
optionally adds noise, reconstructs with one method and scores it against the
noiseless analytic field.  A cell that raises is kept as a row with a NaN
error so a sweep always completes.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, ainn, ch, svdrec
from .field import (FieldModel, LineSource2D, Medium, PlaneWave, PointSource3D, PressureSnapshot,
                    add_noise, pressure, synthesize)
from .geometry import (DUAL_INNER_RADIUS, DUAL_OUTER_RADIUS, NUM_LOUDSPEAKERS, circle_positions,
                       collocation_grid, layout_by_name, loudspeaker_position, region_for, region_radius)
from .metrics import fd_radial_gradient_truth, mid_radius, reconstruction_error

log = logging.getLogger(__name__)

METHODS = ("ch", "svd", "cainn", "dainn")
FIELD_KINDS = ("line2d", "point3d", "plane_wave")
LAYOUTS = ("planar64", "dual_circular")
ORDER_RULES = ("inscribed", "circumscribed")
RESULT_COLUMNS = ("room_tag", "loudspeaker", "freq_hz", "method", "quantity", "error_db", "seed", "config_hash")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class FieldSpec:
    kind: str = "line2d"
    ring_radius: float = 1.0
    amplitude: float = 1.0


@dataclass(frozen=True)
class ChSettings:
    rel_tol: float = ch.DEFAULT_REL_TOL
    order_rule: str = "inscribed"


@dataclass(frozen=True)
class SvdSettings:
    rel_tol: float = svdrec.DEFAULT_REL_TOL
    delta: float = svdrec.DEFAULT_DELTA
    half_side: float = svdrec.DEFAULT_HALF_SIDE
    spacing: float = svdrec.DEFAULT_SPACING


@dataclass(frozen=True)
class AinnSettings:
    epochs: int = 20_000
    learning_rate: float = 1e-3
    collocation_spacing: float = 0.01
    loss_weights: tuple = (1.0, 1.0)
    hidden_layers: Optional[int] = None


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep.  ``snr_db=None`` means noiseless."""

    layout: str = "planar64"
    frequencies: tuple = (1000.0,)
    loudspeakers: tuple = (7,)
    methods: tuple = ("ch",)
    field: FieldSpec = FieldSpec()
    snr_db: Optional[float] = 20.0
    noise_convention: str = "total"
    seeds: tuple = (0,)
    c: float = 340.0
    room_tag: str = "freefield"
    ch: ChSettings = ChSettings()
    svd: SvdSettings = SvdSettings()
    ainn: AinnSettings = AinnSettings()
    out_dir: str = "runs"
    render_svg: bool = False
    checkpoints: bool = True
    workers: int = 1

    def __post_init__(self):
        freeze = object.__setattr__
        freeze(self, "frequencies", tuple(float(f) for f in self.frequencies))
        freeze(self, "loudspeakers", tuple(int(i) for i in self.loudspeakers))
        freeze(self, "methods", tuple(str(m).lower() for m in self.methods))
        freeze(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.snr_db is not None:
            freeze(self, "snr_db", float(self.snr_db))
        self.validate()

    def validate(self) -> None:
        if self.layout not in LAYOUTS:
            raise ConfigError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
        if not self.frequencies:
            raise ConfigError("at least one frequency is required")
        if any(not (f > 0 and math.isfinite(f)) for f in self.frequencies):
            raise ConfigError("frequencies must be positive and finite")
        if not self.loudspeakers:
            raise ConfigError("at least one loudspeaker is required")
        if any(not 1 <= i <= NUM_LOUDSPEAKERS for i in self.loudspeakers):
            raise ConfigError(f"loudspeaker indices must lie in 1..{NUM_LOUDSPEAKERS}")
        needs_seed = self.snr_db is not None or any(m in ("cainn", "dainn") for m in self.methods)
        if needs_seed and not self.seeds:
            raise ConfigError("seeds are required when noise or training is enabled")
        if not self.seeds:
            object.__setattr__(self, "seeds", (0,))
        if self.field.kind not in FIELD_KINDS:
            raise ConfigError(f"field kind must be one of {FIELD_KINDS}")
        if not self.field.ring_radius > DUAL_OUTER_RADIUS + svdrec.DEFAULT_HALF_SIDE + svdrec.MIN_RECEIVER_DISTANCE:
            raise ConfigError("ring radius is too small to keep the source outside the array")
        if self.noise_convention not in ("total", "per_microphone"):
            raise ConfigError("noise_convention must be 'total' or 'per_microphone'")
        if self.ch.order_rule not in ORDER_RULES:
            raise ConfigError(f"ch.order_rule must be one of {ORDER_RULES}")
        if not self.c > 0:
            raise ConfigError("speed of sound must be positive")
        if self.ainn.epochs < 0:
            raise ConfigError("ainn.epochs must be non-negative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    # --- serialisation ---------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ainn"]["loss_weights"] = list(self.ainn.loss_weights)
        for k in ("frequencies", "loudspeakers", "methods", "seeds"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        nested = {"field": FieldSpec, "ch": ChSettings, "svd": SvdSettings, "ainn": AinnSettings}
        try:
            for key, typ in nested.items():
                if key in kw:
                    sub = dict(kw[key])
                    if key == "ainn" and "loss_weights" in sub:
                        sub["loss_weights"] = tuple(float(w) for w in sub["loss_weights"])
                    kw[key] = typ(**sub)
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
        return cls.from_dict(d)

    def config_hash(self) -> str:
        """Short SHA-256 of the canonical JSON; output location and pool size are excluded."""
        d = self.to_dict()
        for k in ("out_dir", "workers", "render_svg", "checkpoints"):
            d.pop(k)
        canon = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    @property
    def medium(self) -> Medium:
        return Medium(self.c)


@dataclass(frozen=True)
class Cell:
    loudspeaker: int
    freq_hz: float
    seed: int
    method: str

    @property
    def tag(self) -> str:
        return f"ls{self.loudspeaker:02d}_f{self.freq_hz:g}_s{self.seed}_{self.method}"


@dataclass
class ResultRow:
    room_tag: str
    loudspeaker: int
    freq_hz: float
    method: str
    quantity: str
    error_db: float
    seed: int
    config_hash: str

    def as_list(self) -> list[str]:
        return [self.room_tag, str(self.loudspeaker), repr(float(self.freq_hz)), self.method,
                self.quantity, repr(float(self.error_db)), str(self.seed), self.config_hash]


@dataclass
class CellOutcome:
    cell: Cell
    rows: list
    record: dict
    checkpoint: Optional[dict] = None
    heatmaps: dict = field(default_factory=dict)


# --- scenario construction -------------------------------------------------

def field_model(cfg: ExperimentConfig, loudspeaker: int) -> FieldModel:
    src = loudspeaker_position(loudspeaker, cfg.field.ring_radius)
    a = cfg.field.amplitude
    if cfg.field.kind == "line2d":
        comp = LineSource2D(tuple(src), a)
    elif cfg.field.kind == "point3d":
        comp = PointSource3D(tuple(src), a)
    else:
        # propagating from the loudspeaker direction towards the array centre
        comp = PlaneWave(float(np.arctan2(-src[1], -src[0])), a)
    return FieldModel([comp], cfg.medium)


def noise_seed(seed: int, loudspeaker: int, freq_hz: float) -> int:
    """Per-(seed, loudspeaker, frequency) noise key, shared by every method of a cell."""
    return int(np.random.SeedSequence([seed, loudspeaker, int(round(freq_hz * 1000))]).generate_state(1)[0])


@dataclass
class Scenario:
    """Noisy boundary data plus the evaluation points and noiseless truth for one cell."""

    boundary: PressureSnapshot
    eval_points: dict  # quantity -> (n, 2)
    truth: dict  # quantity -> complex (n,)
    source_position: np.ndarray
    order_radius: float
    region: object


def build_scenario(cfg: ExperimentConfig, loudspeaker: int, f: float, seed: int) -> Scenario:
    layout = layout_by_name(cfg.layout)
    model = field_model(cfg, loudspeaker)
    clean = synthesize(model, layout, f, "boundary")
    snap = clean if cfg.snr_db is None else add_noise(clean, cfg.snr_db, noise_seed(seed, loudspeaker, f),
                                                      cfg.noise_convention)
    interior = layout.interior
    points = {"pressure": interior}
    truth = {"pressure": pressure(model, interior, f)}
    if cfg.layout == "dual_circular":
        # radial-gradient truth: difference quotient of noiseless pressures on the two circles
        outer = circle_positions(DUAL_OUTER_RADIUS)
        inner = circle_positions(DUAL_INNER_RADIUS)
        points["gradient_radial"] = circle_positions(mid_radius(DUAL_OUTER_RADIUS, DUAL_INNER_RADIUS))
        truth["gradient_radial"] = fd_radial_gradient_truth(pressure(model, outer, f), pressure(model, inner, f),
                                                            DUAL_OUTER_RADIUS, DUAL_INNER_RADIUS)
    if cfg.ch.order_rule == "inscribed":
        order_r = region_radius(layout)
    else:
        order_r = float(np.max(np.hypot(*layout.boundary.T)))
    return Scenario(snap, points, truth, loudspeaker_position(loudspeaker, cfg.field.ring_radius),
                    order_r, region_for(layout))


# --- methods --------------------------------------------------------------------

def _fit_method(cfg: ExperimentConfig, sc: Scenario, method: str, f: float, seed: int):
    """Return (estimator with pressure/radial_gradient, method params, optional checkpoint)."""
    medium = cfg.medium
    if method == "ch":
        n = ch.truncation_order(f, sc.order_radius, medium)
        rec = ch.ChReconstructor.fit(sc.boundary, n, cfg.ch.rel_tol, medium)
        return rec, {"order_N": n, "rel_tol": cfg.ch.rel_tol, "order_rule": cfg.ch.order_rule}, None
    if method == "svd":
        s = cfg.svd
        kernel = "point3d" if cfg.field.kind == "point3d" else "line2d"
        cluster = svdrec.virtual_source_grid(sc.source_position, s.half_side, s.spacing, kernel)
        rec = svdrec.SvdReconstructor(cluster, sc.boundary.positions, sc.boundary.pressures, f, s.rel_tol, medium)
        params = {"rel_tol": s.rel_tol, "delta": s.delta, "num_virtual_sources": len(cluster), "kernel": kernel}
        return _SvdAdapter(rec, s.delta), params, None
    design = "cAINN" if method == "cainn" else "dAINN"
    a = cfg.ainn
    r = region_radius(layout_by_name(cfg.layout))
    arch = ainn.make_arch(design, f, r, a.hidden_layers, medium)
    tc = ainn.TrainConfig(learning_rate=a.learning_rate, epochs=a.epochs, collocation_spacing=a.collocation_spacing,
                          loss_weights=a.loss_weights, seed=seed)
    colloc = ainn.collocation_points(sc.boundary.positions, sc.region, a.collocation_spacing, f, medium)
    res = ainn.train(arch, sc.boundary, colloc, f, tc, medium)
    params = {"design": design, "hidden_layers": arch.hidden_layers, "neurons_per_layer": arch.neurons_per_layer,
              "epochs": a.epochs, "learning_rate": a.learning_rate, "loss_weights": list(a.loss_weights),
              "num_collocation": len(colloc), "final_losses": res.final_losses().tolist()}
    return _AinnAdapter(res.model), params, ainn.checkpoint_dict(res)


class _SvdAdapter:
    def __init__(self, rec, delta):
        self.rec, self.delta = rec, delta

    def pressure(self, xy):
        return self.rec.pressure(xy)

    def radial_gradient(self, xy):
        return self.rec.radial_gradient(xy, self.delta)


class _AinnAdapter:
    def __init__(self, model):
        self.model = model

    def pressure(self, xy):
        return ainn.ainn_pressure(self.model, xy)

    def radial_gradient(self, xy):
        return ainn.ainn_radial_gradient(self.model, xy)


def run_cell(cfg: ExperimentConfig, cell: Cell, chash: Optional[str] = None) -> CellOutcome:
    """Execute one cell; never raises for method-level failures."""
    chash = chash or cfg.config_hash()
    sc = build_scenario(cfg, cell.loudspeaker, cell.freq_hz, cell.seed)
    quantities = list(sc.eval_points)
    record = {"cell": asdict(cell), "config_hash": chash, "toolkit_version": __version__,
              "noise_seed": noise_seed(cell.seed, cell.loudspeaker, cell.freq_hz), "snr_db": cfg.snr_db,
              "source_position": sc.source_position.tolist(), "num_measurements": len(sc.boundary)}
    rows = []
    checkpoint = None
    heatmaps = {}
    try:
        est, params, checkpoint = _fit_method(cfg, sc, cell.method, cell.freq_hz, cell.seed)
        errors = {}
        for q in quantities:
            xy = sc.eval_points[q]
            estimate = est.pressure(xy) if q == "pressure" else est.radial_gradient(xy)
            errors[q] = reconstruction_error(sc.truth[q], estimate)
        record.update(status="ok", method_params=params, error_db=errors)
        if cfg.render_svg:
            grid = collocation_grid(sc.region, 0.01)
            model = field_model(cfg, cell.loudspeaker)
            heatmaps = {"grid": grid, "truth": pressure(model, grid, cell.freq_hz).real,
                        "estimate": est.pressure(grid).real, "markers": sc.boundary.positions}
    except Exception as exc:  # a failed cell becomes a NaN row, the sweep goes on
        log.warning("cell %s failed: %s", cell.tag, exc)
        errors = {q: float("nan") for q in quantities}
        record.update(status="failed", error=f"{type(exc).__name__}: {exc}", error_db=errors)
        checkpoint = None
    for q in quantities:
        rows.append(ResultRow(cfg.room_tag, cell.loudspeaker, cell.freq_hz, cell.method, q,
                              errors[q], cell.seed, chash))
    return CellOutcome(cell, rows, record, checkpoint, heatmaps)


def cells(cfg: ExperimentConfig) -> list[Cell]:
    """Config-order enumeration: loudspeaker, frequency, seed, method."""
    return [Cell(ls, f, s, m) for ls in cfg.loudspeakers for f in cfg.frequencies
            for s in cfg.seeds for m in cfg.methods]


def _run_cell_star(args):
    return run_cell(*args)


@dataclass
class ResultsTable:
    rows: list
    config_hash: str
    toolkit_version: str = __version__

    def to_csv(self) -> str:
        from .io import format_csv_rows

        return format_csv_rows(RESULT_COLUMNS, [r.as_list() for r in self.rows])

    def errors(self, method: str, quantity: str, freq_hz: Optional[float] = None) -> np.ndarray:
        return np.array([r.error_db for r in self.rows if r.method == method and r.quantity == quantity
                         and (freq_hz is None or r.freq_hz == freq_hz)])


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ResultsTable:
    """Run every cell; rows come back in config order regardless of pool scheduling."""
    chash = cfg.config_hash()
    todo = cells(cfg)
    t0 = time.perf_counter()
    if cfg.workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_run_cell_star, [(cfg, c, chash) for c in todo]))
    else:
        outcomes = [run_cell(cfg, c, chash) for c in todo]
    log.info("%d cells in %.1f s", len(todo), time.perf_counter() - t0)
    table = ResultsTable([r for o in outcomes for r in o.rows], chash)
    if write:
        write_outputs(cfg, table, outcomes)
    return table


def write_outputs(cfg: ExperimentConfig, table: ResultsTable, outcomes: list) -> Path:
    from .heatmap import render_heatmap
    from .io import write_text

    out = Path(cfg.out_dir)
    (out / "cells").mkdir(parents=True, exist_ok=True)
    write_text(out / "results.csv", table.to_csv())
    write_text(out / "config.json", json.dumps(cfg.to_dict(), sort_keys=True, indent=1) + "\n")
    for o in outcomes:
        tag = o.cell.tag
        write_text(out / "cells" / f"{tag}.json", json.dumps(o.record, sort_keys=True, indent=1) + "\n")
        if o.checkpoint is not None and cfg.checkpoints:
            (out / "checkpoints").mkdir(exist_ok=True)
            write_text(out / "checkpoints" / f"{tag}.json", json.dumps(o.checkpoint, sort_keys=True) + "\n")
        if o.heatmaps:
            (out / "svg").mkdir(exist_ok=True)
            h = o.heatmaps
            for name in ("truth", "estimate"):
                svg = render_heatmap(h["grid"], h[name], markers=h["markers"],
                                     title=f"{tag} {name} (real part)")
                write_text(out / "svg" / f"{tag}_{name}.svg", svg)
    return out
