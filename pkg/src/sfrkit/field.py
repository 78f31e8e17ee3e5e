"""Analytic free-field sound fields, noise injection and the Helmholtz residual.

Time convention is ``exp(-i omega t)``; outgoing waves use ``H^(1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence, Union

import numpy as np

from . import specfun
from .geometry import ArrayLayout, as_positions, to_polar

SOURCE_EXCLUSION = 1e-6


@dataclass(frozen=True)
class Medium:
    c: float = 340.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"speed of sound must be positive, got {self.c}")

    def wavenumber(self, f: float) -> float:
        if not f > 0:
            raise ValueError(f"frequency must be positive, got {f}")
        return 2 * np.pi * f / self.c


@dataclass(frozen=True)
class LineSource2D:
    """2-D free-field Green's function ``a (i/4) H0(k d)``."""

    position: tuple[float, float]
    amplitude: complex = 1.0


@dataclass(frozen=True)
class PointSource3D:
    """3-D monopole ``a exp(ikd) / (4 pi d)`` in the z = 0 plane (not a 2-D Helmholtz solution)."""

    position: tuple[float, float]
    amplitude: complex = 1.0


@dataclass(frozen=True)
class PlaneWave:
    """``a exp(ik (x cos theta + y sin theta))``."""

    angle: float
    amplitude: complex = 1.0


@dataclass(frozen=True)
class ChExpansion:
    """Interior expansion ``sum_n A_n J_n(k r) exp(-i n phi)`` about ``center``; weights for n = -N..N."""

    weights: tuple
    center: tuple[float, float] = (0.0, 0.0)

    @property
    def order(self) -> int:
        return (len(self.weights) - 1) // 2


Component = Union[LineSource2D, PointSource3D, PlaneWave, ChExpansion]


@dataclass(frozen=True)
class FieldModel:
    components: Sequence[Component]
    medium: Medium = field(default_factory=Medium)

    def __post_init__(self):
        if not self.components:
            raise ValueError("a field model needs at least one component")
        object.__setattr__(self, "components", tuple(self.components))

    def describe(self) -> str:
        parts = []
        for comp in self.components:
            name = type(comp).__name__
            if isinstance(comp, (LineSource2D, PointSource3D)):
                parts.append(f"{name}@({comp.position[0]:.6g},{comp.position[1]:.6g})")
            elif isinstance(comp, PlaneWave):
                parts.append(f"{name}(angle={comp.angle:.6g})")
            else:
                parts.append(f"{name}(N={comp.order})")
        return "+".join(parts)


@dataclass(frozen=True)
class PressureSnapshot:
    """Complex pressures at 2-D positions for one frequency."""

    frequency_hz: float
    positions: np.ndarray
    pressures: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        if not self.frequency_hz > 0:
            raise ValueError(f"frequency must be positive, got {self.frequency_hz}")
        pos = as_positions(self.positions) if len(np.asarray(self.positions)) else np.zeros((0, 2))
        p = np.asarray(self.pressures, dtype=complex).ravel()
        if len(p) != len(pos):
            raise ValueError(f"{len(pos)} positions but {len(p)} pressures")
        if not np.all(np.isfinite(p)):
            raise ValueError("pressures must be finite")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "pressures", p)

    def __len__(self) -> int:
        return len(self.pressures)


# --- free-field kernels ----------------------------------------------------

def free_field_kernel(d: np.ndarray, k: float, kind: str = "line2d") -> np.ndarray:
    """Transfer function of a unit source at distance ``d``."""
    d = np.asarray(d, dtype=float)
    if kind == "line2d":
        h0, _ = specfun.hankel1_01(k * d)
        return 0.25j * h0
    if kind == "point3d":
        return np.exp(1j * k * d) / (4 * np.pi * d)
    raise ValueError(f"unknown kernel {kind!r}")


def _radial_derivatives(d: np.ndarray, k: float, kind: str):
    """Kernel value and its first two derivatives with respect to distance."""
    if kind == "line2d":
        kd = k * d
        h0, h1 = specfun.hankel1_01(kd)
        g = 0.25j * h0
        g1 = -0.25j * k * h1
        # H1'(z) = H0(z) - H1(z)/z
        g2 = -0.25j * k * k * (h0 - h1 / kd)
        return g, g1, g2
    if kind == "point3d":
        g = np.exp(1j * k * d) / (4 * np.pi * d)
        a = 1j * k - 1.0 / d
        return g, g * a, g * (a * a + 1.0 / d**2)
    raise ValueError(f"unknown kernel {kind!r}")


def _check_clearance(xy: np.ndarray, src) -> np.ndarray:
    dx = xy[:, 0] - src[0]
    dy = xy[:, 1] - src[1]
    d = np.hypot(dx, dy)
    if np.any(d < SOURCE_EXCLUSION):
        raise ValueError(f"evaluation point within {SOURCE_EXCLUSION} m of a source at {tuple(src)}")
    return dx, dy, d


# --- cylinder-harmonic expansions -----------------------------------------

def ch_basis(n_max: int, r: np.ndarray, phi: np.ndarray, k: float) -> np.ndarray:
    """``J_n(k r) exp(-i n phi)`` for n = -n_max..n_max; shape (len(r), 2 n_max + 1)."""
    table = specfun.bessel_j_table(n_max, k * np.asarray(r, dtype=float))  # (n_max+1, Q)
    orders = np.arange(-n_max, n_max + 1)
    mag = table[np.abs(orders)].T
    mag = mag * np.where((orders < 0) & (orders % 2 == 1), -1.0, 1.0)
    return mag * np.exp(-1j * np.outer(phi, orders))


def ch_shift_weights(weights: np.ndarray, k: float) -> tuple[np.ndarray, np.ndarray]:
    """Weights of ``dP/dx`` and ``dP/dy`` in the same basis, one order higher.

    With ``B_n = J_n(kr) exp(-i n phi)`` the identities
    ``dB_n/dx = (k/2)(B_{n-1} - B_{n+1})`` and
    ``dB_n/dy = -(ik/2)(B_{n-1} + B_{n+1})`` hold everywhere, the origin included.
    """
    a = np.asarray(weights, dtype=complex)
    padded = np.concatenate([[0, 0], a, [0, 0]])  # orders -N-2 .. N+2
    up = padded[2:]      # A_{m+1} for m = -N-1..N+1
    down = padded[:-2]   # A_{m-1}
    wx = 0.5 * k * (up - down)
    wy = -0.5j * k * (up + down)
    return wx, wy


def _ch_eval(weights, xy, center, k) -> np.ndarray:
    w = np.asarray(weights, dtype=complex)
    n = (len(w) - 1) // 2
    r, phi = to_polar(xy - np.asarray(center, dtype=float))
    return ch_basis(n, r, phi, k) @ w


# --- evaluation ------------------------------------------------------------

def pressure(model: FieldModel, p, f: float) -> np.ndarray:
    """Complex pressure of ``model`` at positions ``p`` (shape (n, 2)) and frequency ``f``."""
    xy = as_positions(p)
    k = model.medium.wavenumber(f)
    out = np.zeros(len(xy), dtype=complex)
    for comp in model.components:
        if isinstance(comp, (LineSource2D, PointSource3D)):
            _, _, d = _check_clearance(xy, comp.position)
            kind = "line2d" if isinstance(comp, LineSource2D) else "point3d"
            out += comp.amplitude * free_field_kernel(d, k, kind)
        elif isinstance(comp, PlaneWave):
            phase = xy[:, 0] * np.cos(comp.angle) + xy[:, 1] * np.sin(comp.angle)
            out += comp.amplitude * np.exp(1j * k * phase)
        elif isinstance(comp, ChExpansion):
            out += _ch_eval(comp.weights, xy, comp.center, k)
        else:
            raise TypeError(f"unsupported field component {comp!r}")
    return out


def pressure_gradient(model: FieldModel, p, f: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``(dP/dx, dP/dy)``."""
    xy = as_positions(p)
    k = model.medium.wavenumber(f)
    gx = np.zeros(len(xy), dtype=complex)
    gy = np.zeros(len(xy), dtype=complex)
    for comp in model.components:
        if isinstance(comp, (LineSource2D, PointSource3D)):
            dx, dy, d = _check_clearance(xy, comp.position)
            kind = "line2d" if isinstance(comp, LineSource2D) else "point3d"
            _, g1, _ = _radial_derivatives(d, k, kind)
            gx += comp.amplitude * g1 * dx / d
            gy += comp.amplitude * g1 * dy / d
        elif isinstance(comp, PlaneWave):
            cx, cy = np.cos(comp.angle), np.sin(comp.angle)
            val = comp.amplitude * np.exp(1j * k * (xy[:, 0] * cx + xy[:, 1] * cy))
            gx += 1j * k * cx * val
            gy += 1j * k * cy * val
        elif isinstance(comp, ChExpansion):
            wx, wy = ch_shift_weights(comp.weights, k)
            gx += _ch_eval(wx, xy, comp.center, k)
            gy += _ch_eval(wy, xy, comp.center, k)
        else:
            raise TypeError(f"unsupported field component {comp!r}")
    return gx, gy


def pressure_second_derivatives(model: FieldModel, p, f: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(P, d2P/dx2, d2P/dy2)`` computed from closed-form derivatives."""
    xy = as_positions(p)
    k = model.medium.wavenumber(f)
    val = np.zeros(len(xy), dtype=complex)
    dxx = np.zeros(len(xy), dtype=complex)
    dyy = np.zeros(len(xy), dtype=complex)
    for comp in model.components:
        if isinstance(comp, (LineSource2D, PointSource3D)):
            dx, dy, d = _check_clearance(xy, comp.position)
            kind = "line2d" if isinstance(comp, LineSource2D) else "point3d"
            g, g1, g2 = _radial_derivatives(d, k, kind)
            ux, uy = dx / d, dy / d
            a = comp.amplitude
            val += a * g
            dxx += a * (g2 * ux * ux + g1 * (1 - ux * ux) / d)
            dyy += a * (g2 * uy * uy + g1 * (1 - uy * uy) / d)
        elif isinstance(comp, PlaneWave):
            cx, cy = np.cos(comp.angle), np.sin(comp.angle)
            v = comp.amplitude * np.exp(1j * k * (xy[:, 0] * cx + xy[:, 1] * cy))
            val += v
            dxx += -(k * cx) ** 2 * v
            dyy += -(k * cy) ** 2 * v
        elif isinstance(comp, ChExpansion):
            wx, wy = ch_shift_weights(comp.weights, k)
            wxx, _ = ch_shift_weights(wx, k)
            _, wyy = ch_shift_weights(wy, k)
            val += _ch_eval(comp.weights, xy, comp.center, k)
            dxx += _ch_eval(wxx, xy, comp.center, k)
            dyy += _ch_eval(wyy, xy, comp.center, k)
        else:
            raise TypeError(f"unsupported field component {comp!r}")
    return val, dxx, dyy


def helmholtz_residual(field_fn: Callable, p, f: float, medium: Medium | None = None) -> np.ndarray:
    """``P + (c/omega)^2 (P_xx + P_yy)`` for a field supplying its own second derivatives.

    ``field_fn(xy)`` must return ``(P, P_xx, P_yy)`` at the ``(n, 2)`` positions.
    """
    medium = medium or Medium()
    xy = as_positions(p)
    inv_k2 = 1.0 / medium.wavenumber(f) ** 2
    val, dxx, dyy = field_fn(xy)
    return np.asarray(val) + inv_k2 * (np.asarray(dxx) + np.asarray(dyy))


def model_helmholtz_residual(model: FieldModel, p, f: float) -> np.ndarray:
    return helmholtz_residual(lambda xy: pressure_second_derivatives(model, xy, f), p, f, model.medium)


# --- measurement simulation -------------------------------------------------

def noise_rng(seed: int) -> np.random.Generator:
    """Counter-based generator so independent cells can be drawn in any order."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


def add_noise(snap: PressureSnapshot, snr_db: float, seed: int, convention: str = "total") -> PressureSnapshot:
    """Add circular complex white Gaussian noise at the requested SNR.

    Parameters
    ----------
    snr_db : float
        Target SNR; ``math.inf`` returns the snapshot unchanged.
    convention : {"total", "per_microphone"}
        ``"total"`` scales one noise variance to the energy of the whole
        snapshot; ``"per_microphone"`` scales each microphone to its own power.
    """
    if snr_db == np.inf:
        return snap
    if len(snap) == 0:
        raise ValueError("cannot add noise to an empty snapshot")
    power = np.abs(snap.pressures) ** 2
    if not np.sum(power) > 0:
        raise ValueError("cannot set an SNR on a zero-energy snapshot")
    if convention == "total":
        var = np.full(len(snap), np.mean(power) / 10 ** (snr_db / 10))
    elif convention == "per_microphone":
        var = power / 10 ** (snr_db / 10)
    else:
        raise ValueError(f"unknown SNR convention {convention!r}")
    rng = noise_rng(seed)
    z = rng.standard_normal((len(snap), 2))
    noise = np.sqrt(var / 2) * (z[:, 0] + 1j * z[:, 1])
    return replace(snap, pressures=snap.pressures + noise,
                   provenance=f"{snap.provenance};noise(snr_db={snr_db:g},seed={seed},{convention})")


def synthesize(model: FieldModel, layout: ArrayLayout, f: float, which="boundary") -> PressureSnapshot:
    """Evaluate ``model`` at a subset of ``layout`` positions."""
    idx = layout.select(which)
    if idx.size == 0:
        raise ValueError("no positions selected for synthesis")
    pos = layout.positions[idx]
    return PressureSnapshot(f, pos, pressure(model, pos, f),
                            provenance=f"synth:{model.describe()};f={f:g};layout={layout.kind}")
