"""Cylinder-harmonic decomposition reconstructor.

Weights are fitted by pseudo-inversion of the harmonic matrix evaluated at the
boundary microphones, then the truncated expansion is evaluated anywhere
inside the region.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg, specfun
from .field import Medium, PressureSnapshot, ch_basis, ch_shift_weights
from .geometry import as_positions, to_polar

log = logging.getLogger(__name__)

DEFAULT_REL_TOL = 1e-6


@dataclass(frozen=True)
class ChWeights:
    order_N: int
    weights: np.ndarray
    frequency_hz: float
    medium: Medium = field(default_factory=Medium)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex).ravel()
        if len(w) != 2 * self.order_N + 1:
            raise ValueError(f"expected {2 * self.order_N + 1} weights, got {len(w)}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "weights", w)

    @property
    def k(self) -> float:
        return self.medium.wavenumber(self.frequency_hz)

    def to_json(self) -> str:
        return json.dumps({
            "order_N": self.order_N,
            "frequency_hz": self.frequency_hz,
            "c": self.medium.c,
            "weights_re": self.weights.real.tolist(),
            "weights_im": self.weights.imag.tolist(),
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ChWeights":
        d = json.loads(text)
        w = np.asarray(d["weights_re"]) + 1j * np.asarray(d["weights_im"])
        return cls(d["order_N"], w, d["frequency_hz"], Medium(d["c"]))


def truncation_order(f: float, r: float, medium: Medium | None = None) -> int:
    """``ceil(2 pi f r / c)``."""
    if not (f > 0 and r > 0):
        raise ValueError(f"frequency and radius must be positive, got f={f}, r={r}")
    c = (medium or Medium()).c
    # guard against 2.0000000000000004 style round-up
    return int(math.ceil(2 * math.pi * f * r / c - 1e-12))


def build_ch_matrix(r, phi, f: float, N: int, medium: Medium | None = None) -> np.ndarray:
    """Q x (2N+1) matrix of ``J_n(k r_q) exp(-i n phi_q)``, columns n = -N..N."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if r.size < 1 or r.shape != phi.shape:
        raise ValueError("need at least one position with matching r and phi")
    if N < 0:
        raise ValueError("order must be non-negative")
    k = (medium or Medium()).wavenumber(f)
    return ch_basis(N, r, phi, k)


def fit_weights(snap: PressureSnapshot, N: int, rel_tol: float = DEFAULT_REL_TOL,
                medium: Medium | None = None) -> ChWeights:
    """Least-squares harmonic weights ``pinv(J) @ P_M``."""
    medium = medium or Medium()
    pos = snap.positions
    if len(pos) == 0:
        raise ValueError("empty snapshot")
    if np.all(np.ptp(pos, axis=0) == 0):
        raise ValueError("degenerate geometry: all microphone positions coincide")
    if len(pos) < 2 * N + 1:
        log.warning("only %d measurements for %d harmonic weights", len(pos), 2 * N + 1)
    r, phi = to_polar(pos)
    J = build_ch_matrix(r, phi, snap.frequency_hz, N, medium)
    A = linalg.matmul(linalg.pinv(J, rel_tol), snap.pressures)
    return ChWeights(N, A, snap.frequency_hz, medium)


def _polar_args(p, phi=None):
    if phi is None:
        return to_polar(as_positions(p))
    return np.atleast_1d(np.asarray(p, dtype=float)), np.atleast_1d(np.asarray(phi, dtype=float))


def ch_pressure(w: ChWeights, r, phi=None) -> np.ndarray:
    """Evaluate the expansion at polar points ``(r, phi)``, or Cartesian points if ``phi`` is omitted."""
    r, phi = _polar_args(r, phi)
    return ch_basis(w.order_N, r, phi, w.k) @ w.weights


def ch_radial_gradient(w: ChWeights, r, phi=None) -> np.ndarray:
    """``(omega/c) sum A_n J'_n(k r) exp(-i n phi)``."""
    r, phi = _polar_args(r, phi)
    N, k = w.order_N, w.k
    table = specfun.bessel_j_table(N + 1, k * r)
    orders = np.arange(-N, N + 1)
    m = np.abs(orders)
    lower = np.where(m[:, None] > 0, table[np.maximum(m - 1, 0)], -table[1])
    dj = 0.5 * (lower - table[m + 1])
    dj = dj * np.where((orders < 0) & (orders % 2 == 1), -1.0, 1.0)[:, None]
    basis = dj.T * np.exp(-1j * np.outer(phi, orders))
    return k * (basis @ w.weights)


def ch_cartesian_gradient(w: ChWeights, p) -> tuple[np.ndarray, np.ndarray]:
    """Radial gradient projected onto x and y (tangential term omitted).

    This reproduces the baseline formula, which keeps only ``dP/dr``; see
    :func:`ch_exact_gradient` for the full Cartesian gradient.
    """
    r, phi = to_polar(as_positions(p))
    g = ch_radial_gradient(w, r, phi)
    return g * np.cos(phi), g * np.sin(phi)


def ch_exact_gradient(w: ChWeights, p) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``(dP/dx, dP/dy)`` of the truncated expansion, valid at the origin."""
    r, phi = to_polar(as_positions(p))
    wx, wy = ch_shift_weights(w.weights, w.k)
    basis = ch_basis(w.order_N + 1, r, phi, w.k)
    return basis @ wx, basis @ wy


@dataclass
class ChReconstructor:
    """Fit once, evaluate pressure and gradients at arbitrary points."""

    weights: ChWeights

    @classmethod
    def fit(cls, snap: PressureSnapshot, N: int, rel_tol: float = DEFAULT_REL_TOL,
            medium: Medium | None = None) -> "ChReconstructor":
        return cls(fit_weights(snap, N, rel_tol, medium))

    def pressure(self, p) -> np.ndarray:
        return ch_pressure(self.weights, p)

    def radial_gradient(self, p) -> np.ndarray:
        return ch_radial_gradient(self.weights, p)

    def gradient(self, p, exact: bool = False) -> tuple[np.ndarray, np.ndarray]:
        return ch_exact_gradient(self.weights, p) if exact else ch_cartesian_gradient(self.weights, p)
