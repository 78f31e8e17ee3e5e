"""Virtual-source SVD reconstructor.

The known loudspeaker is replaced by a small lattice of free-field virtual
sources.  Boundary pressures are mapped to virtual-source strengths through
the SVD of the source-to-microphone transfer matrix and propagated to the
evaluation points through the source-to-evaluation transfer matrix.
Gradients are central differences of the reconstructed pressure.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .field import Medium, free_field_kernel
from .geometry import as_positions, to_polar

DEFAULT_REL_TOL = 1e-3
DEFAULT_DELTA = 1e-3
DEFAULT_HALF_SIDE = 0.05
DEFAULT_SPACING = 0.01
MIN_RECEIVER_DISTANCE = 0.05

KERNELS = ("line2d", "point3d")


@dataclass(frozen=True)
class VirtualSourceCluster:
    center: np.ndarray
    offsets: np.ndarray
    kernel: str = "line2d"

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(2))
        object.__setattr__(self, "offsets", as_positions(self.offsets))

    @property
    def positions(self) -> np.ndarray:
        return self.center + self.offsets

    def __len__(self) -> int:
        return len(self.offsets)


def virtual_source_grid(center, half_side: float = DEFAULT_HALF_SIDE, spacing: float = DEFAULT_SPACING,
                        kernel: str = "line2d") -> VirtualSourceCluster:
    """Square lattice of virtual sources centred on the loudspeaker.

    The defaults give an 11 x 11 lattice (121 sources) over a 0.1 m square.
    """
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    if not half_side >= spacing:
        raise ValueError("half_side must be at least one spacing")
    k = int(np.floor(half_side / spacing + 1e-9))
    ticks = spacing * np.arange(-k, k + 1)
    gx, gy = np.meshgrid(ticks, ticks[::-1])
    return VirtualSourceCluster(center, np.column_stack([gx.ravel(), gy.ravel()]), kernel)


def build_transfer_matrix(cluster: VirtualSourceCluster, receivers, f: float,
                          medium: Medium | None = None,
                          min_distance: float = MIN_RECEIVER_DISTANCE) -> np.ndarray:
    """(#receivers) x (#sources) matrix of free-field transfer functions."""
    medium = medium or Medium()
    rx = as_positions(receivers)
    src = cluster.positions
    d = np.hypot(rx[:, None, 0] - src[None, :, 0], rx[:, None, 1] - src[None, :, 1])
    if np.any(d < min_distance):
        raise ValueError(f"a receiver lies within {min_distance} m of the virtual-source cluster")
    return free_field_kernel(d, medium.wavenumber(f), cluster.kernel)


def svd_reconstruct(h_sm, h_sv, p_m, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Propagate microphone pressures to evaluation points.

    Computes ``U_SV S_SV V_SV^H  V_SM S_SM^+ U_SM^H  P_M`` from the thin SVDs
    of both transfer matrices; ``S_SM^+`` drops singular values at or below
    ``rel_tol * max``.
    """
    h_sm = linalg.as_cmatrix(h_sm)
    h_sv = linalg.as_cmatrix(h_sv)
    p_m = np.asarray(p_m, dtype=complex).ravel()
    if h_sm.shape[0] != p_m.size:
        raise ValueError(f"H_SM has {h_sm.shape[0]} rows but {p_m.size} pressures were given")
    if h_sm.shape[1] != h_sv.shape[1]:
        raise ValueError("H_SM and H_SV must share the virtual-source dimension")
    strengths = source_strengths(linalg.svd(h_sm), p_m, rel_tol)
    sv = linalg.svd(h_sv)
    return linalg.matmul(sv.u * sv.sigma, linalg.matmul(sv.v.conj().T, strengths))


def source_strengths(sm: linalg.SvdFactors, p_m: np.ndarray, rel_tol: float) -> np.ndarray:
    """``V_SM S_SM^+ U_SM^H P_M``: the virtual-source strengths."""
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    inv = np.zeros_like(sm.sigma)
    if sm.sigma.size and sm.sigma[0] > 0:
        keep = sm.sigma > rel_tol * sm.sigma[0]
        inv[keep] = 1.0 / sm.sigma[keep]
    return linalg.matmul(sm.v * inv, linalg.matmul(sm.u.conj().T, p_m))


@dataclass
class SvdReconstructor:
    """Holds the microphone-side factorisation; evaluates anywhere in the region."""

    cluster: VirtualSourceCluster
    mic_positions: np.ndarray
    p_m: np.ndarray
    f: float
    rel_tol: float = DEFAULT_REL_TOL
    medium: Medium = field(default_factory=Medium)

    def __post_init__(self):
        self.mic_positions = as_positions(self.mic_positions)
        self.p_m = np.asarray(self.p_m, dtype=complex).ravel()
        self.h_sm = build_transfer_matrix(self.cluster, self.mic_positions, self.f, self.medium)
        if self.h_sm.shape[0] != self.p_m.size:
            raise ValueError("one pressure per microphone is required")

    def pressure(self, p) -> np.ndarray:
        h_sv = build_transfer_matrix(self.cluster, p, self.f, self.medium)
        return svd_reconstruct(self.h_sm, h_sv, self.p_m, self.rel_tol)

    def gradient(self, p, delta: float = DEFAULT_DELTA) -> tuple[np.ndarray, np.ndarray]:
        """Central differences at ``+-delta`` along x and y, one batched reconstruction."""
        if not delta > 0:
            raise ValueError(f"delta must be positive, got {delta}")
        xy = as_positions(p)
        n = len(xy)
        shifts = np.array([[delta, 0.0], [-delta, 0.0], [0.0, delta], [0.0, -delta]])
        stacked = (xy[None, :, :] + shifts[:, None, :]).reshape(-1, 2)
        vals = self.pressure(stacked).reshape(4, n)
        return (vals[0] - vals[1]) / (2 * delta), (vals[2] - vals[3]) / (2 * delta)

    def radial_gradient(self, p, delta: float = DEFAULT_DELTA) -> np.ndarray:
        """``gx cos(phi) + gy sin(phi)``."""
        xy = as_positions(p)
        gx, gy = self.gradient(xy, delta)
        _, phi = to_polar(xy)
        return gx * np.cos(phi) + gy * np.sin(phi)
