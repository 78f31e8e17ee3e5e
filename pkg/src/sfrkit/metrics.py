"""Reconstruction error and finite-difference gradient ground truth."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

QUANTITIES = ("pressure", "gradient_radial", "gradient_x", "gradient_y")


@dataclass
class ErrorReport:
    error_db: float
    num_points: int
    part: str
    method: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.part not in QUANTITIES:
            raise ValueError(f"unknown quantity {self.part!r}")
        if self.num_points < 1:
            raise ValueError("an error report needs at least one point")


def reconstruction_error(truth, estimate) -> float:
    """Energy-normalised squared error in dB.

    ``10 log10(sum |P - P_hat|^2 / sum |P|^2)``.  A perfect reconstruction
    returns ``-inf``.
    """
    truth = np.asarray(truth, dtype=complex).ravel()
    estimate = np.asarray(estimate, dtype=complex).ravel()
    if truth.size == 0 or truth.size != estimate.size:
        raise ValueError(f"length mismatch or empty input: {truth.size} vs {estimate.size}")
    ref = np.sum(np.abs(truth) ** 2)
    if not ref > 0:
        raise ValueError("ground truth has zero energy")
    err = np.sum(np.abs(truth - estimate) ** 2)
    if err == 0:
        return -np.inf
    return float(10 * np.log10(err / ref))


def fd_radial_gradient_truth(p_outer, p_inner, r1: float, r2: float) -> np.ndarray:
    """Radial gradient between two circles by a difference quotient.

    Angles must be matched element by element.  The value is attributed to
    the mid radius ``(r1 + r2) / 2``.
    """
    if r1 == r2:
        raise ValueError("the two radii must differ")
    p_outer = np.asarray(p_outer, dtype=complex)
    p_inner = np.asarray(p_inner, dtype=complex)
    if p_outer.shape != p_inner.shape:
        raise ValueError("outer and inner pressures must have matching shapes")
    return (p_outer - p_inner) / (r1 - r2)


def mid_radius(r1: float, r2: float) -> float:
    return 0.5 * (r1 + r2)
