"""Dense complex matrix kernels: product, SVD and thresholded pseudo-inverse.

Matrices are plain 2-D ``complex128`` numpy arrays.  The SVD is a one-sided
(Hestenes) Jacobi iteration.  Column pairs are visited in round-robin
tournament order so that every step rotates ``n/2`` disjoint pairs at once
with vectorised numpy operations.  Summation order is fixed by construction,
so results are bit-reproducible for identical inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_DIM = 2048
MAX_SWEEPS = 60


class SvdConvergenceError(RuntimeError):
    """Raised when Jacobi sweeps do not converge within the budget."""


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``a = u @ diag(sigma) @ v.conj().T``."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return matmul(self.u * self.sigma, self.v.conj().T)


def as_cmatrix(a) -> np.ndarray:
    """Validate and convert ``a`` to a finite 2-D complex128 array."""
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    """Complex matrix product with a fixed (pairwise, along k) summation order.

    BLAS-backed ``@`` may reorder the accumulation depending on threading, so
    this forms the elementwise products explicitly and reduces with
    ``np.sum``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    vec = b.ndim == 1
    if vec:
        b = b[:, None]
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    out = np.empty((a.shape[0], b.shape[1]), dtype=complex)
    # chunk rows to bound the temporary (rows x k x cols)
    step = max(1, 4_000_000 // max(1, a.shape[1] * b.shape[1]))
    for i in range(0, a.shape[0], step):
        out[i:i + step] = np.sum(a[i:i + step, :, None] * b[None, :, :], axis=1)
    return out[:, 0] if vec else out


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings of a round-robin tournament covering every (p, q) once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p = np.array(players[: m // 2])
        q = np.array(players[m // 2:][::-1])
        keep = (p < n) & (q < n)
        lo = np.minimum(p, q)[keep]
        hi = np.maximum(p, q)[keep]
        rounds.append((lo, hi))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _jacobi_tall(a: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One-sided Jacobi on a matrix with rows >= cols."""
    m, n = a.shape
    b = a.copy()
    v = np.eye(n, dtype=complex)
    rounds = _round_robin(n)
    for _ in range(MAX_SWEEPS):
        rotated = False
        for p, q in rounds:
            if p.size == 0:
                continue
            bp, bq = b[:, p], b[:, q]
            alpha = np.sum(bp.real**2 + bp.imag**2, axis=0)
            beta = np.sum(bq.real**2 + bq.imag**2, axis=0)
            gamma = np.sum(bp.conj() * bq, axis=0)
            g = np.abs(gamma)
            active = g > tol * np.sqrt(alpha * beta)
            if not np.any(active):
                continue
            rotated = True
            p, q = p[active], q[active]
            alpha, beta, gamma, g = alpha[active], beta[active], gamma[active], g[active]
            phase = gamma / g
            zeta = (beta - alpha) / (2.0 * g)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for mat in (b, v):
                xp = mat[:, p]
                xq = mat[:, q] * phase.conj()
                mat[:, p] = c * xp - s * xq
                mat[:, q] = s * xp + c * xq
        if not rotated:
            break
    else:
        raise SvdConvergenceError(f"Jacobi SVD did not converge in {MAX_SWEEPS} sweeps")

    sigma = np.sqrt(np.sum(b.real**2 + b.imag**2, axis=0))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    b = b[:, order]
    v = v[:, order]
    u = np.zeros((m, n), dtype=complex)
    tiny = sigma[0] * m * np.finfo(float).eps if sigma.size and sigma[0] > 0 else 0.0
    good = sigma > tiny
    u[:, good] = b[:, good] / sigma[good]
    sigma = np.where(good, sigma, 0.0)
    if not np.all(good):
        u = _complete_basis(u, good)
    return u, sigma, v


def _complete_basis(u: np.ndarray, good: np.ndarray) -> np.ndarray:
    """Fill the columns of ``u`` not flagged ``good`` with an orthonormal complement."""
    m = u.shape[0]
    basis = [u[:, j] for j in range(u.shape[1]) if good[j]]
    fill = []
    e = 0
    for j in range(u.shape[1]):
        if good[j]:
            continue
        while True:
            cand = np.zeros(m, dtype=complex)
            cand[e % m] = 1.0
            e += 1
            # modified Gram-Schmidt, twice for stability
            for _ in range(2):
                for w in basis + fill:
                    cand = cand - w * np.vdot(w, cand)
            nrm = np.linalg.norm(cand)
            if nrm > 1e-8:
                fill.append(cand / nrm)
                u[:, j] = fill[-1]
                break
    return u


def svd(a) -> SvdFactors:
    """Thin singular value decomposition of a complex matrix.

    Parameters
    ----------
    a : array_like, shape (m, n)
        Finite complex matrix with ``m, n <= 2048``.

    Returns
    -------
    SvdFactors
        ``u`` (m x k), ``sigma`` (k, nonincreasing) and ``v`` (n x k),
        ``k = min(m, n)``.
    """
    a = as_cmatrix(a)
    m, n = a.shape
    if m > MAX_DIM or n > MAX_DIM:
        raise ValueError(f"matrix too large for dense SVD: {a.shape}")
    tol = max(m, n) * np.finfo(float).eps
    if m >= n:
        u, s, v = _jacobi_tall(a, tol)
    else:
        v, s, u = _jacobi_tall(a.conj().T, tol)
    return SvdFactors(u=u, sigma=s, v=v)


def pinv_from_factors(f: SvdFactors, rel_tol: float) -> np.ndarray:
    if f.sigma.size == 0 or f.sigma[0] == 0.0:
        return np.zeros((f.v.shape[0], f.u.shape[0]), dtype=complex)
    keep = f.sigma > rel_tol * f.sigma[0]
    inv = np.zeros_like(f.sigma)
    inv[keep] = 1.0 / f.sigma[keep]
    return matmul(f.v * inv, f.u.conj().T)


def pinv(a, rel_tol: float = 1e-6) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with relative singular-value threshold.

    Singular values at or below ``rel_tol * sigma_max`` are treated as zero.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    return pinv_from_factors(svd(a), rel_tol)
