"""Compact acoustics-informed networks (cAINN / dAINN).

Real-valued tanh MLPs map ``(x, y)`` in metres to the real and imaginary
parts of the pressure.  Training minimises a boundary data loss plus the mean
squared Helmholtz residual ``N + (c/omega)^2 (N_xx + N_yy)`` over collocation
points, using full-batch Adam.

Input derivatives are propagated forward layer by layer as five stacked
channels ``(value, d/dx, d/dy, d2/dx2, d2/dy2)``; parameter gradients are
obtained by a hand-written reverse pass over those channels.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .ch import truncation_order
from .field import Medium, PressureSnapshot
from .geometry import as_positions, to_polar

log = logging.getLogger(__name__)

DESIGNS = ("cAINN", "dAINN")
PARTS = ("re", "im")
DIVERGENCE_FACTOR = 1e6

# channel layout of the stacked forward quantities
VAL, DX, DY, DXX, DYY = range(5)


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, part: str, loss: float):
        super().__init__(f"training of the {part} network diverged at epoch {epoch} (loss={loss!r})")
        self.epoch = epoch
        self.part = part
        self.loss = loss


@dataclass(frozen=True)
class NetworkArch:
    """One network: 2 inputs, ``hidden_layers`` tanh layers, linear output."""

    design: str
    hidden_layers: int
    neurons_per_layer: int
    n_outputs: int

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}")
        if self.hidden_layers < 1 or self.neurons_per_layer < 1:
            raise ValueError("need at least one hidden layer with one neuron")
        if self.n_outputs not in (1, 2):
            raise ValueError("a network has one or two outputs")

    @property
    def layer_sizes(self) -> list[int]:
        return [2] + [self.neurons_per_layer] * self.hidden_layers + [self.n_outputs]

    @property
    def n_params(self) -> int:
        s = self.layer_sizes
        return sum(a * b + b for a, b in zip(s[:-1], s[1:]))


def default_hidden_layers(f: float) -> int:
    return 1 if f <= 1000 else 2


def make_arch(design: str, f: float, r: float, hidden_layers: Optional[int] = None,
              medium: Medium | None = None, neurons: Optional[int] = None) -> NetworkArch:
    """Architecture from the harmonic-order rule.

    cAINN: one network, two outputs, ``2N`` neurons per layer.  dAINN: the
    returned arch describes one of the two identical single-output halves
    with ``N`` neurons per layer.
    """
    n = truncation_order(f, r, medium)
    hidden = default_hidden_layers(f) if hidden_layers is None else hidden_layers
    if design == "cAINN":
        return NetworkArch("cAINN", hidden, neurons or 2 * n, 2)
    if design == "dAINN":
        return NetworkArch("dAINN", hidden, neurons or n, 1)
    raise ValueError(f"unknown design {design!r}")


@dataclass
class MlpParams:
    """Flat parameter vector plus per-layer views ``(W, b)``, ``W`` of shape (fan_in, fan_out)."""

    arch: NetworkArch
    flat: np.ndarray
    seed: int = 0

    def __post_init__(self):
        self.flat = np.asarray(self.flat, dtype=float)
        if self.flat.shape != (self.arch.n_params,):
            raise ValueError(f"expected {self.arch.n_params} parameters, got {self.flat.shape}")

    def layers(self, flat: Optional[np.ndarray] = None) -> list[tuple[np.ndarray, np.ndarray]]:
        return _unpack(self.arch, self.flat if flat is None else flat)

    def copy(self) -> "MlpParams":
        return MlpParams(self.arch, self.flat.copy(), self.seed)

    def digest(self) -> str:
        return hashlib.sha256(self.flat.tobytes()).hexdigest()

    def to_dict(self) -> dict:
        return {"arch": _arch_dict(self.arch), "seed": self.seed, "flat": self.flat.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "MlpParams":
        return cls(NetworkArch(**d["arch"]), np.asarray(d["flat"], dtype=float), d["seed"])


def _arch_dict(arch: NetworkArch) -> dict:
    return {"design": arch.design, "hidden_layers": arch.hidden_layers,
            "neurons_per_layer": arch.neurons_per_layer, "n_outputs": arch.n_outputs}


def _unpack(arch: NetworkArch, flat: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    out = []
    pos = 0
    s = arch.layer_sizes
    for a, b in zip(s[:-1], s[1:]):
        W = flat[pos:pos + a * b].reshape(a, b)
        pos += a * b
        out.append((W, flat[pos:pos + b]))
        pos += b
    return out


@dataclass
class AinnModel:
    """A trained reconstructor: one cAINN network, or the (re, im) dAINN pair."""

    design: str
    nets: tuple

    @property
    def real_net(self) -> MlpParams:
        return self.nets[0]

    @property
    def imag_net(self) -> MlpParams:
        return self.nets[-1]


# --- initialisation and forward passes -------------------------------------

def xavier_init(arch: NetworkArch, seed: int) -> MlpParams:
    """Glorot-uniform weights ``U(-sqrt(6/(fan_in+fan_out)), +...)``, zero biases."""
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    flat = np.zeros(arch.n_params)
    p = MlpParams(arch, flat, int(seed))
    for W, b in p.layers():
        lim = np.sqrt(6.0 / (W.shape[0] + W.shape[1]))
        W[...] = rng.uniform(-lim, lim, size=W.shape)
        b[...] = 0.0
    return p


def _check_inputs(p) -> np.ndarray:
    xy = np.asarray(p, dtype=float)
    if xy.ndim == 1:
        xy = xy[None, :]
    if xy.ndim != 2 or xy.shape[1] != 2 or not np.all(np.isfinite(xy)):
        raise ValueError("network inputs must be finite (n, 2) coordinates")
    return xy


def forward(params: MlpParams, p) -> np.ndarray:
    """Network outputs, shape (n, n_outputs)."""
    a = _check_inputs(p)
    layers = params.layers()
    for W, b in layers[:-1]:
        a = np.tanh(a @ W + b)
    W, b = layers[-1]
    return a @ W + b


def _forward_ext(layers, xy: np.ndarray):
    """Stacked forward pass; returns output channels (5, n, out) and the per-layer cache."""
    n = len(xy)
    A = np.zeros((5, n, 2))
    A[VAL] = xy
    A[DX, :, 0] = 1.0
    A[DY, :, 1] = 1.0
    cache = []
    last = len(layers) - 1
    for i, (W, b) in enumerate(layers):
        Z = A @ W
        Z[VAL] += b
        if i == last:
            cache.append((A, None, None, None, None))
            return Z, cache
        t = np.tanh(Z[VAL])
        s1 = 1.0 - t * t
        s2 = -2.0 * t * s1
        nxt = np.empty_like(Z)
        nxt[VAL] = t
        nxt[DX] = s1 * Z[DX]
        nxt[DY] = s1 * Z[DY]
        nxt[DXX] = s2 * Z[DX] * Z[DX] + s1 * Z[DXX]
        nxt[DYY] = s2 * Z[DY] * Z[DY] + s1 * Z[DYY]
        cache.append((A, Z, t, s1, s2))
        A = nxt


def _backward_ext(layers, cache, G: np.ndarray, grad_flat: np.ndarray) -> None:
    """Reverse pass; ``G`` holds dL/d(output channels).  Writes into ``grad_flat``."""
    offsets = []
    pos = 0
    for W, b in layers:
        offsets.append(pos)
        pos += W.size + b.size
    for i in range(len(layers) - 1, -1, -1):
        W, b = layers[i]
        A, Z, t, s1, s2 = cache[i]
        if Z is None:
            dZ = G
        else:
            s3 = s1 * (4.0 * t * t - 2.0 * s1)  # d(s2)/dz
            dZ = np.empty_like(G)
            dZ[VAL] = (G[VAL] * s1
                       + s2 * (G[DX] * Z[DX] + G[DY] * Z[DY] + G[DXX] * Z[DXX] + G[DYY] * Z[DYY])
                       + s3 * (G[DXX] * Z[DX] * Z[DX] + G[DYY] * Z[DY] * Z[DY]))
            dZ[DX] = G[DX] * s1 + 2.0 * G[DXX] * s2 * Z[DX]
            dZ[DY] = G[DY] * s1 + 2.0 * G[DYY] * s2 * Z[DY]
            dZ[DXX] = G[DXX] * s1
            dZ[DYY] = G[DYY] * s1
        fan_in, fan_out = W.shape
        o = offsets[i]
        grad_flat[o:o + W.size] = (A.reshape(-1, fan_in).T @ dZ.reshape(-1, fan_out)).ravel()
        grad_flat[o + W.size:o + W.size + fan_out] = dZ[VAL].sum(axis=0)
        if i:
            G = dZ @ W.T


@dataclass
class Derivatives:
    value: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray
    hess_xx: np.ndarray
    hess_yy: np.ndarray


def forward_with_derivatives(params: MlpParams, p) -> Derivatives:
    """Outputs and their exact first and pure second input derivatives, each (n, n_outputs)."""
    xy = _check_inputs(p)
    Z, _ = _forward_ext(params.layers(), xy)
    return Derivatives(Z[VAL], Z[DX], Z[DY], Z[DXX], Z[DYY])


# --- losses ------------------------------------------------------------------

def _part_column(params: MlpParams, part: str) -> int:
    if part not in PARTS:
        raise ValueError(f"part must be 're' or 'im', got {part!r}")
    return 0 if params.arch.n_outputs == 1 else PARTS.index(part)


def _targets(snap: PressureSnapshot, part: str) -> np.ndarray:
    return snap.pressures.real if part == "re" else snap.pressures.imag


def data_loss(params: MlpParams, boundary: PressureSnapshot, part: str) -> float:
    """Mean squared error between one output and the matching part of the measurements."""
    if len(boundary) == 0:
        raise ValueError("empty snapshot")
    col = _part_column(params, part)
    out = forward(params, boundary.positions)[:, col]
    return float(np.mean((_targets(boundary, part) - out) ** 2))


def inverse_k2(f: float, medium: Medium | None = None) -> float:
    return 1.0 / (medium or Medium()).wavenumber(f) ** 2


def pde_loss(params: MlpParams, colloc, f: float, part: str, medium: Medium | None = None) -> float:
    """Mean squared Helmholtz residual of one output over the collocation points."""
    xy = _check_inputs(colloc)
    if len(xy) == 0:
        raise ValueError("empty collocation set")
    col = _part_column(params, part)
    d = forward_with_derivatives(params, xy)
    res = d.value[:, col] + inverse_k2(f, medium) * (d.hess_xx[:, col] + d.hess_yy[:, col])
    return float(np.mean(res ** 2))


@dataclass
class LossBreakdown:
    data_re: float
    pde_re: float
    data_im: float
    pde_im: float
    loss_weights: tuple = (1.0, 1.0)

    @property
    def real(self) -> float:
        wd, wp = self.loss_weights
        return wd * self.data_re + wp * self.pde_re

    @property
    def imag(self) -> float:
        wd, wp = self.loss_weights
        return wd * self.data_im + wp * self.pde_im

    @property
    def total(self) -> float:
        return self.real + self.imag


def total_loss(model: Union[MlpParams, AinnModel, tuple], data: PressureSnapshot, colloc, f: float,
               loss_weights=(1.0, 1.0), medium: Medium | None = None) -> LossBreakdown:
    """All four loss terms.  A lone network is treated as cAINN, a pair as (re, im) dAINN."""
    if isinstance(model, AinnModel):
        nets = model.nets
    elif isinstance(model, MlpParams):
        nets = (model,)
    else:
        nets = tuple(model)
    re_net, im_net = nets[0], nets[-1]
    return LossBreakdown(
        data_loss(re_net, data, "re"), pde_loss(re_net, colloc, f, "re", medium),
        data_loss(im_net, data, "im"), pde_loss(im_net, colloc, f, "im", medium),
        tuple(float(w) for w in loss_weights))


class _Objective:
    """Loss and flat gradient for one network against fixed data and collocation points."""

    def __init__(self, arch: NetworkArch, data_xy, targets, colloc, inv_k2: float, loss_weights=(1.0, 1.0)):
        self.arch = arch
        self.xy = np.vstack([as_positions(data_xy), as_positions(colloc)])
        self.q = len(data_xy)
        self.d = len(colloc)
        if self.q == 0 or self.d == 0:
            raise ValueError("need at least one data point and one collocation point")
        t = np.asarray(targets, dtype=float)
        self.targets = t.reshape(self.q, arch.n_outputs)
        self.inv_k2 = inv_k2
        self.wd, self.wp = (float(w) for w in loss_weights)
        self._grad = np.empty(arch.n_params)

    def __call__(self, flat: np.ndarray):
        """Return (data losses per output, pde losses per output, total, gradient copy)."""
        layers = _unpack(self.arch, flat)
        Z, cache = _forward_ext(layers, self.xy)
        q = self.q
        rd = Z[VAL, :q] - self.targets
        res = Z[VAL, q:] + self.inv_k2 * (Z[DXX, q:] + Z[DYY, q:])
        ld = np.mean(rd * rd, axis=0)
        lp = np.mean(res * res, axis=0)
        G = np.zeros_like(Z)
        G[VAL, :q] = (2.0 * self.wd / q) * rd
        gr = (2.0 * self.wp / self.d) * res
        G[VAL, q:] = gr
        G[DXX, q:] = self.inv_k2 * gr
        G[DYY, q:] = G[DXX, q:]
        _backward_ext(layers, cache, G, self._grad)
        total = float(self.wd * ld.sum() + self.wp * lp.sum())
        return ld, lp, total, self._grad.copy()


def _objective_for(params: MlpParams, data: PressureSnapshot, colloc, f: float, part: Optional[str],
                   loss_weights, medium) -> _Objective:
    if params.arch.n_outputs == 2:
        if part is not None:
            raise ValueError("a coupled network is trained on both parts; use part=None")
        targets = np.column_stack([data.pressures.real, data.pressures.imag])
    else:
        if part not in PARTS:
            raise ValueError("a single-output network needs part='re' or part='im'")
        targets = _targets(data, part)
    return _Objective(params.arch, data.positions, targets, colloc, inverse_k2(f, medium), loss_weights)


def param_gradient(params: MlpParams, data: PressureSnapshot, colloc, f: float, part: Optional[str] = None,
                   loss_weights=(1.0, 1.0), medium: Medium | None = None) -> np.ndarray:
    """Exact gradient of the network's loss with respect to its flat parameter vector.

    For a coupled (two-output) network the loss is the sum of all four
    terms; for a single-output network, ``part`` picks the real or imaginary
    data and the loss is that part's data + PDE term.
    """
    obj = _objective_for(params, data, colloc, f, part, loss_weights, medium)
    return obj(params.flat)[3]


def network_loss(params: MlpParams, data: PressureSnapshot, colloc, f: float, part: Optional[str] = None,
                 loss_weights=(1.0, 1.0), medium: Medium | None = None) -> float:
    """Scalar loss that :func:`param_gradient` differentiates."""
    obj = _objective_for(params, data, colloc, f, part, loss_weights, medium)
    return obj(params.flat)[2]


# --- optimiser and training ------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 20_000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    collocation_spacing: float = 0.01
    loss_weights: tuple = (1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        object.__setattr__(self, "loss_weights", tuple(float(w) for w in self.loss_weights))


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n))


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray, t: int,
              cfg: TrainConfig) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns new arrays, inputs are untouched."""
    if t < 1:
        raise ValueError("Adam step index starts at 1")
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    m = b1 * state.m + (1.0 - b1) * grad
    v = b2 * state.v + (1.0 - b2) * grad * grad
    m_hat = m / (1.0 - b1 ** t)
    v_hat = v / (1.0 - b2 ** t)
    new = params - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
    return new, AdamState(m, v)


def _fit_network(params: MlpParams, obj: _Objective, cfg: TrainConfig, label: str) -> tuple[MlpParams, np.ndarray]:
    """Full-batch Adam; history rows are (data, pde) losses before each update."""
    flat = params.flat.copy()
    state = AdamState.zeros(flat.size)
    hist = np.empty((cfg.epochs, 2 * obj.arch.n_outputs))
    initial = None
    for epoch in range(1, cfg.epochs + 1):
        ld, lp, total, grad = obj(flat)
        if initial is None:
            initial = total
        if not np.isfinite(total) or total > DIVERGENCE_FACTOR * max(initial, 1e-300):
            raise TrainingDiverged(epoch, label, total)
        hist[epoch - 1, 0::2] = ld
        hist[epoch - 1, 1::2] = lp
        flat, state = adam_step(state, flat, grad, epoch, cfg)
    if not np.all(np.isfinite(flat)):
        raise TrainingDiverged(cfg.epochs, label, float("nan"))
    return MlpParams(params.arch, flat, params.seed), hist


@dataclass
class TrainResult:
    model: AinnModel
    history: np.ndarray  # (epochs, 4): data_re, pde_re, data_im, pde_im
    config: TrainConfig

    def final_losses(self) -> np.ndarray:
        return self.history[-1] if len(self.history) else np.full(4, np.nan)


def network_seeds(seed: int) -> tuple[int, int]:
    """Independent initialisation seeds for the real and imaginary dAINN halves."""
    a, b = np.random.SeedSequence(int(seed)).generate_state(2, dtype=np.uint64)
    return int(a), int(b)


def train(arch: NetworkArch, data: PressureSnapshot, colloc, f: float, cfg: TrainConfig,
          medium: Medium | None = None) -> TrainResult:
    """Train a cAINN (one network) or a dAINN (two independent networks).

    For a dAINN the real-part network is trained to completion first, then
    the imaginary-part network; neither reads the other's state.
    """
    colloc = as_positions(colloc)
    if len(data) == 0:
        raise ValueError("empty boundary snapshot")
    ik2 = inverse_k2(f, medium)
    if arch.design == "cAINN":
        p0 = xavier_init(arch, cfg.seed)
        obj = _Objective(arch, data.positions, np.column_stack([data.pressures.real, data.pressures.imag]),
                         colloc, ik2, cfg.loss_weights)
        net, hist = _fit_network(p0, obj, cfg, "coupled")
        # reorder (d_re, p_re, d_im, p_im) is already the column layout
        return TrainResult(AinnModel("cAINN", (net,)), hist, cfg)
    seeds = network_seeds(cfg.seed)
    nets = []
    hists = []
    for part, s in zip(PARTS, seeds):
        p0 = xavier_init(arch, s)
        obj = _Objective(arch, data.positions, _targets(data, part), colloc, ik2, cfg.loss_weights)
        net, hist = _fit_network(p0, obj, cfg, part)
        nets.append(net)
        hists.append(hist)
    return TrainResult(AinnModel("dAINN", tuple(nets)), np.hstack(hists), cfg)


def collocation_points(boundary_xy, region, spacing: float, f: float | None = None,
                       medium: Medium | None = None) -> np.ndarray:
    """Boundary measurement positions followed by a uniform lattice over the region."""
    from .geometry import collocation_grid

    if f is not None:
        wavelength = (medium or Medium()).c / f
        if spacing > wavelength / 2:
            raise ValueError(f"collocation spacing {spacing} m exceeds half a wavelength ({wavelength / 2:.4f} m)")
        if spacing > wavelength / 10:
            log.warning("collocation spacing %.4g m is coarser than a tenth of a wavelength", spacing)
    return np.vstack([as_positions(boundary_xy), collocation_grid(region, spacing)])


# --- evaluation ----------------------------------------------------------------

def _parts(model: AinnModel, xy: np.ndarray):
    if model.design == "cAINN":
        d = forward_with_derivatives(model.nets[0], xy)
        return [(getattr(d, k)[:, 0], getattr(d, k)[:, 1]) for k in ("value", "grad_x", "grad_y")]
    dr = forward_with_derivatives(model.nets[0], xy)
    di = forward_with_derivatives(model.nets[1], xy)
    return [(getattr(dr, k)[:, 0], getattr(di, k)[:, 0]) for k in ("value", "grad_x", "grad_y")]


def ainn_pressure(model: AinnModel, p) -> np.ndarray:
    """``N_re + i N_im`` at Cartesian points."""
    xy = _check_inputs(p)
    if model.design == "cAINN":
        out = forward(model.nets[0], xy)
        return out[:, 0] + 1j * out[:, 1]
    return forward(model.nets[0], xy)[:, 0] + 1j * forward(model.nets[1], xy)[:, 0]


def ainn_gradient(model: AinnModel, p) -> tuple[np.ndarray, np.ndarray]:
    xy = _check_inputs(p)
    _, (gxr, gxi), (gyr, gyi) = _parts(model, xy)
    return gxr + 1j * gxi, gyr + 1j * gyi


def ainn_radial_gradient(model: AinnModel, p) -> np.ndarray:
    """``dN/dx cos(phi) + dN/dy sin(phi)``."""
    xy = _check_inputs(p)
    gx, gy = ainn_gradient(model, xy)
    _, phi = to_polar(xy)
    return gx * np.cos(phi) + gy * np.sin(phi)


# --- checkpoints -----------------------------------------------------------------

def checkpoint_dict(result: TrainResult, tail: int = 100) -> dict:
    cfg = result.config
    return {
        "design": result.model.design,
        "nets": [n.to_dict() for n in result.model.nets],
        "train_config": {
            "learning_rate": cfg.learning_rate, "epochs": cfg.epochs,
            "adam_beta1": cfg.adam_beta1, "adam_beta2": cfg.adam_beta2, "adam_eps": cfg.adam_eps,
            "collocation_spacing": cfg.collocation_spacing, "loss_weights": list(cfg.loss_weights),
            "seed": cfg.seed,
        },
        "history_columns": ["data_re", "pde_re", "data_im", "pde_im"],
        "history_tail": result.history[-tail:].tolist(),
    }


def model_from_checkpoint(d: dict) -> AinnModel:
    return AinnModel(d["design"], tuple(MlpParams.from_dict(n) for n in d["nets"]))


def write_checkpoint(path, result: TrainResult, tail: int = 100) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(checkpoint_dict(result, tail), fh, sort_keys=True, indent=1)
        fh.write("\n")
