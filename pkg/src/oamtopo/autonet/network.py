"""Network specification, forward/backward, optimizers, and model bundling.

A NetworkSpec is an ordered tuple of layer descriptors whose shapes must
chain; the final layer is always softmax over the class count.  A Model
bundles the spec, the parameter list, and optionally a KernelBank, in which
case inputs are persistence diagrams projected to feature vectors before the
first layer, and bank parameters ride along in the same optimizer step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..vectorize import KernelBank, project, project_backward
from . import layers as L


@dataclass(frozen=True)
class Conv:
    kernel: int
    out_channels: int
    stride: int = 1
    padding: int = 0


@dataclass(frozen=True)
class MaxPool:
    kernel: int
    stride: int


@dataclass(frozen=True)
class Relu:
    pass


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class Fc:
    out_dim: int


@dataclass(frozen=True)
class Softmax:
    pass


Layer = Conv | MaxPool | Relu | Flatten | Fc | Softmax


@dataclass(frozen=True)
class NetworkSpec:
    input_shape: tuple[int, ...]  # (C, H, W) or (n,)
    layers: tuple[Layer, ...]
    class_count: int

    def __post_init__(self):
        if self.class_count < 2:
            raise ValueError("need at least two classes")
        if not self.layers or not isinstance(self.layers[-1], Softmax):
            raise ValueError("final layer must be softmax")
        self.shapes()  # validates chaining

    def shapes(self) -> list[tuple[int, ...]]:
        """Per-layer output shapes; raises on inconsistent chaining."""
        shape = self.input_shape
        out = []
        for i, layer in enumerate(self.layers):
            if isinstance(layer, Conv):
                if len(shape) != 3:
                    raise ValueError(f"conv layer {i} needs a (C,H,W) input, got {shape}")
                c, h, w = shape
                ho = (h + 2 * layer.padding - layer.kernel) // layer.stride + 1
                wo = (w + 2 * layer.padding - layer.kernel) // layer.stride + 1
                if ho < 1 or wo < 1:
                    raise ValueError(f"conv layer {i} output collapses: {ho}x{wo}")
                shape = (layer.out_channels, ho, wo)
            elif isinstance(layer, MaxPool):
                if len(shape) != 3:
                    raise ValueError(f"pool layer {i} needs a (C,H,W) input, got {shape}")
                c, h, w = shape
                ho = (h - layer.kernel) // layer.stride + 1
                wo = (w - layer.kernel) // layer.stride + 1
                if ho < 1 or wo < 1:
                    raise ValueError(f"pool layer {i} output collapses: {ho}x{wo}")
                shape = (c, ho, wo)
            elif isinstance(layer, Relu):
                pass
            elif isinstance(layer, Flatten):
                shape = (int(np.prod(shape)),)
            elif isinstance(layer, Fc):
                if len(shape) != 1:
                    raise ValueError(f"fc layer {i} needs a flat input, got {shape}")
                shape = (layer.out_dim,)
            elif isinstance(layer, Softmax):
                if i != len(self.layers) - 1:
                    raise ValueError("softmax must be the final layer")
                if shape != (self.class_count,):
                    raise ValueError(
                        f"softmax input {shape} does not match class count {self.class_count}"
                    )
            out.append(shape)
        return out


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 10
    seed: int = 0
    weight_init: str = "fan_in_uniform"
    dtype: str = "f64"  # "f64" for tests, "f32" for faster training

    def __post_init__(self):
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate < 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("hyperparameters must be positive")
        if self.weight_init != "fan_in_uniform":
            raise ValueError(f"unknown weight init {self.weight_init!r}")
        if self.dtype not in ("f32", "f64"):
            raise ValueError("dtype must be f32 or f64")

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "f32" else np.float64


class TrainingDiverged(RuntimeError):
    """Raised when the loss goes non-finite; message carries diagnostics."""


def init_params(spec: NetworkSpec, seed: int, dtype=np.float64) -> list[dict[str, np.ndarray]]:
    """Fan-in scaled uniform init, seeded; one dict per layer (empty when the
    layer has no parameters)."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    params: list[dict[str, np.ndarray]] = []
    shape = spec.input_shape
    for layer, out_shape in zip(spec.layers, spec.shapes()):
        if isinstance(layer, Conv):
            c_in = shape[0]
            fan_in = layer.kernel * layer.kernel * c_in
            bound = 1.0 / math.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(layer.out_channels, c_in, layer.kernel, layer.kernel))
            b = np.zeros(layer.out_channels)
            params.append({"w": w.astype(dtype), "b": b.astype(dtype)})
        elif isinstance(layer, Fc):
            fan_in = shape[0]
            bound = 1.0 / math.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(layer.out_dim, fan_in))
            b = np.zeros(layer.out_dim)
            params.append({"w": w.astype(dtype), "b": b.astype(dtype)})
        else:
            params.append({})
        shape = out_shape
    return params


def forward(
    spec: NetworkSpec, params: list[dict], x: np.ndarray, want_cache: bool = False
):
    """Probabilities for a batch; x shape (B, *input_shape)."""
    if tuple(x.shape[1:]) != tuple(spec.input_shape):
        raise ValueError(f"input shape {x.shape[1:]} does not match spec {spec.input_shape}")
    caches = []
    out = x
    for layer, p in zip(spec.layers, params):
        if isinstance(layer, Conv):
            out, cache = L.conv_forward(out, p["w"], p["b"], layer.stride, layer.padding)
        elif isinstance(layer, MaxPool):
            out, cache = L.maxpool_forward(out, layer.kernel, layer.stride)
        elif isinstance(layer, Relu):
            out, cache = L.relu_forward(out)
        elif isinstance(layer, Flatten):
            cache = out.shape
            out = out.reshape(out.shape[0], -1)
        elif isinstance(layer, Fc):
            out, cache = L.fc_forward(out, p["w"], p["b"])
        else:  # Softmax
            cache = None
            logits = out
            out = L.softmax(out)
        caches.append(cache)
    if want_cache:
        return out, logits, caches
    return out


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy over the batch; probs straight from forward()."""
    eps = np.finfo(probs.dtype).tiny
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, eps)).mean())


def backward(
    spec: NetworkSpec, params: list[dict], x: np.ndarray, labels: np.ndarray
) -> tuple[float, list[dict], np.ndarray]:
    """Cross-entropy loss, per-layer parameter gradients, and input gradient."""
    probs, logits, caches = forward(spec, params, x, want_cache=True)
    loss = cross_entropy(probs, labels)
    B = len(labels)
    delta = probs.copy()
    delta[np.arange(B), labels] -= 1.0
    delta /= B
    grads: list[dict] = [{} for _ in spec.layers]
    dout = delta
    for i in range(len(spec.layers) - 1, -1, -1):
        layer, p, cache = spec.layers[i], params[i], caches[i]
        if isinstance(layer, Softmax):
            continue  # folded into the cross-entropy delta
        if isinstance(layer, Conv):
            dout, dw, db = L.conv_backward(dout, p["w"], cache)
            grads[i] = {"w": dw, "b": db}
        elif isinstance(layer, MaxPool):
            dout = L.maxpool_backward(dout, cache)
        elif isinstance(layer, Relu):
            dout = L.relu_backward(dout, cache)
        elif isinstance(layer, Flatten):
            dout = dout.reshape(cache)
        elif isinstance(layer, Fc):
            dout, dw, db = L.fc_backward(dout, p["w"], cache)
            grads[i] = {"w": dw, "b": db}
    return loss, grads, dout


def predict(probs: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties break toward the lowest index."""
    probs = np.atleast_2d(probs)
    return probs.argmax(axis=1)


@dataclass
class Model:
    """Spec + parameters, plus an optional kernel bank for diagram inputs."""

    spec: NetworkSpec
    params: list[dict]
    bank: Optional[KernelBank] = None

    def features(self, diagrams) -> np.ndarray:
        if self.bank is None:
            raise ValueError("model has no kernel bank attached")
        return np.stack([project(d, self.bank) for d in diagrams])


@dataclass
class OptState:
    """Adam/SGD state over network params and (optionally) bank params."""

    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    bank_m: Optional[dict] = None
    bank_v: Optional[dict] = None


def _ensure_state(state: OptState, params: list[dict], bank: Optional[KernelBank]):
    if not state.m:
        state.m = [{k: np.zeros_like(v) for k, v in p.items()} for p in params]
        state.v = [{k: np.zeros_like(v) for k, v in p.items()} for p in params]
    if bank is not None and state.bank_m is None:
        mu, sigma, _ = bank.arrays()
        state.bank_m = {"mu": np.zeros_like(mu), "sigma": np.zeros_like(sigma)}
        state.bank_v = {"mu": np.zeros_like(mu), "sigma": np.zeros_like(sigma)}


ADAM_B1, ADAM_B2, ADAM_EPS = 0.9, 0.999, 1e-8


def _adam_update(p, g, m, v, lr, t):
    m *= ADAM_B1
    m += (1 - ADAM_B1) * g
    v *= ADAM_B2
    v += (1 - ADAM_B2) * g * g
    mhat = m / (1 - ADAM_B1**t)
    vhat = v / (1 - ADAM_B2**t)
    p -= (lr * mhat / (np.sqrt(vhat) + ADAM_EPS)).astype(p.dtype)


def train_step(
    model: Model,
    batch_x,
    batch_labels: np.ndarray,
    config: TrainConfig,
    state: OptState,
) -> float:
    """One optimizer update on a batch.

    For bank-attached models `batch_x` is a list of persistence diagrams;
    otherwise an ndarray of shape (B, *input_shape).  Returns the batch loss.
    Raises TrainingDiverged on a non-finite loss.
    """
    _ensure_state(state, model.params, model.bank)
    bank_grads = None
    if model.bank is not None:
        feats = model.features(batch_x).astype(config.np_dtype)
        x = feats.reshape(feats.shape[0], *model.spec.input_shape)
        loss, grads, dx = backward(model.spec, model.params, x, batch_labels)
        dv = dx.reshape(len(batch_labels), -1).astype(np.float64)
        mu_g, sig_g = None, None
        for diagram, upstream in zip(batch_x, dv):
            gm, gs = project_backward(diagram, model.bank, upstream)
            mu_g = gm if mu_g is None else mu_g + gm
            sig_g = gs if sig_g is None else sig_g + gs
        bank_grads = {"mu": mu_g, "sigma": sig_g}
    else:
        x = np.asarray(batch_x, dtype=config.np_dtype)
        loss, grads, _ = backward(model.spec, model.params, x, batch_labels)

    if not math.isfinite(loss):
        raise TrainingDiverged(f"non-finite loss {loss}")

    state.t += 1
    lr = config.learning_rate
    if config.optimizer == "adam":
        for p, g, m, v in zip(model.params, grads, state.m, state.v):
            for key in p:
                _adam_update(p[key], g[key], m[key], v[key], lr, state.t)
    else:
        for p, g in zip(model.params, grads):
            for key in p:
                p[key] -= (lr * g[key]).astype(p[key].dtype)

    if bank_grads is not None:
        mu, sigma, _ = model.bank.arrays()
        if config.optimizer == "adam":
            _adam_update(mu, bank_grads["mu"], state.bank_m["mu"], state.bank_v["mu"], lr, state.t)
            _adam_update(
                sigma, bank_grads["sigma"], state.bank_m["sigma"], state.bank_v["sigma"], lr, state.t
            )
        else:
            mu -= lr * bank_grads["mu"]
            sigma -= lr * bank_grads["sigma"]
        model.bank = model.bank.with_arrays(mu, sigma)  # re-clamps sigma
    return loss
