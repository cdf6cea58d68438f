"""Model file format: magic 'OAMM', version, tagged layer list, optional
kernel bank, then raw little-endian f64 parameter tensors in declaration
order."""

from __future__ import annotations

import struct

import numpy as np

from ..fileio import atomic_write_bytes
from ..vectorize import Kernel, KernelBank
from .network import Conv, Fc, Flatten, MaxPool, Model, NetworkSpec, Relu, Softmax

MODEL_MAGIC = b"OAMM"
MODEL_VERSION = 1

_TAG_CONV, _TAG_POOL, _TAG_RELU, _TAG_FLATTEN, _TAG_FC, _TAG_SOFTMAX = range(6)
_NORM_CODE = {"literal": 0, "squared": 1}
_NORM_NAME = {v: k for k, v in _NORM_CODE.items()}


def _pack_spec(spec: NetworkSpec) -> bytes:
    out = [struct.pack("<B", len(spec.input_shape))]
    for d in spec.input_shape:
        out.append(struct.pack("<I", d))
    out.append(struct.pack("<II", spec.class_count, len(spec.layers)))
    for layer in spec.layers:
        if isinstance(layer, Conv):
            out.append(struct.pack("<BIIII", _TAG_CONV, layer.kernel, layer.out_channels, layer.stride, layer.padding))
        elif isinstance(layer, MaxPool):
            out.append(struct.pack("<BII", _TAG_POOL, layer.kernel, layer.stride))
        elif isinstance(layer, Relu):
            out.append(struct.pack("<B", _TAG_RELU))
        elif isinstance(layer, Flatten):
            out.append(struct.pack("<B", _TAG_FLATTEN))
        elif isinstance(layer, Fc):
            out.append(struct.pack("<BI", _TAG_FC, layer.out_dim))
        else:
            out.append(struct.pack("<B", _TAG_SOFTMAX))
    return b"".join(out)


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, fmt: str):
        vals = struct.unpack_from("<" + fmt, self.raw, self.pos)
        self.pos += struct.calcsize("<" + fmt)
        return vals


def _unpack_spec(r: _Reader) -> NetworkSpec:
    (ndim,) = r.take("B")
    input_shape = tuple(r.take("I")[0] for _ in range(ndim))
    class_count, n_layers = r.take("II")
    layers: list = []
    for _ in range(n_layers):
        (tag,) = r.take("B")
        if tag == _TAG_CONV:
            k, oc, s, p = r.take("IIII")
            layers.append(Conv(k, oc, s, p))
        elif tag == _TAG_POOL:
            k, s = r.take("II")
            layers.append(MaxPool(k, s))
        elif tag == _TAG_RELU:
            layers.append(Relu())
        elif tag == _TAG_FLATTEN:
            layers.append(Flatten())
        elif tag == _TAG_FC:
            (o,) = r.take("I")
            layers.append(Fc(o))
        elif tag == _TAG_SOFTMAX:
            layers.append(Softmax())
        else:
            raise ValueError(f"unknown layer tag {tag}")
    return NetworkSpec(input_shape, tuple(layers), class_count)


def save_model(path, model: Model) -> None:
    out = [MODEL_MAGIC, struct.pack("<I", MODEL_VERSION), _pack_spec(model.spec)]
    if model.bank is not None:
        bank = model.bank
        out.append(struct.pack("<BIdB", 1, len(bank), bank.nu, _NORM_CODE[bank.norm_mode]))
        for k in bank.kernels:
            out.append(struct.pack("<dddB", k.mu[0], k.mu[1], k.sigma, k.dim_assignment))
    else:
        out.append(struct.pack("<B", 0))
    for p in model.params:
        for key in ("w", "b"):
            if key in p:
                out.append(np.ascontiguousarray(p[key], dtype="<f8").tobytes())
    atomic_write_bytes(path, b"".join(out))


def load_model(path, dtype=np.float64) -> Model:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MODEL_MAGIC:
        raise ValueError("not an OAMM model file")
    r = _Reader(raw)
    r.pos = 4
    (version,) = r.take("I")
    if version != MODEL_VERSION:
        raise ValueError(f"unsupported model version {version}")
    spec = _unpack_spec(r)
    (has_bank,) = r.take("B")
    bank = None
    if has_bank:
        n, nu, norm = r.take("IdB")
        kernels = []
        for _ in range(n):
            m1, m2, sig, dim = r.take("dddB")
            kernels.append(Kernel((m1, m2), sig, dim))
        bank = KernelBank(tuple(kernels), nu=nu, norm_mode=_NORM_NAME[norm])

    from .network import init_params

    params = init_params(spec, seed=0, dtype=np.float64)  # shapes only
    for p in params:
        for key in ("w", "b"):
            if key in p:
                count = p[key].size
                arr = np.frombuffer(r.raw, dtype="<f8", count=count, offset=r.pos)
                r.pos += 8 * count
                p[key] = arr.reshape(p[key].shape).astype(dtype)
    if r.pos != len(raw):
        raise ValueError("trailing bytes in model file")
    return Model(spec, params, bank)
