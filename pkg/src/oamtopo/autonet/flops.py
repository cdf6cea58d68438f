"""Parameter and FLOP accounting per layer.

Conventions (documented because published counts rarely state theirs):
  - conv params = (k^2 * C_in + 1) * C_out, fc params = (in + 1) * out;
  - conv forward FLOPs = 2 * k^2 * C_in * C_out * H_out * W_out per sample,
    fc forward = 2 * in * out, pooling = k^2 comparisons per output;
  - backward = 2x forward for every layer;
  - table totals are reported for a batch (default 64).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Conv, Fc, Flatten, MaxPool, NetworkSpec, Relu, Softmax

DEFAULT_TABLE_BATCH = 64


@dataclass(frozen=True)
class LayerCount:
    name: str
    kernel_desc: str
    params: int
    forward_flops: int  # per sample
    backward_flops: int  # per sample


def count_params_flops(spec: NetworkSpec) -> list[LayerCount]:
    rows: list[LayerCount] = []
    shape = spec.input_shape
    conv_i = fc_i = pool_i = 0
    for layer, out_shape in zip(spec.layers, spec.shapes()):
        if isinstance(layer, Conv):
            conv_i += 1
            c_in = shape[0]
            co, ho, wo = out_shape
            params = (layer.kernel**2 * c_in + 1) * co
            fwd = 2 * layer.kernel**2 * c_in * co * ho * wo
            rows.append(
                LayerCount(f"conv{conv_i}", f"{layer.kernel}x{layer.kernel}", params, fwd, 2 * fwd)
            )
        elif isinstance(layer, MaxPool):
            pool_i += 1
            c, ho, wo = out_shape
            fwd = layer.kernel**2 * c * ho * wo
            rows.append(
                LayerCount(f"pool{pool_i}", f"{layer.kernel}x{layer.kernel}", 0, fwd, 2 * fwd)
            )
        elif isinstance(layer, Fc):
            fc_i += 1
            n_in = shape[0]
            params = (n_in + 1) * layer.out_dim
            fwd = 2 * n_in * layer.out_dim
            rows.append(LayerCount(f"fc{fc_i}", "1x1", params, fwd, 2 * fwd))
        # relu/flatten/softmax contribute no parameters and negligible FLOPs
        shape = out_shape
    return rows


def ph_layer_count(n_kernels: int, avg_points: int = 500) -> LayerCount:
    """The projection layer: 3 parameters per kernel (mu1, mu2, sigma); one
    kernel-point evaluation costs ~8 FLOPs."""
    fwd = 8 * n_kernels * avg_points
    return LayerCount("PH", "1x1", 3 * n_kernels, fwd, 2 * fwd)


def alexnet_spec(class_count: int = 1000) -> NetworkSpec:
    """The AlexNet-shaped reference architecture used for table reproduction
    (ungrouped convolutions, 227x227x3 input)."""
    return NetworkSpec(
        input_shape=(3, 227, 227),
        layers=(
            Conv(11, 96, stride=4, padding=0),
            Relu(),
            MaxPool(3, 2),
            Conv(5, 256, stride=1, padding=2),
            Relu(),
            MaxPool(3, 2),
            Conv(3, 384, stride=1, padding=1),
            Relu(),
            Conv(3, 384, stride=1, padding=1),
            Relu(),
            Conv(3, 256, stride=1, padding=1),
            Relu(),
            MaxPool(3, 2),
            Flatten(),
            Fc(4096),
            Relu(),
            Fc(4096),
            Relu(),
            Fc(class_count),
            Softmax(),
        ),
        class_count=class_count,
    )


def display_unit(value: int) -> str:
    """Human units matching the usual table style: 35 K, 1.33 M, 40 G."""
    for scale, suffix in ((1e9, "G"), (1e6, "M"), (1e3, "K")):
        if value >= scale:
            x = value / scale
            if x < 10:
                return f"{x:.2f} {suffix}".replace(".00 ", " ")
            return f"{x:.0f} {suffix}"
    return str(value)


def format_table(
    rows: list[LayerCount], batch: int = DEFAULT_TABLE_BATCH, extra: LayerCount | None = None
) -> str:
    """Fixed-width text table; FLOPs columns are per batch."""
    all_rows = ([extra] if extra else []) + rows
    lines = [
        f"{'layer':<8}{'kernel':<9}{'params':>12}{'fwd FLOPs':>14}{'bwd FLOPs':>14}",
        "-" * 57,
    ]
    for r in all_rows:
        lines.append(
            f"{r.name:<8}{r.kernel_desc:<9}{display_unit(r.params):>12}"
            f"{display_unit(r.forward_flops * batch):>14}"
            f"{display_unit(r.backward_flops * batch):>14}"
        )
    total_p = sum(r.params for r in all_rows)
    total_f = sum(r.forward_flops for r in all_rows) * batch
    total_b = sum(r.backward_flops for r in all_rows) * batch
    lines.append("-" * 57)
    lines.append(
        f"{'total':<8}{'':<9}{display_unit(total_p):>12}"
        f"{display_unit(total_f):>14}{display_unit(total_b):>14}"
    )
    lines.append(f"(FLOPs per batch of {batch})")
    return "\n".join(lines)
