"""Batched layer primitives on plain numpy arrays (NCHW).

Convolution and pooling run through im2col-style gathers so the hot path is
matrix multiplication; col2im scatters use bincount over precomputed flat
indices, which keeps accumulation order fixed and training deterministic.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv_forward(x, w, b, stride, pad):
    """x (B,C,H,W), w (F,C,k,k), b (F,) -> (out (B,F,Ho,Wo), cache)."""
    B, C, H, W = x.shape
    F, _, k, _ = w.shape
    if pad:
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    else:
        xp = x
    win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    Ho, Wo = win.shape[2], win.shape[3]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(B, Ho * Wo, C * k * k)
    out = cols @ w.reshape(F, -1).T + b
    out = out.transpose(0, 2, 1).reshape(B, F, Ho, Wo)
    return out, (cols, xp.shape, (B, C, H, W, k, stride, pad, Ho, Wo))


def conv_backward(dout, w, cache):
    cols, xp_shape, (B, C, H, W, k, stride, pad, Ho, Wo) = cache
    F = w.shape[0]
    dmat = dout.reshape(B, F, Ho * Wo).transpose(0, 2, 1)  # (B, P, F)
    dw = np.tensordot(dmat, cols, axes=([0, 1], [0, 1])).reshape(w.shape)
    db = dout.sum(axis=(0, 2, 3))
    dcols = dmat @ w.reshape(F, -1)  # (B, P, C*k*k)

    # scatter back into the padded input with one bincount per batch-flattened run
    Hp, Wp = xp_shape[2], xp_shape[3]
    idx = _col2im_indices(C, Hp, Wp, k, stride, Ho, Wo)  # (P, C*k*k)
    per_sample = C * Hp * Wp
    offsets = (np.arange(B) * per_sample)[:, None, None]
    flat_idx = (idx[None, :, :] + offsets).ravel()
    dxp = np.bincount(flat_idx, weights=dcols.ravel().astype(np.float64), minlength=B * per_sample)
    dxp = dxp.reshape(B, C, Hp, Wp).astype(dout.dtype)
    if pad:
        dxp = dxp[:, :, pad:-pad, pad:-pad]
    return dxp, dw, db


_COL2IM_CACHE: dict = {}


def _col2im_indices(C, Hp, Wp, k, stride, Ho, Wo):
    key = (C, Hp, Wp, k, stride, Ho, Wo)
    idx = _COL2IM_CACHE.get(key)
    if idx is None:
        c, ky, kx = np.meshgrid(np.arange(C), np.arange(k), np.arange(k), indexing="ij")
        patch = (c * Hp * Wp + ky * Wp + kx).ravel()  # (C*k*k,)
        oy, ox = np.meshgrid(np.arange(Ho), np.arange(Wo), indexing="ij")
        origin = (oy * stride * Wp + ox * stride).ravel()  # (P,)
        idx = origin[:, None] + patch[None, :]
        _COL2IM_CACHE[key] = idx
    return idx


def maxpool_forward(x, k, stride):
    B, C, H, W = x.shape
    win = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    Ho, Wo = win.shape[2], win.shape[3]
    flat = win.reshape(B, C, Ho, Wo, k * k)
    arg = flat.argmax(axis=4)  # first max wins ties: deterministic routing
    out = np.take_along_axis(flat, arg[..., None], axis=4)[..., 0]
    return out, (arg, (B, C, H, W, k, stride, Ho, Wo))


def maxpool_backward(dout, cache):
    arg, (B, C, H, W, k, stride, Ho, Wo) = cache
    ky, kx = np.divmod(arg, k)
    oy, ox = np.meshgrid(np.arange(Ho), np.arange(Wo), indexing="ij")
    rows = oy[None, None] * stride + ky
    colx = ox[None, None] * stride + kx
    b, c = np.meshgrid(np.arange(B), np.arange(C), indexing="ij")
    flat_idx = (
        b[:, :, None, None] * (C * H * W)
        + c[:, :, None, None] * (H * W)
        + rows * W
        + colx
    ).ravel()
    dx = np.bincount(flat_idx, weights=dout.ravel().astype(np.float64), minlength=B * C * H * W)
    return dx.reshape(B, C, H, W).astype(dout.dtype)


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout, mask):
    return dout * mask


def fc_forward(x, w, b):
    """x (B, n_in), w (n_out, n_in), b (n_out,)."""
    return x @ w.T + b, x


def fc_backward(dout, w, x):
    dw = dout.T @ x
    db = dout.sum(axis=0)
    dx = dout @ w
    return dx, dw, db


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
