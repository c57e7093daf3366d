"""Convolution and transposed convolution with explicit gradients.

Tensors are float64 numpy arrays laid out (batch, channels, height, width).
Convolution uses cross-correlation semantics. The transposed convolution is
implemented as the exact adjoint of the matching convolution, which is what
makes the inner-product identity <conv(x), y> == <x, convT(y)> hold to
machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import as_strided


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    kind: str                 # "conv" | "conv_transpose"
    in_ch: int
    out_ch: int
    kernel: tuple             # (kh, kw)
    stride: int = 1
    padding: str = "none"     # "none" | "same"
    activation: str = "none"  # "tanh" | "sigmoid" | "none"

    def __post_init__(self):
        if self.kind not in ("conv", "conv_transpose"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        kh, kw = self.kernel
        if kh < 1 or kw < 1:
            raise ValueError("kernel dims must be >= 1")
        if self.stride not in (1, 2):
            raise ValueError("stride must be 1 or 2")
        if self.padding not in ("none", "same"):
            raise ValueError(f"unknown padding {self.padding!r}")
        if self.activation not in ("tanh", "sigmoid", "none"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.in_ch < 1 or self.out_ch < 1:
            raise ValueError("channel counts must be >= 1")

    def weight_shape(self):
        kh, kw = self.kernel
        if self.kind == "conv":
            return (self.out_ch, self.in_ch, kh, kw)
        return (self.in_ch, self.out_ch, kh, kw)


def apply_activation(name, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if name == "none":
        return z
    raise ValueError(f"unknown activation {name!r}")


def activation_derivative(name, z):
    """d act(z) / d z, evaluated elementwise."""
    if name == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    if name == "sigmoid":
        s = 1.0 / (1.0 + np.exp(-z))
        return s * (1.0 - s)
    if name == "none":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {name!r}")


def _conv_axis_out(in_size, k, stride, padding):
    if padding == "same":
        return -(-in_size // stride)  # ceil division
    if in_size < k:
        raise ShapeError(f"input extent {in_size} smaller than kernel {k}")
    return (in_size - k) // stride + 1


def _axis_pads(in_size, k, stride, padding):
    if padding == "none":
        return 0, 0
    out = _conv_axis_out(in_size, k, stride, padding)
    total = max((out - 1) * stride + k - in_size, 0)
    return total // 2, total - total // 2


def conv_output_hw(in_hw, spec: LayerSpec):
    """Spatial output size of a layer for a given input size."""
    h, w = in_hw
    kh, kw = spec.kernel
    s = spec.stride
    if spec.kind == "conv":
        return _conv_axis_out(h, kh, s, spec.padding), _conv_axis_out(w, kw, s, spec.padding)
    if spec.padding == "same":
        return h * s, w * s
    return (h - 1) * s + kh, (w - 1) * s + kw


def _im2col(xp, kh, kw, stride, oh, ow):
    b, c, _, _ = xp.shape
    sb, sc, sh, sw = xp.strides
    view = as_strided(
        xp,
        shape=(b, c, kh, kw, oh, ow),
        strides=(sb, sc, sh, sw, stride * sh, stride * sw),
    )
    return view.reshape(b, c * kh * kw, oh * ow)


def _col2im(cols, padded_shape, kh, kw, stride, oh, ow):
    b, c, hp, wp = padded_shape
    out = np.zeros(padded_shape, dtype=np.float64)
    cols6 = cols.reshape(b, c, kh, kw, oh, ow)
    for i in range(kh):
        for j in range(kw):
            out[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += cols6[:, :, i, j]
    return out


def _check_input(x, spec):
    if x.ndim != 4:
        raise ShapeError(f"expected (batch, ch, h, w) tensor, got shape {x.shape}")
    if x.shape[1] != spec.in_ch:
        raise ShapeError(
            f"{spec.kind} layer expects {spec.in_ch} input channels, tensor has shape {x.shape}"
        )


def _check_weights(w, b, spec):
    if w.shape != spec.weight_shape():
        raise ShapeError(
            f"{spec.kind} weights expected shape {spec.weight_shape()}, got {w.shape}"
        )
    if b.shape != (spec.out_ch,):
        raise ShapeError(f"bias expected shape ({spec.out_ch},), got {b.shape}")


def _conv_forward_raw(x, w, spec):
    """Linear part of conv; returns (z, cols, pads) for reuse in backward."""
    kh, kw = spec.kernel
    s = spec.stride
    pt, pb = _axis_pads(x.shape[2], kh, s, spec.padding)
    pl, pr = _axis_pads(x.shape[3], kw, s, spec.padding)
    oh = _conv_axis_out(x.shape[2], kh, s, spec.padding)
    ow = _conv_axis_out(x.shape[3], kw, s, spec.padding)
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    cols = _im2col(xp, kh, kw, s, oh, ow)
    w2 = w.reshape(spec.out_ch, -1)
    z = (w2 @ cols).reshape(x.shape[0], spec.out_ch, oh, ow)
    return z, cols, (pt, pb, pl, pr), xp.shape


def conv2d_forward(x, w, b, spec: LayerSpec):
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_input(x, spec)
    _check_weights(w, b, spec)
    z, _, _, _ = _conv_forward_raw(x, w, spec)
    return apply_activation(spec.activation, z + b[None, :, None, None])


def conv2d_backward(x, w, b, spec: LayerSpec, grad_out):
    """Gradients of conv2d_forward w.r.t. input, weights and bias."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_input(x, spec)
    _check_weights(w, b, spec)
    z, cols, pads, padded_shape = _conv_forward_raw(x, w, spec)
    z += b[None, :, None, None]
    gz = np.asarray(grad_out, dtype=np.float64) * activation_derivative(spec.activation, z)
    return _conv_linear_backward(gz, cols, pads, padded_shape, x.shape, w, spec)


def _conv_linear_backward(gz, cols, pads, padded_shape, x_shape, w, spec):
    kh, kw = spec.kernel
    batch, _, oh, ow = gz.shape
    gz2 = gz.reshape(batch, spec.out_ch, oh * ow)
    grad_b = gz.sum(axis=(0, 2, 3))
    grad_w = np.einsum("bol,bkl->ok", gz2, cols).reshape(w.shape)
    w2 = w.reshape(spec.out_ch, -1)
    gcols = w2.T @ gz2
    grad_xp = _col2im(gcols, padded_shape, kh, kw, spec.stride, oh, ow)
    pt, pb, pl, pr = pads
    grad_x = grad_xp[:, :, pt : padded_shape[2] - pb, pl : padded_shape[3] - pr]
    if grad_x.shape != x_shape:
        raise ShapeError(f"internal: grad shape {grad_x.shape} != input shape {x_shape}")
    return grad_x, grad_w, grad_b


def _transpose_geometry(y_hw, spec):
    """Output size plus the matching forward-conv padding for the adjoint."""
    h, w = y_hw
    kh, kw = spec.kernel
    s = spec.stride
    if spec.padding == "same":
        out_h, out_w = h * s, w * s
    else:
        out_h, out_w = (h - 1) * s + kh, (w - 1) * s + kw
    if _conv_axis_out(out_h, kh, s, spec.padding) != h or _conv_axis_out(out_w, kw, s, spec.padding) != w:
        raise ShapeError(
            f"conv_transpose geometry inconsistent for input {y_hw} with {spec}"
        )
    pt, pb = _axis_pads(out_h, kh, s, spec.padding)
    pl, pr = _axis_pads(out_w, kw, s, spec.padding)
    return (out_h, out_w), (pt, pb, pl, pr)


def _conv_transpose_raw(y, w, spec):
    """Adjoint-of-conv scatter; returns pre-bias linear output."""
    kh, kw = spec.kernel
    s = spec.stride
    batch, _, h, win = y.shape
    (out_h, out_w), (pt, pb, pl, pr) = _transpose_geometry((h, win), spec)
    w2 = w.reshape(spec.in_ch, spec.out_ch * kh * kw)
    y2 = y.reshape(batch, spec.in_ch, h * win)
    gcols = w2.T @ y2
    padded_shape = (batch, spec.out_ch, out_h + pt + pb, out_w + pl + pr)
    zp = _col2im(gcols, padded_shape, kh, kw, s, h, win)
    z = zp[:, :, pt : pt + out_h, pl : pl + out_w]
    return z, (pt, pb, pl, pr)


def conv_transpose2d_forward(y, w, b, spec: LayerSpec):
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_input(y, spec)
    _check_weights(w, b, spec)
    z, _ = _conv_transpose_raw(y, w, spec)
    return apply_activation(spec.activation, z + b[None, :, None, None])


def conv_transpose2d_backward(y, w, b, spec: LayerSpec, grad_out):
    """Gradients of conv_transpose2d_forward w.r.t. input, weights and bias."""
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_input(y, spec)
    _check_weights(w, b, spec)
    kh, kw = spec.kernel
    s = spec.stride
    batch, _, h, win = y.shape
    z, (pt, pb, pl, pr) = _conv_transpose_raw(y, w, spec)
    zb = z + b[None, :, None, None]
    gz = np.asarray(grad_out, dtype=np.float64) * activation_derivative(spec.activation, zb)

    grad_b = gz.sum(axis=(0, 2, 3))
    gzp = np.pad(gz, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    cols_g = _im2col(gzp, kh, kw, s, h, win)
    w2 = w.reshape(spec.in_ch, spec.out_ch * kh * kw)
    grad_y = (w2 @ cols_g).reshape(y.shape)
    y2 = y.reshape(batch, spec.in_ch, h * win)
    grad_w = np.einsum("bal,bkl->ak", y2, cols_g).reshape(w.shape)
    return grad_y, grad_w, grad_b
