"""Network specs, the two document architectures, init and full net passes."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .layers import (
    LayerSpec,
    ShapeError,
    _conv_forward_raw,
    _conv_linear_backward,
    _conv_transpose_raw,
    _im2col,
    activation_derivative,
    apply_activation,
    conv_output_hw,
)


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple
    input_channels: int
    dssim_window: int = 23

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        prev = self.input_channels
        for i, layer in enumerate(self.layers):
            if layer.in_ch != prev:
                raise ValueError(
                    f"layer {i} expects {layer.in_ch} channels but receives {prev}"
                )
            prev = layer.out_ch

    @property
    def output_channels(self):
        return self.layers[-1].out_ch

    def forward_shapes(self, in_hw):
        """Spatial size after each layer, starting with the input size."""
        shapes = [tuple(in_hw)]
        for layer in self.layers:
            shapes.append(conv_output_hw(shapes[-1], layer))
        return shapes


def build_text_net() -> NetworkSpec:
    """Grayscale text-extraction autoencoder (1 channel in and out)."""
    return _build_autoencoder(1)


def build_color_net(channels: int = 3) -> NetworkSpec:
    """Color restoration autoencoder used for foreground and background."""
    return _build_autoencoder(channels)


def _build_autoencoder(channels):
    enc_filters = [32, 64, 128, 256]
    enc_kernels = [8, 5, 3, 2]
    dec_filters = [128, 64, 64, 16, 8, channels]
    dec_kernels = [4, 2, 2, 1, 2, 3]
    dec_strides = [2, 2, 2, 2, 1, 1]
    layers = []
    prev = channels
    for f, k in zip(enc_filters, enc_kernels):
        layers.append(LayerSpec("conv", prev, f, (k, k), 2, "same", "tanh"))
        prev = f
    for i, (f, k, s) in enumerate(zip(dec_filters, dec_kernels, dec_strides)):
        act = "sigmoid" if i == len(dec_filters) - 1 else "tanh"
        layers.append(LayerSpec("conv_transpose", prev, f, (k, k), s, "same", act))
        prev = f
    return NetworkSpec(tuple(layers), channels)


def net_spec_hash(spec: NetworkSpec) -> str:
    doc = {
        "input_channels": spec.input_channels,
        "dssim_window": spec.dssim_window,
        "layers": [
            {
                "kind": l.kind,
                "in_ch": l.in_ch,
                "out_ch": l.out_ch,
                "kernel": list(l.kernel),
                "stride": l.stride,
                "padding": l.padding,
                "activation": l.activation,
            }
            for l in spec.layers
        ],
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


INIT_GAIN = 2.0


def init_weights(spec: NetworkSpec, seed: int, gain: float = INIT_GAIN):
    """Seeded uniform init in +-gain*sqrt(6/(fan_in+fan_out)), zero biases.

    With gain 1 the input signal attenuates to nothing across the ten tanh
    layers (outputs become input-independent and training stalls on decoder
    biases); gain 2 keeps activations alive end to end.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    weights = []
    for layer in spec.layers:
        kh, kw = layer.kernel
        fan_in = layer.in_ch * kh * kw
        fan_out = layer.out_ch * kh * kw
        limit = gain * math.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=layer.weight_shape())
        b = np.zeros(layer.out_ch)
        weights.append((w, b))
    return weights


def _layer_forward(layer, w, b, x):
    """Returns (activated output, cache for backward)."""
    if layer.kind == "conv":
        z, cols, pads, padded_shape = _conv_forward_raw(x, w, layer)
        z = z + b[None, :, None, None]
        a = apply_activation(layer.activation, z)
        return a, ("conv", x, z, cols, pads, padded_shape)
    z, pads = _conv_transpose_raw(x, w, layer)
    z = z + b[None, :, None, None]
    a = apply_activation(layer.activation, z)
    return a, ("conv_transpose", x, z, pads)


def _layer_backward(layer, w, b, cache, grad_out):
    kind = cache[0]
    if kind == "conv":
        _, x, z, cols, pads, padded_shape = cache
        gz = grad_out * activation_derivative(layer.activation, z)
        return _conv_linear_backward(gz, cols, pads, padded_shape, x.shape, w, layer)
    _, x, z, (pt, pb, pl, pr) = cache
    kh, kw = layer.kernel
    batch, _, h, win = x.shape
    gz = grad_out * activation_derivative(layer.activation, z)
    grad_b = gz.sum(axis=(0, 2, 3))
    gzp = np.pad(gz, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    cols_g = _im2col(gzp, kh, kw, layer.stride, h, win)
    w2 = w.reshape(layer.in_ch, layer.out_ch * kh * kw)
    grad_x = (w2 @ cols_g).reshape(x.shape)
    x2 = x.reshape(batch, layer.in_ch, h * win)
    grad_w = np.einsum("bal,bkl->ak", x2, cols_g).reshape(w.shape)
    return grad_x, grad_w, grad_b


def net_forward(spec: NetworkSpec, weights, x, want_caches=False):
    """Runs the whole network; x is (batch, channels, h, w) float64."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or x.shape[1] != spec.input_channels:
        raise ShapeError(
            f"network expects (b, {spec.input_channels}, h, w), got {x.shape}"
        )
    caches = []
    out = x
    for i, (layer, (w, b)) in enumerate(zip(spec.layers, weights)):
        try:
            out, cache = _layer_forward(layer, w, b, out)
        except ShapeError as exc:
            raise ShapeError(f"layer {i} ({layer.kind}): {exc}") from exc
        caches.append(cache)
    if want_caches:
        return out, caches
    return out


def net_backward(spec: NetworkSpec, weights, caches, grad_out):
    """Backpropagates grad_out through cached activations.

    Returns (grad_weights, grad_input) with grad_weights a list of (gw, gb).
    """
    grads = [None] * len(spec.layers)
    g = grad_out
    for i in range(len(spec.layers) - 1, -1, -1):
        layer = spec.layers[i]
        w, b = weights[i]
        g, gw, gb = _layer_backward(layer, w, b, caches[i], g)
        grads[i] = (gw, gb)
    return grads, g
