"""Structural similarity over uniform windows and its exact gradient.

SSIM is averaged over every valid (un-centered) window position of every
plane in the batch; statistics are population moments over the window. The
training objective is DSSIM = (1 - SSIM) / 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SsimConfig:
    window: int = 23
    c1: float = 0.01 ** 2
    c2: float = 0.03 ** 2

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("stabilizers must be > 0")


def _box_valid(a, w):
    """Sliding-window sums over all valid positions, via integral image."""
    ii = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=np.float64)
    ii[1:, 1:] = a.cumsum(axis=0).cumsum(axis=1)
    oh, ow = a.shape[0] - w + 1, a.shape[1] - w + 1
    return ii[w : w + oh, w : w + ow] - ii[:oh, w : w + ow] - ii[w : w + oh, :ow] + ii[:oh, :ow]


def _spread(g, w):
    """Adjoint of _box_valid: scatter each window value over its support."""
    gp = np.pad(g, w - 1)
    return _box_valid(gp, w)


def _as_planes(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None, None]
    if x.ndim == 3:
        return x[None]
    if x.ndim == 4:
        return x
    raise ValueError(f"expected 2-4 dims, got shape {x.shape}")


def _plane_stats(x, y, w):
    # population moments; left unclamped so vx == cxy bit-for-bit when x is y,
    # which makes ssim(x, x) exactly 1 (C2 dwarfs any negative fp residue)
    n = float(w * w)
    mx = _box_valid(x, w) / n
    my = _box_valid(y, w) / n
    vx = _box_valid(x * x, w) / n - mx * mx
    vy = _box_valid(y * y, w) / n - my * my
    cxy = _box_valid(x * y, w) / n - mx * my
    return mx, my, vx, vy, cxy


def _ssim_terms(mx, my, vx, vy, cxy, cfg):
    a1 = 2.0 * mx * my + cfg.c1
    a2 = 2.0 * cxy + cfg.c2
    b1 = mx * mx + my * my + cfg.c1
    b2 = vx + vy + cfg.c2
    return a1, a2, b1, b2


def ssim(x, y, cfg: SsimConfig = SsimConfig()) -> float:
    """Mean SSIM over every valid window of every plane."""
    xs, ys = _as_planes(x), _as_planes(y)
    if xs.shape != ys.shape:
        raise ValueError(f"shape mismatch: {xs.shape} vs {ys.shape}")
    w = cfg.window
    if w > xs.shape[2] or w > xs.shape[3]:
        raise ValueError(f"window {w} larger than patch {xs.shape[2]}x{xs.shape[3]}")
    total = 0.0
    count = 0
    for b in range(xs.shape[0]):
        for c in range(xs.shape[1]):
            mx, my, vx, vy, cxy = _plane_stats(xs[b, c], ys[b, c], w)
            a1, a2, b1, b2 = _ssim_terms(mx, my, vx, vy, cxy, cfg)
            s = (a1 * a2) / (b1 * b2)
            total += s.sum()
            count += s.size
    return float(total / count)


def dssim(x, y, cfg: SsimConfig = SsimConfig()) -> float:
    return (1.0 - ssim(x, y, cfg)) / 2.0


def dssim_backward(x, y, cfg: SsimConfig = SsimConfig()) -> np.ndarray:
    """Gradient of dssim(x, y) with respect to x, same shape as x."""
    orig_shape = np.asarray(x).shape
    xs, ys = _as_planes(x), _as_planes(y)
    if xs.shape != ys.shape:
        raise ValueError(f"shape mismatch: {xs.shape} vs {ys.shape}")
    w = cfg.window
    if w > xs.shape[2] or w > xs.shape[3]:
        raise ValueError(f"window {w} larger than patch {xs.shape[2]}x{xs.shape[3]}")
    n = float(w * w)
    grad = np.zeros_like(xs)
    planes = xs.shape[0] * xs.shape[1]
    windows = (xs.shape[2] - w + 1) * (xs.shape[3] - w + 1)
    for b in range(xs.shape[0]):
        for c in range(xs.shape[1]):
            xp, yp = xs[b, c], ys[b, c]
            mx, my, vx, vy, cxy = _plane_stats(xp, yp, w)
            a1, a2, b1, b2 = _ssim_terms(mx, my, vx, vy, cxy, cfg)
            # S = a1*a2 / (b1*b2); partials w.r.t. window statistics
            g_mu = 2.0 * a2 * (my * b1 - mx * a1) / (b1 * b1 * b2)
            g_vx = -(a1 * a2) / (b1 * b2 * b2)
            g_cxy = 2.0 * a1 / (b1 * b2)
            # chain through mu_x, var_x, cov_xy contributions of each pixel
            term = (
                _spread(g_mu, w)
                + 2.0 * xp * _spread(g_vx, w)
                - 2.0 * _spread(g_vx * mx, w)
                + yp * _spread(g_cxy, w)
                - _spread(g_cxy * my, w)
            )
            grad[b, c] = term / n
    # mean over windows and planes, then DSSIM = (1 - SSIM)/2
    grad /= planes * windows
    grad *= -0.5
    return grad.reshape(orig_shape)
