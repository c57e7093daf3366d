"""Mini-batch Adam training against the DSSIM objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import init_weights, net_backward, net_forward
from .ssim import SsimConfig, dssim, dssim_backward


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 8
    epochs: int = 10
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patch_size: int = 256
    patch_stride: int = 50
    ssim_window: int = 23

    def __post_init__(self):
        for name in ("learning_rate", "batch_size", "epochs", "patch_size", "patch_stride"):
            if getattr(self, name) < 0 or (name != "learning_rate" and getattr(self, name) < 1):
                raise ValueError(f"{name} must be positive")
        if self.patch_stride > self.patch_size:
            raise ValueError("patch_stride must not exceed patch_size")


class _Adam:
    def __init__(self, cfg, weights):
        self.cfg = cfg
        self.t = 0
        self.m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in weights]
        self.v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in weights]

    def step(self, weights, grads):
        c = self.cfg
        self.t += 1
        bc1 = 1.0 - c.beta1 ** self.t
        bc2 = 1.0 - c.beta2 ** self.t
        out = []
        for i, ((w, b), (gw, gb)) in enumerate(zip(weights, grads)):
            mw, mb = self.m[i]
            vw, vb = self.v[i]
            mw = c.beta1 * mw + (1 - c.beta1) * gw
            mb = c.beta1 * mb + (1 - c.beta1) * gb
            vw = c.beta2 * vw + (1 - c.beta2) * gw * gw
            vb = c.beta2 * vb + (1 - c.beta2) * gb * gb
            self.m[i] = (mw, mb)
            self.v[i] = (vw, vb)
            w = w - c.learning_rate * (mw / bc1) / (np.sqrt(vw / bc2) + c.eps)
            b = b - c.learning_rate * (mb / bc1) / (np.sqrt(vb / bc2) + c.eps)
            out.append((w, b))
        return out


def train(spec, dataset, cfg: TrainConfig, initial_weights=None, progress=None):
    """Trains on (input, target) tensor pairs; returns (weights, loss_curve).

    Deterministic per cfg.seed: init, shuffling and gradient accumulation
    order are all fixed. loss_curve[i] is the mean DSSIM of epoch i.
    """
    if not dataset:
        raise ValueError("dataset must be nonempty")
    xs = np.stack([np.asarray(p[0], dtype=np.float64) for p in dataset])
    ts = np.stack([np.asarray(p[1], dtype=np.float64) for p in dataset])
    if xs.shape[1] != spec.input_channels:
        raise ValueError(f"dataset channels {xs.shape[1]} != net input {spec.input_channels}")
    ssim_cfg = SsimConfig(window=cfg.ssim_window)

    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    weights = initial_weights if initial_weights is not None else init_weights(spec, cfg.seed)
    opt = _Adam(cfg, weights)
    n = len(dataset)
    curve = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            x, t = xs[idx], ts[idx]
            out, caches = net_forward(spec, weights, x, want_caches=True)
            loss = dssim(out, t, ssim_cfg)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}"
                )
            total += loss * len(idx)
            if cfg.learning_rate > 0:
                grad_out = dssim_backward(out, t, ssim_cfg)
                grads, _ = net_backward(spec, weights, caches, grad_out)
                weights = opt.step(weights, grads)
        curve.append(total / n)
        if progress is not None:
            progress(epoch, curve[-1])
    return weights, curve


def write_loss_csv(path, curve):
    with open(path, "w") as fh:
        fh.write("epoch,mean_dssim\n")
        for epoch, loss in enumerate(curve):
            fh.write(f"{epoch},{loss!r}\n")


def read_loss_csv(path):
    curve = []
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != "epoch,mean_dssim":
            raise ValueError(f"{path}: unexpected loss CSV header")
        for line in fh:
            _, loss = line.strip().split(",")
            curve.append(float(loss))
    return curve
