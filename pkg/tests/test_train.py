import numpy as np
import pytest

from docrestore.nn import (
    LayerSpec,
    NetworkSpec,
    TrainConfig,
    TrainingDiverged,
    train,
    write_loss_csv,
)
from docrestore.nn.network import init_weights
from docrestore.nn.train import read_loss_csv


def tiny_net(window=5):
    layers = (
        LayerSpec("conv", 1, 4, (3, 3), 2, "same", "tanh"),
        LayerSpec("conv_transpose", 4, 1, (2, 2), 2, "same", "sigmoid"),
    )
    return NetworkSpec(layers, 1, dssim_window=window)


def tiny_dataset(n=4, size=16, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        x = rng.uniform(0, 1, (1, size, size))
        t = np.where(x > 0.5, 1.0, 0.0)
        out.append((x, t))
    return out


class TestTrainer:
    def test_zero_learning_rate_keeps_weights(self):
        net = tiny_net()
        data = tiny_dataset()
        cfg = TrainConfig(learning_rate=0.0, batch_size=2, epochs=3, seed=1,
                          patch_size=16, patch_stride=16, ssim_window=5)
        start = init_weights(net, cfg.seed)
        weights, curve = train(net, data, cfg, initial_weights=[(w.copy(), b.copy()) for w, b in start])
        for (w, b), (w0, b0) in zip(weights, start):
            assert np.array_equal(w, w0) and np.array_equal(b, b0)
        assert max(curve) == min(curve)  # flat loss

    def test_loss_decreases(self):
        net = tiny_net()
        data = tiny_dataset(n=6)
        cfg = TrainConfig(learning_rate=5e-3, batch_size=3, epochs=8, seed=2,
                          patch_size=16, patch_stride=16, ssim_window=5)
        _, curve = train(net, data, cfg)
        assert curve[-1] < curve[0]

    def test_bit_reproducible(self):
        net = tiny_net()
        data = tiny_dataset(n=4)
        cfg = TrainConfig(learning_rate=1e-3, batch_size=2, epochs=2, seed=3,
                          patch_size=16, patch_stride=16, ssim_window=5)
        w1, c1 = train(net, data, cfg)
        w2, c2 = train(net, data, cfg)
        assert c1 == c2
        for (a, ab), (b, bb) in zip(w1, w2):
            assert np.array_equal(a, b) and np.array_equal(ab, bb)

    def test_nan_loss_aborts_with_batch_index(self):
        net = tiny_net()
        data = [(np.full((1, 16, 16), np.nan), np.zeros((1, 16, 16)))]
        cfg = TrainConfig(learning_rate=1e-3, batch_size=1, epochs=1, seed=4,
                          patch_size=16, patch_stride=16, ssim_window=5)
        with pytest.raises(TrainingDiverged, match="batch 0"):
            train(net, data, cfg)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            train(tiny_net(), [], TrainConfig(patch_size=16, patch_stride=16))

    def test_stride_bound(self):
        with pytest.raises(ValueError):
            TrainConfig(patch_size=16, patch_stride=32)


class TestLossCsv:
    def test_round_trip(self, tmp_path):
        curve = [0.41231231230001, 0.25, 0.1000000001]
        path = tmp_path / "loss.csv"
        write_loss_csv(path, curve)
        assert read_loss_csv(path) == curve
