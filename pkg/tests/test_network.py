import numpy as np
import pytest

from docrestore.nn import (
    LayerSpec,
    NetworkSpec,
    WeightFileError,
    build_color_net,
    build_text_net,
    init_weights,
    load_weights,
    net_forward,
    net_spec_hash,
    save_weights,
)
from docrestore.nn.layers import ShapeError
from docrestore.nn.network import net_backward


class TestBuilders:
    def test_text_net_channels(self):
        net = build_text_net()
        assert net.input_channels == 1
        assert net.output_channels == 1

    def test_color_net_channels(self):
        net = build_color_net(3)
        assert net.input_channels == 3
        assert net.output_channels == 3

    def test_layer_counts_and_kinds(self):
        net = build_text_net()
        kinds = [l.kind for l in net.layers]
        assert kinds == ["conv"] * 4 + ["conv_transpose"] * 6

    def test_filter_and_kernel_ledger(self):
        net = build_text_net()
        assert [l.out_ch for l in net.layers[:4]] == [32, 64, 128, 256]
        assert [l.kernel[0] for l in net.layers[:4]] == [8, 5, 3, 2]
        assert [l.out_ch for l in net.layers[4:]] == [128, 64, 64, 16, 8, 1]
        assert [l.kernel[0] for l in net.layers[4:]] == [4, 2, 2, 1, 2, 3]
        assert [l.stride for l in net.layers[4:]] == [2, 2, 2, 2, 1, 1]

    def test_activations(self):
        net = build_text_net()
        assert all(l.activation == "tanh" for l in net.layers[:-1])
        assert net.layers[-1].activation == "sigmoid"

    def test_shape_audit_256(self):
        shapes = [s[0] for s in build_text_net().forward_shapes((256, 256))]
        assert shapes == [256, 128, 64, 32, 16, 32, 64, 128, 256, 256, 256]

    def test_shape_audit_64(self):
        shapes = [s[0] for s in build_text_net().forward_shapes((64, 64))]
        assert shapes == [64, 32, 16, 8, 4, 8, 16, 32, 64, 64, 64]

    def test_channel_chain_validated(self):
        bad = (
            LayerSpec("conv", 1, 8, (3, 3), 2, "same", "tanh"),
            LayerSpec("conv", 4, 8, (3, 3), 2, "same", "tanh"),
        )
        with pytest.raises(ValueError, match="channels"):
            NetworkSpec(bad, 1)


class TestForwardBackward:
    def _small_net(self):
        layers = (
            LayerSpec("conv", 1, 4, (3, 3), 2, "same", "tanh"),
            LayerSpec("conv_transpose", 4, 1, (2, 2), 2, "same", "sigmoid"),
        )
        return NetworkSpec(layers, 1, dssim_window=5)

    def test_forward_output_shape_and_range(self):
        net = self._small_net()
        weights = init_weights(net, seed=0)
        x = np.random.default_rng(0).uniform(0, 1, (2, 1, 8, 8))
        out = net_forward(net, weights, x)
        assert out.shape == (2, 1, 8, 8)
        assert ((out > 0) & (out < 1)).all()  # final sigmoid keeps (0,1)

    def test_full_net_runs_on_64(self):
        net = build_text_net()
        weights = init_weights(net, seed=1)
        x = np.random.default_rng(1).uniform(0, 1, (1, 1, 64, 64))
        out = net_forward(net, weights, x)
        assert out.shape == (1, 1, 64, 64)

    def test_backward_matches_fd_through_two_layers(self):
        from conftest import central_diff_grad, max_rel_err

        net = self._small_net()
        weights = init_weights(net, seed=2)
        rng = np.random.default_rng(2)
        x = rng.uniform(0, 1, (1, 1, 6, 6))
        probe = rng.standard_normal((1, 1, 6, 6))

        def loss():
            return float((net_forward(net, weights, x) * probe).sum())

        out, caches = net_forward(net, weights, x, want_caches=True)
        grads, gx = net_backward(net, weights, caches, probe)
        assert max_rel_err(gx, central_diff_grad(loss, x)) < 1e-6
        for i in range(2):
            assert max_rel_err(grads[i][0], central_diff_grad(loss, weights[i][0])) < 1e-6
            assert max_rel_err(grads[i][1], central_diff_grad(loss, weights[i][1])) < 1e-6

    def test_wrong_channel_input(self):
        net = self._small_net()
        weights = init_weights(net, seed=3)
        with pytest.raises(ShapeError, match="expects"):
            net_forward(net, weights, np.zeros((1, 3, 8, 8)))

    def test_init_deterministic(self):
        net = self._small_net()
        w1 = init_weights(net, seed=9)
        w2 = init_weights(net, seed=9)
        for (a, ab), (b, bb) in zip(w1, w2):
            assert np.array_equal(a, b) and np.array_equal(ab, bb)

    def test_init_respects_fan_limit(self):
        from docrestore.nn.network import INIT_GAIN

        net = build_text_net()
        for layer, (w, b) in zip(net.layers, init_weights(net, seed=4)):
            kh, kw = layer.kernel
            limit = INIT_GAIN * np.sqrt(6.0 / ((layer.in_ch + layer.out_ch) * kh * kw))
            assert np.abs(w).max() <= limit
            assert not b.any()

    def test_init_keeps_signal_alive(self):
        # different inputs must produce visibly different outputs at init
        net = build_text_net()
        weights = init_weights(net, seed=8)
        rng = np.random.default_rng(8)
        a = net_forward(net, weights, rng.uniform(0, 1, (1, 1, 64, 64)))
        b = net_forward(net, weights, rng.uniform(0, 1, (1, 1, 64, 64)))
        assert np.abs(a - b).max() > 0.01


class TestWeightsIo:
    def test_round_trip_exact(self, tmp_path):
        net = build_text_net()
        weights = init_weights(net, seed=5)
        path = tmp_path / "w.bin"
        save_weights(path, net, weights)
        again = load_weights(path, net)
        for (w, b), (w2, b2) in zip(weights, again):
            assert np.array_equal(w, w2) and np.array_equal(b, b2)

    def test_wrong_spec_rejected(self, tmp_path):
        net = build_text_net()
        path = tmp_path / "w.bin"
        save_weights(path, net, init_weights(net, seed=6))
        with pytest.raises(WeightFileError, match="different network spec"):
            load_weights(path, build_color_net(3))

    def test_truncated_file_names_offset(self, tmp_path):
        net = build_text_net()
        path = tmp_path / "w.bin"
        save_weights(path, net, init_weights(net, seed=7))
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(WeightFileError, match="offset"):
            load_weights(path, net)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "w.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(WeightFileError, match="magic"):
            load_weights(path, build_text_net())

    def test_spec_hash_stable_and_distinct(self):
        assert net_spec_hash(build_text_net()) == net_spec_hash(build_text_net())
        assert net_spec_hash(build_text_net()) != net_spec_hash(build_color_net(3))
