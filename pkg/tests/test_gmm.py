import numpy as np
import pytest

from docrestore.gmm import (
    ClusterRoles,
    Gmm1D,
    Gmm3D,
    assign_clusters,
    dumps_model,
    fit_em_1d,
    fit_em_3d,
    identify_roles,
    load_model,
    loads_model,
    mean_luma,
    responsibilities,
    sample_background,
    save_model,
    synthesize_background,
)
from docrestore.imgcore import ColorImage


class TestFitEm1d:
    def test_single_component_closed_form(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(0.1, 0.9, 500)
        model, trace = fit_em_1d(x, 1, seed=3)
        assert model.priors[0] == pytest.approx(1.0)
        assert model.means[0] == pytest.approx(x.mean(), abs=1e-12)
        assert model.stds[0] == pytest.approx(x.std(), abs=1e-12)

    def test_two_delta_clusters(self):
        x = np.concatenate([np.full(6000, 0.2), np.full(4000, 0.8)])
        model, trace = fit_em_1d(x, 2, seed=1)
        order = np.argsort(model.means)
        assert np.allclose(model.means[order], [0.2, 0.8], atol=0.01)
        assert np.allclose(model.priors[order], [0.6, 0.4], atol=0.02)
        assert trace.clamped_components  # deltas collapse onto the std floor

    def test_loglik_nondecreasing(self):
        rng = np.random.default_rng(2)
        x = np.concatenate([rng.normal(0.3, 0.05, 300), rng.normal(0.7, 0.08, 200)])
        _, trace = fit_em_1d(np.clip(x, 0, 1), 2, seed=0)
        diffs = np.diff(trace.log_likelihood_per_iter)
        assert (diffs >= -1e-9).all()

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 1, 400)
        m1, t1 = fit_em_1d(x, 3, seed=11)
        m2, t2 = fit_em_1d(x, 3, seed=11)
        assert np.array_equal(m1.means, m2.means)
        assert np.array_equal(m1.priors, m2.priors)
        assert np.array_equal(m1.stds, m2.stds)
        assert t1.log_likelihood_per_iter == t2.log_likelihood_per_iter

    def test_k_exceeds_distinct_samples(self):
        with pytest.raises(ValueError, match="distinct"):
            fit_em_1d(np.array([0.5, 0.5, 0.5]), 2, seed=0)

    def test_empty_samples(self):
        with pytest.raises(ValueError):
            fit_em_1d(np.array([]), 1, seed=0)


class TestFitEm3d:
    def test_single_component_sample_stats(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(0.2, 0.8, (400, 3))
        model, _ = fit_em_3d(x, 1, seed=0)
        assert np.allclose(model.means[0], x.mean(axis=0), atol=1e-10)
        # covariance matches population stats up to the eigenvalue floor
        assert np.allclose(model.covs[0], np.cov(x.T, bias=True), atol=2e-6)

    def test_two_blob_recovery(self):
        rng = np.random.default_rng(5)
        a = rng.normal([0.2, 0.3, 0.25], 0.02, (6000, 3))
        b = rng.normal([0.8, 0.7, 0.75], 0.02, (4000, 3))
        x = np.clip(np.vstack([a, b]), 0, 1)
        model, trace = fit_em_3d(x, 2, seed=1)
        order = np.argsort(model.means[:, 0])
        assert np.allclose(model.means[order[0]], [0.2, 0.3, 0.25], atol=0.01)
        assert np.allclose(model.means[order[1]], [0.8, 0.7, 0.75], atol=0.01)
        diffs = np.diff(trace.log_likelihood_per_iter)
        assert (diffs >= -1e-9).all()

    def test_responsibilities_sum_to_one(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(0, 1, (200, 3))
        model, _ = fit_em_3d(x, 3, seed=2)
        resp = responsibilities(model, x)
        assert np.allclose(resp.sum(axis=1), 1.0, atol=1e-12)

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(0, 1, (300, 3))
        m1, _ = fit_em_3d(x, 2, seed=9)
        m2, _ = fit_em_3d(x, 2, seed=9)
        assert np.array_equal(m1.means, m2.means)
        assert np.array_equal(m1.covs, m2.covs)


class TestAssignClusters:
    def _model(self):
        priors = np.array([0.6, 0.4])
        means = np.array([[0.2, 0.2, 0.2], [0.8, 0.8, 0.8]])
        covs = np.stack([np.eye(3) * 0.01, np.eye(3) * 0.01])
        return Gmm3D(priors, means, covs)

    def test_pixel_at_dominant_mean(self):
        model = self._model()
        img = ColorImage(np.tile([0.2, 0.2, 0.2], (2, 2, 1)))
        assert (assign_clusters(model, img) == 0).all()

    def test_single_component_all_zero(self):
        model = Gmm3D(np.array([1.0]), np.array([[0.5, 0.5, 0.5]]), np.eye(3)[None] * 0.01)
        img = ColorImage(np.random.default_rng(8).uniform(0, 1, (3, 4, 3)))
        assert (assign_clusters(model, img) == 0).all()

    def test_pointwise_permutation(self):
        model = self._model()
        rng = np.random.default_rng(9)
        data = rng.uniform(0, 1, (4, 5, 3))
        labels = assign_clusters(model, ColorImage(data))
        flipped = assign_clusters(model, ColorImage(data[::-1].copy()))
        assert np.array_equal(labels[::-1], flipped)


class TestIdentifyRoles:
    def _model(self, priors, lumas):
        # build means whose luma matches the requested values (gray means)
        means = np.array([[l / 0.99, l / 0.99, l / 0.99] for l in lumas]).clip(0, 1)
        covs = np.stack([np.eye(3) * 0.01] * len(priors))
        return Gmm3D(np.array(priors), means, covs)

    def test_four_role_example(self):
        model = self._model([0.05, 0.55, 0.25, 0.15], [0.95, 0.70, 0.15, 0.45])
        roles = identify_roles(model)
        assert roles.scanner_white_idx == 0
        assert roles.background_idx == 1
        assert roles.text_idx == 2
        assert roles.noise_idxs == (3,)

    def test_two_component_example(self):
        model = self._model([0.7, 0.3], [0.8, 0.2])
        roles = identify_roles(model)
        assert roles.background_idx == 0 and roles.text_idx == 1
        assert roles.scanner_white_idx is None and roles.noise_idxs == ()

    def test_prior_rescaling_stable(self):
        model = self._model([0.05, 0.55, 0.25, 0.15], [0.95, 0.70, 0.15, 0.45])
        scaled = Gmm3D(model.priors.copy(), model.means, model.covs)
        assert identify_roles(model) == identify_roles(scaled)

    def test_k1_rejected(self):
        model = Gmm3D(np.array([1.0]), np.array([[0.5, 0.5, 0.5]]), np.eye(3)[None] * 0.01)
        with pytest.raises(ValueError, match="K < 2"):
            identify_roles(model)

    def test_luma_uses_gray_weights(self):
        model = self._model([0.5, 0.5], [0.9, 0.1])
        assert np.allclose(mean_luma(model), [0.9, 0.1], atol=1e-9)


class TestSynthesizeBackground:
    def _model(self):
        priors = np.array([0.7, 0.3])
        means = np.array([[0.8, 0.75, 0.65], [0.1, 0.1, 0.1]])
        covs = np.stack([np.eye(3) * 0.001, np.eye(3) * 0.001])
        model = Gmm3D(priors, means, covs)
        return model, identify_roles(model)

    def test_sample_mean_statistical_bound(self):
        model, roles = self._model()
        n = 64 * 48
        img = sample_background(model, roles, 64, 48, seed=5)
        bound = 3 * np.sqrt(0.001) / np.sqrt(n)
        for c in range(3):
            assert abs(img.data[:, :, c].mean() - model.means[0, c]) < bound * 1.5

    def test_degenerate_variance_near_constant(self):
        priors = np.array([0.9, 0.1])
        means = np.array([[0.7, 0.7, 0.6], [0.1, 0.1, 0.1]])
        covs = np.stack([np.eye(3) * 1e-6, np.eye(3) * 1e-6])
        model = Gmm3D(priors, means, covs)
        roles = identify_roles(model)
        img = synthesize_background(model, roles, 16, 16, seed=1, blur_sigma=1.0)
        assert np.abs(img.data - means[0]).max() < 0.01

    def test_seed_reproducible(self):
        model, roles = self._model()
        a = synthesize_background(model, roles, 20, 20, seed=42, blur_sigma=1.5)
        b = synthesize_background(model, roles, 20, 20, seed=42, blur_sigma=1.5)
        assert np.array_equal(a.data, b.data)


class TestSerialization:
    def test_gmm3d_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(10)
        x = rng.uniform(0, 1, (500, 3))
        model, _ = fit_em_3d(x, 3, seed=4)
        path = tmp_path / "model.gmm"
        save_model(model, path)
        again = load_model(path)
        assert np.array_equal(model.priors, again.priors)
        assert np.array_equal(model.means, again.means)
        assert np.array_equal(model.covs, again.covs)

    def test_gmm1d_round_trip_exact(self):
        rng = np.random.default_rng(11)
        model, _ = fit_em_1d(rng.uniform(0, 1, 300), 2, seed=5)
        again = loads_model(dumps_model(model))
        assert np.array_equal(model.means, again.means)
        assert np.array_equal(model.stds, again.stds)

    def test_bad_header(self):
        with pytest.raises(ValueError):
            loads_model("nonsense 9\n")


class TestInvariants:
    def test_trace_rejects_decreasing(self):
        from docrestore.gmm import EmTrace

        with pytest.raises(ValueError):
            EmTrace(2, [1.0, 0.5], True)

    def test_roles_require_distinct(self):
        with pytest.raises(ValueError):
            ClusterRoles(0, 0)

    def test_gmm1d_prior_sum(self):
        with pytest.raises(ValueError):
            Gmm1D(np.array([0.5, 0.4]), np.array([0.2, 0.8]), np.array([0.1, 0.1]))
