import numpy as np

from docrestore.synth import (
    generate_sample,
    load_corpus_items,
    synth_corpus,
    write_corpus,
)


class TestGenerateSample:
    def test_reproducible(self):
        a = generate_sample(123, 64)
        b = generate_sample(123, 64)
        assert np.array_equal(a.degraded.data, b.degraded.data)
        assert np.array_equal(a.truth.restored_document.data, b.truth.restored_document.data)
        assert np.array_equal(a.bleed_mask.bits, b.bleed_mask.bits)

    def test_degraded_differs_from_clean(self):
        s = generate_sample(1, 96)
        diff = np.abs(s.degraded.data - s.truth.restored_document.data).mean()
        assert diff > 0.01

    def test_overlay_invariant(self):
        s = generate_sample(2, 64)
        expected = np.where(
            s.truth.binarized_text.bits[:, :, None],
            s.truth.restored_foreground.data,
            s.truth.restored_background.data,
        )
        assert np.array_equal(s.truth.restored_document.data, expected)

    def test_has_text_and_bleed(self):
        s = generate_sample(3, 128)
        assert s.truth.binarized_text.bits.sum() > 100
        assert s.bleed_mask.bits.sum() > 50

    def test_bleed_is_mirrored_strokes(self):
        # mirrored bleed: flipping back gives a stroke-like mask whose row
        # occupancy matches a text layout (content in the line band)
        s = generate_sample(4, 96)
        unmirrored = s.bleed_mask.bits[:, ::-1]
        assert unmirrored.sum() == s.bleed_mask.bits.sum()


class TestCorpus:
    def test_fixed_seed_bit_identical(self):
        a = synth_corpus(3, 7, 48)
        b = synth_corpus(3, 7, 48)
        for sa, sb in zip(a, b):
            assert np.array_equal(sa.degraded.data, sb.degraded.data)
            assert sa.seed == sb.seed

    def test_distinct_samples(self):
        samples = synth_corpus(2, 9, 48)
        assert not np.array_equal(samples[0].degraded.data, samples[1].degraded.data)

    def test_write_and_load_round_trip(self, tmp_path):
        samples = synth_corpus(2, 11, 48)
        manifest = write_corpus(samples, tmp_path / "corpus", seed=11, size=48)
        assert manifest["count"] == 2
        items = load_corpus_items(tmp_path / "corpus" / "manifest.json", with_bleed=True)
        assert len(items) == 2
        degraded, truth, bleed = items[0]
        assert np.array_equal(degraded.to_u8(), samples[0].degraded.to_u8())
        assert np.array_equal(truth.binarized_text.bits, samples[0].truth.binarized_text.bits)
        assert np.array_equal(bleed.bits, samples[0].bleed_mask.bits)

    def test_manifest_lists_roles(self, tmp_path):
        samples = synth_corpus(1, 13, 48)
        manifest = write_corpus(samples, tmp_path / "c", seed=13, size=48)
        item = manifest["items"][0]
        for role in ("degraded", "gt_text", "gt_foreground", "gt_background",
                     "gt_restored", "bleed_mask"):
            assert role in item
            assert (tmp_path / "c" / item[role]).exists()
        assert "seed" in item
