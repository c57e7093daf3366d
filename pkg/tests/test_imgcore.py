import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docrestore.imgcore import (
    BinaryMask,
    ColorImage,
    ContrastTransform,
    GrayImage,
    PnmError,
    apply_contrast,
    decode_pnm,
    encode_pnm,
    gaussian_blur,
    gaussian_kernel_1d,
    gray_to_mask,
    histogram,
    mask_to_gray,
    read_pnm,
    to_gray_luma,
    to_gray_max,
    write_pnm,
)


def color_of(*rgb):
    return ColorImage.from_u8(np.array([[rgb]], dtype=np.uint8))


class TestGrayConversion:
    def test_luma_white(self):
        # 0.30 + 0.59 + 0.10 = 0.99, so pure white lands on 252
        assert to_gray_luma(color_of(255, 255, 255)).to_u8()[0, 0] == 252

    def test_luma_black(self):
        assert to_gray_luma(color_of(0, 0, 0)).to_u8()[0, 0] == 0

    def test_luma_gray100(self):
        assert to_gray_luma(color_of(100, 100, 100)).to_u8()[0, 0] == 99

    def test_max_rule(self):
        assert to_gray_max(color_of(10, 200, 30)).to_u8()[0, 0] == 200
        assert to_gray_max(color_of(0, 0, 0)).to_u8()[0, 0] == 0
        assert to_gray_max(color_of(7, 7, 7)).to_u8()[0, 0] == 7

    def test_pointwise_permutation(self):
        rng = np.random.default_rng(0)
        u8 = rng.integers(0, 256, (4, 6, 3), dtype=np.uint8)
        img = ColorImage.from_u8(u8)
        flat = ColorImage.from_u8(u8.reshape(1, 24, 3)[:, ::-1])
        for fn in (to_gray_luma, to_gray_max):
            a = fn(img).data.reshape(-1)[::-1]
            b = fn(flat).data.reshape(-1)
            assert np.array_equal(a, b)


class TestContrast:
    def test_identity_bit_identical(self):
        rng = np.random.default_rng(1)
        img = GrayImage(rng.uniform(0, 1, (8, 8)))
        out = apply_contrast(img, ContrastTransform("gamma", 1.0))
        assert np.array_equal(out.data, img.data)

    def test_gamma_two(self):
        img = GrayImage(np.array([[0.5]]))
        assert apply_contrast(img, ContrastTransform("gamma", 2.0)).data[0, 0] == 0.25

    def test_log_endpoints(self):
        t = ContrastTransform("log", 255.0)
        assert t(0.0) == 0.0
        assert abs(t(1.0) - 1.0) < 1e-12

    def test_piecewise_rejects_non_monotone(self):
        with pytest.raises(ValueError):
            ContrastTransform("piecewise", points=((0, 0), (0.5, 0.8), (1.0, 0.4)))

    def test_piecewise_interpolates(self):
        t = ContrastTransform("piecewise", points=((0, 0), (0.5, 0.25), (1, 1)))
        assert t(0.25) == pytest.approx(0.125)

    @settings(max_examples=30, deadline=None)
    @given(
        st.floats(0.2, 5.0),
        st.lists(st.floats(0, 1), min_size=2, max_size=8),
    )
    def test_monotone_order_preserved(self, exponent, values):
        t = ContrastTransform("gamma", exponent)
        img = GrayImage(np.array([values]))
        out = apply_contrast(img, t).data[0]
        order = np.argsort(values, kind="stable")
        assert np.all(np.diff(out[order]) >= -1e-15)


class TestHistogram:
    def test_constant_image(self):
        h = histogram(GrayImage(np.full((2, 2), 7 / 255.0)))
        assert h.bins[7] == 4 and h.total == 4 and h.bins.sum() == 4

    def test_matches_brute_count(self):
        rng = np.random.default_rng(2)
        u8 = rng.integers(0, 256, (13, 9), dtype=np.uint8)
        h = histogram(GrayImage.from_u8(u8))
        for k in range(256):
            assert h.bins[k] == int((u8 == k).sum())

    def test_total_is_pixel_count(self):
        img = GrayImage(np.zeros((5, 7)))
        assert histogram(img).total == 35


class TestGaussianBlur:
    def test_constant_preserved(self):
        img = GrayImage(np.full((9, 11), 0.42))
        out = gaussian_blur(img, 1.3)
        assert np.allclose(out.data, 0.42, atol=1e-12)

    def test_impulse_gives_kernel(self):
        sigma = 1.0
        k = gaussian_kernel_1d(sigma)
        r = (len(k) - 1) // 2
        size = 4 * r + 1
        img = np.zeros((size, size))
        img[size // 2, size // 2] = 1.0
        out = gaussian_blur(GrayImage(img), sigma).data
        expected = np.outer(k, k)
        region = out[size // 2 - r : size // 2 + r + 1, size // 2 - r : size // 2 + r + 1]
        assert np.allclose(region, expected, atol=1e-12)

    def test_mass_preserved_away_from_borders(self):
        # constant ring around random content: total deviation mass invariant
        sigma = 1.2
        r = int(np.ceil(3 * sigma))
        rng = np.random.default_rng(3)
        img = np.full((24, 24), 0.5)
        img[r : 24 - r, r : 24 - r] = rng.uniform(0, 1, (24 - 2 * r, 24 - 2 * r))
        out = gaussian_blur(GrayImage(img), sigma).data
        assert abs((out - 0.5).mean() - (img - 0.5).mean()) < 1e-6

    def test_linearity(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(0, 1, (12, 12))
        y = rng.uniform(0, 1, (12, 12))
        a, b = 0.3, 0.6
        lhs = gaussian_blur(GrayImage(a * x + b * y), 0.8).data
        rhs = a * gaussian_blur(GrayImage(x), 0.8).data + b * gaussian_blur(GrayImage(y), 0.8).data
        assert np.allclose(lhs, rhs, atol=1e-9)

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            gaussian_blur(GrayImage(np.zeros((3, 3))), 0.0)

    def test_color_blur_per_channel(self):
        rng = np.random.default_rng(5)
        img = ColorImage(rng.uniform(0, 1, (10, 10, 3)))
        out = gaussian_blur(img, 1.0)
        for c in range(3):
            plane = gaussian_blur(GrayImage(img.data[:, :, c]), 1.0).data
            assert np.array_equal(out.data[:, :, c], plane)


class TestPnm:
    def test_color_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        img = ColorImage.from_u8(rng.integers(0, 256, (16, 16, 3), dtype=np.uint8))
        path = tmp_path / "img.ppm"
        write_pnm(img, path)
        again = read_pnm(path)
        assert np.array_equal(img.to_u8(), again.to_u8())
        write_pnm(again, tmp_path / "img2.ppm")
        assert (tmp_path / "img.ppm").read_bytes() == (tmp_path / "img2.ppm").read_bytes()

    def test_gray_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        img = GrayImage.from_u8(rng.integers(0, 256, (5, 9), dtype=np.uint8))
        path = tmp_path / "img.pgm"
        write_pnm(img, path)
        assert np.array_equal(read_pnm(path).to_u8(), img.to_u8())

    def test_unsupported_maxval(self):
        with pytest.raises(PnmError, match="unsupported maxval"):
            decode_pnm(b"P5\n2 2\n65535\n" + b"\x00" * 8)

    def test_truncated_payload_names_counts(self):
        try:
            decode_pnm(b"P5\n4 4\n255\n" + b"\x00" * 7)
        except PnmError as exc:
            assert "expected 16" in str(exc) and "got 7" in str(exc)
            assert exc.offset is not None
        else:
            pytest.fail("expected PnmError")

    def test_bad_magic(self):
        with pytest.raises(PnmError, match="magic"):
            decode_pnm(b"P3\n1 1\n255\n\x00")

    def test_comments_in_header(self):
        blob = b"P5\n# a comment\n2 1\n255\n\x01\x02"
        img = decode_pnm(blob)
        assert np.array_equal(img.to_u8(), np.array([[1, 2]], dtype=np.uint8))


class TestMaskConversions:
    def test_round_trip(self):
        rng = np.random.default_rng(8)
        mask = BinaryMask(rng.uniform(size=(6, 6)) < 0.4)
        assert np.array_equal(gray_to_mask(mask_to_gray(mask)).bits, mask.bits)

    def test_text_is_black(self):
        mask = BinaryMask(np.array([[True, False]]))
        assert mask_to_gray(mask).data[0, 0] == 0.0
        assert mask_to_gray(mask).data[0, 1] == 1.0
