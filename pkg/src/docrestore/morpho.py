"""Binary/grayscale morphology, toggle filter, thresholding, speckle removal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imgcore import BinaryMask, GrayImage, Histogram256


@dataclass(frozen=True)
class StructuringElement:
    """Flat structuring element: square(n), disk(r) or cross(n), centered origin."""

    shape: str = "square"
    size: int = 3

    def __post_init__(self):
        if self.shape not in ("square", "disk", "cross"):
            raise ValueError(f"unknown structuring element shape: {self.shape!r}")
        if self.size < 1:
            raise ValueError("structuring element size must be >= 1")

    def footprint(self) -> np.ndarray:
        if self.shape == "square":
            return np.ones((self.size, self.size), dtype=bool)
        if self.shape == "cross":
            fp = np.zeros((self.size, self.size), dtype=bool)
            fp[self.size // 2, :] = True
            fp[:, self.size // 2] = True
            return fp
        r = self.size
        yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
        return (yy * yy + xx * xx) <= r * r

    def mirrored(self) -> np.ndarray:
        return self.footprint()[::-1, ::-1]


def square(n: int) -> StructuringElement:
    return StructuringElement("square", n)


def disk(r: int) -> StructuringElement:
    return StructuringElement("disk", r)


def cross(n: int) -> StructuringElement:
    return StructuringElement("cross", n)


# Binary morphology. Pixels outside the image count as background for both
# operators, so erosion eats the border of a full mask and dilation never
# wraps. Erosion/dilation duality and closing extensivity therefore hold on
# the image interior (pixels at least one SE reach from the border).

def erode(mask: BinaryMask, se: StructuringElement) -> BinaryMask:
    return BinaryMask(ndimage.binary_erosion(mask.bits, structure=se.footprint(), border_value=0))


def dilate(mask: BinaryMask, se: StructuringElement) -> BinaryMask:
    return BinaryMask(ndimage.binary_dilation(mask.bits, structure=se.footprint(), border_value=0))


def open_mask(mask: BinaryMask, se: StructuringElement) -> BinaryMask:
    return dilate(erode(mask, se), se)


def close_mask(mask: BinaryMask, se: StructuringElement) -> BinaryMask:
    return erode(dilate(mask, se), se)


def gray_erode(img: GrayImage, se: StructuringElement) -> GrayImage:
    return GrayImage(ndimage.grey_erosion(img.data, footprint=se.footprint(), mode="nearest"))


def gray_dilate(img: GrayImage, se: StructuringElement) -> GrayImage:
    return GrayImage(ndimage.grey_dilation(img.data, footprint=se.footprint(), mode="nearest"))


def toggle_filter(img: GrayImage, se: StructuringElement) -> GrayImage:
    """Toggle-contrast operator: snap each pixel to the nearer of its local
    erosion/dilation envelope, keeping the original value on ties."""
    f = img.data
    d = gray_dilate(img, se).data
    e = gray_erode(img, se).data
    out = f.copy()
    to_d = (d - f) < (f - e)
    to_e = (f - e) < (d - f)
    out[to_d] = d[to_d]
    out[to_e] = e[to_e]
    return GrayImage(out)


def _box_sums(padded: np.ndarray, window: int, out_h: int, out_w: int) -> np.ndarray:
    """Sliding-window sums over a pre-padded plane via integral image."""
    ii = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.float64)
    ii[1:, 1:] = padded.cumsum(axis=0).cumsum(axis=1)
    w = window
    return ii[w : w + out_h, w : w + out_w] - ii[:out_h, w : w + out_w] - ii[w : w + out_h, :out_w] + ii[:out_h, :out_w]


def local_mean_std(img: GrayImage, window: int):
    """Windowed mean and population std with edge-replicated borders."""
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be odd and >= 3")
    if window > img.height or window > img.width:
        raise ValueError(f"window {window} exceeds image {img.width}x{img.height}")
    r = window // 2
    padded = np.pad(img.data, r, mode="edge")
    n = float(window * window)
    s1 = _box_sums(padded, window, img.height, img.width)
    s2 = _box_sums(padded * padded, window, img.height, img.width)
    mean = s1 / n
    var = np.maximum(s2 / n - mean * mean, 0.0)
    return mean, np.sqrt(var)


def adaptive_threshold(img: GrayImage, window: int = 31, bias: float = 0.2) -> BinaryMask:
    """Text = pixels darker than local mean minus bias * local std."""
    mean, std = local_mean_std(img, window)
    # the 1e-12 guard absorbs integral-image rounding so constant images
    # come out all-background; it is far below one gray level
    return BinaryMask(img.data < mean - bias * std - 1e-12)


class NoValleyError(ValueError):
    """Raised when a smoothed histogram exposes fewer than two modes."""


def _smooth_bins(bins: np.ndarray, window: int) -> np.ndarray:
    # centered moving average; truncated (renormalized) at the ends
    kernel = np.ones(window)
    sums = np.convolve(bins.astype(np.float64), kernel, mode="same")
    counts = np.convolve(np.ones_like(bins, dtype=np.float64), kernel, mode="same")
    return sums / counts


def _plateau_peaks(values: np.ndarray):
    """Indices of local maxima; a plateau reports its lowest bin."""
    peaks = []
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j + 1 < n and values[j + 1] == values[i]:
            j += 1
        left_ok = i == 0 or values[i - 1] < values[i]
        right_ok = j == n - 1 or values[j + 1] < values[i]
        if left_ok and right_ok and values[i] > 0:
            peaks.append(i)
        i = j + 1
    return peaks


def moving_average_threshold(h: Histogram256, window: int = 11) -> int:
    """Valley between the two dominant modes of the smoothed histogram.

    Deterministic: dominant modes are the two highest smoothed peaks (lower
    bin wins ties) and the returned valley is the lowest minimum-count bin
    strictly between them.
    """
    if h.total <= 0:
        raise ValueError("histogram is empty")
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and >= 1")
    smoothed = _smooth_bins(h.bins, window)
    peaks = _plateau_peaks(smoothed)
    if len(peaks) < 2:
        raise NoValleyError("no valley found: histogram is unimodal after smoothing")
    ranked = sorted(peaks, key=lambda i: (-smoothed[i], i))
    lo, hi = sorted(ranked[:2])
    if hi - lo < 2:
        raise NoValleyError("no valley found: dominant modes are adjacent")
    between = smoothed[lo + 1 : hi]
    return lo + 1 + int(np.argmin(between))


def remove_speckles(mask: BinaryMask, min_area: int) -> BinaryMask:
    """Drops 8-connected foreground components smaller than min_area."""
    if min_area < 1:
        raise ValueError("min_area must be >= 1")
    if min_area == 1:
        return mask
    labels, count = ndimage.label(mask.bits, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return mask
    areas = np.bincount(labels.ravel())
    keep = areas >= min_area
    keep[0] = False
    return BinaryMask(keep[labels])
