"""Image containers, PNM file I/O, gray conversion, contrast and blur.

All pixel data is kept as normalized float64 in [0, 1]; 8-bit values only
exist at the file I/O boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

LUMA_WEIGHTS = (0.30, 0.59, 0.10)  # sums to 0.99 by design, see README


class PnmError(ValueError):
    """Malformed PNM file; `offset` is the byte position of the problem."""

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (byte {offset})")
        self.offset = offset


def _check_raster(data, channels):
    if data.ndim != (3 if channels == 3 else 2):
        raise ValueError(f"expected {'HxWx3' if channels == 3 else 'HxW'} array, got shape {data.shape}")
    if channels == 3 and data.shape[2] != 3:
        raise ValueError(f"expected 3 channels, got {data.shape[2]}")
    if data.shape[0] < 1 or data.shape[1] < 1:
        raise ValueError("image must be at least 1x1")


@dataclass(frozen=True)
class ColorImage:
    """RGB raster; `data` is float64 (height, width, 3) in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        _check_raster(self.data, 3)
        object.__setattr__(self, "data", np.asarray(self.data, dtype=np.float64))

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def height(self):
        return self.data.shape[0]

    @classmethod
    def from_u8(cls, u8):
        return cls(np.asarray(u8, dtype=np.float64) / 255.0)

    def to_u8(self):
        return np.clip(np.rint(self.data * 255.0), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class GrayImage:
    """Scalar raster; `data` is float64 (height, width) in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        _check_raster(self.data, 1)
        object.__setattr__(self, "data", np.asarray(self.data, dtype=np.float64))

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def height(self):
        return self.data.shape[0]

    @classmethod
    def from_u8(cls, u8):
        return cls(np.asarray(u8, dtype=np.float64) / 255.0)

    def to_u8(self):
        return np.clip(np.rint(self.data * 255.0), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel text mask; `bits` is bool (height, width), True = text."""

    bits: np.ndarray

    def __post_init__(self):
        _check_raster(self.bits, 1)
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=bool))

    @property
    def width(self):
        return self.bits.shape[1]

    @property
    def height(self):
        return self.bits.shape[0]

    def count(self):
        return int(self.bits.sum())


@dataclass(frozen=True)
class Histogram256:
    bins: np.ndarray
    total: int

    def __post_init__(self):
        object.__setattr__(self, "bins", np.asarray(self.bins, dtype=np.int64))
        if self.bins.shape != (256,):
            raise ValueError("histogram must have exactly 256 bins")
        if int(self.bins.sum()) != self.total:
            raise ValueError("histogram bins do not sum to total")


@dataclass(frozen=True)
class ContrastTransform:
    """Monotone map of [0,1] onto [0,1].

    kinds:
      gamma            v = i ** param          (param > 0)
      log              v = log(1 + param*i) / log(1 + param)   (param > 0)
      piecewise        linear interpolation through `points`, which must
                       start at x=0, end at x=1 and be monotone in both
                       coordinates with y in [0,1]
    """

    kind: str = "gamma"
    param: float = 1.0
    points: tuple = field(default=())

    def __post_init__(self):
        if self.kind in ("gamma", "log"):
            if self.param <= 0:
                raise ValueError(f"{self.kind} parameter must be > 0")
        elif self.kind == "piecewise":
            pts = tuple((float(x), float(y)) for x, y in self.points)
            if len(pts) < 2:
                raise ValueError("piecewise transform needs at least two control points")
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            if xs[0] != 0.0 or xs[-1] != 1.0:
                raise ValueError("piecewise control points must span x=0..1")
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError("piecewise x coordinates must be strictly increasing")
            if any(b < a for a, b in zip(ys, ys[1:])):
                raise ValueError("piecewise transform must be monotone non-decreasing")
            if min(ys) < 0.0 or max(ys) > 1.0:
                raise ValueError("piecewise y coordinates must lie in [0,1]")
            object.__setattr__(self, "points", pts)
        else:
            raise ValueError(f"unknown contrast transform kind: {self.kind!r}")

    def __call__(self, values):
        v = np.asarray(values, dtype=np.float64)
        if self.kind == "gamma":
            return np.power(v, self.param)
        if self.kind == "log":
            return np.log1p(self.param * v) / np.log1p(self.param)
        xs = np.array([p[0] for p in self.points])
        ys = np.array([p[1] for p in self.points])
        return np.interp(v, xs, ys)


IDENTITY_TRANSFORM = ContrastTransform("gamma", 1.0)


def to_gray_luma(img: ColorImage) -> GrayImage:
    """Weighted-channel gray conversion for bright writing media."""
    r, g, b = LUMA_WEIGHTS
    out = r * img.data[:, :, 0] + g * img.data[:, :, 1] + b * img.data[:, :, 2]
    return GrayImage(np.clip(out, 0.0, 1.0))


def to_gray_max(img: ColorImage) -> GrayImage:
    """Channel-maximum gray conversion for dark writing media."""
    return GrayImage(img.data.max(axis=2))


def apply_contrast(img: GrayImage, t: ContrastTransform) -> GrayImage:
    return GrayImage(np.clip(t(img.data), 0.0, 1.0))


def histogram(img: GrayImage) -> Histogram256:
    u8 = img.to_u8()
    bins = np.bincount(u8.ravel(), minlength=256)
    return Histogram256(bins, int(u8.size))


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Truncated normalized Gaussian, radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _blur_plane(plane, kernel):
    # separable correlation; 'nearest' replicates the edge pixel
    out = correlate1d(plane, kernel, axis=0, mode="nearest")
    return correlate1d(out, kernel, axis=1, mode="nearest")


def gaussian_blur(img, sigma: float):
    """Separable Gaussian blur with edge replication; accepts gray or color."""
    kernel = gaussian_kernel_1d(sigma)
    if isinstance(img, GrayImage):
        return GrayImage(_blur_plane(img.data, kernel))
    if isinstance(img, ColorImage):
        planes = [_blur_plane(img.data[:, :, c], kernel) for c in range(3)]
        return ColorImage(np.stack(planes, axis=2))
    raise TypeError(f"cannot blur {type(img).__name__}")


# --- PNM (binary PGM/PPM, maxval 255) ------------------------------------

def _parse_pnm_header(blob):
    """Returns (magic, width, height, payload offset). Raises PnmError."""
    if len(blob) < 2:
        raise PnmError("file too short for PNM magic", offset=0)
    magic = blob[:2]
    if magic not in (b"P5", b"P6"):
        raise PnmError(f"unsupported magic {magic!r}, expected P5 or P6", offset=0)
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        token = blob[start:pos]
        if not token:
            raise PnmError("truncated header", offset=start)
        if not token.isdigit():
            raise PnmError(f"expected integer header field, got {token!r}", offset=start)
        fields.append((int(token), start))
    (width, woff), (height, hoff), (maxval, moff) = fields
    if width < 1 or height < 1:
        raise PnmError(f"bad dimensions {width}x{height}", offset=woff if width < 1 else hoff)
    if maxval != 255:
        raise PnmError(f"unsupported maxval {maxval}, only 255 is supported", offset=moff)
    if pos >= len(blob):
        raise PnmError("missing whitespace after maxval", offset=pos)
    pos += 1  # exactly one whitespace byte separates header from payload
    return magic, width, height, pos


def decode_pnm(blob: bytes):
    """Decodes P5 -> GrayImage, P6 -> ColorImage."""
    magic, width, height, pos = _parse_pnm_header(blob)
    channels = 1 if magic == b"P5" else 3
    expected = width * height * channels
    payload = blob[pos : pos + expected]
    if len(payload) != expected:
        raise PnmError(
            f"truncated pixel payload: expected {expected} bytes, got {len(payload)}",
            offset=pos + len(payload),
        )
    u8 = np.frombuffer(payload, dtype=np.uint8)
    if channels == 1:
        return GrayImage.from_u8(u8.reshape(height, width))
    return ColorImage.from_u8(u8.reshape(height, width, 3))


def encode_pnm(img) -> bytes:
    if isinstance(img, GrayImage):
        magic, payload = b"P5", img.to_u8().tobytes()
    elif isinstance(img, ColorImage):
        magic, payload = b"P6", img.to_u8().tobytes()
    else:
        raise TypeError(f"cannot encode {type(img).__name__} as PNM")
    header = magic + b"\n%d %d\n255\n" % (img.width, img.height)
    return header + payload


def read_pnm(path):
    with open(path, "rb") as fh:
        return decode_pnm(fh.read())


def write_pnm(img, path):
    with open(path, "wb") as fh:
        fh.write(encode_pnm(img))


# --- mask <-> image conversions -------------------------------------------

def mask_to_gray(mask: BinaryMask) -> GrayImage:
    """Text renders black (0.0) on white (1.0), the document convention."""
    return GrayImage(np.where(mask.bits, 0.0, 1.0))


def gray_to_mask(img: GrayImage, threshold: float = 0.5) -> BinaryMask:
    """Pixels darker than `threshold` are text."""
    return BinaryMask(img.data < threshold)


def read_mask(path) -> BinaryMask:
    img = read_pnm(path)
    if not isinstance(img, GrayImage):
        raise ValueError(f"{path}: masks must be stored as PGM")
    return gray_to_mask(img)


def write_mask(mask: BinaryMask, path):
    write_pnm(mask_to_gray(mask), path)
