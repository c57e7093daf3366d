"""End-to-end orchestration: patches, ground-truth bundles, both methods."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gmm as gmm_mod
from .imgcore import (
    BinaryMask,
    ColorImage,
    ContrastTransform,
    GrayImage,
    apply_contrast,
    gaussian_blur,
    gray_to_mask,
    histogram,
    mask_to_gray,
    read_mask,
    read_pnm,
    to_gray_luma,
    to_gray_max,
    write_mask,
    write_pnm,
)
from .morpho import (
    NoValleyError,
    StructuringElement,
    adaptive_threshold,
    close_mask,
    moving_average_threshold,
    open_mask,
    remove_speckles,
    toggle_filter,
)


@dataclass(frozen=True)
class GammaParam:
    """Space-invariant ink darkening factor, strictly inside (0, 1)."""

    gamma: float

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must be in (0,1), got {self.gamma}")


@dataclass(frozen=True)
class PatchGrid:
    patch_size: int
    stride: int
    origins: tuple   # row-major (x, y) anchors
    height: int
    width: int


def _axis_anchors(dim, patch, stride):
    anchors = list(range(0, dim - patch + 1, stride))
    if anchors[-1] != dim - patch:
        anchors.append(dim - patch)
    return anchors


def patchify(img, patch_size: int, stride: int):
    """Splits an image into overlapping in-bounds patches.

    Returns (PatchGrid, list of patches of the same image type).
    """
    if stride < 1 or patch_size < 1:
        raise ValueError("patch_size and stride must be >= 1")
    if stride > patch_size:
        raise ValueError("stride larger than patch_size leaves pixels uncovered")
    h, w = img.data.shape[:2]
    if patch_size > h or patch_size > w:
        raise ValueError(f"patch {patch_size} larger than image {w}x{h}")
    xs = _axis_anchors(w, patch_size, stride)
    ys = _axis_anchors(h, patch_size, stride)
    origins = tuple((x, y) for y in ys for x in xs)
    cls = type(img)
    patches = [
        cls(img.data[y : y + patch_size, x : x + patch_size].copy()) for x, y in origins
    ]
    return PatchGrid(patch_size, stride, origins, h, w), patches


def stitch(grid: PatchGrid, patches):
    """Averages overlapping patches back into a full image.

    Pixels whose contributions all agree take that exact value, so stitching
    unmodified patches reproduces the source image bit for bit.
    """
    if len(patches) != len(grid.origins):
        raise ValueError(f"expected {len(grid.origins)} patches, got {len(patches)}")
    first = patches[0]
    shape = (grid.height, grid.width) + first.data.shape[2:]
    acc = np.zeros(shape, dtype=np.float64)
    lo = np.full(shape, np.inf)
    hi = np.full(shape, -np.inf)
    cover = np.zeros((grid.height, grid.width), dtype=np.float64)
    p = grid.patch_size
    for (x, y), patch in zip(grid.origins, patches):
        if patch.data.shape[:2] != (p, p):
            raise ValueError(f"patch at ({x},{y}) has shape {patch.data.shape}")
        region = (slice(y, y + p), slice(x, x + p))
        acc[region] += patch.data
        np.minimum(lo[region], patch.data, out=lo[region])
        np.maximum(hi[region], patch.data, out=hi[region])
        cover[region] += 1.0
    if cover.ndim < acc.ndim:
        cover = cover[..., None]
    return type(first)(np.where(lo == hi, lo, acc / cover))


@dataclass(frozen=True)
class RestorationBundle:
    """The four ground-truth/restoration rasters; the restored document is
    exactly the foreground under the text mask and the background elsewhere."""

    binarized_text: BinaryMask
    restored_foreground: ColorImage
    restored_background: ColorImage
    restored_document: ColorImage

    def __post_init__(self):
        dims = {
            (r.height, r.width)
            for r in (
                self.binarized_text,
                self.restored_foreground,
                self.restored_background,
                self.restored_document,
            )
        }
        if len(dims) != 1:
            raise ValueError(f"bundle rasters disagree on dimensions: {dims}")
        expected = compose_document(
            self.binarized_text, self.restored_foreground, self.restored_background
        )
        if not np.array_equal(expected.data, self.restored_document.data):
            raise ValueError("restored document violates the overlay invariant")


def compose_document(mask: BinaryMask, fg: ColorImage, bg: ColorImage) -> ColorImage:
    return ColorImage(np.where(mask.bits[:, :, None], fg.data, bg.data))


FILL_WHITE = 1.0


def restore_foreground_colour(mask: BinaryMask, img: ColorImage, g) -> ColorImage:
    """Darkened ink colours under the mask, white fill elsewhere."""
    if isinstance(g, (int, float)):
        g = GammaParam(float(g))
    if mask.bits.shape != img.data.shape[:2]:
        raise ValueError(f"mask {mask.bits.shape} does not match image {img.data.shape[:2]}")
    out = np.where(mask.bits[:, :, None], g.gamma * img.data, FILL_WHITE)
    return ColorImage(out)


@dataclass(frozen=True)
class GtParams:
    """Everything the semi-automatic ground-truth recipe can be tuned with."""

    bright_medium: bool = True
    contrast: ContrastTransform = field(default_factory=lambda: ContrastTransform("gamma", 0.8))
    threshold: object = "adaptive"   # "adaptive" | "valley" | explicit level in [0,1]
    adaptive_window: int = 31
    adaptive_bias: float = 0.2
    valley_window: int = 11
    se_shape: str = "square"
    close_size: int = 3
    open_size: int = 3
    min_area: int = 8
    text_blur_sigma: float = 0.5
    gamma: float = 0.7
    k: int = 4
    em_seed: int = 0
    em_max_iter: int = 200
    em_tol: float = 1e-6
    em_subsample: int = 200_000
    bg_seed: int = 0
    bg_blur_sigma: float = 2.0

    def __post_init__(self):
        GammaParam(self.gamma)
        if not (1 <= self.k <= gmm_mod.MAX_COMPONENTS):
            raise ValueError(f"K must be in [1, {gmm_mod.MAX_COMPONENTS}]")
        if isinstance(self.threshold, str):
            if self.threshold not in ("adaptive", "valley"):
                raise ValueError(f"unknown threshold mode {self.threshold!r}")
        elif not (0.0 <= float(self.threshold) <= 1.0):
            raise ValueError("explicit threshold must be in [0,1]")


def preprocess_gray(img: ColorImage, params: GtParams) -> GrayImage:
    gray = to_gray_luma(img) if params.bright_medium else to_gray_max(img)
    return apply_contrast(gray, params.contrast)


def binarize_document_gray(v: GrayImage, params: GtParams) -> BinaryMask:
    """Threshold step of the GT recipe; valley mode falls back to adaptive."""
    if params.threshold == "adaptive":
        return adaptive_threshold(v, params.adaptive_window, params.adaptive_bias)
    if params.threshold == "valley":
        try:
            level = moving_average_threshold(histogram(v), params.valley_window)
        except NoValleyError:
            return adaptive_threshold(v, params.adaptive_window, params.adaptive_bias)
        return BinaryMask(v.data < level / 255.0)
    return BinaryMask(v.data < float(params.threshold))


def cleanup_mask(mask: BinaryMask, params: GtParams) -> BinaryMask:
    if params.close_size > 0:
        mask = close_mask(mask, StructuringElement(params.se_shape, params.close_size))
    if params.open_size > 0:
        mask = open_mask(mask, StructuringElement(params.se_shape, params.open_size))
    if params.min_area > 1:
        mask = remove_speckles(mask, params.min_area)
    return mask


def smooth_text_mask(mask: BinaryMask, sigma: float) -> BinaryMask:
    """Light Gaussian blur of the text image, re-binarized at mid gray."""
    if sigma <= 0:
        return mask
    return gray_to_mask(gaussian_blur(mask_to_gray(mask), sigma))


def text_net_target(mask: BinaryMask, sigma: float) -> GrayImage:
    """Training target for the text net: black text, softly blurred."""
    img = mask_to_gray(mask)
    if sigma > 0:
        img = gaussian_blur(img, sigma)
    return img


def fit_background_model(img: ColorImage, params: GtParams):
    model, trace = gmm_mod.fit_em_3d(
        img.data.reshape(-1, 3),
        params.k,
        seed=params.em_seed,
        max_iter=params.em_max_iter,
        tol=params.em_tol,
        subsample_cap=params.em_subsample,
    )
    roles = gmm_mod.identify_roles(model)
    return model, roles, trace


def generate_groundtruth(img: ColorImage, params: GtParams = GtParams(),
                         background=None) -> RestorationBundle:
    """The full semi-automatic recipe: gray, contrast, threshold, morphology,
    text smoothing, ink darkening, mixture background, overlay.

    `background` optionally supplies a pre-fitted (model, roles) pair so an
    interactive caller can reuse one mixture fit across parameter tweaks.
    """
    v = preprocess_gray(img, params)
    mask = binarize_document_gray(v, params)
    mask = cleanup_mask(mask, params)
    mask = smooth_text_mask(mask, params.text_blur_sigma)
    fg = restore_foreground_colour(mask, img, params.gamma)
    if background is None:
        model, roles, _ = fit_background_model(img, params)
    else:
        model, roles = background
    bg = gmm_mod.synthesize_background(
        model, roles, img.width, img.height, params.bg_seed, params.bg_blur_sigma
    )
    restored = compose_document(mask, fg, bg)
    return RestorationBundle(mask, fg, bg, restored)


BUNDLE_FILES = {
    "binarized_text": "text.pgm",
    "restored_foreground": "foreground.ppm",
    "restored_background": "background.ppm",
    "restored_document": "restored.ppm",
}


def write_bundle(bundle: RestorationBundle, out_dir, params_doc=None):
    """Writes the four rasters (and optional params.json); returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_mask(bundle.binarized_text, out / BUNDLE_FILES["binarized_text"])
    write_pnm(bundle.restored_foreground, out / BUNDLE_FILES["restored_foreground"])
    write_pnm(bundle.restored_background, out / BUNDLE_FILES["restored_background"])
    write_pnm(bundle.restored_document, out / BUNDLE_FILES["restored_document"])
    written = [str(out / name) for name in BUNDLE_FILES.values()]
    if params_doc is not None:
        with open(out / "params.json", "w") as fh:
            json.dump(params_doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(str(out / "params.json"))
    return written


def read_bundle(out_dir) -> RestorationBundle:
    out = Path(out_dir)
    return RestorationBundle(
        read_mask(out / BUNDLE_FILES["binarized_text"]),
        read_pnm(out / BUNDLE_FILES["restored_foreground"]),
        read_pnm(out / BUNDLE_FILES["restored_background"]),
        read_pnm(out / BUNDLE_FILES["restored_document"]),
    )


# --- network-facing helpers ------------------------------------------------

def image_to_tensor(img) -> np.ndarray:
    """(C, H, W) float64 view of a gray or color image."""
    if isinstance(img, GrayImage):
        return img.data[None]
    if isinstance(img, ColorImage):
        return np.moveaxis(img.data, 2, 0)
    raise TypeError(f"cannot make a tensor from {type(img).__name__}")


def tensor_to_image(t: np.ndarray):
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    if t.shape[0] == 1:
        return GrayImage(t[0])
    if t.shape[0] == 3:
        return ColorImage(np.moveaxis(t, 0, 2))
    raise ValueError(f"expected 1 or 3 channels, got {t.shape[0]}")


def run_net_on_image(spec, weights, img, patch_size: int, stride: int, batch: int = 8):
    """Patch-wise network inference followed by overlap-averaged stitching."""
    from .nn import net_forward  # local import keeps module load light

    grid, patches = patchify(img, patch_size, stride)
    tensors = np.stack([image_to_tensor(p) for p in patches])
    outs = []
    for start in range(0, len(tensors), batch):
        outs.append(net_forward(spec, weights, tensors[start : start + batch]))
    out = np.concatenate(outs)
    out_patches = [tensor_to_image(t) for t in out]
    return stitch(grid, out_patches)


def binarize_net_output(tb: GrayImage, params: GtParams, se_size: int = 3):
    """Toggle filter then histogram-valley thresholding of a text map."""
    toggled = toggle_filter(tb, StructuringElement(params.se_shape, se_size))
    try:
        level = moving_average_threshold(histogram(toggled), params.valley_window)
        mask = BinaryMask(toggled.data < level / 255.0)
    except NoValleyError:
        mask = adaptive_threshold(toggled, params.adaptive_window, params.adaptive_bias)
    return mask, toggled


def method1_restore(img: ColorImage, spec, weights, params: GtParams,
                    patch_size: int = 256, stride: int = 50) -> RestorationBundle:
    """Text net binarization plus mixture-model background reconstruction."""
    v = preprocess_gray(img, params)
    tb = run_net_on_image(spec, weights, v, patch_size, stride)
    mask, _ = binarize_net_output(tb, params)
    fg = restore_foreground_colour(mask, img, params.gamma)
    model, roles, _ = fit_background_model(img, params)
    bg = gmm_mod.synthesize_background(
        model, roles, img.width, img.height, params.bg_seed, params.bg_blur_sigma
    )
    return RestorationBundle(mask, fg, bg, compose_document(mask, fg, bg))


# Presence cut sits in the gap between reconstruction residue (fill-distance
# under ~0.25) and darkened ink (above ~0.5); see the calibration run.
PRESENCE_TAU = 0.3


def foreground_presence(fg: ColorImage, tau: float = PRESENCE_TAU) -> BinaryMask:
    """Pixels of a foreground image that depart from the white fill."""
    return BinaryMask(np.abs(fg.data - FILL_WHITE).max(axis=2) > tau)


def method2_restore(img: ColorImage, fg_spec, fg_weights, bg_spec, bg_weights,
                    patch_size: int = 256, stride: int = 50,
                    tau: float = PRESENCE_TAU) -> RestorationBundle:
    """Parallel foreground/background nets merged by fill-distance pickup."""
    fg = run_net_on_image(fg_spec, fg_weights, img, patch_size, stride)
    bg = run_net_on_image(bg_spec, bg_weights, img, patch_size, stride)
    mask = foreground_presence(fg, tau)
    return RestorationBundle(mask, fg, bg, compose_document(mask, fg, bg))


def augment_flips(pairs):
    """Originals plus horizontally and vertically flipped copies (3x size)."""
    out = list(pairs)
    out.extend((np.flip(a, axis=-1).copy(), np.flip(b, axis=-1).copy()) for a, b in pairs)
    out.extend((np.flip(a, axis=-2).copy(), np.flip(b, axis=-2).copy()) for a, b in pairs)
    return out


def build_training_pairs(task: str, items, params: GtParams,
                         patch_size: int, stride: int):
    """(input, target) tensor pairs for one of the three nets.

    items is an iterable of (degraded ColorImage, RestorationBundle).
    """
    pairs = []
    for degraded, truth in items:
        if task == "text":
            src = preprocess_gray(degraded, params)
            dst = text_net_target(truth.binarized_text, params.text_blur_sigma)
        elif task == "fg":
            src, dst = degraded, truth.restored_foreground
        elif task == "bg":
            src, dst = degraded, truth.restored_background
        else:
            raise ValueError(f"unknown training task {task!r}")
        grid, src_patches = patchify(src, patch_size, stride)
        _, dst_patches = patchify(dst, patch_size, stride)
        pairs.extend(
            (image_to_tensor(a), image_to_tensor(b))
            for a, b in zip(src_patches, dst_patches)
        )
    return pairs
