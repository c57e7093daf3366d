"""Synthetic degraded-document corpus with ground truth by construction.

Each sample renders text-like strokes on a paper-toned background, then
degrades it with a mirrored faded back-impression, fold lines, ink blots
and grain noise. The undegraded layers are kept as the ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imgcore import (
    BinaryMask,
    ColorImage,
    gaussian_blur,
    read_mask,
    read_pnm,
    write_mask,
    write_pnm,
)
from .pipeline import RestorationBundle, compose_document


@dataclass(frozen=True)
class SynthSample:
    degraded: ColorImage
    truth: RestorationBundle
    bleed_mask: BinaryMask
    seed: int


def _stamp(mask, ys, xs, radius):
    h, w = mask.shape
    offsets = [(dy, dx) for dy in range(-radius, radius + 1)
               for dx in range(-radius, radius + 1)
               if dy * dy + dx * dx <= radius * radius]
    for dy, dx in offsets:
        yy = np.clip(ys + dy, 0, h - 1)
        xx = np.clip(xs + dx, 0, w - 1)
        mask[yy, xx] = True


def _draw_strokes(rng, size, n_lines, density=1.0):
    """Text-like squiggles arranged along horizontal lines."""
    mask = np.zeros((size, size), dtype=bool)
    margin = max(3, size // 16)
    line_gap = (size - 2 * margin) / max(n_lines, 1)
    for li in range(n_lines):
        y0 = margin + (li + 0.5) * line_gap
        x = float(margin)
        while x < size - margin:
            word_len = int(rng.integers(6, 18) * density)
            gap = float(rng.uniform(2, 6))
            y = y0 + float(rng.uniform(-1.5, 1.5))
            heading = float(rng.uniform(-0.6, 0.6))
            xs, ys = [], []
            for _ in range(word_len):
                xs.append(x)
                ys.append(y)
                heading += float(rng.normal(0, 0.7))
                heading = float(np.clip(heading, -1.2, 1.2))
                x += float(np.cos(heading) * 0.9 + 0.4)
                y += float(np.sin(heading) * 0.9)
                y += 0.15 * (y0 - y)  # pull back to the line
                if x >= size - margin:
                    break
            if xs:
                radius = int(rng.integers(1, 3)) if size >= 96 else 1
                _stamp(mask, np.array(ys).round().astype(int),
                       np.array(xs).round().astype(int), radius)
            x += gap
    return mask


def _low_freq_texture(rng, size, amplitude):
    coarse = rng.normal(0.0, 1.0, (size, size, 3))
    img = ColorImage(np.clip(coarse * 0.1 + 0.5, 0, 1))
    smooth = gaussian_blur(img, max(2.0, size / 32.0)).data - 0.5
    return smooth * (amplitude / max(float(smooth.std()), 1e-6))


def _soft_line(size, rng, depth):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    theta = float(rng.uniform(0, np.pi))
    c = float(rng.uniform(0.2, 0.8)) * size
    dist = np.abs(np.cos(theta) * xx + np.sin(theta) * yy - c)
    return 1.0 - depth * np.exp(-(dist * dist) / (2.0 * 1.5 ** 2))


def generate_sample(seed: int, size: int = 128, gamma: float = 0.7) -> SynthSample:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))

    paper = np.array([
        rng.uniform(0.78, 0.88), rng.uniform(0.74, 0.84), rng.uniform(0.62, 0.74)
    ])
    clean_bg = np.clip(paper[None, None, :] + _low_freq_texture(rng, size, 0.02), 0, 1)

    n_lines = max(3, size // 18)
    text_mask = _draw_strokes(rng, size, n_lines)

    ink = np.array([
        rng.uniform(0.08, 0.18), rng.uniform(0.07, 0.16), rng.uniform(0.10, 0.22)
    ])
    tone = np.clip(1.0 + rng.normal(0.0, 0.08, (size, size, 1)), 0.75, 1.25)
    ink_img = np.clip(ink[None, None, :] * tone, 0, 1)

    # degraded ink is a faded blend toward the paper tone
    fade = float(rng.uniform(0.25, 0.45))
    faded_ink = ink_img + fade * (clean_bg - ink_img)

    # ground-truth foreground follows the restoration recipe: the degraded
    # ink colours darkened by gamma under the mask, white fill elsewhere
    fg = np.where(text_mask[:, :, None], gamma * faded_ink, 1.0)
    mask = BinaryMask(text_mask)
    bg = ColorImage(clean_bg)
    restored = compose_document(mask, ColorImage(fg), bg)

    degraded = clean_bg.copy()
    degraded[text_mask] = faded_ink[text_mask]

    bleed_src = _draw_strokes(rng, size, max(2, n_lines - 2), density=0.9)
    bleed = np.flip(bleed_src, axis=1)  # seen through the page, mirrored
    alpha = float(rng.uniform(0.18, 0.32))
    bleed_color = ink + 0.55 * (paper - ink)
    # ink diffuses through the paper, so the visible impression is soft
    from .imgcore import GrayImage

    soft = gaussian_blur(GrayImage(bleed.astype(np.float64)), 0.8).data * alpha
    degraded = (1 - soft[:, :, None]) * degraded + soft[:, :, None] * bleed_color[None, None, :]

    for _ in range(int(rng.integers(1, 3))):
        degraded *= _soft_line(size, rng, float(rng.uniform(0.08, 0.2)))[:, :, None]

    for _ in range(int(rng.integers(0, 3))):
        cy, cx = rng.integers(0, size, 2)
        r = float(rng.uniform(2.0, 4.0))
        yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
        blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (r * r))
        degraded = degraded * (1 - blob[:, :, None]) + blob[:, :, None] * ink[None, None, :]

    degraded += rng.normal(0.0, 0.015, degraded.shape)
    degraded = np.clip(degraded, 0, 1)

    truth = RestorationBundle(mask, ColorImage(fg), bg, restored)
    return SynthSample(ColorImage(degraded), truth, BinaryMask(bleed), seed)


def synth_corpus(n: int, seed: int, size: int = 128):
    """Deterministic list of SynthSample; sample i gets its own child seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]
    return [generate_sample(s, size) for s in seeds]


# --- corpus on disk ---------------------------------------------------------

ROLE_FILES = {
    "degraded": "degraded.ppm",
    "gt_text": "gt_text.pgm",
    "gt_foreground": "gt_foreground.ppm",
    "gt_background": "gt_background.ppm",
    "gt_restored": "gt_restored.ppm",
    "bleed_mask": "bleed_mask.pgm",
}


def write_corpus(samples, out_dir, seed: int, size: int) -> dict:
    """Writes samples plus a manifest.json; returns the manifest document."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    items = []
    for i, sample in enumerate(samples):
        name = f"sample_{i:03d}"
        sdir = out / name
        sdir.mkdir(exist_ok=True)
        write_pnm(sample.degraded, sdir / ROLE_FILES["degraded"])
        write_mask(sample.truth.binarized_text, sdir / ROLE_FILES["gt_text"])
        write_pnm(sample.truth.restored_foreground, sdir / ROLE_FILES["gt_foreground"])
        write_pnm(sample.truth.restored_background, sdir / ROLE_FILES["gt_background"])
        write_pnm(sample.truth.restored_document, sdir / ROLE_FILES["gt_restored"])
        write_mask(sample.bleed_mask, sdir / ROLE_FILES["bleed_mask"])
        items.append({
            "id": name,
            "seed": sample.seed,
            **{role: f"{name}/{fname}" for role, fname in ROLE_FILES.items()},
        })
    manifest = {"version": 1, "seed": seed, "size": size, "count": len(items), "items": items}
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def read_manifest(path):
    path = Path(path)
    with open(path) as fh:
        manifest = json.load(fh)
    if manifest.get("version") != 1:
        raise ValueError(f"{path}: unsupported manifest version")
    return manifest, path.parent


def load_corpus_items(manifest_path, with_bleed=False):
    """Yields (degraded, RestorationBundle[, bleed]) tuples from a manifest."""
    manifest, root = read_manifest(manifest_path)
    out = []
    for item in manifest["items"]:
        degraded = read_pnm(root / item["degraded"])
        truth = RestorationBundle(
            read_mask(root / item["gt_text"]),
            read_pnm(root / item["gt_foreground"]),
            read_pnm(root / item["gt_background"]),
            read_pnm(root / item["gt_restored"]),
        )
        if with_bleed:
            out.append((degraded, truth, read_mask(root / item["bleed_mask"])))
        else:
            out.append((degraded, truth))
    return out
