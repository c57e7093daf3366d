"""Binarization evaluation: F-measure, pseudo-F, PSNR, DRD and reporting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .imgcore import BinaryMask
from .morpho import dilate, square

PSNR_CAP = 99.0
DRD_BLOCK = 8


def _check_dims(pred: BinaryMask, gt: BinaryMask):
    if pred.bits.shape != gt.bits.shape:
        raise ValueError(f"mask dims differ: {pred.bits.shape} vs {gt.bits.shape}")


def f_measure(pred: BinaryMask, gt: BinaryMask) -> float:
    """Harmonic mean of precision and recall, in percent."""
    _check_dims(pred, gt)
    p, g = pred.bits, gt.bits
    if not g.any():
        return 100.0 if not p.any() else 0.0
    tp = float(np.logical_and(p, g).sum())
    fp = float(np.logical_and(p, ~g).sum())
    fn = float(np.logical_and(~p, g).sum())
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn)
    if precision + recall == 0:
        return 0.0
    return 100.0 * 2.0 * precision * recall / (precision + recall)


def skeletonize(mask: BinaryMask) -> BinaryMask:
    """Zhang-Suen thinning to a 1-pixel-wide skeleton."""
    img = np.pad(mask.bits.astype(np.uint8), 1)
    changed = True
    while changed:
        changed = False
        for phase in (0, 1):
            p2 = img[:-2, 1:-1]
            p3 = img[:-2, 2:]
            p4 = img[1:-1, 2:]
            p5 = img[2:, 2:]
            p6 = img[2:, 1:-1]
            p7 = img[2:, :-2]
            p8 = img[1:-1, :-2]
            p9 = img[:-2, :-2]
            center = img[1:-1, 1:-1]
            ring = [p2, p3, p4, p5, p6, p7, p8, p9]
            bsum = sum(r.astype(np.int32) for r in ring)
            a = sum(
                np.logical_and(ring[i] == 0, ring[(i + 1) % 8] == 1).astype(np.int32)
                for i in range(8)
            )
            if phase == 0:
                cond = (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
            else:
                cond = (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
            remove = (
                (center == 1) & (bsum >= 2) & (bsum <= 6) & (a == 1) & cond
            )
            if remove.any():
                img[1:-1, 1:-1][remove] = 0
                changed = True
    return BinaryMask(img[1:-1, 1:-1].astype(bool))


def pseudo_f_measure(pred: BinaryMask, gt: BinaryMask, tolerance_px: int = 1) -> float:
    """Skeleton-weighted recall and boundary-tolerant precision, in percent.

    Recall is measured only on the GT skeleton; precision forgives
    predictions within `tolerance_px` of the GT strokes.
    """
    _check_dims(pred, gt)
    p, g = pred.bits, gt.bits
    if not g.any():
        return 100.0 if not p.any() else 0.0
    if not p.any():
        return 0.0
    skel = skeletonize(gt).bits
    recall = float(np.logical_and(p, skel).sum()) / float(skel.sum())
    tolerant = dilate(gt, square(2 * tolerance_px + 1)).bits
    precision = float(np.logical_and(p, tolerant).sum()) / float(p.sum())
    if precision + recall == 0:
        return 0.0
    return 100.0 * 2.0 * precision * recall / (precision + recall)


def psnr(pred: BinaryMask, gt: BinaryMask) -> float:
    """PSNR of the masks as {0,1} images; capped at 99 dB when identical."""
    _check_dims(pred, gt)
    mse = float(np.mean(pred.bits != gt.bits))
    if mse == 0.0:
        return PSNR_CAP
    return 10.0 * math.log10(1.0 / mse)


def drd_weight_matrix() -> np.ndarray:
    """5x5 reciprocal-distance weights, zero center, normalized to sum 1."""
    w = np.zeros((5, 5))
    for i in range(5):
        for j in range(5):
            di, dj = i - 2, j - 2
            if di or dj:
                w[i, j] = 1.0 / np.sqrt(di * di + dj * dj)
    return w / w.sum()


def count_nubn(gt: BinaryMask, block: int = DRD_BLOCK) -> int:
    """Non-uniform blocks of the GT grid anchored at (0,0); edge blocks count."""
    bits = gt.bits
    h, w = bits.shape
    n = 0
    for i in range(0, h, block):
        for j in range(0, w, block):
            tile = bits[i : i + block, j : j + block]
            if tile.any() and not tile.all():
                n += 1
    return n


def drd(pred: BinaryMask, gt: BinaryMask) -> float:
    """Distance reciprocal distortion; out-of-image neighbors are skipped."""
    _check_dims(pred, gt)
    p, g = pred.bits.astype(np.float64), gt.bits.astype(np.float64)
    flipped = pred.bits != gt.bits
    if not flipped.any():
        return 0.0
    nubn = count_nubn(gt)
    if nubn == 0:
        return 0.0
    weights = drd_weight_matrix()
    h, w = g.shape
    acc = np.zeros_like(g)
    for i in range(5):
        for j in range(5):
            wt = weights[i, j]
            if wt == 0.0:
                continue
            di, dj = i - 2, j - 2
            src_i0, src_i1 = max(0, di), min(h, h + di)
            src_j0, src_j1 = max(0, dj), min(w, w + dj)
            dst_i0, dst_i1 = max(0, -di), min(h, h - di)
            dst_j0, dst_j1 = max(0, -dj), min(w, w - dj)
            acc[dst_i0:dst_i1, dst_j0:dst_j1] += wt * np.abs(
                g[src_i0:src_i1, src_j0:src_j1] - p[dst_i0:dst_i1, dst_j0:dst_j1]
            )
    return float(acc[flipped].sum() / nubn)


@dataclass(frozen=True)
class MetricsRow:
    image: str
    fm: float
    fps: float
    psnr: float
    drd: float


@dataclass(frozen=True)
class MetricsReport:
    rows: tuple
    avg_fm: float
    avg_fps: float
    avg_psnr: float
    avg_drd: float


def evaluate_pair(name: str, pred: BinaryMask, gt: BinaryMask) -> MetricsRow:
    return MetricsRow(
        image=name,
        fm=f_measure(pred, gt),
        fps=pseudo_f_measure(pred, gt),
        psnr=psnr(pred, gt),
        drd=drd(pred, gt),
    )


def report(rows) -> MetricsReport:
    rows = tuple(rows)
    if not rows:
        raise ValueError("report needs at least one row")
    return MetricsReport(
        rows=rows,
        avg_fm=float(np.mean([r.fm for r in rows])),
        avg_fps=float(np.mean([r.fps for r in rows])),
        avg_psnr=float(np.mean([r.psnr for r in rows])),
        avg_drd=float(np.mean([r.drd for r in rows])),
    )


def write_report_csv(rep: MetricsReport, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image", "FM", "Fps", "PSNR", "DRD"])
        for r in rep.rows:
            writer.writerow([r.image, repr(r.fm), repr(r.fps), repr(r.psnr), repr(r.drd)])
        writer.writerow(
            ["Average", repr(rep.avg_fm), repr(rep.avg_fps), repr(rep.avg_psnr), repr(rep.avg_drd)]
        )


def read_report_csv(path) -> MetricsReport:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["image", "FM", "Fps", "PSNR", "DRD"]:
            raise ValueError(f"{path}: unexpected report header {header}")
        for rec in reader:
            if rec[0] == "Average":
                continue
            rows.append(MetricsRow(rec[0], *(float(v) for v in rec[1:])))
    return report(rows)
