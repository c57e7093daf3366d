import numpy as np
import pytest

from docrestore.imgcore import BinaryMask, ColorImage
from docrestore.synth import _low_freq_texture, _stamp


def build_mild_document(seed, size=128, radius=3, noise=0.01):
    """Stroke image built from a known mask: the self-built oracle for the
    ground-truth recipe. No bleed-through, folds or blots."""
    rng = np.random.Generator(np.random.PCG64(seed))
    paper = np.array([0.84, 0.80, 0.68])
    bg = np.clip(paper[None, None, :] + _low_freq_texture(rng, size, 0.02), 0, 1)
    mask = np.zeros((size, size), dtype=bool)
    margin = 10
    lines = max(2, round(size / 26))  # keeps ink well below paper frequency
    for li in range(lines):
        y0 = margin + (li + 0.5) * (size - 2 * margin) / lines
        x = float(margin)
        while x < size - margin:
            n = int(rng.integers(8, 20))
            y = y0 + float(rng.uniform(-1.5, 1.5))
            heading = float(rng.uniform(-0.6, 0.6))
            xs, ys = [], []
            for _ in range(n):
                xs.append(x)
                ys.append(y)
                heading = float(np.clip(heading + rng.normal(0, 0.7), -1.2, 1.2))
                x += float(np.cos(heading) * 0.9 + 0.4)
                y += float(np.sin(heading) * 0.9)
                y += 0.15 * (y0 - y)
                if x >= size - margin:
                    break
            if xs:
                _stamp(mask, np.array(ys).round().astype(int),
                       np.array(xs).round().astype(int), radius)
            x += float(rng.uniform(3, 7))
    ink = np.array([0.15, 0.12, 0.18])
    img = bg.copy()
    img[mask] = ink
    img = np.clip(img + rng.normal(0, noise, img.shape), 0, 1)
    return ColorImage(img), BinaryMask(mask)


@pytest.fixture
def mild_document():
    return build_mild_document(5)


def central_diff_grad(f, x, h=1e-5):
    """Dense central finite differences of scalar f against array x in place."""
    g = np.zeros_like(x)
    flat, gf = x.ravel(), g.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gf[i] = (fp - fm) / (2.0 * h)
    return g


def max_rel_err(analytic, reference):
    scale = max(float(np.abs(reference).max()), 1e-12)
    return float(np.abs(analytic - reference).max()) / scale
