"""Layered configuration: built-in defaults < key=value file < CLI flags."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .imgcore import ContrastTransform
from .pipeline import GtParams


@dataclass(frozen=True)
class Config:
    # ground-truth recipe
    bright_medium: bool = True
    contrast_kind: str = "gamma"
    contrast_param: float = 0.8
    threshold: str = "adaptive"      # "adaptive" | "valley" | numeric string
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
    # network / training
    patch_size: int = 256
    patch_stride: int = 50
    learning_rate: float = 1e-3
    batch_size: int = 8
    epochs: int = 10
    train_seed: int = 0
    ssim_window: int = 23
    presence_tau: float = 0.3

    def gt_params(self) -> GtParams:
        threshold = self.threshold
        if isinstance(threshold, str) and threshold not in ("adaptive", "valley"):
            threshold = float(threshold)
        if self.contrast_kind == "identity":
            contrast = ContrastTransform("gamma", 1.0)
        else:
            contrast = ContrastTransform(self.contrast_kind, self.contrast_param)
        return GtParams(
            bright_medium=self.bright_medium,
            contrast=contrast,
            threshold=threshold,
            adaptive_window=self.adaptive_window,
            adaptive_bias=self.adaptive_bias,
            valley_window=self.valley_window,
            se_shape=self.se_shape,
            close_size=self.close_size,
            open_size=self.open_size,
            min_area=self.min_area,
            text_blur_sigma=self.text_blur_sigma,
            gamma=self.gamma,
            k=self.k,
            em_seed=self.em_seed,
            em_max_iter=self.em_max_iter,
            em_tol=self.em_tol,
            em_subsample=self.em_subsample,
            bg_seed=self.bg_seed,
            bg_blur_sigma=self.bg_blur_sigma,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(Config)}


def _coerce(name: str, raw: str):
    if name not in _FIELD_TYPES:
        raise ValueError(f"unknown config key {name!r}")
    current = getattr(Config(), name)
    if isinstance(current, bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"config key {name!r} expects a boolean, got {raw!r}")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw.strip()


def parse_config_text(text: str) -> dict:
    """Parses `key = value` lines; '#' starts a comment; blank lines skipped."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = stripped.split("=", 1)
        values[key.strip()] = _coerce(key.strip(), raw)
    return values


def load_config(path=None, overrides=None) -> Config:
    """Merges defaults, an optional config file and explicit overrides."""
    values = {}
    if path is not None:
        with open(path) as fh:
            values.update(parse_config_text(fh.read()))
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _FIELD_TYPES:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = val
    cfg = Config(**values)
    cfg.gt_params()  # validates against module invariants at load time
    return cfg


def dump_config(cfg: Config) -> str:
    lines = [f"{k} = {v}" for k, v in sorted(asdict(cfg).items())]
    return "\n".join(lines) + "\n"
