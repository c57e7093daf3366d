"""Command-line entry point: synth, gen-gt, train, restore, binarize, eval, serve."""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

from . import metrics as metrics_mod
from .config import Config, load_config
from .imgcore import ColorImage, read_mask, read_pnm, write_mask
from .nn import (
    TrainConfig,
    build_color_net,
    build_text_net,
    load_weights,
    save_weights,
    train,
    write_loss_csv,
)
from .pipeline import (
    augment_flips,
    binarize_net_output,
    build_training_pairs,
    generate_groundtruth,
    method1_restore,
    method2_restore,
    preprocess_gray,
    run_net_on_image,
    write_bundle,
)
from .synth import load_corpus_items, synth_corpus, write_corpus

_CONFIG_FLAGS = [
    # (flag, config key, type)
    ("--k", "k", int),
    ("--gamma", "gamma", float),
    ("--threshold", "threshold", str),
    ("--adaptive-window", "adaptive_window", int),
    ("--adaptive-bias", "adaptive_bias", float),
    ("--valley-window", "valley_window", int),
    ("--se-shape", "se_shape", str),
    ("--close-size", "close_size", int),
    ("--open-size", "open_size", int),
    ("--min-area", "min_area", int),
    ("--text-blur-sigma", "text_blur_sigma", float),
    ("--bg-blur-sigma", "bg_blur_sigma", float),
    ("--contrast-kind", "contrast_kind", str),
    ("--contrast-param", "contrast_param", float),
    ("--em-subsample", "em_subsample", int),
    ("--em-max-iter", "em_max_iter", int),
    ("--patch-size", "patch_size", int),
    ("--patch-stride", "patch_stride", int),
    ("--epochs", "epochs", int),
    ("--lr", "learning_rate", float),
    ("--batch-size", "batch_size", int),
    ("--ssim-window", "ssim_window", int),
    ("--presence-tau", "presence_tau", float),
]


def _add_config_args(sub):
    sub.add_argument("--config", help="key=value config file")
    sub.add_argument("--seed", type=int, help="sets em/bg/train seeds at once")
    sub.add_argument("--dark-medium", action="store_true",
                     help="use the max-channel gray conversion")
    for flag, key, typ in _CONFIG_FLAGS:
        sub.add_argument(flag, dest=key, type=typ, default=None)


def _config_from_args(args) -> Config:
    overrides = {}
    for _, key, _typ in _CONFIG_FLAGS:
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    if getattr(args, "seed", None) is not None:
        overrides.setdefault("em_seed", args.seed)
        overrides.setdefault("bg_seed", args.seed)
        overrides.setdefault("train_seed", args.seed)
    if getattr(args, "dark_medium", False):
        overrides["bright_medium"] = False
    return load_config(getattr(args, "config", None), overrides)


def _require_color(img, path):
    if not isinstance(img, ColorImage):
        raise ValueError(f"{path}: expected a colour (P6) document image")
    return img


def cmd_synth(args):
    samples = synth_corpus(args.n, args.seed, args.size)
    write_corpus(samples, args.out, args.seed, args.size)
    print(f"wrote {len(samples)} samples to {args.out}")


def cmd_gen_gt(args):
    cfg = _config_from_args(args)
    img = _require_color(read_pnm(args.input), args.input)
    bundle = generate_groundtruth(img, cfg.gt_params())
    written = write_bundle(bundle, args.out, params_doc=asdict(cfg))
    print("\n".join(written))


def _net_for_task(task):
    return build_text_net() if task == "text" else build_color_net(3)


def cmd_train(args):
    cfg = _config_from_args(args)
    items = load_corpus_items(args.manifest)
    pairs = build_training_pairs(
        args.task, items, cfg.gt_params(), cfg.patch_size, cfg.patch_stride
    )
    if args.task == "bg":
        pairs = augment_flips(pairs)
    spec = _net_for_task(args.task)
    tc = TrainConfig(
        learning_rate=cfg.learning_rate,
        batch_size=cfg.batch_size,
        epochs=cfg.epochs,
        seed=cfg.train_seed,
        patch_size=cfg.patch_size,
        patch_stride=cfg.patch_stride,
        ssim_window=cfg.ssim_window,
    )

    def progress(epoch, loss):
        print(f"epoch {epoch}: mean dssim {loss:.6f}")

    weights, curve = train(spec, pairs, tc, progress=progress)
    save_weights(args.out_weights, spec, weights)
    loss_csv = args.loss_csv or str(Path(args.out_weights).with_suffix(".loss.csv"))
    write_loss_csv(loss_csv, curve)
    from .report import render_loss_figure

    loss_png = args.loss_figure or str(Path(args.out_weights).with_suffix(".loss.png"))
    render_loss_figure(curve, loss_png, title=f"{args.task} net training")
    print(f"saved weights to {args.out_weights} ({len(pairs)} pairs, "
          f"final dssim {curve[-1]:.6f})")


def cmd_restore(args):
    cfg = _config_from_args(args)
    img = _require_color(read_pnm(args.input), args.input)
    if args.method == 1:
        if not args.weights:
            raise ValueError("--method 1 requires --weights")
        spec = build_text_net()
        weights = load_weights(args.weights, spec)
        bundle = method1_restore(img, spec, weights, cfg.gt_params(),
                                 cfg.patch_size, cfg.patch_stride)
    else:
        if not (args.fg_weights and args.bg_weights):
            raise ValueError("--method 2 requires --fg-weights and --bg-weights")
        spec = build_color_net(3)
        fg_w = load_weights(args.fg_weights, spec)
        bg_w = load_weights(args.bg_weights, spec)
        bundle = method2_restore(img, spec, fg_w, spec, bg_w,
                                 cfg.patch_size, cfg.patch_stride, cfg.presence_tau)
    written = write_bundle(bundle, args.out, params_doc=asdict(cfg))
    print("\n".join(written))


def cmd_binarize(args):
    cfg = _config_from_args(args)
    img = _require_color(read_pnm(args.input), args.input)
    spec = build_text_net()
    weights = load_weights(args.weights, spec)
    v = preprocess_gray(img, cfg.gt_params())
    tb = run_net_on_image(spec, weights, v, cfg.patch_size, cfg.patch_stride)
    mask, _ = binarize_net_output(tb, cfg.gt_params())
    write_mask(mask, args.out)
    print(f"wrote {args.out}")


def cmd_eval(args):
    pred_dir, gt_dir = Path(args.pred_dir), Path(args.gt_dir)
    preds = sorted(p for p in pred_dir.iterdir() if p.suffix in (".pgm", ".pbm"))
    if not preds:
        raise ValueError(f"no .pgm predictions found in {pred_dir}")
    rows = []
    for pred_path in preds:
        gt_path = gt_dir / pred_path.name
        if not gt_path.exists():
            raise ValueError(f"missing ground truth for {pred_path.name}")
        rows.append(
            metrics_mod.evaluate_pair(
                pred_path.stem, read_mask(pred_path), read_mask(gt_path)
            )
        )
    rep = metrics_mod.report(rows)
    metrics_mod.write_report_csv(rep, args.out)
    from .report import render_metrics_figure

    figure = args.figure or str(Path(args.out).with_suffix(".png"))
    render_metrics_figure(rep, figure)
    print(f"FM {rep.avg_fm:.4f}  Fps {rep.avg_fps:.4f}  "
          f"PSNR {rep.avg_psnr:.4f}  DRD {rep.avg_drd:.4f}")
    print(f"wrote {args.out} and {figure}")


def cmd_serve(args):
    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="docrestore",
        description="Restore degraded handwritten document images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic degraded corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gen-gt", help="semi-automatic ground-truth bundle")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    _add_config_args(p)
    p.set_defaults(func=cmd_gen_gt)

    p = sub.add_parser("train", help="train the text, foreground or background net")
    p.add_argument("--task", choices=["text", "fg", "bg"], required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-weights", required=True)
    p.add_argument("--loss-csv")
    p.add_argument("--loss-figure")
    _add_config_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("restore", help="full restoration with method 1 or 2")
    p.add_argument("--method", type=int, choices=[1, 2], required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--weights")
    p.add_argument("--fg-weights")
    p.add_argument("--bg-weights")
    p.add_argument("--out", required=True)
    _add_config_args(p)
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("binarize", help="text extraction only")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    _add_config_args(p)
    p.set_defaults(func=cmd_binarize)

    p = sub.add_parser("eval", help="DIBCO metrics over a prediction directory")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--figure")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="HTTP tuning service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
        return 0 if result is None else result
    except Exception as exc:  # noqa: BLE001 - single-line CLI diagnostics
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
