"""Dense-tensor network engine: conv/conv-transpose layers with hand-derived
backpropagation, DSSIM objective, Adam trainer and the two document nets."""

from .layers import (
    LayerSpec,
    conv2d_forward,
    conv2d_backward,
    conv_transpose2d_forward,
    conv_transpose2d_backward,
    conv_output_hw,
    apply_activation,
    activation_derivative,
)
from .ssim import SsimConfig, ssim, dssim, dssim_backward
from .network import (
    NetworkSpec,
    build_text_net,
    build_color_net,
    init_weights,
    net_forward,
    net_spec_hash,
)
from .train import TrainConfig, TrainingDiverged, train, write_loss_csv
from .weights_io import save_weights, load_weights, WeightFileError

__all__ = [
    "LayerSpec",
    "NetworkSpec",
    "SsimConfig",
    "TrainConfig",
    "TrainingDiverged",
    "WeightFileError",
    "activation_derivative",
    "apply_activation",
    "build_color_net",
    "build_text_net",
    "conv2d_backward",
    "conv2d_forward",
    "conv_output_hw",
    "conv_transpose2d_backward",
    "conv_transpose2d_forward",
    "dssim",
    "dssim_backward",
    "init_weights",
    "load_weights",
    "net_forward",
    "net_spec_hash",
    "save_weights",
    "ssim",
    "train",
    "write_loss_csv",
]
