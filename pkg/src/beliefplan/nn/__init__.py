from .autodiff import (Tensor, bce_loss, concat_channels, conv2d, maxpool2,
                       no_grad, relu, sigmoid, upconv2)
from .checkpoint import load_checkpoint, save_checkpoint
from .optim import AdamState, adam_step
from .training import TrainConfig, TrainResult, train
from .unet import UNetParams, init_unet, unet_forward, unet_forward_array

__all__ = [
    "Tensor", "conv2d", "maxpool2", "upconv2", "relu", "sigmoid",
    "concat_channels", "bce_loss", "no_grad",
    "UNetParams", "init_unet", "unet_forward", "unet_forward_array",
    "AdamState", "adam_step",
    "TrainConfig", "TrainResult", "train",
    "save_checkpoint", "load_checkpoint",
]
