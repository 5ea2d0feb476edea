"""Encoder/decoder network with skip connections.

Each encode level is two 3x3 conv+ReLU layers followed by 2x2 max
pooling; channel counts double per level. The bottleneck is a plain conv
block at the lowest resolution. Each decode level upsamples with a 2x2
transposed convolution, concatenates the matching encoder features, and
applies two conv+ReLU layers. A final 1x1 convolution and sigmoid give a
single channel in (0, 1).
"""
from dataclasses import dataclass, field

import numpy as np

from .autodiff import (Tensor, concat_channels, conv2d, maxpool2, no_grad,
                       relu, sigmoid, upconv2)


def param_plan(depth: int, base_channels: int, in_channels: int = 3):
    """Canonical (name, shape) sequence of all learnable tensors."""
    if depth < 1 or base_channels < 1:
        raise ValueError("depth and base_channels must be >= 1")
    plan = []
    ch_in = in_channels
    for level in range(1, depth + 1):
        ch_out = base_channels * 2 ** (level - 1)
        plan.append((f"enc{level}.conv1.w", (ch_out, ch_in, 3, 3)))
        plan.append((f"enc{level}.conv1.b", (ch_out,)))
        plan.append((f"enc{level}.conv2.w", (ch_out, ch_out, 3, 3)))
        plan.append((f"enc{level}.conv2.b", (ch_out,)))
        ch_in = ch_out
    ch_bot = base_channels * 2 ** depth
    plan.append(("bottleneck.conv1.w", (ch_bot, ch_in, 3, 3)))
    plan.append(("bottleneck.conv1.b", (ch_bot,)))
    plan.append(("bottleneck.conv2.w", (ch_bot, ch_bot, 3, 3)))
    plan.append(("bottleneck.conv2.b", (ch_bot,)))
    for level in range(depth, 0, -1):
        ch_skip = base_channels * 2 ** (level - 1)
        ch_up_in = ch_skip * 4 if level == depth else ch_skip * 2
        plan.append((f"dec{level}.up.w", (ch_up_in, ch_skip, 2, 2)))
        plan.append((f"dec{level}.up.b", (ch_skip,)))
        plan.append((f"dec{level}.conv1.w", (ch_skip, ch_skip * 2, 3, 3)))
        plan.append((f"dec{level}.conv1.b", (ch_skip,)))
        plan.append((f"dec{level}.conv2.w", (ch_skip, ch_skip, 3, 3)))
        plan.append((f"dec{level}.conv2.b", (ch_skip,)))
    plan.append(("final.w", (1, base_channels, 1, 1)))
    plan.append(("final.b", (1,)))
    return plan


@dataclass
class UNetParams:
    depth: int
    base_channels: int
    in_channels: int = 3
    tensors: dict = field(default_factory=dict)

    def parameter_names(self):
        return [name for name, _ in param_plan(self.depth, self.base_channels,
                                               self.in_channels)]

    def astype(self, dtype) -> "UNetParams":
        cast = {}
        for name, t in self.tensors.items():
            nt = Tensor(t.data.astype(dtype), requires_grad=True)
            cast[name] = nt
        return UNetParams(self.depth, self.base_channels, self.in_channels, cast)

    def copy_data(self) -> dict:
        return {name: t.data.copy() for name, t in self.tensors.items()}

    def load_data(self, snapshot: dict):
        for name, arr in snapshot.items():
            self.tensors[name].data = arr.copy()


def init_unet(depth: int, base_channels: int, rng: np.random.Generator,
              in_channels: int = 3, dtype=np.float64) -> UNetParams:
    """Kaiming-uniform fan-in weights, zero biases."""
    tensors = {}
    for name, shape in param_plan(depth, base_channels, in_channels):
        if name.endswith(".b"):
            data = np.zeros(shape, dtype=dtype)
        else:
            if ".up." in name:
                fan_in = shape[0] * shape[2] * shape[3]
            else:
                fan_in = shape[1] * shape[2] * shape[3]
            bound = np.sqrt(6.0 / fan_in)
            data = rng.uniform(-bound, bound, size=shape).astype(dtype)
        tensors[name] = Tensor(data, requires_grad=True)
    return UNetParams(depth, base_channels, in_channels, tensors)


def unet_forward(params: UNetParams, x) -> Tensor:
    """Full forward pass; output shape (batch, 1, H, W), values in (0, 1)."""
    x = x if isinstance(x, Tensor) else Tensor(x)
    b, c, h, w = x.shape
    if c != params.in_channels:
        raise ValueError(f"expected {params.in_channels} input channels, got {c}")
    div = 2 ** params.depth
    if h % div or w % div:
        raise ValueError(f"spatial dims {(h, w)} not divisible by 2^{params.depth}")
    t = params.tensors

    skips = []
    hcur = x
    for level in range(1, params.depth + 1):
        hcur = relu(conv2d(hcur, t[f"enc{level}.conv1.w"], t[f"enc{level}.conv1.b"], 1))
        hcur = relu(conv2d(hcur, t[f"enc{level}.conv2.w"], t[f"enc{level}.conv2.b"], 1))
        skips.append(hcur)
        hcur = maxpool2(hcur)
    hcur = relu(conv2d(hcur, t["bottleneck.conv1.w"], t["bottleneck.conv1.b"], 1))
    hcur = relu(conv2d(hcur, t["bottleneck.conv2.w"], t["bottleneck.conv2.b"], 1))
    for level in range(params.depth, 0, -1):
        hcur = upconv2(hcur, t[f"dec{level}.up.w"], t[f"dec{level}.up.b"])
        hcur = concat_channels(skips[level - 1], hcur)
        hcur = relu(conv2d(hcur, t[f"dec{level}.conv1.w"], t[f"dec{level}.conv1.b"], 1))
        hcur = relu(conv2d(hcur, t[f"dec{level}.conv2.w"], t[f"dec{level}.conv2.b"], 1))
    return sigmoid(conv2d(hcur, t["final.w"], t["final.b"], 0))


def unet_forward_array(params: UNetParams, x: np.ndarray) -> np.ndarray:
    """Inference helper: (3,H,W) or (B,3,H,W) array in, array out, no tape."""
    squeeze = x.ndim == 3
    if squeeze:
        x = x[None]
    with no_grad():
        out = unet_forward(params, Tensor(x.astype(
            params.tensors["final.w"].dtype, copy=False))).data
    return out[0] if squeeze else out
