"""Network weight persistence ("BSPW", little-endian, 64-bit values)."""
import struct

import numpy as np

from ..errors import FormatError
from .autodiff import Tensor
from .unet import UNetParams, param_plan

MAGIC = b"BSPW"
VERSION = 1


def save_checkpoint(params: UNetParams, path) -> None:
    names = params.parameter_names()
    with open(path, "wb") as f:
        f.write(struct.pack("<4sIIII", MAGIC, VERSION, params.depth,
                            params.base_channels, len(names)))
        for name in names:
            data = params.tensors[name].data.astype("<f8")
            f.write(struct.pack("<I", data.ndim))
            f.write(struct.pack(f"<{data.ndim}I", *data.shape))
            f.write(data.tobytes())


def _read_exact(f, n, what):
    data = f.read(n)
    if len(data) != n:
        raise FormatError(f"truncated checkpoint while reading {what}")
    return data


def load_checkpoint(path) -> UNetParams:
    """Read weights and validate them against the declared architecture."""
    with open(path, "rb") as f:
        magic, version, depth, base, count = struct.unpack(
            "<4sIIII", _read_exact(f, 20, "header"))
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}; expected {MAGIC!r}")
        if version != VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        plan = param_plan(depth, base)
        if count != len(plan):
            raise FormatError(
                f"checkpoint declares {count} tensors but a depth-{depth}, "
                f"base-{base} network has {len(plan)}")
        tensors = {}
        for name, shape in plan:
            (ndim,) = struct.unpack("<I", _read_exact(f, 4, name))
            dims = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim, name))
            if dims != shape:
                raise FormatError(
                    f"tensor {name}: stored shape {dims} does not match "
                    f"architecture shape {shape}")
            n = int(np.prod(shape))
            raw = _read_exact(f, 8 * n, name)
            data = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
            tensors[name] = Tensor(data, requires_grad=True)
        if f.read(1):
            raise FormatError("trailing bytes after the declared tensors")
    return UNetParams(depth, base, 3, tensors)
