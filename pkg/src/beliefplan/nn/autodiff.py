"""Minimal reverse-mode tensor math: just the operations the network needs.

Tensors wrap numpy arrays in NCHW layout. Each op records a closure that
scatters the output gradient to its inputs; Tensor.backward() replays the
tape in reverse topological order. Convolutions run as im2col matrix
products so the heavy lifting stays in BLAS.
"""
import contextlib

import numpy as np

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording (inference / evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = g.astype(self.data.dtype, copy=True)
        else:
            self.grad += g

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() starts from a scalar loss")
        topo, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _make(data, parents, backward):
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _as_tensor(x, dtype):
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=dtype))


def _im2col(x, kh, kw, pad):
    """(B,C,H,W) -> (B*Ho*Wo, C*kh*kw) patch matrix."""
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    b, c, hp, wp = x.shape
    ho, wo = hp - kh + 1, wp - kw + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    return np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(b * ho * wo, c * kh * kw), ho, wo


def conv2d(x, kernel, bias, padding):
    """Cross-correlation with stride 1. kernel is (Cout, Cin, kh, kw)."""
    x = _as_tensor(x, None)
    b, cin, h, w = x.shape
    cout, cin_k, kh, kw = kernel.shape
    if cin != cin_k:
        raise ValueError(f"channel mismatch: input {cin}, kernel {cin_k}")
    if bias.shape != (cout,):
        raise ValueError("bias must have one entry per output channel")
    cols, ho, wo = _im2col(x.data, kh, kw, padding)
    kmat = kernel.data.reshape(cout, cin * kh * kw)
    out = cols @ kmat.T
    out += bias.data
    out = np.ascontiguousarray(out.reshape(b, ho, wo, cout).transpose(0, 3, 1, 2))

    def backward(g):
        g_mat = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(b * ho * wo, cout)
        if bias.requires_grad:
            bias._accumulate(g_mat.sum(axis=0))
        if kernel.requires_grad:
            cols_b, _, _ = _im2col(x.data, kh, kw, padding)
            kernel._accumulate((g_mat.T @ cols_b).reshape(kernel.shape))
        if x.requires_grad:
            # Full correlation with the flipped, channel-transposed kernel.
            kflip = kernel.data[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
            gcols, _, _ = _im2col(g, kh, kw, kh - 1 - padding)
            dx = gcols @ kflip.reshape(cin, cout * kh * kw).T
            x._accumulate(np.ascontiguousarray(
                dx.reshape(b, h, w, cin).transpose(0, 3, 1, 2)))

    return _make(out, (x, kernel, bias), backward)


def maxpool2(x):
    """2x2 max pooling, stride 2; ties send gradient to the first maximal
    entry in row-major window order."""
    x = _as_tensor(x, None)
    b, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError("maxpool2 needs even spatial dimensions")
    h2, w2 = h // 2, w // 2
    win = np.ascontiguousarray(
        x.data.reshape(b, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5)
    ).reshape(b, c, h2, w2, 4)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]

    def backward(g):
        if not x.requires_grad:
            return
        dwin = np.zeros_like(win)
        np.put_along_axis(dwin, idx[..., None], g[..., None], axis=-1)
        dx = dwin.reshape(b, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h, w)
        x._accumulate(dx)

    return _make(out, (x,), backward)


def upconv2(x, kernel, bias):
    """Transposed convolution, 2x2 kernel with stride 2 (spatial doubling).
    kernel is (Cin, Cout, 2, 2)."""
    x = _as_tensor(x, None)
    b, cin, h, w = x.shape
    cin_k, cout = kernel.shape[:2]
    if cin != cin_k:
        raise ValueError(f"channel mismatch: input {cin}, kernel {cin_k}")
    x_mat = np.ascontiguousarray(x.data.transpose(0, 2, 3, 1)).reshape(b * h * w, cin)
    kmat = kernel.data.reshape(cin, cout * 4)
    y = (x_mat @ kmat).reshape(b, h, w, cout, 2, 2)
    out = np.ascontiguousarray(y.transpose(0, 3, 1, 4, 2, 5)).reshape(b, cout, 2 * h, 2 * w)
    out += bias.data[None, :, None, None]

    def backward(g):
        g_mat = np.ascontiguousarray(
            g.reshape(b, cout, h, 2, w, 2).transpose(0, 2, 4, 1, 3, 5)
        ).reshape(b * h * w, cout * 4)
        if bias.requires_grad:
            bias._accumulate(g.sum(axis=(0, 2, 3)))
        if kernel.requires_grad:
            kernel._accumulate((x_mat.T @ g_mat).reshape(kernel.shape))
        if x.requires_grad:
            dx = (g_mat @ kmat.T).reshape(b, h, w, cin)
            x._accumulate(np.ascontiguousarray(dx.transpose(0, 3, 1, 2)))

    return _make(out, (x, kernel, bias), backward)


def relu(x):
    x = _as_tensor(x, None)
    out = np.maximum(x.data, 0)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * (x.data > 0))

    return _make(out, (x,), backward)


def sigmoid(x):
    x = _as_tensor(x, None)
    d = x.data
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    e = np.exp(d[~pos])
    out[~pos] = e / (1.0 + e)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * out * (1.0 - out))

    return _make(out, (x,), backward)


def concat_channels(a, b):
    a = _as_tensor(a, None)
    b = _as_tensor(b, None)
    if a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
        raise ValueError(f"cannot concatenate shapes {a.shape} and {b.shape}")
    ca = a.shape[1]
    out = np.concatenate([a.data, b.data], axis=1)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g[:, :ca])
        if b.requires_grad:
            b._accumulate(g[:, ca:])

    return _make(out, (a, b), backward)


BCE_EPS = 1e-7


def bce_loss(pred, label):
    """Mean binary cross-entropy over every pixel and batch element.

    Predictions are clamped to [eps, 1-eps] before the logs.
    """
    pred = _as_tensor(pred, None)
    y = label.data if isinstance(label, Tensor) else np.asarray(label, dtype=pred.dtype)
    if y.shape != pred.shape:
        raise ValueError(f"label shape {y.shape} != prediction shape {pred.shape}")
    eps = pred.dtype.type(BCE_EPS)
    xc = np.clip(pred.data, eps, 1.0 - eps)
    n = xc.size
    loss = -(y * np.log(xc) + (1.0 - y) * np.log1p(-xc)).sum() / n

    def backward(g):
        if pred.requires_grad:
            pred._accumulate(g * (-y / xc + (1.0 - y) / (1.0 - xc)) / n)

    return _make(np.asarray(loss, dtype=pred.dtype), (pred,), backward)
