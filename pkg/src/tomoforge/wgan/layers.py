"""Network layers with explicit reverse-mode rules.

Convolutions are lowered to matrix products through im2col/col2im so a
transposed convolution is literally the adjoint of a convolution.  Every
layer caches what its backward pass needs during a training-mode forward
and refuses to run backward without it.
"""

from __future__ import annotations

import math

import numpy as np


def im2col(x: np.ndarray, k: int, s: int, p: int):
    """Unfold k x k patches at stride s into (B, C*k*k, n_positions)."""
    b, c, h, w = x.shape
    oh = (h + 2 * p - k) // s + 1
    ow = (w + 2 * p - k) // s + 1
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    cols = np.empty((b, c, k, k, oh, ow), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, :, i, j] = xp[:, :, i:i + s * oh:s, j:j + s * ow:s]
    return cols.reshape(b, c * k * k, oh * ow), oh, ow


def col2im(cols: np.ndarray, shape, k: int, s: int, p: int) -> np.ndarray:
    """Adjoint of im2col: scatter-add patches back onto the image grid."""
    b, c, h, w = shape
    oh = (h + 2 * p - k) // s + 1
    ow = (w + 2 * p - k) // s + 1
    canvas = np.zeros((b, c, h + 2 * p, w + 2 * p), dtype=cols.dtype)
    c6 = cols.reshape(b, c, k, k, oh, ow)
    for i in range(k):
        for j in range(k):
            canvas[:, :, i:i + s * oh:s, j:j + s * ow:s] += c6[:, :, i, j]
    return canvas[:, :, p:p + h, p:p + w]


def _matmul_batched(mat: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """(O, F) @ (B, F, L) -> (B, O, L) as a single GEMM."""
    b, f, l = cols.shape
    out = mat @ cols.transpose(1, 0, 2).reshape(f, b * l)
    return out.reshape(-1, b, l).transpose(1, 0, 2)


class Layer:
    trainable_names: tuple = ()

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _require_cache(self):
        if not getattr(self, "_cached", False):
            raise RuntimeError(
                f"{type(self).__name__}.backward called without a recorded "
                "training-mode forward pass")

    def parameters(self) -> list:
        return [getattr(self, name) for name in self.trainable_names]

    def gradients(self) -> list:
        return [getattr(self, "d_" + name) for name in self.trainable_names]

    def buffers(self) -> list:
        return []

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())


class Conv2D(Layer):
    def __init__(self, in_ch, out_ch, kernel, stride, padding, bias, rng,
                 init_std=0.02):
        self.in_ch, self.out_ch = in_ch, out_ch
        self.k, self.s, self.p = kernel, stride, padding
        self.weight = rng.normal(0.0, init_std, (out_ch, in_ch, kernel, kernel))
        self.bias = np.zeros(out_ch) if bias else None
        self.trainable_names = ("weight", "bias") if bias else ("weight",)
        self._cached = False

    def out_size(self, h: int) -> int:
        return (h + 2 * self.p - self.k) // self.s + 1

    def forward(self, x, train=True):
        if x.ndim != 4 or x.shape[1] != self.in_ch:
            raise ValueError(f"expected (B, {self.in_ch}, H, W), got {x.shape}")
        cols, oh, ow = im2col(x, self.k, self.s, self.p)
        out = _matmul_batched(self.weight.reshape(self.out_ch, -1), cols)
        if self.bias is not None:
            out = out + self.bias[None, :, None]
        if train:
            self._cols, self._xshape, self._cached = cols, x.shape, True
        return out.reshape(x.shape[0], self.out_ch, oh, ow)

    def backward(self, dout):
        self._require_cache()
        b = dout.shape[0]
        dflat = dout.reshape(b, self.out_ch, -1)
        dmat = dflat.transpose(1, 0, 2).reshape(self.out_ch, -1)
        cmat = self._cols.transpose(1, 0, 2).reshape(self._cols.shape[1], -1)
        self.d_weight = (dmat @ cmat.T).reshape(self.weight.shape)
        if self.bias is not None:
            self.d_bias = dflat.sum(axis=(0, 2))
        dcols = _matmul_batched(self.weight.reshape(self.out_ch, -1).T, dflat)
        return col2im(dcols, self._xshape, self.k, self.s, self.p)


class ConvT2D(Layer):
    def __init__(self, in_ch, out_ch, kernel, stride, padding, bias, rng,
                 init_std=0.02):
        self.in_ch, self.out_ch = in_ch, out_ch
        self.k, self.s, self.p = kernel, stride, padding
        self.weight = rng.normal(0.0, init_std, (in_ch, out_ch, kernel, kernel))
        self.bias = np.zeros(out_ch) if bias else None
        self.trainable_names = ("weight", "bias") if bias else ("weight",)
        self._cached = False

    def out_size(self, h: int) -> int:
        return (h - 1) * self.s - 2 * self.p + self.k

    def forward(self, x, train=True):
        if x.ndim != 4 or x.shape[1] != self.in_ch:
            raise ValueError(f"expected (B, {self.in_ch}, H, W), got {x.shape}")
        b, _, h, w = x.shape
        oh, ow = self.out_size(h), self.out_size(w)
        flat = x.reshape(b, self.in_ch, h * w)
        cols = _matmul_batched(self.weight.reshape(self.in_ch, -1).T, flat)
        out = col2im(cols, (b, self.out_ch, oh, ow), self.k, self.s, self.p)
        if self.bias is not None:
            out = out + self.bias[None, :, None, None]
        if train:
            self._xflat, self._xshape, self._cached = flat, x.shape, True
        return out

    def backward(self, dout):
        self._require_cache()
        cols, _, _ = im2col(dout, self.k, self.s, self.p)
        xmat = self._xflat.transpose(1, 0, 2).reshape(self.in_ch, -1)
        cmat = cols.transpose(1, 0, 2).reshape(cols.shape[1], -1)
        self.d_weight = (xmat @ cmat.T).reshape(self.weight.shape)
        if self.bias is not None:
            self.d_bias = dout.sum(axis=(0, 2, 3))
        dx = _matmul_batched(self.weight.reshape(self.in_ch, -1), cols)
        return dx.reshape(self._xshape)


class BatchNorm(Layer):
    """Per-channel normalization over the batch; running stats drive eval mode."""

    trainable_names = ("gamma", "beta")

    def __init__(self, ch, momentum=0.1, eps=1e-5):
        self.ch = ch
        self.gamma = np.ones(ch)
        self.beta = np.zeros(ch)
        self.running_mean = np.zeros(ch)
        self.running_var = np.ones(ch)
        self.momentum = momentum
        self.eps = eps
        self._cached = False

    def buffers(self):
        return [self.running_mean, self.running_var]

    def forward(self, x, train=True):
        if x.shape[1] != self.ch:
            raise ValueError(f"expected {self.ch} channels, got {x.shape[1]}")
        if train:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            self.running_mean = (1 - self.momentum) * self.running_mean \
                + self.momentum * mean
            self.running_var = (1 - self.momentum) * self.running_var \
                + self.momentum * var
        else:
            mean, var = self.running_mean, self.running_var
        xhat = (x - mean[None, :, None, None]) \
            / np.sqrt(var[None, :, None, None] + self.eps)
        if train:
            self._xhat, self._var, self._cached = xhat, var, True
        return self.gamma[None, :, None, None] * xhat \
            + self.beta[None, :, None, None]

    def backward(self, dout):
        self._require_cache()
        n = dout.shape[0] * dout.shape[2] * dout.shape[3]
        self.d_gamma = (dout * self._xhat).sum(axis=(0, 2, 3))
        self.d_beta = dout.sum(axis=(0, 2, 3))
        dxhat = dout * self.gamma[None, :, None, None]
        inv = 1.0 / np.sqrt(self._var + self.eps)[None, :, None, None]
        return inv / n * (n * dxhat
                          - dxhat.sum(axis=(0, 2, 3), keepdims=True)
                          - self._xhat * (dxhat * self._xhat).sum(
                              axis=(0, 2, 3), keepdims=True))


class InstanceNorm(Layer):
    """Per-sample, per-channel normalization with learnable affine."""

    trainable_names = ("gamma", "beta")

    def __init__(self, ch, eps=1e-5):
        self.ch = ch
        self.gamma = np.ones(ch)
        self.beta = np.zeros(ch)
        self.eps = eps
        self._cached = False

    def forward(self, x, train=True):
        if x.shape[1] != self.ch:
            raise ValueError(f"expected {self.ch} channels, got {x.shape[1]}")
        mean = x.mean(axis=(2, 3), keepdims=True)
        var = x.var(axis=(2, 3), keepdims=True)
        xhat = (x - mean) / np.sqrt(var + self.eps)
        if train:
            self._xhat, self._var, self._cached = xhat, var, True
        return self.gamma[None, :, None, None] * xhat \
            + self.beta[None, :, None, None]

    def backward(self, dout):
        self._require_cache()
        n = dout.shape[2] * dout.shape[3]
        self.d_gamma = (dout * self._xhat).sum(axis=(0, 2, 3))
        self.d_beta = dout.sum(axis=(0, 2, 3))
        dxhat = dout * self.gamma[None, :, None, None]
        inv = 1.0 / np.sqrt(self._var + self.eps)
        return inv / n * (n * dxhat
                          - dxhat.sum(axis=(2, 3), keepdims=True)
                          - self._xhat * (dxhat * self._xhat).sum(
                              axis=(2, 3), keepdims=True))


class LeakyReLU(Layer):
    def __init__(self, slope=0.2):
        self.slope = slope
        self._cached = False

    def forward(self, x, train=True):
        mask = x > 0
        if train:
            self._mask, self._cached = mask, True
        return np.where(mask, x, self.slope * x)

    def backward(self, dout):
        self._require_cache()
        return np.where(self._mask, dout, self.slope * dout)


class Tanh(Layer):
    def __init__(self):
        self._cached = False

    def forward(self, x, train=True):
        y = np.tanh(x)
        if train:
            self._y, self._cached = y, True
        return y

    def backward(self, dout):
        self._require_cache()
        return dout * (1.0 - self._y * self._y)
