"""Generator and critic architectures at full and desk scale.

The full-scale generator upsamples a 100-component latent through six
transposed convolutions (batch norm between them, tanh at the end) to a
3 x 128 x 128 raster; the critic mirrors it downward with instance
norms and LeakyReLU.  Biases appear only where the published parameter
counts require them: the generator's final layer and the critic's first
and last.  The desk scale keeps every layer type and shrinks the job to
3 x 32 x 32 with a 32-component latent and quarter-width channels so a
CPU can train it in minutes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .layers import (BatchNorm, Conv2D, ConvT2D, InstanceNorm, Layer,
                     LeakyReLU, Tanh)

LEAKY_SLOPE = 0.2
INIT_STD = 0.02


class Scale(Enum):
    FULL128 = "full128"
    DESK32 = "desk32"


class LayerOp(Enum):
    CONV_T = "convt2d"
    CONV = "conv2d"
    BATCH_NORM = "batchnorm"
    INSTANCE_NORM = "instancenorm"
    LEAKY_RELU = "leakyrelu"
    TANH = "tanh"


@dataclass(frozen=True)
class LayerSpec:
    op: LayerOp
    kernel: int = 0
    stride: int = 0
    padding: int = 0
    in_ch: int = 0
    out_ch: int = 0
    has_bias: bool = False

    def to_json(self) -> dict:
        return {"op": self.op.value, "kernel": self.kernel,
                "stride": self.stride, "padding": self.padding,
                "in_ch": self.in_ch, "out_ch": self.out_ch,
                "has_bias": self.has_bias}

    @staticmethod
    def from_json(d: dict) -> "LayerSpec":
        return LayerSpec(op=LayerOp(d["op"]), kernel=d["kernel"],
                         stride=d["stride"], padding=d["padding"],
                         in_ch=d["in_ch"], out_ch=d["out_ch"],
                         has_bias=d["has_bias"])


@dataclass
class NetworkConfig:
    layers: list[LayerSpec]
    input_shape: tuple            # (latent,) for generators, (C, H, W) for critics
    scale: Scale


def _convt(i, o, s=2, p=1, bias=False):
    return LayerSpec(LayerOp.CONV_T, 4, s, p, i, o, bias)


def _conv(i, o, s=2, p=1, bias=False):
    return LayerSpec(LayerOp.CONV, 4, s, p, i, o, bias)


def _bn(c):
    return LayerSpec(LayerOp.BATCH_NORM, in_ch=c, out_ch=c)


def _in(c):
    return LayerSpec(LayerOp.INSTANCE_NORM, in_ch=c, out_ch=c)


_ACT = LayerSpec(LayerOp.LEAKY_RELU)
_TANH = LayerSpec(LayerOp.TANH)

GENERATOR_CHANNELS = {
    Scale.FULL128: (100, 512, 256, 128, 64, 32, 3),
    Scale.DESK32: (32, 128, 64, 32, 3),
}
CRITIC_CHANNELS = {
    Scale.FULL128: (3, 16, 32, 64, 128, 256, 1),
    Scale.DESK32: (3, 4, 8, 16, 1),
}
LATENT_DIM = {Scale.FULL128: 100, Scale.DESK32: 32}
IMAGE_SIZE = {Scale.FULL128: 128, Scale.DESK32: 32}


def generator_config(scale: Scale = Scale.FULL128) -> NetworkConfig:
    ch = GENERATOR_CHANNELS[scale]
    specs = [_convt(ch[0], ch[1], s=1, p=0), _bn(ch[1]), _ACT]
    for a, b in zip(ch[1:-2], ch[2:-1]):
        specs += [_convt(a, b), _bn(b), _ACT]
    specs += [_convt(ch[-2], ch[-1], bias=True), _TANH]
    return NetworkConfig(layers=specs, input_shape=(ch[0],), scale=scale)


def critic_config(scale: Scale = Scale.FULL128) -> NetworkConfig:
    ch = CRITIC_CHANNELS[scale]
    specs = [_conv(ch[0], ch[1], bias=True), _ACT]
    for a, b in zip(ch[1:-2], ch[2:-1]):
        specs += [_conv(a, b), _in(b), _ACT]
    specs += [_conv(ch[-2], ch[-1], s=2, p=0, bias=True)]
    size = IMAGE_SIZE[scale]
    return NetworkConfig(layers=specs, input_shape=(ch[0], size, size),
                         scale=scale)


class Network:
    """Ordered layer stack with explicit forward/backward passes."""

    def __init__(self, config: NetworkConfig, rng: np.random.Generator):
        self.config = config
        self.layers: list[Layer] = []
        for spec in config.layers:
            self.layers.append(_instantiate(spec, rng))

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, dout: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.parameters()]

    def gradients(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.gradients()]

    def buffers(self) -> list[np.ndarray]:
        return [b for layer in self.layers for b in layer.buffers()]

    def layer_parameter_counts(self) -> list[int]:
        """Trainable-parameter count of each parameterized layer, in order."""
        return [layer.parameter_count for layer in self.layers
                if layer.parameter_count > 0]

    def total_parameters(self) -> int:
        return sum(self.layer_parameter_counts())

    def output_shapes(self, x: np.ndarray) -> list[tuple]:
        """Per-parameterized-layer output shapes (without the batch axis)."""
        shapes = []
        for layer, spec in zip(self.layers, self.config.layers):
            x = layer.forward(x, train=False)
            if spec.op in (LayerOp.CONV, LayerOp.CONV_T, LayerOp.BATCH_NORM,
                           LayerOp.INSTANCE_NORM):
                shapes.append(x.shape[1:])
        return shapes


def _instantiate(spec: LayerSpec, rng: np.random.Generator) -> Layer:
    if spec.op is LayerOp.CONV_T:
        return ConvT2D(spec.in_ch, spec.out_ch, spec.kernel, spec.stride,
                       spec.padding, spec.has_bias, rng, INIT_STD)
    if spec.op is LayerOp.CONV:
        return Conv2D(spec.in_ch, spec.out_ch, spec.kernel, spec.stride,
                      spec.padding, spec.has_bias, rng, INIT_STD)
    if spec.op is LayerOp.BATCH_NORM:
        return BatchNorm(spec.in_ch)
    if spec.op is LayerOp.INSTANCE_NORM:
        return InstanceNorm(spec.in_ch)
    if spec.op is LayerOp.LEAKY_RELU:
        return LeakyReLU(LEAKY_SLOPE)
    if spec.op is LayerOp.TANH:
        return Tanh()
    raise ValueError(f"unknown layer op {spec.op}")


def build_generator(cfg: NetworkConfig | Scale = Scale.FULL128,
                    rng: np.random.Generator | None = None) -> Network:
    if isinstance(cfg, Scale):
        cfg = generator_config(cfg)
    _check_generator(cfg)
    return Network(cfg, rng if rng is not None else np.random.default_rng(0))


def build_critic(cfg: NetworkConfig | Scale = Scale.FULL128,
                 rng: np.random.Generator | None = None) -> Network:
    if isinstance(cfg, Scale):
        cfg = critic_config(cfg)
    _check_critic(cfg)
    return Network(cfg, rng if rng is not None else np.random.default_rng(0))


def _chained_channels_ok(specs, first_in):
    prev = first_in
    for s in specs:
        if s.op in (LayerOp.CONV, LayerOp.CONV_T):
            if s.in_ch != prev:
                return False
            prev = s.out_ch
        elif s.op in (LayerOp.BATCH_NORM, LayerOp.INSTANCE_NORM):
            if s.in_ch != prev:
                return False
    return True


def _check_generator(cfg: NetworkConfig):
    if not cfg.layers or cfg.layers[-1].op is not LayerOp.TANH:
        raise ValueError("generator must end in a tanh")
    if not _chained_channels_ok(cfg.layers, cfg.input_shape[0]):
        raise ValueError("generator channel chain is inconsistent")


def _check_critic(cfg: NetworkConfig):
    convs = [s for s in cfg.layers if s.op is LayerOp.CONV]
    if not convs or convs[-1].out_ch != 1:
        raise ValueError("critic must reduce to a single score channel")
    if not _chained_channels_ok(cfg.layers, cfg.input_shape[0]):
        raise ValueError("critic channel chain is inconsistent")
