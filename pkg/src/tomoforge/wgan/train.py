"""Adversarial training loop, sampling and checkpointing.

Each epoch runs five critic updates (maximize the duality gap, weights
clipped afterwards when clipping is the Lipschitz mode) followed by one
generator update (minimize -E[D(fake)]); latents are standard Gaussian.
The whole schedule is driven by one seeded random stream, so a repeated
run reproduces parameters and log bit for bit (wall-clock column aside).
"""

from __future__ import annotations

import io
import json
import math
import struct
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..colormap import ColormapId, TomogramImage
from ..errors import DivergenceError
from ..metrics import critic_duality_gap
from ..tomogrid import TomogramGrid, TrainingDataset
from .network import (LATENT_DIM, Network, NetworkConfig, Scale,
                      build_critic, build_generator, critic_config,
                      generator_config)
from .optim import Adam, clip_parameters


@dataclass(frozen=True)
class WeightClip:
    c: float = 0.01


@dataclass(frozen=True)
class GradientPenalty:
    """Requested penalty coefficient; the gradient norm at interpolates is
    logged as a diagnostic but not differentiated into the weight update
    (that would need second-order backprop)."""

    lam: float = 10.0


LipschitzMode = Union[WeightClip, GradientPenalty]


@dataclass(frozen=True)
class TrainConfig:
    critic_steps_per_gen: int = 5
    batch_size: int = 64
    lr: float = 1e-4
    beta1: float = 0.0
    beta2: float = 0.9
    epochs: int = 100
    lipschitz: LipschitzMode = WeightClip()
    seed: int = 0

    def to_json(self) -> dict:
        lip = {"kind": "clip", "c": self.lipschitz.c} \
            if isinstance(self.lipschitz, WeightClip) \
            else {"kind": "gp", "lam": self.lipschitz.lam}
        return {"critic_steps_per_gen": self.critic_steps_per_gen,
                "batch_size": self.batch_size, "lr": self.lr,
                "beta1": self.beta1, "beta2": self.beta2,
                "epochs": self.epochs, "lipschitz": lip, "seed": self.seed}

    @staticmethod
    def from_json(d: dict) -> "TrainConfig":
        lip = d["lipschitz"]
        mode = WeightClip(lip["c"]) if lip["kind"] == "clip" \
            else GradientPenalty(lip["lam"])
        return TrainConfig(critic_steps_per_gen=d["critic_steps_per_gen"],
                           batch_size=d["batch_size"], lr=d["lr"],
                           beta1=d["beta1"], beta2=d["beta2"],
                           epochs=d["epochs"], lipschitz=mode, seed=d["seed"])


def desk_train_config(epochs: int = 500, seed: int = 0,
                      lr: float = 3e-4) -> TrainConfig:
    """Desk-scale recipe: batch 16 and a learning rate raised to make a
    few hundred epochs move the generator as far as the published
    25000-epoch schedule would at full scale."""
    return TrainConfig(batch_size=16, lr=lr, epochs=epochs, seed=seed)


@dataclass
class TrainLog:
    columns = ("epoch", "critic_loss", "gen_loss", "duality_gap",
               "lipschitz_diag", "wallclock_s")
    rows: list = field(default_factory=list)

    def append(self, *row):
        self.rows.append(tuple(row))

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def content_rows(self) -> list:
        """Rows without the wall-clock column (the reproducible part)."""
        return [r[:-1] for r in self.rows]

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(self.columns) + "\n")
            for r in self.rows:
                fh.write(f"{r[0]},{r[1]!r},{r[2]!r},{r[3]!r},{r[4]!r},{r[5]:.3f}\n")

    @staticmethod
    def from_csv(path) -> "TrainLog":
        log = TrainLog()
        with open(path) as fh:
            fh.readline()
            for line in fh:
                parts = line.strip().split(",")
                log.append(int(parts[0]), *[float(v) for v in parts[1:]])
        return log


@dataclass
class TrainedModel:
    generator: Network
    critic: Network
    gen_cfg: NetworkConfig
    critic_cfg: NetworkConfig
    train_cfg: TrainConfig
    grid: TomogramGrid
    colormap: ColormapId

    @property
    def latent_dim(self) -> int:
        return self.gen_cfg.input_shape[0]


def _image_stack(dataset: TrainingDataset) -> np.ndarray:
    return np.stack([img.channels_first() for img in dataset.items])


def _critic_input_gradient_norms(critic: Network, x: np.ndarray) -> np.ndarray:
    """Per-sample ||d D/d x||; valid because the critic couples samples
    nowhere (instance norms are per sample)."""
    critic.forward(x, train=True)
    dx = critic.backward(np.ones((x.shape[0], 1, 1, 1)))
    return np.sqrt((dx * dx).sum(axis=(1, 2, 3)))


def train(dataset: TrainingDataset,
          gen_cfg: NetworkConfig | None = None,
          critic_cfg: NetworkConfig | None = None,
          tc: TrainConfig = TrainConfig(),
          scale: Scale = Scale.DESK32) -> tuple[TrainedModel, TrainLog]:
    """Run the adversarial loop over colormapped tomogram images."""
    gen_cfg = gen_cfg or generator_config(scale)
    critic_cfg = critic_cfg or critic_config(scale)
    if len(dataset) == 0:
        raise ValueError("training dataset is empty")
    images = _image_stack(dataset)
    if images.shape[1:] != tuple(critic_cfg.input_shape):
        raise ValueError(f"dataset images {images.shape[1:]} do not match "
                         f"critic input {critic_cfg.input_shape}")

    rng = np.random.default_rng(tc.seed)
    gen = build_generator(gen_cfg, rng)
    critic = build_critic(critic_cfg, rng)
    opt_g = Adam(gen.parameters(), lr=tc.lr, beta1=tc.beta1, beta2=tc.beta2)
    opt_c = Adam(critic.parameters(), lr=tc.lr, beta1=tc.beta1, beta2=tc.beta2)

    latent = gen_cfg.input_shape[0]
    n_items = len(images)
    batch = tc.batch_size
    log = TrainLog()
    t0 = time.perf_counter()

    for epoch in range(tc.epochs):
        gap = 0.0
        fake = None
        real = None
        for _ in range(tc.critic_steps_per_gen):
            idx = rng.choice(n_items, size=batch, replace=n_items < batch)
            real = images[idx]
            z = rng.normal(size=(batch, latent, 1, 1))
            fake = gen.forward(z, train=True)
            scores = critic.forward(np.concatenate([real, fake]), train=True)
            gap = critic_duality_gap(scores[:batch], scores[batch:])
            dscores = np.concatenate([
                np.full(batch, -1.0 / batch), np.full(batch, 1.0 / batch),
            ]).reshape(-1, 1, 1, 1)
            critic.backward(dscores)
            opt_c.step(critic.gradients())
            if isinstance(tc.lipschitz, WeightClip):
                clip_parameters(critic.parameters(), tc.lipschitz.c)
        critic_loss = -gap

        u = rng.uniform(size=(batch, 1, 1, 1))
        lipschitz_diag = float(
            _critic_input_gradient_norms(critic, u * real + (1 - u) * fake).mean())

        z = rng.normal(size=(batch, latent, 1, 1))
        fake = gen.forward(z, train=True)
        scores = critic.forward(fake, train=True)
        gen_loss = -float(scores.mean())
        dgen = critic.backward(np.full((batch, 1, 1, 1), -1.0 / batch))
        gen.backward(dgen)
        opt_g.step(gen.gradients())

        if not (math.isfinite(critic_loss) and math.isfinite(gen_loss)):
            raise DivergenceError(
                f"non-finite losses at epoch {epoch}: critic={critic_loss}, "
                f"generator={gen_loss}", epoch=epoch)
        log.append(epoch, critic_loss, gen_loss, gap, lipschitz_diag,
                   time.perf_counter() - t0)

    first = dataset.items[0]
    model = TrainedModel(generator=gen, critic=critic, gen_cfg=gen_cfg,
                         critic_cfg=critic_cfg, train_cfg=tc,
                         grid=first.grid, colormap=first.colormap)
    return model, log


def sample(model: TrainedModel, count: int, seed: int = 0) -> list[TomogramImage]:
    """Draw Gaussian latents and map generator outputs back to 8-bit RGB."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    out: list[TomogramImage] = []
    chunk = 64
    for start in range(0, count, chunk):
        z = rng.normal(size=(min(chunk, count - start), model.latent_dim, 1, 1))
        y = model.generator.forward(z, train=False)
        pixels = np.clip(np.round((y + 1.0) * 127.5), 0, 255).astype(np.uint8)
        for img in pixels:
            out.append(TomogramImage(pixels=img.transpose(1, 2, 0),
                                     colormap=model.colormap, v_max=1.0,
                                     grid=model.grid))
    return out


# ---------------------------------------------------------------------------
# checkpoint format: magic, version, JSON header, little-endian f64 arrays

_MAGIC = b"TFGN"
_VERSION = 1


def save_model(model: TrainedModel, path) -> None:
    header = {
        "version": _VERSION,
        "scale": model.gen_cfg.scale.value,
        "generator": [s.to_json() for s in model.gen_cfg.layers],
        "generator_input": list(model.gen_cfg.input_shape),
        "critic": [s.to_json() for s in model.critic_cfg.layers],
        "critic_input": list(model.critic_cfg.input_shape),
        "train": model.train_cfg.to_json(),
        "grid": {"x_min": model.grid.x_min, "x_max": model.grid.x_max,
                 "theta_min": model.grid.theta_min,
                 "theta_max": model.grid.theta_max,
                 "n_x": model.grid.n_x, "n_theta": model.grid.n_theta},
        "colormap": model.colormap.value,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for net in (model.generator, model.critic):
            for arr in net.parameters() + net.buffers():
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path) -> TrainedModel:
    from .network import LayerSpec

    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a tomoforge checkpoint")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode())
        scale = Scale(header["scale"])
        gen_cfg = NetworkConfig(
            layers=[LayerSpec.from_json(d) for d in header["generator"]],
            input_shape=tuple(header["generator_input"]), scale=scale)
        critic_cfg = NetworkConfig(
            layers=[LayerSpec.from_json(d) for d in header["critic"]],
            input_shape=tuple(header["critic_input"]), scale=scale)
        rng = np.random.default_rng(0)
        gen = build_generator(gen_cfg, rng)
        critic = build_critic(critic_cfg, rng)
        for net in (gen, critic):
            for arr in net.parameters() + net.buffers():
                raw = fh.read(arr.size * 8)
                arr[...] = np.frombuffer(raw, dtype="<f8").reshape(arr.shape)
        g = header["grid"]
        grid = TomogramGrid(x_min=g["x_min"], x_max=g["x_max"],
                            theta_min=g["theta_min"], theta_max=g["theta_max"],
                            n_x=g["n_x"], n_theta=g["n_theta"])
        return TrainedModel(generator=gen, critic=critic, gen_cfg=gen_cfg,
                            critic_cfg=critic_cfg,
                            train_cfg=TrainConfig.from_json(header["train"]),
                            grid=grid, colormap=ColormapId(header["colormap"]))
