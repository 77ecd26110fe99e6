"""Tomogram grids, synthesis, measurement-noise models and dataset assembly.

A tomogram samples w(X_theta, theta) on a rectangular grid of bin
centers; the canonical configuration is 128 x 128 bins over
X in [-5, 5] and theta in [-pi, pi].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from . import states as st
from .states import FockBasisCutoff, DEFAULT_CUTOFF, QuantumState


@dataclass(frozen=True)
class TomogramGrid:
    x_min: float = -5.0
    x_max: float = 5.0
    theta_min: float = -math.pi
    theta_max: float = math.pi
    n_x: int = 128
    n_theta: int = 128

    def __post_init__(self):
        if self.n_x < 2 or self.n_theta < 2:
            raise ValueError("grid needs at least 2 bins per axis")
        if self.x_max <= self.x_min or self.theta_max <= self.theta_min:
            raise ValueError("grid ranges must be nonempty")

    @staticmethod
    def canonical() -> "TomogramGrid":
        return TomogramGrid()

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_x

    @property
    def dtheta(self) -> float:
        return (self.theta_max - self.theta_min) / self.n_theta

    def x_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_x) + 0.5) * self.dx

    def theta_centers(self) -> np.ndarray:
        return self.theta_min + (np.arange(self.n_theta) + 0.5) * self.dtheta


@dataclass
class Tomogram:
    """Grid of density values; row i holds the slice at theta_centers()[i]."""

    grid: TomogramGrid
    values: np.ndarray
    label: Optional[QuantumState] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_theta, self.grid.n_x):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.n_theta}, {self.grid.n_x})")

    def row_integrals(self) -> np.ndarray:
        return np.trapezoid(self.values, self.grid.x_centers(), axis=1)

    def copy(self) -> "Tomogram":
        return Tomogram(self.grid, self.values.copy(), self.label)


class NoiseModel(Enum):
    UNIFORM_A = "a"
    GAUSSIAN_B = "b"


@dataclass(frozen=True)
class NoiseSpec:
    """Multiplicative measurement error applied at a random subset of bins."""

    model: NoiseModel
    epsilon: float
    fraction: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction must be in [0, 1], got {self.fraction}")


def synthesize(state: QuantumState,
               grid: TomogramGrid | None = None,
               cutoff: FockBasisCutoff = DEFAULT_CUTOFF) -> Tomogram:
    """Sample w(X_theta, theta) for the state on the grid's bin centers."""
    grid = grid or TomogramGrid.canonical()
    values = st.quadrature_pdf_rows(state, grid.theta_centers(),
                                    grid.x_centers(), cutoff)
    return Tomogram(grid=grid, values=values, label=state)


def apply_noise(t: Tomogram, spec: NoiseSpec) -> Tomogram:
    """Perturb floor(fraction * n_bins) distinct bins by a factor (1 + delta).

    delta is drawn from U(-eps, +eps) for model (a) or N(0, eps^2) for
    model (b); negative results are clipped to zero and rows are not
    renormalized.  Deterministic for a given seed.
    """
    out = t.copy()
    n_total = t.grid.n_x * t.grid.n_theta
    count = int(math.floor(spec.fraction * n_total))
    if count == 0:
        return out
    rng = np.random.default_rng(spec.seed)
    idx = rng.choice(n_total, size=count, replace=False)
    if spec.model is NoiseModel.UNIFORM_A:
        delta = rng.uniform(-spec.epsilon, spec.epsilon, size=count)
    else:
        delta = rng.normal(0.0, spec.epsilon, size=count)
    flat = out.values.reshape(-1)
    flat[idx] *= 1.0 + delta
    np.clip(flat, 0.0, None, out=flat)
    return out


# ---------------------------------------------------------------------------
# training datasets

NOISY_FRACTIONS = (0.025, 0.05, 0.075)
COPIES_PER_SET = 4
CLEAN_COPIES = 16


@dataclass
class TrainingDataset:
    """Colormapped tomogram images plus a manifest describing each item."""

    items: list = field(default_factory=list)      # list[TomogramImage]
    manifest: list = field(default_factory=list)   # list[dict]

    def __len__(self):
        return len(self.items)

    def manifest_json(self) -> str:
        return json.dumps(self.manifest, indent=2)


def assemble_dataset(state_list: list[QuantumState],
                     noise: Optional[NoiseSpec] = None,
                     colormap_id=None,
                     grid: TomogramGrid | None = None,
                     cutoff: FockBasisCutoff = DEFAULT_CUTOFF) -> TrainingDataset:
    """Build the 16-copies-per-state training set.

    Without a noise template every state contributes 16 identical clean
    images.  With one, each state contributes 4 clean copies plus 4
    copies at each of the 2.5%, 5% and 7.5% noisy-bin fractions; the
    template's seed is combined with the item position so every noisy
    copy gets its own reproducible stream.
    """
    from . import colormap as cm

    if not state_list:
        raise ValueError("state list must be nonempty")
    grid = grid or TomogramGrid.canonical()
    cid = colormap_id if colormap_id is not None else cm.ColormapId.SEQUENTIAL_LINEAR
    ds = TrainingDataset()
    for s_idx, state in enumerate(state_list):
        clean = synthesize(state, grid, cutoff)
        if noise is None:
            plan = [(None, 0.0)] * CLEAN_COPIES
        else:
            plan = [(None, 0.0)] * COPIES_PER_SET
            for frac in NOISY_FRACTIONS:
                plan += [(noise.model, frac)] * COPIES_PER_SET
        for copy_idx, (model, frac) in enumerate(plan):
            if model is None or frac == 0.0:
                tomo, noise_rec = clean, None
            else:
                item_seed = noise.seed + 1000 * s_idx + copy_idx
                spec = replace(noise, fraction=frac, seed=item_seed)
                tomo = apply_noise(clean, spec)
                noise_rec = {"model": model.value, "epsilon": noise.epsilon,
                             "fraction": frac, "seed": item_seed}
            img = cm.encode(tomo, cid)
            ds.items.append(img)
            ds.manifest.append({
                "state": state.label(),
                "copy": copy_idx,
                "noise": noise_rec,
                "colormap": cid.value,
            })
    return ds


# ---------------------------------------------------------------------------
# serialization

def tomogram_to_csv(t: Tomogram, path) -> None:
    """Write grid metadata on the first line, then one CSV row per theta."""
    with open(path, "w") as fh:
        g = t.grid
        fh.write(f"x_min={g.x_min!r},x_max={g.x_max!r},"
                 f"theta_min={g.theta_min!r},theta_max={g.theta_max!r},"
                 f"n_x={g.n_x},n_theta={g.n_theta}")
        if t.label is not None:
            fh.write(f",state={t.label.label()}")
        fh.write("\n")
        for row in t.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def tomogram_from_csv(path) -> Tomogram:
    with open(path) as fh:
        header = fh.readline().strip()
        meta = dict(kv.split("=", 1) for kv in header.split(","))
        grid = TomogramGrid(
            x_min=float(meta["x_min"]), x_max=float(meta["x_max"]),
            theta_min=float(meta["theta_min"]), theta_max=float(meta["theta_max"]),
            n_x=int(meta["n_x"]), n_theta=int(meta["n_theta"]))
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    label = QuantumState.from_label(meta["state"]) if "state" in meta else None
    return Tomogram(grid=grid, values=values, label=label)
