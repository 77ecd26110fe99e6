"""Value-to-RGB encoding of tomograms and its exact inverse.

Three lookup tables are provided: a 256-color linear heat ramp, a
45-color map that spends 30 visually disparate colors on values below
0.28, and the heat ramp respaced so half its entries cover that same
low range.  Every table stores (breakpoint, RGB) pairs with strictly
increasing breakpoints from 0 to 1 and pairwise-distinct colors, so
nearest-color decoding inverts encoding up to value quantization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DegeneratePdfError, DegenerateScaleError, ForeignPixelError
from .states import QuadraturePdf
from .tomogrid import Tomogram, TomogramGrid


class ColormapId(Enum):
    SEQUENTIAL_LINEAR = "sequential-linear"
    NONLINEAR = "nonlinear"
    NONLINEAR_SEQUENTIAL = "nonlinear-sequential"


LOW_RANGE_TOP = 0.28          # upper edge of the color-dense low-value band
NONLINEAR_LOW_COLORS = 30
NONLINEAR_HIGH_COLORS = 15
PINK_CODE = 0xFFC0CB          # packed RGB the disparate low band ramps down from


@dataclass(frozen=True)
class ColorLut:
    """Ordered (breakpoint, color) table; entry i represents value breakpoints[i]."""

    breakpoints: np.ndarray
    rgb: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        rgb = np.asarray(self.rgb, dtype=np.uint8)
        if bp.ndim != 1 or rgb.shape != (len(bp), 3):
            raise ValueError("need N breakpoints and N RGB triples")
        if bp[0] != 0.0 or bp[-1] != 1.0 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must increase strictly from 0 to 1")
        if len(np.unique(rgb.reshape(len(bp), 3), axis=0)) != len(bp):
            raise ValueError("RGB triples must be pairwise distinct")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "rgb", rgb)

    def __len__(self):
        return len(self.breakpoints)

    def bin_edges(self) -> np.ndarray:
        """Value boundaries between adjacent entries (halfway points)."""
        bp = self.breakpoints
        return 0.5 * (bp[1:] + bp[:-1])

    def widest_bin(self) -> float:
        """Largest gap between consecutive breakpoints; bounds decode error."""
        return float(np.max(np.diff(self.breakpoints)))

    def min_color_distance(self) -> float:
        f = self.rgb.astype(float)
        d2 = np.sum((f[:, None, :] - f[None, :, :]) ** 2, axis=-1)
        d2[np.diag_indices(len(f))] = np.inf
        return float(math.sqrt(d2.min()))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("breakpoint,r,g,b\n")
            for bp, (r, g, b) in zip(self.breakpoints, self.rgb):
                fh.write(f"{float(bp)!r},{r},{g},{b}\n")


def _heat_ramp(t: np.ndarray) -> np.ndarray:
    """Black -> red -> yellow -> white, each channel saturating in turn."""
    t = np.asarray(t, dtype=float)
    chans = [np.clip(3.0 * t - k, 0.0, 1.0) for k in (0.0, 1.0, 2.0)]
    return np.round(np.stack(chans, axis=-1) * 255.0).astype(np.uint8)


def _unpack(code: int) -> tuple[int, int, int]:
    return (code >> 16) & 0xFF, (code >> 8) & 0xFF, code & 0xFF


def build_lut(cid: ColormapId) -> ColorLut:
    if cid is ColormapId.SEQUENTIAL_LINEAR:
        bp = np.linspace(0.0, 1.0, 256)
        return ColorLut(bp, _heat_ramp(bp))
    if cid is ColormapId.NONLINEAR_SEQUENTIAL:
        half = 128
        low = LOW_RANGE_TOP * np.arange(half) / (half - 1)
        high = LOW_RANGE_TOP + (1.0 - LOW_RANGE_TOP) * np.arange(1, half + 1) / half
        bp = np.concatenate([low, high])
        return ColorLut(bp, _heat_ramp(np.linspace(0.0, 1.0, 256)))
    if cid is ColormapId.NONLINEAR:
        n_lo, n_hi = NONLINEAR_LOW_COLORS, NONLINEAR_HIGH_COLORS
        low_bp = LOW_RANGE_TOP * np.arange(n_lo) / (n_lo - 1)
        # packed codes stepping down from pink to black give contiguously
        # placed but visually disparate colors, in decreasing code order
        low_rgb = np.array([_unpack(round(PINK_CODE * j / (n_lo - 1)))
                            for j in range(n_lo)], dtype=np.uint8)
        high_bp = LOW_RANGE_TOP + (1.0 - LOW_RANGE_TOP) * np.arange(1, n_hi + 1) / n_hi
        high_rgb = _heat_ramp(high_bp)
        return ColorLut(np.concatenate([low_bp, high_bp]),
                        np.concatenate([low_rgb, high_rgb]))
    raise ValueError(f"unknown colormap {cid}")


_LUT_CACHE: dict[ColormapId, ColorLut] = {}


def get_lut(cid: ColormapId) -> ColorLut:
    if cid not in _LUT_CACHE:
        _LUT_CACHE[cid] = build_lut(cid)
    return _LUT_CACHE[cid]


@dataclass
class TomogramImage:
    """RGB raster of a tomogram plus the scale information needed to invert it."""

    pixels: np.ndarray            # (height, width, 3) uint8, row 0 = theta_min
    colormap: ColormapId
    v_max: float
    grid: TomogramGrid

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError("pixels must be (height, width, 3)")
        if self.pixels.shape[:2] != (self.grid.n_theta, self.grid.n_x):
            raise ValueError("pixel raster does not match grid shape")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def channels_first(self) -> np.ndarray:
        """Float array (3, H, W) scaled to [-1, 1] for network consumption."""
        return self.pixels.transpose(2, 0, 1).astype(float) / 127.5 - 1.0


def encode(t: Tomogram, cid: ColormapId) -> TomogramImage:
    """Map each value through the LUT after scaling by the tomogram maximum."""
    v_max = float(t.values.max())
    if v_max <= 0.0:
        raise DegenerateScaleError("tomogram has no positive values to scale by")
    lut = get_lut(cid)
    idx = np.searchsorted(lut.bin_edges(), t.values / v_max, side="left")
    return TomogramImage(pixels=lut.rgb[idx], colormap=cid, v_max=v_max,
                         grid=t.grid)


def _nearest_entries(pixels: np.ndarray, lut: ColorLut) -> tuple[np.ndarray, np.ndarray]:
    flat = pixels.reshape(-1, 3).astype(float)
    d2 = np.sum((flat[:, None, :] - lut.rgb[None, :, :].astype(float)) ** 2, axis=-1)
    idx = np.argmin(d2, axis=1)       # ties resolve to the lower breakpoint
    dist = np.sqrt(d2[np.arange(len(flat)), idx])
    return idx.reshape(pixels.shape[:2]), dist.reshape(pixels.shape[:2])


def decode(img: TomogramImage, strict: bool = True) -> Tomogram:
    """Invert the colormap by nearest-color lookup.

    In strict mode a pixel farther than half the minimum inter-entry
    color distance from every entry raises ForeignPixelError; lenient
    mode decodes it to the nearest entry anyway (use decode_with_flags
    to learn how many pixels were foreign).
    """
    t, foreign = decode_with_flags(img)
    if strict and foreign:
        raise ForeignPixelError(
            f"{foreign} pixel(s) do not belong to colormap {img.colormap.value}",
            count=foreign)
    return t


def decode_with_flags(img: TomogramImage) -> tuple[Tomogram, int]:
    """Nearest-color decode plus the count of foreign pixels encountered."""
    lut = get_lut(img.colormap)
    idx, dist = _nearest_entries(img.pixels, lut)
    foreign = int(np.count_nonzero(dist > 0.5 * lut.min_color_distance()))
    values = lut.breakpoints[idx] * img.v_max
    return Tomogram(grid=img.grid, values=values, label=None), foreign


def perturb_colors(img: TomogramImage, sd: float = 0.8, seed: int = 0) -> TomogramImage:
    """Replace pixel colors with nearby LUT entries (generation-artifact stand-in).

    Adversarially generated rasters confuse adjacent colors where the
    map's intensity transitions are gradual; shifting each pixel's LUT
    index by a rounded Gaussian reproduces that failure mode on demand.
    """
    lut = get_lut(img.colormap)
    idx, _ = _nearest_entries(img.pixels, lut)
    rng = np.random.default_rng(seed)
    shift = np.rint(rng.normal(0.0, sd, size=idx.shape)).astype(int)
    new_idx = np.clip(idx + shift, 0, len(lut) - 1)
    return TomogramImage(pixels=lut.rgb[new_idx], colormap=img.colormap,
                         v_max=img.v_max, grid=img.grid)


# ---------------------------------------------------------------------------
# regulator

@dataclass(frozen=True)
class Regulator:
    """Flat-top window exp(-((x - x0)/L)^(2s)) that suppresses far-tail values."""

    x0: float = 0.0
    L: float = 2.3
    s: int = 5

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("cut-off length L must be positive")
        if self.s < 1:
            raise ValueError("fall-off exponent s must be a positive integer")

    def weights(self, x: np.ndarray) -> np.ndarray:
        u = (np.asarray(x, dtype=float) - self.x0) / self.L
        return np.exp(-(u ** (2 * self.s)))


def apply_regulator(pdf: QuadraturePdf, r: Regulator) -> QuadraturePdf:
    """Weight the density by the window and renormalize it."""
    weighted = pdf.p * r.weights(pdf.x)
    z = float(np.trapezoid(weighted, pdf.x))
    if z <= 0.0:
        raise DegeneratePdfError("regulated density integrates to zero")
    return QuadraturePdf(theta=pdf.theta, x=pdf.x, p=weighted / z, normalized=True)


# ---------------------------------------------------------------------------
# image files

def write_ppm(img: TomogramImage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(f"P6\n{img.width} {img.height}\n255\n".encode())
        fh.write(img.pixels.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"P6":
            raise ValueError("not a binary PPM file")
        dims = fh.readline().split()
        width, height = int(dims[0]), int(dims[1])
        fh.readline()
        data = np.frombuffer(fh.read(width * height * 3), dtype=np.uint8)
    return data.reshape(height, width, 3)


def write_png(img: TomogramImage, path) -> None:
    from PIL import Image

    Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")


def read_png(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def image_from_pixels(pixels: np.ndarray, cid: ColormapId,
                      v_max: float = 1.0,
                      grid: Optional[TomogramGrid] = None) -> TomogramImage:
    """Wrap a raw raster read back from disk; grid defaults to the canonical
    ranges stretched over the raster's shape."""
    pixels = np.asarray(pixels, dtype=np.uint8)
    if grid is None:
        h, w = pixels.shape[:2]
        grid = TomogramGrid(n_x=w, n_theta=h)
    return TomogramImage(pixels=pixels, colormap=cid, v_max=v_max, grid=grid)
