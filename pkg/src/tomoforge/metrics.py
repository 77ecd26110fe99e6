"""Wasserstein distances: the 1-d PDF distance and the critic duality gap."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .states import QuadraturePdf


class EstimateKind(Enum):
    PDF_W1 = "pdf-w1"
    CRITIC_DUALITY = "critic-duality"


@dataclass(frozen=True)
class WassersteinEstimate:
    value: float
    kind: EstimateKind


def w1_pdf(f: QuadraturePdf, g: QuadraturePdf) -> float:
    """1-Wasserstein distance between two normalized densities on one grid.

    Equals the integral of |F - G| where F and G are the cumulative
    distributions, here built with the same trapezoid convention used
    for normalization.
    """
    if not (f.normalized and g.normalized):
        raise ValueError("w1_pdf requires normalized densities")
    if f.x.shape != g.x.shape or not np.array_equal(f.x, g.x):
        raise ValueError("densities must share the same x grid")
    cdf_f = cumulative_trapezoid(f.p, f.x, initial=0.0)
    cdf_g = cumulative_trapezoid(g.p, g.x, initial=0.0)
    return float(np.trapezoid(np.abs(cdf_f - cdf_g), f.x))


def critic_duality_gap(real_scores, fake_scores) -> float:
    """mean D(real) - mean D(fake); the quantity the critic maximizes."""
    real_scores = np.asarray(real_scores, dtype=float).reshape(-1)
    fake_scores = np.asarray(fake_scores, dtype=float).reshape(-1)
    if real_scores.size == 0 or fake_scores.size == 0:
        raise ValueError("score batches must be nonempty")
    return float(real_scores.mean() - fake_scores.mean())
