"""Analytic quantum states of a single radiation mode.

Provides harmonic-oscillator (Fock) wavefunctions, Fock-basis expansion
coefficients for the supported state families, quadrature probability
densities w(X_theta, theta), and closed-form observables used as ground
truth by the classification glossary.

Conventions: the rotated quadrature is X_theta = (a^dag e^{i theta} +
a e^{-i theta}) / sqrt(2), so the vacuum variance is 1/2 and
psi_n(x) = (2^n n! sqrt(pi))^{-1/2} H_n(x) exp(-x^2/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import eval_laguerre

from .errors import CutoffError

# Oscillator recurrence is numerically exact far beyond this, but quadrature
# grids of interest resolve nothing above a few hundred quanta.
N_MAX_SUPPORTED = 256


class StateKind(Enum):
    FOCK = "fock"
    COHERENT = "cs"
    PHOTON_ADDED_CS = "pacs"
    AMPLIFIED_CS = "acs"
    OPTIMAL_CS = "ocs"


@dataclass(frozen=True)
class QuantumState:
    """Tagged description of an analytic state.

    ``n`` is the photon number (Fock), ``alpha`` the real coherent
    amplitude, and ``m`` the number of added photons (photon-added CS)
    or the gain order (amplified / optimal CS).
    """

    kind: StateKind
    n: int = 0
    alpha: float = 0.0
    m: int = 1

    def __post_init__(self):
        if self.kind is StateKind.FOCK:
            if self.n < 0:
                raise ValueError(f"photon number must be >= 0, got {self.n}")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        if self.kind in (StateKind.PHOTON_ADDED_CS, StateKind.AMPLIFIED_CS,
                         StateKind.OPTIMAL_CS):
            if self.m < 1:
                raise ValueError(f"m must be >= 1, got {self.m}")
        if self.kind in (StateKind.AMPLIFIED_CS, StateKind.OPTIMAL_CS):
            if self.alpha <= 0:
                raise ValueError(f"{self.kind.value} requires alpha > 0")

    @staticmethod
    def fock(n: int) -> "QuantumState":
        return QuantumState(StateKind.FOCK, n=n)

    @staticmethod
    def coherent(alpha: float) -> "QuantumState":
        return QuantumState(StateKind.COHERENT, alpha=alpha)

    @staticmethod
    def photon_added_cs(alpha: float, m: int = 1) -> "QuantumState":
        return QuantumState(StateKind.PHOTON_ADDED_CS, alpha=alpha, m=m)

    @staticmethod
    def amplified_cs(alpha: float, m: int = 1) -> "QuantumState":
        return QuantumState(StateKind.AMPLIFIED_CS, alpha=alpha, m=m)

    @staticmethod
    def optimal_cs(alpha: float, m: int = 1) -> "QuantumState":
        return QuantumState(StateKind.OPTIMAL_CS, alpha=alpha, m=m)

    def label(self) -> str:
        if self.kind is StateKind.FOCK:
            return f"fock:{self.n}"
        if self.kind is StateKind.COHERENT:
            return f"cs:{self.alpha!r}"
        return f"{self.kind.value}:{self.alpha!r}:{self.m}"

    @staticmethod
    def from_label(text: str) -> "QuantumState":
        parts = text.split(":")
        kind = parts[0].lower()
        if kind == "fock":
            return QuantumState.fock(int(parts[1]))
        if kind == "cs":
            return QuantumState.coherent(float(parts[1]))
        m = int(parts[2]) if len(parts) > 2 else 1
        try:
            sk = StateKind(kind)
        except ValueError:
            raise ValueError(f"unknown state kind {kind!r}") from None
        return QuantumState(sk, alpha=float(parts[1]), m=m)


@dataclass(frozen=True)
class FockBasisCutoff:
    """Truncation of the Fock expansion used to evaluate densities."""

    n_max: int = 64
    norm_tol: float = 1e-10

    def __post_init__(self):
        if not 0 < self.n_max <= N_MAX_SUPPORTED:
            raise ValueError(f"n_max must be in [1, {N_MAX_SUPPORTED}]")


DEFAULT_CUTOFF = FockBasisCutoff()


@dataclass
class QuadraturePdf:
    """One tomographic slice: density sampled over x at fixed theta.

    ``normalized`` records whether the trapezoid integral over the grid
    has been rescaled to one.
    """

    theta: float
    x: np.ndarray
    p: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.x.shape != self.p.shape or self.x.ndim != 1:
            raise ValueError("x and p must be 1-d arrays of equal length")

    def integral(self) -> float:
        return float(np.trapezoid(self.p, self.x))


@dataclass
class MomentReport:
    """Observables extracted from one tomogram (or known in closed form)."""

    mean_n: float
    quad_mean: dict = field(default_factory=dict)   # theta -> <X_theta>
    quad_var: dict = field(default_factory=dict)    # theta -> variance
    higher: dict = field(default_factory=dict)      # (theta, k) -> <X_theta^k>
    flags: list = field(default_factory=list)

    @property
    def var_x(self) -> float:
        return self.quad_var[min(self.quad_var, key=lambda t: abs(t))]

    @property
    def var_p(self) -> float:
        return self.quad_var[min(self.quad_var, key=lambda t: abs(t - math.pi / 2))]


# ---------------------------------------------------------------------------
# wavefunctions

def oscillator_basis(n_max: int, x: np.ndarray) -> np.ndarray:
    """Normalized oscillator eigenfunctions psi_0..psi_n_max sampled on x.

    Uses the normalized upward recurrence
    psi_n = sqrt(2/n) x psi_{n-1} - sqrt((n-1)/n) psi_{n-2},
    which folds the 1/sqrt(2^n n!) factor into the iteration and stays
    in range for every supported order.
    """
    if n_max < 0 or n_max > N_MAX_SUPPORTED:
        raise ValueError(f"order must be in [0, {N_MAX_SUPPORTED}], got {n_max}")
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(2, n_max + 1):
        out[n] = math.sqrt(2.0 / n) * x * out[n - 1] \
            - math.sqrt((n - 1) / n) * out[n - 2]
    return out


def fock_wavefunction(n: int, x):
    """psi_n(x), the position wavefunction of the n-photon state."""
    if n < 0 or n > N_MAX_SUPPORTED:
        raise ValueError(f"n must be in [0, {N_MAX_SUPPORTED}], got {n}")
    arr = np.asarray(x, dtype=float)
    val = oscillator_basis(n, np.atleast_1d(arr))[n]
    return float(val[0]) if arr.ndim == 0 else val.reshape(arr.shape)


# ---------------------------------------------------------------------------
# Fock coefficients

def coherent_coefficients(alpha: float, cutoff: FockBasisCutoff = DEFAULT_CUTOFF) -> np.ndarray:
    """Fock coefficients of |alpha> (real alpha), exp(-a^2/2) a^n / sqrt(n!)."""
    c = np.zeros(cutoff.n_max + 1)
    if alpha == 0.0:
        c[0] = 1.0
        return c
    n = np.arange(cutoff.n_max + 1)
    logmag = -0.5 * alpha * alpha + n * math.log(abs(alpha)) \
        - 0.5 * np.array([math.lgamma(k + 1) for k in n])
    c = np.exp(logmag)
    if alpha < 0:
        c *= (-1.0) ** n
    deficit = 1.0 - float(np.sum(c * c))
    if deficit > cutoff.norm_tol:
        raise CutoffError(
            f"coherent state alpha={alpha} loses {deficit:.3e} norm at n_max={cutoff.n_max}")
    return c


def pacs_coefficients(alpha: float, m: int,
                      cutoff: FockBasisCutoff = DEFAULT_CUTOFF) -> np.ndarray:
    """Normalized Fock coefficients of the m-photon-added CS, prop. to a^dag^m |alpha>.

    Raising |alpha> by a^dag^m maps the CS coefficient at n to
    sqrt((n+m)!/n!) at n+m; the exact squared norm of the raised vector is
    m! L_m(-alpha^2), which the truncated sum is checked against.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    nmax = cutoff.n_max
    ca = coherent_coefficients(alpha, FockBasisCutoff(nmax, norm_tol=math.inf))
    d = np.zeros(nmax + 1)
    for k in range(m, nmax + 1):
        rising = math.exp(0.5 * (math.lgamma(k + 1) - math.lgamma(k - m + 1)))
        d[k] = ca[k - m] * rising
    exact_norm_sq = math.factorial(m) * float(eval_laguerre(m, -alpha * alpha))
    deficit = 1.0 - float(np.sum(d * d)) / exact_norm_sq
    if deficit > cutoff.norm_tol:
        raise CutoffError(
            f"PACS alpha={alpha}, m={m} loses {deficit:.3e} norm at n_max={nmax}")
    return d / math.sqrt(exact_norm_sq)


def gain(alpha: float, m: int = 1) -> float:
    """Amplification gain g_m(alpha) = <alpha,m| a |alpha,m> / alpha.

    Computed from the photon-added-CS coefficients; exceeds one for
    alpha > 0 because photon addition pulls the amplitude outward.
    """
    if alpha == 0.0:
        raise ValueError("gain is undefined at alpha = 0")
    c = pacs_coefficients(alpha, m)
    n = np.arange(len(c) - 1)
    a_expect = float(np.sum(c[:-1] * c[1:] * np.sqrt(n + 1)))
    return a_expect / alpha


def beta_opt(alpha: float, m: int = 1) -> float:
    """Amplitude of the coherent state closest in fidelity to |alpha,m>."""
    if alpha <= 0:
        raise ValueError(f"beta_opt requires alpha > 0, got {alpha}")
    return 0.5 * alpha * (1.0 + math.sqrt(1.0 + 4.0 * m / (alpha * alpha)))


def effective_amplitude(state: QuantumState) -> float:
    """Coherent amplitude realized by the CS-family states."""
    if state.kind is StateKind.COHERENT:
        return state.alpha
    if state.kind is StateKind.AMPLIFIED_CS:
        return gain(state.alpha, state.m) * state.alpha
    if state.kind is StateKind.OPTIMAL_CS:
        return beta_opt(state.alpha, state.m)
    raise ValueError(f"{state.kind} has no coherent amplitude")


def fock_coefficients(state: QuantumState,
                      cutoff: FockBasisCutoff = DEFAULT_CUTOFF) -> np.ndarray:
    """Fock expansion coefficients (real for every supported family)."""
    if state.kind is StateKind.FOCK:
        if state.n > cutoff.n_max:
            raise CutoffError(f"Fock n={state.n} exceeds cutoff {cutoff.n_max}")
        c = np.zeros(cutoff.n_max + 1)
        c[state.n] = 1.0
        return c
    if state.kind is StateKind.PHOTON_ADDED_CS:
        return pacs_coefficients(state.alpha, state.m, cutoff)
    return coherent_coefficients(effective_amplitude(state), cutoff)


# ---------------------------------------------------------------------------
# quadrature densities

def quadrature_pdf_rows(state: QuantumState, thetas: np.ndarray, x_grid: np.ndarray,
                        cutoff: FockBasisCutoff = DEFAULT_CUTOFF) -> np.ndarray:
    """Densities w(x, theta) for several angles at once, shape (len(thetas), len(x)).

    w = |sum_n c_n exp(-i n theta) psi_n(x)|^2 with c_n the Fock
    coefficients of the state.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    c = fock_coefficients(state, cutoff)
    basis = oscillator_basis(cutoff.n_max, x_grid)
    phases = np.exp(-1j * np.outer(thetas, np.arange(cutoff.n_max + 1)))
    amp = (phases * c) @ basis
    return np.abs(amp) ** 2


def quadrature_pdf(state: QuantumState, theta: float, x_grid: np.ndarray,
                   cutoff: FockBasisCutoff = DEFAULT_CUTOFF) -> QuadraturePdf:
    """Tomographic slice of the state at homodyne angle theta."""
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.ndim != 1 or len(x_grid) < 2 or np.any(np.diff(x_grid) <= 0):
        raise ValueError("x_grid must be strictly increasing")
    rows = quadrature_pdf_rows(state, np.array([theta]), x_grid, cutoff)
    return QuadraturePdf(theta=float(theta), x=x_grid, p=rows[0], normalized=False)


# ---------------------------------------------------------------------------
# closed-form observables

def _normal_ordered_cs_expect(p: int, q: int, alpha: float) -> float:
    """<alpha| a^p a^dag^q |alpha> for real alpha.

    Normal ordering a^p a^dag^q = sum_k k! C(p,k) C(q,k) a^dag^{q-k} a^{p-k}
    reduces the expectation to a finite combinatorial sum.
    """
    total = 0.0
    for k in range(min(p, q) + 1):
        total += math.factorial(k) * math.comb(p, k) * math.comb(q, k) \
            * alpha ** (p + q - 2 * k)
    return total


def ladder_expectations(state: QuantumState) -> tuple[float, float, float]:
    """Closed-form (<a>, <a^2>, <n>) for the state; all real by convention."""
    if state.kind is StateKind.FOCK:
        return 0.0, 0.0, float(state.n)
    if state.kind is StateKind.PHOTON_ADDED_CS:
        a, m = state.alpha, state.m
        norm_sq = _normal_ordered_cs_expect(m, m, a)
        a1 = _normal_ordered_cs_expect(m + 1, m, a) / norm_sq
        a2 = _normal_ordered_cs_expect(m + 2, m, a) / norm_sq
        mean_n = a * _normal_ordered_cs_expect(m + 1, m, a) / norm_sq + m
        return a1, a2, mean_n
    beta = effective_amplitude(state)
    return beta, beta * beta, beta * beta


def theory_quadrature_mean(state: QuantumState, theta: float) -> float:
    a1, _, _ = ladder_expectations(state)
    return math.sqrt(2.0) * a1 * math.cos(theta)


def theory_quadrature_variance(state: QuantumState, theta: float) -> float:
    a1, a2, mean_n = ladder_expectations(state)
    second = mean_n + 0.5 + math.cos(2.0 * theta) * a2
    return second - 2.0 * (a1 * math.cos(theta)) ** 2


def theory_observables(state: QuantumState,
                       thetas=(0.0, math.pi / 2)) -> MomentReport:
    """Ground-truth mean photon number and quadrature moments.

    Independent of the Fock-coefficient route: everything is evaluated
    through closed-form ladder-operator algebra, so it can serve as an
    oracle for the tomogram-based extraction.
    """
    a1, a2, mean_n = ladder_expectations(state)
    report = MomentReport(mean_n=mean_n)
    for theta in thetas:
        mu = math.sqrt(2.0) * a1 * math.cos(theta)
        var = mean_n + 0.5 + math.cos(2.0 * theta) * a2 - mu * mu
        report.quad_mean[theta] = mu
        report.quad_var[theta] = var
        report.higher[(theta, 1)] = mu
        report.higher[(theta, 2)] = var + mu * mu
    return report
