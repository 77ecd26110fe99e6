"""tomoforge: optical-tomogram patterns, from synthesis to classification.

Synthesize quadrature tomograms of single-mode states of light, render
them as colormapped rasters, train a Wasserstein GAN on the rasters,
and read physical observables (mean photon number, quadrature moments)
straight off any tomogram — no state reconstruction anywhere.
"""

from .classify import (Classification, GlossaryEntry, Verdict, build_glossary,
                       classify)
from .colormap import (ColorLut, ColormapId, Regulator, TomogramImage,
                       apply_regulator, build_lut, decode, decode_with_flags,
                       encode, perturb_colors)
from .errors import (CutoffError, DegeneratePdfError, DegenerateScaleError,
                     DivergenceError, ForeignPixelError, TomoforgeError)
from .metrics import WassersteinEstimate, critic_duality_gap, w1_pdf
from .moments import (mean_photon_number, normalize_pdf, quad_moment,
                      quad_variance, report, wunsche_moment)
from .states import (DEFAULT_CUTOFF, FockBasisCutoff, MomentReport,
                     QuadraturePdf, QuantumState, StateKind, beta_opt,
                     fock_wavefunction, gain, pacs_coefficients,
                     quadrature_pdf, theory_observables)
from .tomogrid import (NoiseModel, NoiseSpec, Tomogram, TomogramGrid,
                       TrainingDataset, apply_noise, assemble_dataset,
                       synthesize)

__version__ = "0.1.0"

__all__ = [
    "Classification", "GlossaryEntry", "Verdict", "build_glossary", "classify",
    "ColorLut", "ColormapId", "Regulator", "TomogramImage", "apply_regulator",
    "build_lut", "decode", "decode_with_flags", "encode", "perturb_colors",
    "CutoffError", "DegeneratePdfError", "DegenerateScaleError",
    "DivergenceError", "ForeignPixelError", "TomoforgeError",
    "WassersteinEstimate", "critic_duality_gap", "w1_pdf",
    "mean_photon_number", "normalize_pdf", "quad_moment", "quad_variance",
    "report", "wunsche_moment",
    "DEFAULT_CUTOFF", "FockBasisCutoff", "MomentReport", "QuadraturePdf",
    "QuantumState", "StateKind", "beta_opt", "fock_wavefunction", "gain",
    "pacs_coefficients", "quadrature_pdf", "theory_observables",
    "NoiseModel", "NoiseSpec", "Tomogram", "TomogramGrid", "TrainingDataset",
    "apply_noise", "assemble_dataset", "synthesize",
    "__version__",
]
