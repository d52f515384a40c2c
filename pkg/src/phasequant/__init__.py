"""Phase-space quantization by diffusive averaging on an extended phase space.

The package builds wave functions as averaged amplitudes over a circle
bundle on phase space, forms the nonnegative phase-space density they
induce, quantizes observables through that density, simulates the
averaging diffusion, and computes oscillator spectra and the hydrogen
level-shift calibration of the diffusion intensities.
"""

from .constants import PhysicalConstants
from .core import (
    ExtendedAmplitude,
    ModelParams,
    PhaseGrid,
    PositionGrid,
    WeylElement,
    apply_weyl,
    fiber_project,
)
from .density import (
    PhaseSpaceDensity,
    WignerDensity,
    density_from_wavefunction,
    smoothing_check,
    wigner,
)
from .diffusion import (
    DiffusionSpec,
    ModeEvolution,
    Trajectory,
    asymptotic_state,
    evolve,
    measure_decay,
)
from .errors import PhaseQuantError
from .operators import (
    OperatorKernel,
    PolynomialSymbol,
    apply,
    kernel_by_quadrature,
    kernel_by_symbol,
    position_observable,
)
from .spectral import (
    LambEstimate,
    SpectralResult,
    lamb_shift_forward,
    lamb_shift_inverse,
    oscillator_spectrum,
    perturbative_shift,
)
from .transform import AveragedAmplitude, WaveFunction, extract, synthesize

__version__ = "0.1.0"

__all__ = [
    "AveragedAmplitude",
    "DiffusionSpec",
    "ExtendedAmplitude",
    "LambEstimate",
    "ModeEvolution",
    "ModelParams",
    "OperatorKernel",
    "PhaseGrid",
    "PhaseQuantError",
    "PhaseSpaceDensity",
    "PhysicalConstants",
    "PolynomialSymbol",
    "PositionGrid",
    "SpectralResult",
    "Trajectory",
    "WaveFunction",
    "WeylElement",
    "WignerDensity",
    "apply",
    "apply_weyl",
    "asymptotic_state",
    "density_from_wavefunction",
    "evolve",
    "extract",
    "fiber_project",
    "kernel_by_quadrature",
    "kernel_by_symbol",
    "lamb_shift_forward",
    "lamb_shift_inverse",
    "measure_decay",
    "oscillator_spectrum",
    "perturbative_shift",
    "position_observable",
    "smoothing_check",
    "synthesize",
    "wigner",
]
