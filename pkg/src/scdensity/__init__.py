"""Self-consistent spectral density estimation with kernel baselines,
theoretical error curves and a Monte Carlo benchmark harness."""

from .errors import (
    ConvergenceWarning,
    InvalidInput,
    NumericalFailure,
    ScdError,
)
from .model import DensityCurve, EcfTable, FrequencyGrid, Sample, SpectralEstimate
from .ecf import default_grid, ecf_evaluate
from .sc import ScConfig, sc_density, sc_estimate, sc_moments, sc_spectral
from .kernels import KernelSpec, adaptive_estimate, kernel_estimate
from .bench import BenchmarkPlan, fit_scaling, run_benchmark

__version__ = "0.1.0"

__all__ = [
    "BenchmarkPlan", "ConvergenceWarning", "DensityCurve", "EcfTable", "FrequencyGrid",
    "InvalidInput", "KernelSpec", "NumericalFailure", "Sample", "ScConfig", "ScdError",
    "SpectralEstimate", "adaptive_estimate", "default_grid", "ecf_evaluate", "fit_scaling",
    "kernel_estimate", "run_benchmark", "sc_density", "sc_estimate", "sc_moments", "sc_spectral",
]
