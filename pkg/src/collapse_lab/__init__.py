"""Toy models of true and false wavefunction collapse."""

from .quantum_core import (
    DensityMatrix2,
    ModelParams,
    ProbeState,
    SystemState,
    branch_probabilities,
    make_superposition,
    off_diagonal_magnitude,
    probe_expectation,
)
from .noise import NoisePath, RngStream, integrate_path, log_density_raw, sample_raw_path

__version__ = "0.1.0"
