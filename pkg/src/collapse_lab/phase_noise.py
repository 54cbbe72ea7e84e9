"""
Phase-noise ("false collapse of the first kind") trajectories.

Each trajectory evolves unitarily under d|psi>/dt = -i w(t) A |psi> with a
raw white-noise w, so only branch phases move: amp_e -> amp_e exp(-i B(T) e).
The ensemble density matrix nevertheless decays exactly like the true
collapse one, which is the point of the comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEigenvalues
from .noise import NoisePath, RngStream, integrate_path, sample_raw_B
from .quantum_core import DensityMatrix2, ModelParams, ProbeState, SystemState
from .true_collapse import RhoEstimate, rho_from_samples


@dataclass(frozen=True)
class PhaseTrajectory:
    path: NoisePath
    state: SystemState


def evolve_phase(state0: SystemState, path: NoisePath, params: ModelParams) -> PhaseTrajectory:
    B = integrate_path(path)
    amp_a = state0.amp_a * complex(math.cos(B * params.a), -math.sin(B * params.a))
    amp_b = state0.amp_b * complex(math.cos(B * params.b), -math.sin(B * params.b))
    return PhaseTrajectory(path, SystemState(amp_a, amp_b, normalized=state0.normalized))


def ensemble_rho_phase(horizon: float, state0: SystemState, params: ModelParams) -> DensityMatrix2:
    """Closed-form ensemble average over the raw noise.

    E[exp(-i B (a-b))] for B ~ N(0, lam T) is the Gaussian characteristic
    function exp(-(lam T/2)(a-b)^2).
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    s = state0.normalize()
    off = s.amp_a * s.amp_b.conjugate() * params.decay_factor(horizon)
    return DensityMatrix2(abs(s.amp_a) ** 2, off, off.conjugate(), abs(s.amp_b) ** 2)


def phase_coherences(B, state0: SystemState, params: ModelParams) -> np.ndarray:
    """amp_a * conj(amp_b) after phase evolution, for an array of B(T)."""
    s = state0.normalize()
    return s.amp_a * s.amp_b.conjugate() * np.exp(-1j * np.asarray(B) * (params.a - params.b))


def ensemble_rho_phase_mc(
    n_trials: int, horizon: float, state0: SystemState, params: ModelParams, rng: RngStream
) -> RhoEstimate:
    """Monte Carlo average of |psi_w><psi_w| over raw-noise paths."""
    s = state0.normalize()
    if horizon == 0:
        return RhoEstimate(s.density(), np.zeros((2, 2), dtype=complex), n_trials)
    B = sample_raw_B(params, horizon, n_trials, rng)
    p_a = np.full(n_trials, abs(s.amp_a) ** 2)
    p_b = np.full(n_trials, abs(s.amp_b) ** 2)
    return rho_from_samples(p_a, p_b, phase_coherences(B, s, params), n_trials)


def _cross_term(state0: SystemState, probe: ProbeState) -> float:
    s = state0.normalize()
    return 2.0 * (s.amp_a * s.amp_b.conjugate() * probe.nu * probe.mu.conjugate()).real


def interference_probability(
    state0: SystemState, probe: ProbeState, horizon: float, params: ModelParams
) -> float:
    """Probability a rapid test at time T finds the system in the probe state."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    s = state0.normalize()
    diag = abs(s.amp_a) ** 2 * abs(probe.mu) ** 2 + abs(s.amp_b) ** 2 * abs(probe.nu) ** 2
    return diag + _cross_term(s, probe) * params.decay_factor(horizon)


def interference_probability_mc(
    state0: SystemState, probe: ProbeState, horizon: float, params: ModelParams,
    n_trials: int, rng: RngStream,
) -> tuple[float, float]:
    """(mean, standard error) of |<phi|psi_w>|^2 over raw-noise trajectories."""
    s = state0.normalize()
    B = sample_raw_B(params, horizon, n_trials, rng)
    ov = (probe.mu.conjugate() * s.amp_a * np.exp(-1j * B * params.a)
          + probe.nu.conjugate() * s.amp_b * np.exp(-1j * B * params.b))
    prob = np.abs(ov) ** 2
    return float(np.mean(prob)), float(np.std(prob, ddof=1) / math.sqrt(n_trials))


def nowen_time(
    state0: SystemState, probe: ProbeState, params: ModelParams, epsilon: float
) -> float:
    """Earliest T at which the interference term drops to ``epsilon`` or below."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    cross = abs(_cross_term(state0, probe))
    if cross <= epsilon:
        return 0.0
    if params.a == params.b:
        raise DegenerateEigenvalues(
            f"interference term {cross} never decays below {epsilon} when a == b")
    return 2.0 * math.log(cross / epsilon) / (params.lam * params.gap_sq)


def residual_interference(
    state0: SystemState, probe: ProbeState, horizon: float, params: ModelParams
) -> float:
    """|interference term| remaining at ``horizon``."""
    return abs(_cross_term(state0, probe)) * params.decay_factor(horizon)
