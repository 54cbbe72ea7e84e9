"""
CSL-style true collapse of a two-branch superposition.

With H = 0 the modified evolution

    d|psi>/dt = -(1/4 lam) [w(t) - 2 lam A]^2 |psi>

multiplies branch e in {a, b} by exp(-(1/4 lam) sum_n dt (w_n - 2 lam e)^2).
Paths occur with probability Dw <psi|psi> (the "cooked" measure), which for
two branches is the Gaussian mixture

    |alpha|^2 N(2 lam a, lam/dt)^N  +  |beta|^2 N(2 lam b, lam/dt)^N.

The overall path functional multiplying both branches is never formed:
states are normalized and relative weights are tracked as logs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit, ndtr

from .errors import BadThreshold
from .noise import NoisePath, RngStream, gaussian_chunks, n_steps
from .quantum_core import DensityMatrix2, ModelParams, SystemState

DEFAULT_THRESHOLD = 1e-12


class Outcome(enum.Enum):
    A = "a"
    B = "b"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class CslTrajectory:
    path: NoisePath
    state: SystemState
    log_norm_sq: float

    @property
    def p_a(self) -> float:
        return abs(self.state.amp_a) ** 2

    @property
    def p_b(self) -> float:
        return abs(self.state.amp_b) ** 2


def branch_log_amplitude(path: NoisePath, eigenvalue: float, params: ModelParams) -> float:
    """Log of the real factor the evolution puts on the branch with this eigenvalue."""
    dev = path.values - 2.0 * params.lam * eigenvalue
    return float(-np.sum(dev * dev) * path.dt / (4.0 * params.lam))


def evolve_csl(state0: SystemState, path: NoisePath, params: ModelParams) -> CslTrajectory:
    la = branch_log_amplitude(path, params.a, params)
    lb = branch_log_amplitude(path, params.b, params)
    alpha, beta = state0.amp_a, state0.amp_b
    state = SystemState.from_log_weights(alpha, beta, la, lb)
    log_norm_sq = float(np.logaddexp(_log_sq(alpha) + 2 * la, _log_sq(beta) + 2 * lb))
    return CslTrajectory(path, state, log_norm_sq)


def _log_sq(z) -> float:
    m = abs(z)
    return 2.0 * math.log(m) if m > 0 else -math.inf


def importance_log_weight(traj: CslTrajectory, params: ModelParams) -> float:
    """log(cooked density / raw density) for the trajectory's path.

    Raw paths reweighted by exp(this) are distributed like cooked paths.
    """
    sq = float(np.sum(traj.path.values**2)) * traj.path.dt
    return traj.log_norm_sq + sq / (2.0 * params.lam)


def sample_cooked_path(
    state0: SystemState, params: ModelParams, horizon: float, rng: RngStream
) -> CslTrajectory:
    """Draw one path from the cooked measure and evolve along it.

    Branch e is picked with probability |alpha|^2 or |beta|^2, then every
    step is drawn as w_n ~ N(2 lam e, lam/dt).
    """
    n = n_steps(horizon, params.dt)
    gen = rng.generator()
    e = params.a if gen.random() < abs(state0.amp_a) ** 2 else params.b
    w = 2.0 * params.lam * e + math.sqrt(params.lam / params.dt) * gen.standard_normal(n)
    return evolve_csl(state0, NoisePath.from_values(w, params.dt), params)


@dataclass(frozen=True)
class CookedBatch:
    """Sufficient statistics of many cooked paths.

    ``B`` has one column per checkpoint step (the last column is B(T));
    ``sq_int`` is sum_n w_n^2 dt over the full path.
    """

    times: np.ndarray
    B: np.ndarray
    sq_int: np.ndarray
    branch_a: np.ndarray

    @property
    def B_T(self) -> np.ndarray:
        return self.B[:, -1]


def sample_cooked_batch(
    state0: SystemState, params: ModelParams, horizon: float, n_trials: int,
    rng: RngStream, checkpoints=None,
) -> CookedBatch:
    """Vectorized cooked sampling; ``checkpoints`` are step indices (default: last)."""
    n = n_steps(horizon, params.dt)
    idx = sorted(set(checkpoints or ()) | {n - 1})
    lam, dt = params.lam, params.dt
    sd = math.sqrt(lam / dt)
    p_a = abs(state0.amp_a) ** 2
    B = np.empty((n_trials, len(idx)))
    sq = np.empty(n_trials)
    branch_a = np.empty(n_trials, dtype=bool)
    # column 0 becomes the branch-choice uniform via the normal CDF
    for sl, z in gaussian_chunks(rng, n_trials, n + 1):
        pick_a = ndtr(z[:, 0]) < p_a
        branch_a[sl] = pick_a
        means = np.where(pick_a, 2 * lam * params.a, 2 * lam * params.b)
        w = means[:, None] + sd * z[:, 1:]
        B[sl] = np.cumsum(w * dt, axis=1)[:, idx]
        sq[sl] = np.sum(w * w, axis=1) * dt
    times = dt * (np.asarray(idx) + 1)
    return CookedBatch(times, B, sq, branch_a)


def log_branch_odds(B, t, state0: SystemState, params: ModelParams):
    """log(p_a/p_b) of the collapsed state after time ``t`` given B(t).

    The w^2 parts of the two branch exponents cancel, leaving only B.
    """
    a, b, lam = params.a, params.b, params.lam
    prior = _log_sq(state0.amp_a) - _log_sq(state0.amp_b)
    with np.errstate(invalid="ignore"):
        return prior + 2 * (a - b) * np.asarray(B) - 2 * lam * np.asarray(t) * (a * a - b * b)


def branch_probabilities_from_B(B, t, state0: SystemState, params: ModelParams):
    """(p_a, p_b) arrays; each computed directly so tiny values keep precision."""
    odds = log_branch_odds(B, t, state0, params)
    return expit(odds), expit(-odds)


def batch_log_norm_sq(batch: CookedBatch, state0: SystemState, params: ModelParams):
    """log <psi|psi> of the unnormalized final state for every trial."""
    lam, T = params.lam, batch.times[-1]

    def two_L(e):
        return -(batch.sq_int - 4 * lam * e * batch.B_T + 4 * lam * lam * e * e * T) / (2 * lam)

    return np.logaddexp(_log_sq(state0.amp_a) + two_L(params.a),
                        _log_sq(state0.amp_b) + two_L(params.b))


def importance_log_weights_from_B(B, t, state0: SystemState, params: ModelParams):
    """Batched importance_log_weight; for this model it depends on B(t) only."""
    lam, a, b = params.lam, params.a, params.b
    B = np.asarray(B)
    return np.logaddexp(_log_sq(state0.amp_a) + 2 * a * B - 2 * lam * a * a * t,
                        _log_sq(state0.amp_b) + 2 * b * B - 2 * lam * b * b * t)


def marginal_B_density(B, horizon: float, state0: SystemState, params: ModelParams):
    """Density of B(T) under the cooked measure: a two-Gaussian mixture."""
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    lt = params.lam * horizon
    B = np.asarray(B, dtype=float)
    pa, pb = abs(state0.amp_a) ** 2, abs(state0.amp_b) ** 2
    ga = np.exp(-((B - 2 * lt * params.a) ** 2) / (2 * lt))
    gb = np.exp(-((B - 2 * lt * params.b) ** 2) / (2 * lt))
    out = (pa * ga + pb * gb) / math.sqrt(2 * math.pi * lt)
    return float(out) if out.ndim == 0 else out


def _check_threshold(threshold):
    if not 0 < threshold < 0.5:
        raise BadThreshold(f"threshold must lie in (0, 0.5), got {threshold}")


def classify(p_a: float, p_b: float, threshold: float = DEFAULT_THRESHOLD) -> Outcome:
    _check_threshold(threshold)
    if p_b < threshold:
        return Outcome.A
    if p_a < threshold:
        return Outcome.B
    return Outcome.UNDECIDED


def collapse_outcome(traj: CslTrajectory, threshold: float = DEFAULT_THRESHOLD) -> Outcome:
    return classify(traj.p_a, traj.p_b, threshold)


def classify_many(p_a, p_b, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Vectorized classify; returns an object array of Outcome members."""
    _check_threshold(threshold)
    out = np.full(np.shape(p_a), Outcome.UNDECIDED, dtype=object)
    out[np.asarray(p_a) < threshold] = Outcome.B
    out[np.asarray(p_b) < threshold] = Outcome.A
    return out


def analytic_rho(horizon: float, state0: SystemState, params: ModelParams) -> DensityMatrix2:
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    s = state0.normalize()
    off = s.amp_a * s.amp_b.conjugate() * params.decay_factor(horizon)
    return DensityMatrix2(abs(s.amp_a) ** 2, off, off.conjugate(), abs(s.amp_b) ** 2)


@dataclass(frozen=True)
class RhoEstimate:
    """Monte Carlo density matrix plus per-entry standard errors.

    ``stderr`` is a 2x2 complex array whose real (imaginary) part is the
    standard error of the real (imaginary) part of each entry.
    """

    rho: DensityMatrix2
    stderr: np.ndarray
    n_trials: int

    def offdiag_magnitude_stderr(self) -> float:
        """Delta-method standard error of |rho_ab|."""
        z, se = self.rho.rho_ab, self.stderr[0, 1]
        mag = abs(z)
        if mag == 0:
            return float(abs(se))
        return math.hypot(z.real * se.real, z.imag * se.imag) / mag


def rho_from_samples(p_a, p_b, coherence, n_trials: int) -> RhoEstimate:
    """Average per-trial |psi><psi| entries: p_a, p_b and amp_a * conj(amp_b)."""
    p_a, p_b, coherence = map(np.asarray, (p_a, p_b, coherence))
    n = len(p_a)

    def se(x):
        return float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    m_aa, m_bb, m_ab = float(np.mean(p_a)), float(np.mean(p_b)), complex(np.mean(coherence))
    # entries of each pure |psi><psi| sum to trace 1; renormalize the tiny drift
    tr = m_aa + m_bb
    rho = DensityMatrix2(m_aa / tr, m_ab / tr, m_ab.conjugate() / tr, m_bb / tr)
    s_aa = se(p_a)
    s_ab = complex(se(coherence.real), se(coherence.imag))
    stderr = np.array([[s_aa, s_ab], [s_ab, s_aa]])
    return RhoEstimate(rho, stderr, n_trials)


def ensemble_rho_mc(
    n_trials: int, horizon: float, state0: SystemState, params: ModelParams, rng: RngStream
) -> RhoEstimate:
    """Average of the normalized cooked-trajectory projectors."""
    if n_trials < 100:
        raise ValueError("n_trials must be >= 100")
    s = state0.normalize()
    if horizon == 0:
        return RhoEstimate(s.density(), np.zeros((2, 2), dtype=complex), n_trials)
    batch = sample_cooked_batch(s, params, horizon, n_trials, rng)
    return rho_from_batch(batch, s, params)


def coherence_from_B(B, t, state0: SystemState, params: ModelParams):
    """amp_a * conj(amp_b) of the normalized state for each B."""
    odds = log_branch_odds(B, t, state0, params)
    mag = np.exp(0.5 * (log_expit(odds) + log_expit(-odds)))
    s = state0.normalize()
    phase = s.amp_a * s.amp_b.conjugate()
    unit = phase / abs(phase) if phase != 0 else 0.0
    return unit * mag


def rho_from_batch(batch: CookedBatch, state0: SystemState, params: ModelParams) -> RhoEstimate:
    T = batch.times[-1]
    p_a, p_b = branch_probabilities_from_B(batch.B_T, T, state0, params)
    coh = coherence_from_B(batch.B_T, T, state0, params)
    return rho_from_samples(p_a, p_b, coh, len(p_a))


def marginal_B_cdf(B, horizon: float, state0: SystemState, params: ModelParams):
    """Cumulative distribution of B(T) under the cooked measure."""
    lt = params.lam * horizon
    sd = math.sqrt(lt)
    B = np.asarray(B, dtype=float)
    pa, pb = abs(state0.amp_a) ** 2, abs(state0.amp_b) ** 2
    return pa * ndtr((B - 2 * lt * params.a) / sd) + pb * ndtr((B - 2 * lt * params.b) / sd)
