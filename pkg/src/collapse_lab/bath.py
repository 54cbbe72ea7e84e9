"""
Discrete bath of bombarding particles and the reflector recoherence experiment.

Mode n starts in a Gaussian position state with |psi_n(w)|^2 = N(0, lam/dt).
While the system passes, the interaction A*W_n for a time dt multiplies the
mode wavefunction on branch e by exp(-i e w dt). Because the interaction is
diagonal in w, a mode is fully described by the accumulated coupling
``coeff_e`` on each branch: its branch-e wavefunction is
psi_n(w) exp(-i coeff_e w dt).

After a reflection the system states |a>, |b> become |-a>, |-b>, so later
passes act with effective eigenvalues (-a, -b). Sending the system back over
the same modes cancels every coefficient and the entanglement disappears.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import GridTooCoarse, ReflectRequired
from .quantum_core import DensityMatrix2, ModelParams, ProbeState, SystemState, probe_expectation


@dataclass(frozen=True)
class BathMode:
    index: int
    dt: float
    variance: float
    coeff_a: float = 0.0
    coeff_b: float = 0.0

    @property
    def mismatch(self) -> float:
        return self.coeff_a - self.coeff_b

    def overlap_factor(self, lam: float) -> float:
        """<branch_b|branch_a> for this mode alone."""
        return math.exp(-0.5 * lam * self.dt * self.mismatch**2)


@dataclass(frozen=True)
class BathRegister:
    modes: tuple[BathMode, ...]
    interaction_log: tuple[tuple[int, int], ...] = ()
    reflected: bool = False

    def __len__(self):
        return len(self.modes)

    @property
    def sign(self) -> int:
        return -1 if self.reflected else 1


def init_bath(n_modes: int, params: ModelParams) -> BathRegister:
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    var = params.lam / params.dt
    return BathRegister(tuple(BathMode(i, params.dt, var) for i in range(n_modes)))


def _interact(register: BathRegister, order, params: ModelParams) -> BathRegister:
    s = register.sign
    modes = list(register.modes)
    log = list(register.interaction_log)
    for i in order:
        m = modes[i]
        modes[i] = replace(m, coeff_a=m.coeff_a + s * params.a, coeff_b=m.coeff_b + s * params.b)
        log.append((i, s))
    return replace(register, modes=tuple(modes), interaction_log=tuple(log))


def forward_pass(
    register: BathRegister, params: ModelParams, start: int = 0, stop: int | None = None
) -> BathRegister:
    """System passes modes ``start..stop-1`` in increasing index order."""
    stop = len(register) if stop is None else stop
    return _interact(register, range(start, stop), params)


def reflect(register: BathRegister) -> BathRegister:
    """Corner reflection: later passes act with eigenvalues (-a, -b)."""
    return replace(register, reflected=not register.reflected)


def reverse_pass(
    register: BathRegister, params: ModelParams, n_modes: int | None = None
) -> BathRegister:
    """Return trip over the last ``n_modes`` modes (default all), highest index first."""
    if not register.reflected:
        raise ReflectRequired("reverse_pass needs a preceding reflect()")
    n = len(register) if n_modes is None else n_modes
    return _interact(register, range(len(register) - 1, len(register) - 1 - n, -1), params)


def branch_overlap(register: BathRegister, params: ModelParams) -> complex:
    """<env_b|env_a>: product over modes of exp(-(lam dt/2)(coeff_a - coeff_b)^2)."""
    expo = sum(0.5 * params.lam * m.dt * m.mismatch**2 for m in register.modes)
    return complex(math.exp(-expo))


def reduced_rho(register: BathRegister, state0: SystemState, params: ModelParams) -> DensityMatrix2:
    """System density matrix with the bath traced out.

    After an odd number of reflections the basis labels read |-a>, |-b>.
    """
    s = state0.normalize()
    off = s.amp_a * s.amp_b.conjugate() * branch_overlap(register, params)
    return DensityMatrix2(abs(s.amp_a) ** 2, off, off.conjugate(), abs(s.amp_b) ** 2)


DEFAULT_HALFWIDTH = 8.0
DEFAULT_POINTS = 4096


def _grid_mode_overlap(mismatch, dt, variance, halfwidth, points):
    sigma = math.sqrt(variance)
    w = np.linspace(-halfwidth * sigma, halfwidth * sigma, points)
    psi0 = (2 * math.pi * variance) ** -0.25 * np.exp(-w * w / (4 * variance))
    # conj(psi0 e^{-i cb w dt}) * psi0 e^{-i ca w dt}
    integrand = psi0 * psi0 * np.exp(-1j * np.outer(mismatch, w) * dt)
    return np.trapezoid(integrand, w, axis=1)


def _grid_product(register, halfwidth, points):
    # identical modes give identical factors; integrate each distinct one once
    keys = [(m.mismatch, m.dt, m.variance) for m in register.modes]
    uniq = sorted(set(keys))
    val = {}
    for dt, var in sorted({(k[1], k[2]) for k in uniq}):
        mism = np.array([k[0] for k in uniq if k[1] == dt and k[2] == var])
        for mm, f in zip(mism, _grid_mode_overlap(mism, dt, var, halfwidth, points)):
            val[(float(mm), dt, var)] = f
    out = 1.0 + 0j
    for k in keys:
        out *= val[k]
    return complex(out)


def grid_oracle_overlap(
    register: BathRegister, params: ModelParams,
    grid_halfwidth_sigmas: float = DEFAULT_HALFWIDTH, grid_points: int = DEFAULT_POINTS,
    check_tol: float = 1e-6,
) -> complex:
    """Branch overlap by direct quadrature of every mode's wavefunctions.

    Independent of the closed form in ``branch_overlap``; also re-runs on a
    grid with twice the points and raises GridTooCoarse if the two differ by
    more than ``check_tol``.
    """
    if grid_points < 256:
        raise ValueError("grid_points must be >= 256")
    if grid_halfwidth_sigmas < 6:
        raise ValueError("grid_halfwidth_sigmas must be >= 6")
    coarse = _grid_product(register, grid_halfwidth_sigmas, grid_points)
    fine = _grid_product(register, grid_halfwidth_sigmas, 2 * grid_points)
    if abs(coarse - fine) > check_tol:
        raise GridTooCoarse(f"grid overlap changed by {abs(coarse - fine):.3g} on refinement")
    return coarse


@dataclass(frozen=True)
class RecoherenceReport:
    overlap_forward: float
    overlap_after_reversal: float
    probe_superposition: float
    probe_mixture: float
    oracle_forward: float
    oracle_after_reversal: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def recoherence_experiment(
    n_modes: int, state0: SystemState, params: ModelParams
) -> tuple[RecoherenceReport, BathRegister, BathRegister]:
    """Forward pass, reflection, reverse pass; probe with the initial state.

    The probe is state0 with its labels flipped to |-a>, |-b>; on the
    recohered state it succeeds with certainty, on the purported mixture
    with probability |alpha|^4 + |beta|^4.
    """
    s = state0.normalize()
    fwd = forward_pass(init_bath(n_modes, params), params)
    back = reverse_pass(reflect(fwd), params)
    probe = ProbeState(s.amp_a, s.amp_b)
    p_sup = probe_expectation(reduced_rho(back, s, params), probe)
    p_mix = probe_expectation(DensityMatrix2.mixture(abs(s.amp_a) ** 2), probe)
    report = RecoherenceReport(
        overlap_forward=branch_overlap(fwd, params).real,
        overlap_after_reversal=branch_overlap(back, params).real,
        probe_superposition=p_sup,
        probe_mixture=p_mix,
        oracle_forward=grid_oracle_overlap(fwd, params).real,
        oracle_after_reversal=grid_oracle_overlap(back, params).real,
    )
    return report, fwd, back


def write_modes_csv(register: BathRegister, params: ModelParams, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["mode", "coeff_a", "coeff_b", "overlap_factor"])
    for m in register.modes:
        writer.writerow([m.index, repr(m.coeff_a), repr(m.coeff_b), repr(m.overlap_factor(params.lam))])
