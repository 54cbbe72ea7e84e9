"""
Two-level state and density-matrix algebra shared by every model.

States live in the {|a>, |b>} eigenbasis of the collapse operator A.
Amplitudes may be held unnormalized; normalization happens on readout.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDensity, ZeroState

TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Collapse/coupling rate ``lam``, eigenvalues ``a``, ``b`` of A, step ``dt``."""

    lam: float = 1.0
    a: float = 1.0
    b: float = -1.0
    dt: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")

    @property
    def gap_sq(self) -> float:
        return (self.a - self.b) ** 2

    def decay_factor(self, horizon: float) -> float:
        """exp(-(lam T / 2)(a - b)^2), the common off-diagonal damping."""
        return math.exp(-0.5 * self.lam * horizon * self.gap_sq)


@dataclass(frozen=True)
class SystemState:
    amp_a: complex
    amp_b: complex
    normalized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "amp_a", complex(self.amp_a))
        object.__setattr__(self, "amp_b", complex(self.amp_b))
        if self.amp_a == 0 and self.amp_b == 0:
            raise ZeroState("both branch amplitudes are zero")
        if self.normalized:
            norm = abs(self.amp_a) ** 2 + abs(self.amp_b) ** 2
            if abs(norm - 1.0) > TOL:
                raise ValueError(f"state flagged normalized has norm^2 {norm!r}")

    @classmethod
    def from_log_weights(cls, alpha, beta, log_a, log_b):
        """Normalized ``alpha e^{log_a}|a> + beta e^{log_b}|b>`` without underflow.

        ``log_a``/``log_b`` are real log-magnitude factors on each branch.
        """
        la = _log_abs(alpha) + log_a
        lb = _log_abs(beta) + log_b
        top = max(la, lb)
        if top == -math.inf:
            raise ZeroState("both branch amplitudes vanish")
        ma = math.exp(la - top)
        mb = math.exp(lb - top)
        scale = math.hypot(ma, mb)
        pa = _phase(alpha) * (ma / scale)
        pb = _phase(beta) * (mb / scale)
        return cls(pa, pb, normalized=_renorm_ok(pa, pb))

    def normalize(self) -> "SystemState":
        if self.normalized:
            return self
        scale = math.hypot(abs(self.amp_a), abs(self.amp_b))
        pa, pb = self.amp_a / scale, self.amp_b / scale
        return SystemState(pa, pb, normalized=_renorm_ok(pa, pb))

    def density(self) -> "DensityMatrix2":
        s = self.normalize()
        a, b = s.amp_a, s.amp_b
        return DensityMatrix2(
            abs(a) ** 2, a * b.conjugate(), b * a.conjugate(), abs(b) ** 2
        )


def _log_abs(z) -> float:
    m = abs(z)
    return math.log(m) if m > 0 else -math.inf


def _phase(z) -> complex:
    return cmath.exp(1j * cmath.phase(z)) if z != 0 else 0j


def _renorm_ok(pa, pb) -> bool:
    return abs(abs(pa) ** 2 + abs(pb) ** 2 - 1.0) <= TOL


@dataclass(frozen=True)
class ProbeState:
    """Probe ``mu|a> + nu|b>`` tested by a rapid projective experiment."""

    mu: complex
    nu: complex

    def __post_init__(self):
        object.__setattr__(self, "mu", complex(self.mu))
        object.__setattr__(self, "nu", complex(self.nu))
        norm = abs(self.mu) ** 2 + abs(self.nu) ** 2
        if abs(norm - 1.0) > TOL:
            raise ValueError(f"probe must be unit norm, got |mu|^2+|nu|^2={norm!r}")

    def orthogonal(self) -> "ProbeState":
        """The partner state nu*|a> - mu*|b>."""
        return ProbeState(self.nu.conjugate(), -self.mu.conjugate())


@dataclass(frozen=True)
class DensityMatrix2:
    rho_aa: complex
    rho_ab: complex
    rho_ba: complex
    rho_bb: complex

    def __post_init__(self):
        for name in ("rho_aa", "rho_ab", "rho_ba", "rho_bb"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        problem = self.violation()
        if problem:
            raise InvalidDensity(problem)

    def violation(self, tol: float = TOL) -> str | None:
        tr = self.rho_aa + self.rho_bb
        if abs(tr - 1.0) > tol:
            return f"trace {tr!r} != 1"
        if abs(self.rho_ba - self.rho_ab.conjugate()) > tol:
            return "matrix is not Hermitian"
        if abs(self.rho_aa.imag) > tol or abs(self.rho_bb.imag) > tol:
            return "diagonal entries are not real"
        lo, _ = self.eigenvalues()
        if lo < -tol:
            return f"negative eigenvalue {lo!r}"
        return None

    def eigenvalues(self) -> tuple[float, float]:
        # closed form for a 2x2 Hermitian matrix
        p, q = self.rho_aa.real, self.rho_bb.real
        half = 0.5 * (p + q)
        rad = math.hypot(0.5 * (p - q), abs(self.rho_ab))
        return half - rad, half + rad

    def as_array(self) -> np.ndarray:
        return np.array([[self.rho_aa, self.rho_ab], [self.rho_ba, self.rho_bb]])

    @classmethod
    def from_array(cls, m) -> "DensityMatrix2":
        m = np.asarray(m, dtype=complex)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def mixture(cls, p_a: float) -> "DensityMatrix2":
        """diag(p_a, 1 - p_a), the collapsed-ensemble mixture."""
        return cls(p_a, 0, 0, 1.0 - p_a)


def make_superposition(alpha, beta) -> SystemState:
    """Normalized alpha|a> + beta|b>; raises ZeroState if both vanish."""
    if alpha == 0 and beta == 0:
        raise ZeroState("cannot normalize the zero vector")
    return SystemState(alpha, beta, normalized=False).normalize()


def branch_probabilities(state: SystemState) -> tuple[float, float]:
    s = state.normalize()
    return abs(s.amp_a) ** 2, abs(s.amp_b) ** 2


def probe_expectation(rho: DensityMatrix2, probe: ProbeState) -> float:
    """Tr{|phi><phi| rho}: probability the probe test succeeds."""
    problem = rho.violation()
    if problem:
        raise InvalidDensity(problem)
    mu, nu = probe.mu, probe.nu
    val = (
        abs(mu) ** 2 * rho.rho_aa.real
        + abs(nu) ** 2 * rho.rho_bb.real
        + 2.0 * (mu.conjugate() * nu * rho.rho_ab).real
    )
    return float(val)


def off_diagonal_magnitude(rho: DensityMatrix2) -> float:
    return abs(rho.rho_ab)
