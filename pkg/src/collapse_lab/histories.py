"""
Decoherence functional for the single projector-pair history family.

Projectors |a><a|, |b><b| act at time T; a probe test on |phi> = mu|a> + nu|b>
follows at T' >= T. The off-diagonal element of the functional is

    alpha beta* conj(mu) nu <env_b, T'|env_a, T'>

so its magnitude depends on T' only, through the bath branch overlap.
An optional time-reversed segment after T' (reflect, then retrace the bath
for the same duration) restores the overlap to 1.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bath import branch_overlap, forward_pass, init_bath, reflect, reverse_pass
from .noise import n_steps
from .quantum_core import ModelParams, ProbeState, SystemState


@dataclass(frozen=True)
class HistorySpec:
    projector_time: float
    final_time: float
    probe: ProbeState
    reversal: tuple[float, float] | None = None

    def __post_init__(self):
        if not 0 <= self.projector_time <= self.final_time:
            raise ValueError("need 0 <= projector_time <= final_time")
        if self.reversal is not None:
            start, duration = self.reversal
            if start != self.final_time:
                raise ValueError("reversal segment must start at final_time")
            if duration < 0:
                raise ValueError("reversal duration must be >= 0")


def _environment_overlap(spec: HistorySpec, params: ModelParams) -> complex:
    n_final = n_steps(spec.final_time, params.dt) if spec.final_time > 0 else 0
    if n_final == 0:
        return 1 + 0j
    n_proj = min(int(round(spec.projector_time / params.dt)), n_final)
    reg = init_bath(n_final, params)
    # the bath keeps evolving across the (branch-diagonal) projection at T
    reg = forward_pass(reg, params, 0, n_proj)
    reg = forward_pass(reg, params, n_proj, n_final)
    if spec.reversal is not None:
        n_rev = int(round(spec.reversal[1] / params.dt))
        reg = reverse_pass(reflect(reg), params, min(n_rev, n_final))
    return branch_overlap(reg, params)


def _pair_weight(x: complex, y: complex) -> float:
    # |x y| / (|x|^2 + |y|^2): avoids compounding the rounding of 1/sqrt(2)
    return abs(x * y) / (abs(x) ** 2 + abs(y) ** 2)


def _amplitude(spec: HistorySpec, state0: SystemState) -> float:
    return _pair_weight(state0.amp_a, state0.amp_b) * _pair_weight(spec.probe.mu, spec.probe.nu)


def decoherence_offdiag(spec: HistorySpec, state0: SystemState, params: ModelParams) -> float:
    """|mu nu alpha beta| times the environment overlap at the final time."""
    if spec.reversal is not None:
        raise ValueError("spec has a reversal segment; use decoherence_offdiag_with_reversal")
    return _amplitude(spec, state0) * abs(_environment_overlap(spec, params))


def decoherence_offdiag_with_reversal(
    spec: HistorySpec, state0: SystemState, params: ModelParams
) -> float:
    if spec.reversal is None:
        raise ValueError("spec has no reversal segment")
    return _amplitude(spec, state0) * abs(_environment_overlap(spec, params))


def decoherence_condition(value: float, limit: float) -> bool:
    """True when the off-diagonal element is within the prearranged limit."""
    if not limit > 0:
        raise ValueError("limit must be > 0")
    return value <= limit


def histories_report(
    final_time: float, probe: ProbeState, state0: SystemState, params: ModelParams,
    limit: float, n_grid: int = 10,
) -> dict:
    """Functional over a grid of projector times, with and without reversal."""
    grid = [final_time * k / (n_grid - 1) for k in range(n_grid)] if n_grid > 1 else [0.0]
    values = [decoherence_offdiag(HistorySpec(t, final_time, probe), state0, params) for t in grid]
    rev_spec = HistorySpec(0.0, final_time, probe, reversal=(final_time, final_time))
    with_rev = decoherence_offdiag_with_reversal(rev_spec, state0, params)
    return {
        "T_grid": grid,
        "offdiag_values": values,
        "limit": limit,
        "condition_held": all(decoherence_condition(v, limit) for v in values),
        "with_reversal_value": with_rev,
        "condition_with_reversal": decoherence_condition(with_rev, limit),
    }
