"""
Unitary index (pointer-record) model.

Each pointer slice W_n couples to the system once, for one step dt, through
-i 2 lam A Pi_n, which translates its Gaussian wavefunction by 2 lam e on
branch e. After N slices the record {w_n} has density

    |alpha|^2 prod_n N(w_n; 2 lam a, lam/dt) + |beta|^2 prod_n N(w_n; 2 lam b, lam/dt)

and the system state correlated with a record is exactly the collapse-model
state evolved along that record.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from .errors import RecordReinteraction
from .noise import NoisePath, RngStream, gaussian_chunks
from .quantum_core import ModelParams, SystemState
from .true_collapse import branch_probabilities_from_B, evolve_csl


@dataclass(frozen=True)
class PointerSlice:
    index: int
    dt: float
    variance: float
    center_a: float = 0.0
    center_b: float = 0.0
    interactions: int = 0


def interact(slice_: PointerSlice, params: ModelParams) -> PointerSlice:
    """The one allowed coupling: shift branch centers by 2 lam a and 2 lam b."""
    if slice_.interactions >= 1:
        raise RecordReinteraction(f"slice {slice_.index} has already interacted")
    return replace(
        slice_,
        center_a=slice_.center_a + 2 * params.lam * params.a,
        center_b=slice_.center_b + 2 * params.lam * params.b,
        interactions=1,
    )


def evolve_index(state0: SystemState, n_slices: int, params: ModelParams) -> list[PointerSlice]:
    if n_slices < 1:
        raise ValueError("n_slices must be >= 1")
    var = params.lam / params.dt
    return [interact(PointerSlice(n, params.dt, var), params) for n in range(n_slices)]


@dataclass(frozen=True)
class IndexedHistory:
    record: NoisePath
    conditioned_state: SystemState
    record_log_density: float


def _log_gaussian_path(w, center, var):
    w = np.asarray(w)
    return -0.5 * np.sum((w - center) ** 2, axis=-1) / var - 0.5 * w.shape[-1] * math.log(2 * math.pi * var)


def record_log_density(record: NoisePath, state0: SystemState, params: ModelParams) -> float:
    """Log density of the record under the branch-weighted pointer distribution."""
    s = state0.normalize()
    var = params.lam / record.dt
    terms = []
    for amp, e in ((s.amp_a, params.a), (s.amp_b, params.b)):
        if amp != 0:
            terms.append(2 * math.log(abs(amp)) + _log_gaussian_path(record.values, 2 * params.lam * e, var))
    return float(np.logaddexp.reduce(terms))


def sample_record(
    state0: SystemState, n_slices: int, params: ModelParams, rng: RngStream
) -> IndexedHistory:
    """Draw one record: pick a branch with the Born weights, then read every slice."""
    s = state0.normalize()
    gen = rng.generator()
    slices = evolve_index(s, n_slices, params)
    on_a = gen.random() < abs(s.amp_a) ** 2
    centers = np.array([sl.center_a if on_a else sl.center_b for sl in slices])
    w = centers + np.sqrt([sl.variance for sl in slices]) * gen.standard_normal(n_slices)
    record = NoisePath.from_values(w, params.dt)
    return IndexedHistory(
        record,
        evolve_csl(s, record, params).state,
        record_log_density(record, s, params),
    )


def sample_record_B(
    state0: SystemState, n_slices: int, params: ModelParams, n_records: int, rng: RngStream
) -> np.ndarray:
    """Running sum B = sum_n w_n dt at the end of many sampled records."""
    s = state0.normalize()
    slices = evolve_index(s, n_slices, params)
    ca = np.array([sl.center_a for sl in slices])
    cb = np.array([sl.center_b for sl in slices])
    sd = np.sqrt([sl.variance for sl in slices])
    p_a = abs(s.amp_a) ** 2
    out = np.empty(n_records)
    for sl, z in gaussian_chunks(rng, n_records, n_slices + 1):
        on_a = ndtr(z[:, 0]) < p_a
        w = np.where(on_a[:, None], ca, cb) + sd * z[:, 1:]
        out[sl] = w.sum(axis=1) * params.dt
    return out


def write_record_csv(history: IndexedHistory, state0: SystemState, params: ModelParams, fh) -> None:
    """CSV with columns slice, w, B, p_a (running values along the record)."""
    rec = history.record
    p_a, _ = branch_probabilities_from_B(rec.cumulative, rec.times, state0.normalize(), params)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["slice", "w", "B", "p_a"])
    for k in range(len(rec)):
        writer.writerow([k, repr(float(rec.values[k])), repr(float(rec.cumulative[k])), repr(float(p_a[k]))])
