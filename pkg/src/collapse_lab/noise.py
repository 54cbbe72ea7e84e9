"""
Discretized white-noise paths and their functional measure.

A path is piecewise constant: w_n holds on step n of length dt. Under the
raw (white-noise) measure each w_n is an independent Gaussian with mean 0
and variance lam/dt, so that B(T) = sum_n w_n dt has variance lam*T.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import BadHorizon
from .quantum_core import ModelParams

#: trials per RNG chunk in batched sampling; fixed so results never depend on
#: how work is split up
CHUNK = 4096


@dataclass(frozen=True)
class RngStream:
    """Independent, reproducible random stream keyed by (seed, stream_id).

    Backed by the counter-based Philox generator; distinct stream ids get
    non-overlapping keys through ``SeedSequence`` spawn keys.
    """

    seed: int
    stream_id: int = 0

    def generator(self, *sub: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *sub))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, k: int) -> "RngStream":
        # offset keeps children clear of small hand-picked stream ids
        return RngStream(self.seed, (self.stream_id + 1) * 1_000_003 + k)


@dataclass(frozen=True, eq=False)
class NoisePath:
    dt: float
    values: np.ndarray
    cumulative: np.ndarray

    def __post_init__(self):
        if len(self.values) < 1 or len(self.values) != len(self.cumulative):
            raise ValueError("path needs matching, nonempty values and cumulative sums")
        self.values.setflags(write=False)
        self.cumulative.setflags(write=False)

    @classmethod
    def from_values(cls, values, dt: float) -> "NoisePath":
        w = np.array(values, dtype=float).ravel()
        return cls(dt, w, np.cumsum(w * dt))

    def __len__(self):
        return len(self.values)

    @property
    def horizon(self) -> float:
        """Effective horizon N*dt actually covered by the path."""
        return len(self.values) * self.dt

    @property
    def times(self) -> np.ndarray:
        """End time of every step, t_k = (k+1) dt."""
        return self.dt * np.arange(1, len(self.values) + 1)


def n_steps(horizon: float, dt: float) -> int:
    """Number of whole steps N = round(horizon/dt), at least 1."""
    if horizon < dt * (1 - 1e-12):
        raise BadHorizon(f"horizon {horizon} shorter than one step dt={dt}")
    return max(1, int(round(horizon / dt)))


def sample_raw_path(params: ModelParams, horizon: float, rng: RngStream) -> NoisePath:
    """One raw white-noise path, w_n ~ N(0, lam/dt)."""
    n = n_steps(horizon, params.dt)
    z = rng.generator().standard_normal(n)
    return NoisePath.from_values(z * math.sqrt(params.lam / params.dt), params.dt)


def log_density_raw(path: NoisePath, params: ModelParams) -> float:
    """Log density of ``path`` under the raw measure, relative to prod dw_n."""
    n = len(path)
    quad = -np.sum(path.values**2) * path.dt / (2.0 * params.lam)
    return float(quad - 0.5 * n * math.log(2.0 * math.pi * params.lam / path.dt))


def integrate_path(path: NoisePath) -> float:
    """B(T), the time integral of w over the path."""
    return float(path.cumulative[-1])


def gaussian_chunks(
    rng: RngStream, n_trials: int, n_cols: int, chunk: int = CHUNK
) -> Iterator[tuple[slice, np.ndarray]]:
    """Standard normals for ``n_trials`` rows in fixed-size chunks.

    Chunk ``k`` always draws from sub-stream ``k``, so a given trial index
    sees the same numbers however the consumer processes the chunks.
    """
    for k, start in enumerate(range(0, n_trials, chunk)):
        stop = min(start + chunk, n_trials)
        yield slice(start, stop), rng.generator(k).standard_normal((stop - start, n_cols))


def sample_raw_B(
    params: ModelParams, horizon: float, n_trials: int, rng: RngStream,
    checkpoints=None,
) -> np.ndarray:
    """B at the final step (or at the requested step indices) for raw paths.

    Returns shape ``(n_trials,)`` or ``(n_trials, len(checkpoints))``.
    """
    n = n_steps(horizon, params.dt)
    idx = [n - 1] if checkpoints is None else list(checkpoints)
    out = np.empty((n_trials, len(idx)))
    sd = math.sqrt(params.lam / params.dt)
    for sl, z in gaussian_chunks(rng, n_trials, n):
        out[sl] = np.cumsum(z * (sd * params.dt), axis=1)[:, idx]
    return out[:, 0] if checkpoints is None else out


def write_path_csv(path: NoisePath, fh) -> None:
    """CSV with columns index, t, w, B."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["index", "t", "w", "B"])
    for k, (t, w, B) in enumerate(zip(path.times, path.values, path.cumulative)):
        writer.writerow([k, repr(float(t)), repr(float(w)), repr(float(B))])
