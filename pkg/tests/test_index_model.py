import io
import math

import numpy as np
import pytest
from scipy import integrate, stats

from collapse_lab.errors import RecordReinteraction
from collapse_lab.index_model import (
    evolve_index,
    interact,
    record_log_density,
    sample_record,
    sample_record_B,
    write_record_csv,
)
from collapse_lab.noise import NoisePath, RngStream
from collapse_lab.quantum_core import ModelParams, SystemState, make_superposition
from collapse_lab.true_collapse import (
    evolve_csl,
    marginal_B_cdf,
    sample_cooked_batch,
)

STATE = SystemState(0.6, 0.8)


def test_evolve_index_centers(params):
    slices = evolve_index(STATE, 100, params)
    assert len(slices) == 100
    assert all(s.center_a == 2.0 and s.center_b == -2.0 for s in slices)
    assert all(s.variance == pytest.approx(100.0) for s in slices)
    assert len(evolve_index(STATE, 1, params)) == 1


def test_degenerate_centers():
    p = ModelParams(1.0, 0.5, 0.5)
    assert all(s.center_a == s.center_b for s in evolve_index(STATE, 5, p))


def test_slices_interact_once(params):
    s = evolve_index(STATE, 1, params)[0]
    with pytest.raises(RecordReinteraction):
        interact(s, params)


def test_record_density_mode(params):
    s = SystemState(1, 0)
    best = record_log_density(NoisePath.from_values(np.full(10, 2.0), 0.01), s, params)
    for c in (1.5, 1.9, 2.1, 3.0, 0.0):
        assert record_log_density(NoisePath.from_values(np.full(10, c), 0.01), s, params) < best


def test_record_density_normalized_single_slice(params):
    f = lambda w: math.exp(record_log_density(NoisePath.from_values([w], params.dt), STATE, params))
    total, _ = integrate.quad(f, -np.inf, np.inf, epsabs=1e-13, points=None)
    assert total == pytest.approx(1.0, abs=1e-9)


def test_record_density_is_cooked_density(params):
    # log density = log_norm_sq of the collapse state minus the Dw normalizer
    rec = sample_record(STATE, 50, params, RngStream(50))
    traj = evolve_csl(STATE, rec.record, params)
    norm = 0.5 * 50 * math.log(2 * math.pi * params.lam / params.dt)
    assert rec.record_log_density == pytest.approx(traj.log_norm_sq - norm, rel=1e-12)


def test_record_weight_mean_multi_slice(params):
    # raw-measure importance weights of the record density average to 1
    n, k = 20_000, 20
    rng = np.random.default_rng(51)
    sd = math.sqrt(params.lam / params.dt)
    w = rng.normal(0, sd, (n, k))
    log_raw = -0.5 * np.sum(w**2, axis=1) / sd**2 - k * math.log(sd * math.sqrt(2 * math.pi))
    log_rec = np.array([record_log_density(NoisePath.from_values(r, params.dt), STATE, params) for r in w])
    wts = np.exp(log_rec - log_raw)
    assert abs(wts.mean() - 1) < 3 * wts.std(ddof=1) / math.sqrt(n)


def test_B_marginal_ks(params):
    B = sample_record_B(STATE, 100, params, 100_000, RngStream(58))
    res = stats.kstest(B, lambda x: marginal_B_cdf(x, 1.0, STATE, params))
    assert res.pvalue > 0.01


def test_records_match_cooked_B(params):
    B_idx = sample_record_B(STATE, 100, params, 10_000, RngStream(53))
    B_csl = sample_cooked_batch(STATE, params, 1.0, 10_000, RngStream(54)).B_T
    assert stats.ks_2samp(B_idx, B_csl).pvalue > 0.01


def test_conditioned_state_is_csl_state(params):
    for k in range(20):
        rec = sample_record(STATE, 100, params, RngStream(55, k))
        ref = evolve_csl(STATE, rec.record, params).state
        assert abs(rec.conditioned_state.amp_a - ref.amp_a) < 1e-12
        assert abs(rec.conditioned_state.amp_b - ref.amp_b) < 1e-12


def test_single_branch_records(params):
    for k in range(10):
        rec = sample_record(SystemState(1, 0), 100, params, RngStream(56, k))
        assert rec.conditioned_state.amp_b == 0
        assert abs(rec.record.cumulative[-1] - 2.0) < 6.0  # B ~ N(2, 1)


def test_record_csv(params):
    rec = sample_record(STATE, 3, params, RngStream(57))
    buf = io.StringIO()
    write_record_csv(rec, STATE, params, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "slice,w,B,p_a"
    assert len(lines) == 4
