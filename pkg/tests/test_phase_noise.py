import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collapse_lab.errors import DegenerateEigenvalues
from collapse_lab.noise import NoisePath, RngStream, sample_raw_path
from collapse_lab.phase_noise import (
    ensemble_rho_phase,
    ensemble_rho_phase_mc,
    evolve_phase,
    interference_probability,
    interference_probability_mc,
    nowen_time,
    residual_interference,
)
from collapse_lab.quantum_core import (
    ModelParams,
    ProbeState,
    SystemState,
    branch_probabilities,
    make_superposition,
    probe_expectation,
)
from collapse_lab.true_collapse import analytic_rho

R = 1 / math.sqrt(2)


def test_zero_path_unchanged(params, equal_state):
    traj = evolve_phase(equal_state, NoisePath.from_values(np.zeros(10), 0.01), params)
    assert traj.state == equal_state


def test_phase_pi_is_physically_trivial(params):
    s = make_superposition(0.6, 0.8j)
    path = NoisePath.from_values([math.pi], 1.0)
    out = evolve_phase(s, path, params).state
    # relative phase e^{-2 pi i} = 1
    assert abs(out.amp_a / out.amp_b - s.amp_a / s.amp_b) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_branch_probabilities_never_change(seed):
    p = ModelParams(1.0, 1.0, -1.0, 0.01)
    s = make_superposition(0.6, 0.8j)
    out = evolve_phase(s, sample_raw_path(p, 1.0, RngStream(seed)), p).state
    before, after = branch_probabilities(s), branch_probabilities(out)
    assert abs(before[0] - after[0]) < 1e-12 and abs(before[1] - after[1]) < 1e-12


def test_closed_form_equals_collapse_rho(params):
    s = make_superposition(0.3 - 0.2j, 0.9)
    for T in (0.0, 0.3, 1.0, 4.0):
        assert ensemble_rho_phase(T, s, params) == analytic_rho(T, s, params)


def test_mc_rho_matches_closed_form(params, equal_state):
    est = ensemble_rho_phase_mc(100_000, 1.0, equal_state, params, RngStream(31))
    exact = ensemble_rho_phase(1.0, equal_state, params)
    z, se = est.rho.rho_ab - exact.rho_ab, est.stderr[0, 1]
    assert abs(z.real) < 3 * se.real and abs(z.imag) < 3 * se.imag


def test_t0_pure(params, equal_state):
    assert ensemble_rho_phase(0.0, equal_state, params) == equal_state.density()


def test_interference_value(params, equal_state, equal_probe):
    assert interference_probability(equal_state, equal_probe, 1.0, params) == pytest.approx(
        0.567667641618306346, abs=1e-15)


def test_interference_matches_mc(params, equal_state, equal_probe):
    mean, se = interference_probability_mc(equal_state, equal_probe, 1.0, params, 100_000, RngStream(32))
    assert abs(mean - 0.567667641618306346) < 3 * se


def test_interference_basis_probe(params):
    s = make_superposition(0.6, 0.8)
    for T in (0, 0.5, 3):
        assert interference_probability(s, ProbeState(1, 0), T, params) == pytest.approx(0.36, abs=1e-15)


def test_interference_long_time_limit(params):
    s = make_superposition(0.6, 0.8)
    probe = ProbeState(0.8, 0.6)
    p_inf = 0.36 * 0.64 + 0.64 * 0.36
    assert interference_probability(s, probe, 100.0, params) == pytest.approx(p_inf, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5),
       st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5),
       st.floats(0, 5))
def test_interference_equals_probe_on_rho(alpha, beta, mu, nu, T):
    if abs(alpha) < 1e-3 and abs(beta) < 1e-3 or abs(mu) < 1e-3 and abs(nu) < 1e-3:
        return
    p = ModelParams(0.7, 1.3, -0.4)
    s = make_superposition(alpha, beta)
    u = make_superposition(mu, nu)
    probe = ProbeState(u.amp_a, u.amp_b)
    direct = probe_expectation(ensemble_rho_phase(T, s, p), probe)
    assert abs(interference_probability(s, probe, T, p) - direct) < 1e-12


def test_nowen_time_value(params, equal_state, equal_probe):
    # cross term 2 Re{alpha beta* nu mu*} = 0.5; T = ln(500)/2
    assert nowen_time(equal_state, equal_probe, params, 0.001) == pytest.approx(3.10730404921109587, abs=1e-12)


def test_nowen_time_zero_when_already_small(params, equal_state, equal_probe):
    assert nowen_time(equal_state, equal_probe, params, 0.5) == 0.0
    assert nowen_time(SystemState(1, 0), equal_probe, params, 1e-9) == 0.0


def test_nowen_degenerate(equal_state, equal_probe):
    with pytest.raises(DegenerateEigenvalues):
        nowen_time(equal_state, equal_probe, ModelParams(1.0, 1.0, 1.0), 0.01)


@pytest.mark.parametrize("eps", [0.3, 0.1, 1e-3, 1e-8])
def test_nowen_minimality(params, equal_state, equal_probe, eps):
    T = nowen_time(equal_state, equal_probe, params, eps)
    assert residual_interference(equal_state, equal_probe, T, params) <= eps * (1 + 1e-12)
    assert residual_interference(equal_state, equal_probe, T / 2, params) > eps


def test_ensemble_decays_while_trajectories_stay_superposed(params):
    s = make_superposition(0.6, 0.8)
    n = 10_000
    mins = min(
        abs(t.amp_a) * abs(t.amp_b)
        for t in (evolve_phase(s, sample_raw_path(params, 1.0, RngStream(40, k)), params).state for k in range(200))
    )
    assert abs(mins - 0.48) < 1e-12
    est = ensemble_rho_phase_mc(n, 1.0, s, params, RngStream(41))
    # e^-2 * 0.48 = 0.065; every single trajectory keeps 0.48
    assert abs(est.rho.rho_ab) < 0.48 / 4


def test_interference_mc_is_calibrated_across_seeds(params, equal_state, equal_probe):
    # z-scores over independent seeds: mean near 0, spread near 1
    exact = interference_probability(equal_state, equal_probe, 1.0, params)
    z = np.array([(m - exact) / se for m, se in (
        interference_probability_mc(equal_state, equal_probe, 1.0, params, 10_000, RngStream(900 + s))
        for s in range(60))])
    assert abs(z.mean()) < 3 / math.sqrt(60)
    assert 0.7 < z.std(ddof=1) < 1.3
