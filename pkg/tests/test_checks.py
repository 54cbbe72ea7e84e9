import math

import numpy as np
import pytest
from scipy import stats

from collapse_lab.checks import (
    chi_square_against_density,
    effective_sample_size,
    ks_critical_value,
    log_linear_slope,
    weighted_ks_2samp,
)


def test_ess_uniform_and_degenerate():
    assert effective_sample_size(np.zeros(50)) == pytest.approx(50)
    assert effective_sample_size([0.0, -1000.0, -1000.0]) == pytest.approx(1.0)


def test_ks_critical_matches_scipy_asymptotics():
    # c(0.01) = 1.6276 for the two-sample test
    assert ks_critical_value(1, 1, 0.01) / math.sqrt(2) == pytest.approx(1.6276, abs=1e-4)


def test_weighted_ks_unit_weights_equals_scipy():
    rng = np.random.default_rng(3)
    x, y = rng.normal(size=300), rng.normal(0.2, 1, size=200)
    assert weighted_ks_2samp(x, np.zeros(300), y) == pytest.approx(stats.ks_2samp(x, y).statistic, abs=1e-12)


def test_weighted_ks_reweights_to_target():
    rng = np.random.default_rng(4)
    x = rng.normal(size=50_000)
    y = rng.normal(1.0, 1.0, size=50_000)
    lw = x - 0.5  # N(0,1) -> N(1,1)
    d = weighted_ks_2samp(x, lw, y)
    assert d < ks_critical_value(effective_sample_size(lw), len(y))


def test_chi_square_accepts_true_density_and_rejects_shift():
    rng = np.random.default_rng(5)
    x = rng.normal(size=20_000)
    edges = np.linspace(-3, 3, 25)
    assert chi_square_against_density(x, stats.norm.pdf, edges)[1] > 0.01
    assert chi_square_against_density(x + 0.1, stats.norm.pdf, edges)[1] < 1e-6


def test_log_linear_slope_exact():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    slope, _ = log_linear_slope(t, 3 * np.exp(-2 * t))
    assert slope == pytest.approx(-2, abs=1e-12)
    slope, se = log_linear_slope(t, 3 * np.exp(-2 * t), [0.01, 0.01, 0.01, 0.01])
    assert slope == pytest.approx(-2, abs=1e-12) and se > 0
