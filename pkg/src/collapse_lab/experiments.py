"""One runner per model; each returns a summary plus the tables to write."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import bath, histories, index_model, phase_noise, true_collapse
from .config import ExperimentConfig, build
from .errors import CollapseLabError
from .noise import RngStream, n_steps
from .quantum_core import DensityMatrix2, off_diagonal_magnitude
from .report import write_csv, write_json

# fixed stream ids so each model's draws are independent of the others
STREAM_CSL = 1
STREAM_PHASE = 2
STREAM_INDEX = 3
STREAM_PROBE = 4

ENTRIES = (("aa", 0, 0), ("ab", 0, 1), ("ba", 1, 0), ("bb", 1, 1))
DENSITY_HEADER = ["source", "entry", "re", "im", "se_re", "se_im"]


class IoError(CollapseLabError, OSError):
    pass


@dataclass
class ExperimentReport:
    summary: dict
    tables: dict = field(default_factory=dict)  # filename -> (header, rows)

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_json(self.summary, out / "summary.json")
            for name, (header, rows) in self.tables.items():
                write_csv(out / name, header, rows)
        except OSError as exc:
            raise IoError(f"cannot write to {out}: {exc.strerror or exc}") from exc


def _rho_dict(rho: DensityMatrix2, stderr=None) -> dict:
    m = rho.as_array()
    d = {f"rho_{name}": [m[i, j].real, m[i, j].imag] for name, i, j in ENTRIES}
    if stderr is not None:
        d["stderr"] = {f"rho_{name}": [stderr[i, j].real, stderr[i, j].imag] for name, i, j in ENTRIES}
    return d


def _density_rows(source, rho: DensityMatrix2, stderr=None):
    m = rho.as_array()
    se = np.zeros((2, 2), dtype=complex) if stderr is None else stderr
    return [[source, name, m[i, j].real, m[i, j].imag, se[i, j].real, se[i, j].imag]
            for name, i, j in ENTRIES]


def _agreement(est: true_collapse.RhoEstimate, exact: DensityMatrix2, nsig=3.0) -> bool:
    m, e, se = est.rho.as_array(), exact.as_array(), est.stderr
    for _, i, j in ENTRIES:
        for part in ("real", "imag"):
            diff = abs(getattr(m[i, j] - e[i, j], part))
            s = getattr(se[i, j], part)
            if diff > nsig * s and diff > 1e-12:
                return False
    return True


def _config_echo(cfg: ExperimentConfig) -> dict:
    return {
        "model": cfg.model,
        "seed": cfg.seed,
        "params": {"lambda": cfg.params.lam, "a": cfg.params.a, "b": cfg.params.b, "dt": cfg.params.dt},
        "alpha": cfg.state0.amp_a,
        "beta": cfg.state0.amp_b,
        "probe": {"mu": cfg.probe.mu, "nu": cfg.probe.nu},
        "horizon": cfg.horizon,
        "n_trials": cfg.n_trials,
        "threshold": cfg.threshold,
        "epsilon": cfg.epsilon,
        "limit": cfg.limit,
    }


def _csl_section(cfg: ExperimentConfig):
    s, p = cfg.state0, cfg.params
    exact = true_collapse.analytic_rho(cfg.horizon, s, p)
    if cfg.horizon == 0:
        est = true_collapse.RhoEstimate(s.density(), np.zeros((2, 2), dtype=complex), cfg.n_trials)
        return exact, est, None
    batch = true_collapse.sample_cooked_batch(s, p, cfg.horizon, cfg.n_trials, RngStream(cfg.seed, STREAM_CSL))
    return exact, true_collapse.rho_from_batch(batch, s, p), batch


def run_true_collapse(cfg: ExperimentConfig) -> ExperimentReport:
    s, p = cfg.state0, cfg.params
    exact, est, batch = _csl_section(cfg)
    summary = {"config": _config_echo(cfg), "analytic": _rho_dict(exact),
               "monte_carlo": _rho_dict(est.rho, est.stderr),
               "agree_within_3se": _agreement(est, exact)}
    tables = {"density.csv": (DENSITY_HEADER, _density_rows("analytic", exact)
                              + _density_rows("monte_carlo", est.rho, est.stderr))}
    if batch is not None:
        T = batch.times[-1]
        p_a, p_b = true_collapse.branch_probabilities_from_B(batch.B_T, T, s, p)
        outcomes = true_collapse.classify_many(p_a, p_b, cfg.threshold)
        lns = true_collapse.batch_log_norm_sq(batch, s, p)
        counts = {o.value: int(np.sum(outcomes == o)) for o in true_collapse.Outcome}
        n = cfg.n_trials
        pa0 = abs(s.amp_a) ** 2
        summary["outcomes"] = {
            "counts": counts,
            "fraction_a": counts["a"] / n,
            "born_p_a": pa0,
            "binomial_se": math.sqrt(pa0 * (1 - pa0) / n),
        }
        summary["B_T"] = {"mean": float(np.mean(batch.B_T)), "mixture_mean": 2 * p.lam * T * (pa0 * p.a + (1 - pa0) * p.b)}
        rows = [[k, float(batch.B_T[k]), float(p_a[k]), outcomes[k].value, float(lns[k])] for k in range(n)]
        tables["trials.csv"] = (["trial_id", "B_T", "p_a", "outcome", "log_norm_sq"], rows)
    return ExperimentReport(summary, tables)


def _phase_grid(horizon):
    return [horizon * k / 8 for k in range(1, 9)] if horizon > 0 else [0.0]


def run_phase_noise(cfg: ExperimentConfig) -> ExperimentReport:
    s, p = cfg.state0, cfg.params
    rng = RngStream(cfg.seed, STREAM_PHASE)
    rows = []
    ests = {}
    for k, T in enumerate(_phase_grid(cfg.horizon)):
        if T and T < p.dt:
            continue
        est = phase_noise.ensemble_rho_phase_mc(cfg.n_trials, T, s, p, rng.child(k))
        ests[T] = est
        exact = phase_noise.ensemble_rho_phase(T, s, p)
        rows.append([T, off_diagonal_magnitude(exact), off_diagonal_magnitude(est.rho),
                     est.offdiag_magnitude_stderr()])
    T = cfg.horizon
    exact = phase_noise.ensemble_rho_phase(T, s, p)
    est = ests[T]
    closed = phase_noise.interference_probability(s, cfg.probe, T, p)
    if T > 0:
        mc, mc_se = phase_noise.interference_probability_mc(s, cfg.probe, T, p, cfg.n_trials,
                                                            RngStream(cfg.seed, STREAM_PROBE))
    else:
        mc, mc_se = closed, 0.0
    try:
        t_nowen = phase_noise.nowen_time(s, cfg.probe, p, cfg.epsilon)
    except CollapseLabError as exc:
        t_nowen = None
        nowen_note = str(exc)
    else:
        nowen_note = None
    summary = {
        "config": _config_echo(cfg),
        "analytic": _rho_dict(exact),
        "monte_carlo": _rho_dict(est.rho, est.stderr),
        "agree_within_3se": _agreement(est, exact),
        "branch_probabilities_unchanged": True,
        "interference": {"closed_form": closed, "monte_carlo": mc, "stderr": mc_se},
        "nowen": {"epsilon": cfg.epsilon, "T_nowen": t_nowen, "note": nowen_note},
    }
    tables = {
        "trials.csv": (["T", "analytic_abs_rho_ab", "mc_abs_rho_ab", "stderr"], rows),
        "density.csv": (DENSITY_HEADER, _density_rows("analytic", exact)
                        + _density_rows("monte_carlo", est.rho, est.stderr)),
    }
    return ExperimentReport(summary, tables)


def _mode_rows(register, params):
    return [[m.index, m.coeff_a, m.coeff_b, m.overlap_factor(params.lam)] for m in register.modes]


MODE_HEADER = ["mode", "coeff_a", "coeff_b", "overlap_factor"]


def run_bath(cfg: ExperimentConfig) -> ExperimentReport:
    s, p = cfg.state0, cfg.params
    n = n_steps(cfg.horizon, p.dt)
    reg = bath.forward_pass(bath.init_bath(n, p), p)
    rho = bath.reduced_rho(reg, s, p)
    exact = true_collapse.analytic_rho(n * p.dt, s, p)
    summary = {
        "config": _config_echo(cfg),
        "n_modes": n,
        "overlap": bath.branch_overlap(reg, p).real,
        "overlap_grid_oracle": bath.grid_oracle_overlap(reg, p).real,
        "reduced_rho": _rho_dict(rho),
        "analytic": _rho_dict(exact),
    }
    tables = {"trials.csv": (MODE_HEADER, _mode_rows(reg, p)),
              "density.csv": (DENSITY_HEADER, _density_rows("reduced", rho) + _density_rows("analytic", exact))}
    return ExperimentReport(summary, tables)


def run_recohere(cfg: ExperimentConfig) -> ExperimentReport:
    s, p = cfg.state0, cfg.params
    n = n_steps(cfg.horizon, p.dt)
    rep, fwd, back = bath.recoherence_experiment(n, s, p)
    summary = {"config": _config_echo(cfg), "n_modes": n, **rep.as_dict(),
               "reduced_rho_forward": _rho_dict(bath.reduced_rho(fwd, s, p)),
               "reduced_rho_after_reversal": _rho_dict(bath.reduced_rho(back, s, p))}
    tables = {
        "trials.csv": (MODE_HEADER, _mode_rows(back, p)),
        "forward_modes.csv": (MODE_HEADER, _mode_rows(fwd, p)),
        "density.csv": (DENSITY_HEADER, _density_rows("forward", bath.reduced_rho(fwd, s, p))
                        + _density_rows("after_reversal", bath.reduced_rho(back, s, p))),
    }
    return ExperimentReport(summary, tables)


def run_histories(cfg: ExperimentConfig) -> ExperimentReport:
    s, p = cfg.state0, cfg.params
    rep = histories.histories_report(cfg.horizon, cfg.probe, s, p, cfg.limit)
    summary = {"config": _config_echo(cfg), **rep}
    rho = true_collapse.analytic_rho(cfg.horizon, s, p)
    tables = {"trials.csv": (["T", "offdiag"], list(zip(rep["T_grid"], rep["offdiag_values"]))),
              "density.csv": (DENSITY_HEADER, _density_rows("reduced_at_final_time", rho))}
    return ExperimentReport(summary, tables)


def run_index(cfg: ExperimentConfig) -> ExperimentReport:
    s, p = cfg.state0, cfg.params
    n = n_steps(cfg.horizon, p.dt)
    T = n * p.dt
    rng = RngStream(cfg.seed, STREAM_INDEX)
    B = index_model.sample_record_B(s, n, p, cfg.n_trials, rng)
    ks = stats.kstest(B, lambda x: true_collapse.marginal_B_cdf(x, T, s, p))
    p_a, p_b = true_collapse.branch_probabilities_from_B(B, T, s, p)
    est = true_collapse.rho_from_samples(p_a, p_b, true_collapse.coherence_from_B(B, T, s, p), cfg.n_trials)
    exact = true_collapse.analytic_rho(T, s, p)
    example = index_model.sample_record(s, n, p, rng.child(0))
    csl_state = true_collapse.evolve_csl(s, example.record, p).state
    summary = {
        "config": _config_echo(cfg),
        "n_slices": n,
        "B_vs_marginal_ks": {"statistic": float(ks.statistic), "pvalue": float(ks.pvalue)},
        "conditioned_rho": _rho_dict(est.rho, est.stderr),
        "analytic": _rho_dict(exact),
        "agree_within_3se": _agreement(est, exact),
        "example_record": {
            "B_T": float(example.record.cumulative[-1]),
            "record_log_density": example.record_log_density,
            "max_state_diff_vs_evolve_csl": max(abs(example.conditioned_state.amp_a - csl_state.amp_a),
                                                abs(example.conditioned_state.amp_b - csl_state.amp_b)),
        },
    }
    rec = example.record
    pa_run, _ = true_collapse.branch_probabilities_from_B(rec.cumulative, rec.times, s, p)
    rows = [[k, float(rec.values[k]), float(rec.cumulative[k]), float(pa_run[k])] for k in range(len(rec))]
    tables = {"trials.csv": (["slice", "w", "B", "p_a"], rows),
              "density.csv": (DENSITY_HEADER, _density_rows("analytic", exact)
                              + _density_rows("records", est.rho, est.stderr))}
    return ExperimentReport(summary, tables)


def run_compare(cfg: ExperimentConfig) -> ExperimentReport:
    """All models, one density matrix, different individual trajectories."""
    s, p = cfg.state0, cfg.params
    exact, csl, batch = _csl_section(cfg)
    phase = phase_noise.ensemble_rho_phase_mc(cfg.n_trials, cfg.horizon, s, p, RngStream(cfg.seed, STREAM_PHASE))
    summary = {
        "config": _config_echo(cfg),
        "analytic": _rho_dict(exact),
        "true_collapse_mc": _rho_dict(csl.rho, csl.stderr),
        "phase_noise_mc": _rho_dict(phase.rho, phase.stderr),
        "true_collapse_agrees": _agreement(csl, exact),
        "phase_noise_agrees": _agreement(phase, exact),
    }
    if cfg.horizon >= p.dt:
        n = n_steps(cfg.horizon, p.dt)
        summary["bath_reduced"] = _rho_dict(bath.reduced_rho(bath.forward_pass(bath.init_bath(n, p), p), s, p))
    tables = {"density.csv": (DENSITY_HEADER, _density_rows("analytic", exact)
                              + _density_rows("true_collapse_mc", csl.rho, csl.stderr)
                              + _density_rows("phase_noise_mc", phase.rho, phase.stderr))}
    if batch is not None:
        T = batch.times[-1]
        p_a, _ = true_collapse.branch_probabilities_from_B(batch.B_T, T, s, p)
        pa0 = abs(s.amp_a) ** 2
        rows = [[k, float(batch.B_T[k]), float(p_a[k]), pa0] for k in range(cfg.n_trials)]
        tables["trials.csv"] = (["trial_id", "csl_B_T", "csl_p_a", "phase_p_a"], rows)
    return ExperimentReport(summary, tables)


RUNNERS = {
    "true_collapse": run_true_collapse,
    "phase_noise": run_phase_noise,
    "bath": run_bath,
    "recohere": run_recohere,
    "histories": run_histories,
    "index": run_index,
    "compare": run_compare,
}


def run(config) -> ExperimentReport:
    """Run one experiment; ``config`` is an ExperimentConfig or a merged dict."""
    cfg = config if isinstance(config, ExperimentConfig) else build(config)
    return RUNNERS[cfg.model](cfg)
