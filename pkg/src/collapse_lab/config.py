"""Experiment configuration: JSON file + CLI overrides, validated up front."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .quantum_core import ModelParams, ProbeState, SystemState, make_superposition

MODELS = ("true_collapse", "phase_noise", "bath", "recohere", "histories", "index", "compare")
MC_MODELS = {"true_collapse", "phase_noise", "index", "compare"}

_R = 1 / math.sqrt(2)
DEFAULTS = {
    "params": {"lambda": 1.0, "a": 1.0, "b": -1.0, "dt": 0.01},
    "alpha": _R,
    "beta": _R,
    "probe": {"mu": _R, "nu": _R},
    "horizon": 1.0,
    "n_trials": 100_000,
    "threshold": 1e-12,
    "output_dir": "collapse-lab-out",
}


@dataclass(frozen=True)
class Diagnostic:
    field: str
    message: str

    def __str__(self):
        return f"{self.field}: {self.message}"


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    seed: int
    params: ModelParams
    state0: SystemState
    probe: ProbeState
    horizon: float
    n_trials: int
    threshold: float
    output_dir: Path
    epsilon: float | None = None
    limit: float | None = None
    raw: dict = field(default_factory=dict, compare=False)


def parse_complex(value) -> complex:
    """Accept a number, a [re, im] pair, or a Python complex literal string."""
    if isinstance(value, bool):
        raise ValueError("booleans are not amplitudes")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    raise ValueError(f"cannot read {value!r} as a complex number")


def merge(file_cfg: dict | None, overrides: dict) -> dict:
    """Defaults <- config file <- CLI flags (flags win)."""
    out = json.loads(json.dumps(DEFAULTS))
    for src in (file_cfg or {}, overrides):
        for k, v in src.items():
            if v is None:
                continue
            if k in ("params", "probe") and isinstance(v, dict):
                out.setdefault(k, {}).update(v)
            else:
                out[k] = v
    return out


def load_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a JSON object")
    return data


def _number(cfg, path, diags, *, positive=False, nonneg=False, integer=False):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            diags.append(Diagnostic(path, "missing"))
            return None
        node = node[part]
    v = node
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        diags.append(Diagnostic(path, f"expected a number, got {v!r}"))
        return None
    if integer and (not float(v).is_integer()):
        diags.append(Diagnostic(path, f"expected an integer, got {v!r}"))
        return None
    if not math.isfinite(v):
        diags.append(Diagnostic(path, "must be finite"))
        return None
    if positive and not v > 0:
        diags.append(Diagnostic(path, f"must be > 0, got {v!r}"))
        return None
    if nonneg and v < 0:
        diags.append(Diagnostic(path, f"must be >= 0, got {v!r}"))
        return None
    return v


def validate(cfg: dict) -> list[Diagnostic]:
    """All problems with a merged config dict; empty means ``run`` will accept it."""
    diags: list[Diagnostic] = []
    model = cfg.get("model")
    if model not in MODELS:
        diags.append(Diagnostic("model", f"must be one of {', '.join(MODELS)}; got {model!r}"))
    if "seed" not in cfg or cfg["seed"] is None:
        diags.append(Diagnostic("seed", "required (no wall-clock default)"))
    else:
        _number(cfg, "seed", diags, nonneg=True, integer=True)
    _number(cfg, "params.lambda", diags, positive=True)
    _number(cfg, "params.dt", diags, positive=True)
    _number(cfg, "params.a", diags)
    _number(cfg, "params.b", diags)
    horizon = _number(cfg, "horizon", diags, nonneg=True)
    n = _number(cfg, "n_trials", diags, integer=True)
    if n is not None:
        if n < 1:
            diags.append(Diagnostic("n_trials", f"must be >= 1, got {n}"))
        elif model in MC_MODELS and n < 100:
            diags.append(Diagnostic("n_trials", f"model {model} needs >= 100 trials, got {n}"))
    thr = _number(cfg, "threshold", diags)
    if thr is not None and not 0 < thr < 0.5:
        diags.append(Diagnostic("threshold", "must lie in (0, 0.5)"))

    amps = []
    for key in ("alpha", "beta"):
        try:
            amps.append(parse_complex(cfg.get(key)))
        except (TypeError, ValueError) as exc:
            diags.append(Diagnostic(key, str(exc)))
    if len(amps) == 2 and amps[0] == 0 and amps[1] == 0:
        diags.append(Diagnostic("alpha", "alpha and beta cannot both be zero"))

    probe = cfg.get("probe")
    if not isinstance(probe, dict):
        diags.append(Diagnostic("probe", "expected an object with mu and nu"))
    else:
        try:
            mu, nu = parse_complex(probe.get("mu")), parse_complex(probe.get("nu"))
            if abs(abs(mu) ** 2 + abs(nu) ** 2 - 1) > 1e-9:
                diags.append(Diagnostic("probe", "|mu|^2 + |nu|^2 must equal 1"))
        except (TypeError, ValueError) as exc:
            diags.append(Diagnostic("probe", str(exc)))

    if model == "phase_noise":
        if cfg.get("epsilon") is None:
            diags.append(Diagnostic("epsilon", "required for phase_noise (experimental resolution)"))
        else:
            _number(cfg, "epsilon", diags, positive=True)
    if model == "histories":
        if cfg.get("limit") is None:
            diags.append(Diagnostic("limit", "required for histories (prearranged limit)"))
        else:
            _number(cfg, "limit", diags, positive=True)
    dt = cfg.get("params", {}).get("dt") if isinstance(cfg.get("params"), dict) else None
    needs_steps = model in MC_MODELS | {"bath", "recohere", "histories"}
    if needs_steps and horizon is not None and isinstance(dt, (int, float)) and dt > 0:
        if model in {"bath", "recohere", "index"} and horizon < dt:
            diags.append(Diagnostic("horizon", f"must cover at least one step dt={dt}"))
        elif horizon > 0 and horizon < dt:
            diags.append(Diagnostic("horizon", f"must be 0 or at least one step dt={dt}"))
    if not isinstance(cfg.get("output_dir"), str) or not cfg.get("output_dir"):
        diags.append(Diagnostic("output_dir", "expected a directory path"))
    return diags


def build(cfg: dict) -> ExperimentConfig:
    diags = validate(cfg)
    if diags:
        raise ConfigError(diags[0].field, diags[0].message)
    p = cfg["params"]
    probe = cfg["probe"]
    return ExperimentConfig(
        model=cfg["model"],
        seed=int(cfg["seed"]),
        params=ModelParams(float(p["lambda"]), float(p["a"]), float(p["b"]), float(p["dt"]), int(cfg["seed"])),
        state0=make_superposition(parse_complex(cfg["alpha"]), parse_complex(cfg["beta"])),
        probe=_unit_probe(parse_complex(probe["mu"]), parse_complex(probe["nu"])),
        horizon=float(cfg["horizon"]),
        n_trials=int(cfg["n_trials"]),
        threshold=float(cfg["threshold"]),
        output_dir=Path(cfg["output_dir"]),
        epsilon=None if cfg.get("epsilon") is None else float(cfg["epsilon"]),
        limit=None if cfg.get("limit") is None else float(cfg["limit"]),
        raw=cfg,
    )


def _unit_probe(mu, nu) -> ProbeState:
    # config values like 0.7071067811865476 are unit only to ~1e-16; tidy up
    scale = math.hypot(abs(mu), abs(nu))
    return ProbeState(mu / scale, nu / scale)
