import csv
import json
import math
import re
import time

import pytest

from collapse_lab.cli import main
from collapse_lab.config import MODELS, build, merge, validate
from collapse_lab.errors import ConfigError
from collapse_lab.experiments import IoError, run


def _cfg(model, **kw):
    extra = {"epsilon": 0.001} if model == "phase_noise" else {"limit": 0.05} if model == "histories" else {}
    return merge(extra, {"model": model, "seed": 7, **kw})


def _fields(diags):
    return {d.field for d in diags}


def test_valid_config_has_no_diagnostics():
    for model in MODELS:
        assert validate(_cfg(model)) == []


def test_lambda_zero_diagnostic():
    cfg = _cfg("bath")
    cfg["params"]["lambda"] = 0
    assert "params.lambda" in _fields(validate(cfg))


def test_histories_needs_limit():
    assert "limit" in _fields(validate(merge({}, {"model": "histories", "seed": 1})))


def test_phase_noise_needs_epsilon():
    assert "epsilon" in _fields(validate(merge({}, {"model": "phase_noise", "seed": 1})))


def test_seed_mandatory():
    assert "seed" in _fields(validate(merge({}, {"model": "bath"})))


def test_zero_trials_names_field():
    cfg = _cfg("true_collapse", n_trials=0)
    with pytest.raises(ConfigError) as exc:
        run(cfg)
    assert exc.value.field == "n_trials"


@pytest.mark.parametrize("bad", [
    {"params": {"dt": -1}}, {"horizon": -1}, {"alpha": 0, "beta": 0}, {"probe": {"mu": 1, "nu": 1}},
    {"threshold": 0.7}, {"alpha": "nonsense"}, {"n_trials": 2.5},
])
def test_validate_iff_build(bad):
    cfg = merge(_cfg("compare"), bad)
    diags = validate(cfg)
    assert diags
    with pytest.raises(ConfigError):
        build(cfg)


def test_flags_override_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"seed": 1, "n_trials": 500, "horizon": 0.5, "output_dir": str(tmp_path / "x")}))
    out = tmp_path / "y"
    assert main(["true_collapse", "--config", str(path), "--trials", "200", "--out", str(out)]) == 0
    echo = json.loads((out / "summary.json").read_text())["config"]
    assert echo["n_trials"] == 200 and echo["seed"] == 1 and echo["horizon"] == 0.5


def test_exit_code_config(tmp_path, capsys):
    assert main(["bath", "--out", str(tmp_path)]) == 2  # no seed
    assert "seed" in capsys.readouterr().err
    assert main(["index", "--seed", "1", "--trials", "0", "--out", str(tmp_path)]) == 2
    assert main(["bath", "--config", str(tmp_path / "missing.json"), "--seed", "1"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["bath", "--config", str(bad), "--seed", "1"]) == 2


def test_exit_code_io(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["bath", "--seed", "1", "--out", str(blocker / "sub")]) == 3
    with pytest.raises(IoError):
        run(_cfg("bath")).write(blocker / "sub")


def test_validate_flag(tmp_path, capsys):
    assert main(["bath", "--seed", "1", "--validate", "--out", str(tmp_path / "never")]) == 0
    assert not (tmp_path / "never").exists()


def test_byte_identical_summaries(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 11, "n_trials": 2000, "alpha": [0.6, 0.0], "beta": [0.0, 0.8]}))
    for model in MODELS:
        outs = []
        for k in range(2):
            d = tmp_path / f"{model}{k}"
            args = [model, "--config", str(cfg), "--out", str(d)]
            if model == "phase_noise":
                cfg2 = tmp_path / "pn.json"
                cfg2.write_text(json.dumps({**json.loads(cfg.read_text()), "epsilon": 0.01}))
                args[2] = str(cfg2)
            if model == "histories":
                cfg3 = tmp_path / "h.json"
                cfg3.write_text(json.dumps({**json.loads(cfg.read_text()), "limit": 0.05}))
                args[2] = str(cfg3)
            assert main(args) == 0
            outs.append(d)
        for name in ("summary.json", "trials.csv", "density.csv"):
            a, b = outs[0] / name, outs[1] / name
            if a.exists():
                assert a.read_bytes() == b.read_bytes()


def test_float_format_17_digits(tmp_path):
    run(_cfg("recohere")).write(tmp_path)
    text = (tmp_path / "summary.json").read_text()
    m = re.search(r'"overlap_forward": ([0-9.e+-]+)', text)
    assert len(m.group(1).replace("0.", "", 1).lstrip("0")) == 17


def test_recohere_report(tmp_path):
    s = run(_cfg("recohere")).summary
    assert s["overlap_forward"] == pytest.approx(0.135335283236612692, abs=1e-12)
    assert s["overlap_after_reversal"] == 1.0


def test_compare_agreement():
    s = run(_cfg("compare", seed=2024)).summary
    assert s["true_collapse_agrees"] and s["phase_noise_agrees"]
    an = s["analytic"]["rho_ab"]
    assert an[0] == pytest.approx(0.5 * math.exp(-2), abs=1e-15)


def test_output_layout(tmp_path):
    for model in ("true_collapse", "phase_noise", "index", "compare"):
        d = tmp_path / model
        run(_cfg(model, n_trials=500)).write(d)
        assert {p.name for p in d.iterdir()} >= {"summary.json", "trials.csv", "density.csv"}
        with open(d / "density.csv") as fh:
            assert next(csv.reader(fh)) == ["source", "entry", "re", "im", "se_re", "se_im"]


def test_default_configs_under_a_minute():
    for model in MODELS:
        t0 = time.perf_counter()
        run(_cfg(model))
        assert time.perf_counter() - t0 < 60
