import json

import pytest

from viraldyn.config import DEFAULT_SWEEPS, ConfigError, load_config, parse_config
from viraldyn.model import BASELINE, ModelVariant


def test_empty_config_gives_baseline():
    cfg = parse_config("{}")
    assert cfg.params == BASELINE
    assert cfg.variant is ModelVariant.BASIC
    assert cfg.integration.t_span == (0.0, 30.0)
    assert cfg.init.T == pytest.approx(1e6) and cfg.init.L is None
    assert parse_config("").params == BASELINE


def test_negative_parameter_names_path():
    with pytest.raises(ConfigError) as exc:
        parse_config('{"params":{"mu":-1}}')
    assert exc.value.path == "params.mu"


def test_beta1_enables_ade():
    cfg = parse_config('{"params":{"beta1":1e-6}}')
    assert cfg.params == BASELINE.replace(beta1=1e-6)


def test_lambda_key():
    assert parse_config('{"params":{"lambda":5e6}}').params.lam == 5e6


@pytest.mark.parametrize("doc,path", [
    ({"foo": 1}, "foo"),
    ({"params": {"gamma": 1}}, "params.gamma"),
    ({"params": {"mu": "1"}}, "params.mu"),
    ({"params": {"mu": True}}, "params.mu"),
    ({"variant": "fast"}, "variant"),
    ({"init": {"V": -1}}, "init.V"),
    ({"init": {"L": 0}}, "init.L"),
    ({"integration": {"t_span": [0]}}, "integration.t_span"),
    ({"integration": {"rel_tol": 1}}, "integration"),
    ({"integration": {"bogus": 1}}, "integration.bogus"),
    ({"sweep": {"axis": "zeta"}}, "sweep.axis"),
    ({"sweep": {"axis": "mu"}}, "sweep.values"),
    ({"sweep": {"axis": "b", "values": []}}, "sweep.values"),
    ({"sweep": {"axis": "b", "values": [0.5, -1]}}, "sweep.values[1]"),
    ({"fit": {"free": ["eta"]}}, "fit.free[0]"),
    ({"fit": {"free": ["c"], "bounds": {"c": [2, 1]}}}, "fit.bounds.c"),
    ({"fit": {"free": ["c"], "bounds": {"delta": [1, 2]}}}, "fit.bounds.delta"),
    ({"fit": {"n_starts": -1}}, "fit.n_starts"),
    ({"output_dir": 3}, "output_dir"),
    ({"variant": "latent"}, "params.eta"),
    ({"params": {"eta": 2.0}}, "params.eta"),
])
def test_errors_name_the_path(doc, path):
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(doc))
    assert exc.value.path == path


def test_invalid_json():
    with pytest.raises(ConfigError):
        parse_config("{not json")


def test_latent_config():
    cfg = parse_config('{"variant":"latent","params":{"eta":4.0}}')
    assert cfg.variant is ModelVariant.LATENT and cfg.init.L == 0.0


def test_delta_below_mu_warning_is_carried():
    cfg = parse_config('{"params":{"delta":1.0}}')
    assert cfg.warnings


def test_sweep_defaults():
    for axis, values in DEFAULT_SWEEPS.items():
        assert parse_config(json.dumps({"sweep": {"axis": axis}})).sweep.values == values


def test_fit_defaults_and_paths(tmp_path):
    (tmp_path / "cfg.json").write_text('{"fit":{"data":"d.csv"}, "output_dir": "out"}')
    cfg = load_config(tmp_path / "cfg.json")
    assert cfg.fit.data == tmp_path / "d.csv"
    assert cfg.output_dir == tmp_path / "out"
    assert cfg.fit.free == ("beta0", "delta", "c", "omega")
    lo, hi = cfg.fit.bounds["c"]
    assert lo == pytest.approx(BASELINE.c / 100) and hi == pytest.approx(BASELINE.c * 100)


def test_fit_initial_condition_names():
    cfg = parse_config('{"fit":{"free":["V0","lambda"]}}')
    assert cfg.fit.free == ("V0", "lam")
