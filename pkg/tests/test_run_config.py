"""运行配置"""
import json

import pytest

from models.ensemble import SamplerMethod
from models.run_config import RunConfig
from utils.exceptions import ConfigError


def test_defaults():
    run = RunConfig()
    assert run.beta == 2.0
    assert run.method == SamplerMethod.TRIDIAGONAL
    assert run.Ns == [64]


def test_round_trip_is_idempotent():
    data = {
        "potential": {"kind": "quartic", "t": 1.0},
        "beta": 1.0,
        "N": [64, 128],
        "method": "mala",
        "mcmc": {"burn_in_sweeps": 100, "thinning_sweeps": 5},
        "experiment": "rigidity",
        "params": {"bulk_fraction": 0.2},
        "seed": (1 << 64) - 1,
        "chains": 2,
        "samples": 10,
    }
    run = RunConfig.from_dict(data)
    again = RunConfig.from_dict(json.loads(run.to_json()))
    assert again == run
    assert again.to_json() == run.to_json()


@pytest.mark.parametrize(
    "data,key",
    [
        ({"unknown": 1}, "unknown"),
        ({"beta": 0}, "beta"),
        ({"N": [128, 64]}, "N"),
        ({"seed": 1 << 64}, "seed"),
        ({"mcmc": {"burn_in": 5}}, "mcmc.burn_in"),
        ({"potential": {"kind": "cubic"}}, "potential.kind"),
    ],
)
def test_errors_name_the_key(data, key):
    with pytest.raises(ConfigError, match=f"config key '{key}"):
        RunConfig.from_dict(data)


def test_single_N():
    with pytest.raises(ConfigError):
        RunConfig(N=[2, 4]).single_N()
    assert RunConfig(N=[8]).single_N() == 8


def test_ensemble_rejects_tridiagonal_for_quartic():
    run = RunConfig.from_dict({"potential": {"kind": "quartic", "t": 0.0}, "N": 8})
    with pytest.raises(ConfigError):
        run.ensemble()


def test_load(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"N": 4, "seed": 3}), encoding="utf-8")
    assert RunConfig.load(path).seed == 3
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "missing.json")
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        RunConfig.load(path)
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        RunConfig.load(path)
