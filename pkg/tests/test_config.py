import pytest

from jofet_amp.core.config import ToolConfig, load_config
from jofet_amp.core.errors import ParseError, SchemaError


def test_defaults_without_file():
    config = load_config(None)
    assert config.chain.eta_s is None
    assert config.chain.calibration_drift_db == 0.2
    assert config.simulation.n_average == 100


def test_file_values(tmp_path):
    path = tmp_path / "chain.yaml"
    path.write_text("chain:\n  eta_s: 0.8\n  eta_c_off: 0.87\n  t_hemt_mc_k: 1.61\nsimulation:\n  seed: 3\n")
    config = load_config(path)
    assert config.chain.eta_s == 0.8
    assert config.chain.t_hemt_mc_k == 1.61
    assert config.simulation.seed == 3


def test_unknown_key_is_a_schema_error(tmp_path):
    path = tmp_path / "chain.yaml"
    path.write_text("chain:\n  eta_x: 0.8\n")
    with pytest.raises(SchemaError) as info:
        load_config(path)
    assert info.value.name == "chain.eta_x"


def test_invalid_yaml_reports_line(tmp_path):
    path = tmp_path / "chain.yaml"
    path.write_text("chain:\n  eta_s: [0.8\n")
    with pytest.raises(ParseError):
        load_config(path)


def test_non_mapping_file(tmp_path):
    path = tmp_path / "chain.yaml"
    path.write_text("- 0.8\n")
    with pytest.raises(SchemaError):
        load_config(path)


def test_command_line_values_override_file():
    config = ToolConfig().merged(eta_s=0.75, t_hemt_mc_k=None, **{"simulation.seed": 5})
    assert config.chain.eta_s == 0.75
    assert config.chain.t_hemt_mc_k is None
    assert config.simulation.seed == 5


def test_merged_values_are_validated():
    with pytest.raises(SchemaError) as info:
        ToolConfig().merged(eta_s=2.0)
    assert info.value.name == "eta_s"
    with pytest.raises(SchemaError):
        ToolConfig().merged(gain=3.0)


def test_noiseless_averaging_is_allowed():
    assert ToolConfig().merged(**{"simulation.n_average": 0}).simulation.n_average == 0
