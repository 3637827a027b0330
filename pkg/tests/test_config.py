"""Config loading order: defaults, file, then environment overrides."""

import json

import pytest

from spatialmem.config import EngineConfig, load_config
from spatialmem.errors import InvalidArgumentError
from spatialmem.providers import StubEmbedder, StubLanguageModel


def test_defaults():
    config = load_config(env={})
    assert config.provider_mode == "stub"
    assert config.k_final == 5
    assert config.rrf_constant == 60.0
    assert config.gps_radius_m == 150.0
    assert config.confidence_threshold == 7
    assert config.verification_ttl_hours == 24


def test_file_values_override_defaults(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"k_final": 3, "data_dir": "/tmp/mem"}))
    config = load_config(path, env={})
    assert config.k_final == 3
    assert config.data_dir == "/tmp/mem"
    assert config.rrf_constant == 60.0


def test_env_overrides_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"k_final": 3}))
    config = load_config(
        path, env={"SPATIALMEM_K_FINAL": "9", "SPATIALMEM_GPS_RADIUS_M": "75.5"}
    )
    assert config.k_final == 9
    assert config.gps_radius_m == 75.5


def test_unknown_file_key_rejected(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"k_fnial": 3}))
    with pytest.raises(InvalidArgumentError) as err:
        load_config(path, env={})
    assert "k_fnial" in str(err.value)


def test_bad_env_type_rejected():
    with pytest.raises(InvalidArgumentError):
        load_config(env={"SPATIALMEM_K_FINAL": "many"})


def test_provider_mode_validated():
    with pytest.raises(InvalidArgumentError):
        load_config(env={"SPATIALMEM_PROVIDER_MODE": "psychic"})
    with pytest.raises(InvalidArgumentError) as err:
        load_config(env={"SPATIALMEM_PROVIDER_MODE": "live"})
    assert "endpoint" in str(err.value)


def test_stub_suite_construction():
    suite = EngineConfig(embedding_dim=32).build_providers()
    assert isinstance(suite.embedder, StubEmbedder)
    assert isinstance(suite.language_model, StubLanguageModel)
    assert suite.embedder.dim == 32
