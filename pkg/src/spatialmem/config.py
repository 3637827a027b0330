"""Engine configuration: JSON file plus SPATIALMEM_* environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .errors import InvalidArgumentError
from .providers import (
    LiveEmbedder,
    LiveLanguageModel,
    LiveSceneDescriber,
    LiveWebSearch,
    ProviderSuite,
)
from .retriever import RetrieverConfig

ENV_PREFIX = "SPATIALMEM_"


@dataclass
class EngineConfig:
    data_dir: str = "./data"
    provider_mode: str = "stub"  # "stub" | "live"
    lm_endpoint: str = ""
    embedding_endpoint: str = ""
    scene_endpoint: str = ""
    search_endpoint: str = ""
    api_key: str = ""
    embedding_dim: int = 256
    k_final: int = 5
    rrf_constant: float = 60.0
    gps_radius_m: float = 150.0
    confidence_threshold: int = 7
    verification_ttl_hours: int = 24
    host: str = "127.0.0.1"
    port: int = 8000

    def validate(self) -> None:
        if self.provider_mode not in ("stub", "live"):
            raise InvalidArgumentError(
                f"provider_mode must be 'stub' or 'live', got {self.provider_mode!r}"
            )
        if self.provider_mode == "live":
            missing = [
                name
                for name in (
                    "lm_endpoint",
                    "embedding_endpoint",
                    "scene_endpoint",
                    "search_endpoint",
                )
                if not getattr(self, name)
            ]
            if missing:
                raise InvalidArgumentError(
                    "live provider mode needs endpoints: " + ", ".join(missing)
                )
        if not (1 <= self.confidence_threshold <= 10):
            raise InvalidArgumentError("confidence_threshold must be in [1, 10]")
        if self.verification_ttl_hours <= 0:
            raise InvalidArgumentError("verification_ttl_hours must be positive")
        # Delegate the retrieval-parameter checks.
        self.retriever_config()

    def retriever_config(self) -> RetrieverConfig:
        return RetrieverConfig(
            k_final=self.k_final,
            rrf_constant=self.rrf_constant,
            gps_radius_m=self.gps_radius_m,
        )

    def build_providers(self) -> ProviderSuite:
        if self.provider_mode == "stub":
            return ProviderSuite.stub(dim=self.embedding_dim)
        return ProviderSuite(
            language_model=LiveLanguageModel(self.lm_endpoint, self.api_key),
            embedder=LiveEmbedder(
                self.embedding_endpoint, self.api_key, dim=self.embedding_dim
            ),
            scene_describer=LiveSceneDescriber(self.scene_endpoint, self.api_key),
            web_search=LiveWebSearch(self.search_endpoint, self.api_key),
        )


def _coerce(raw: str, target_type: type):
    if target_type is int:
        return int(raw)
    if target_type is float:
        return float(raw)
    return raw


def load_config(path: Optional[str | Path] = None, env: Optional[dict] = None) -> EngineConfig:
    """Defaults, then the JSON file (when given), then environment overrides.

    Every config key can be overridden as SPATIALMEM_<KEY UPPERCASED>,
    e.g. SPATIALMEM_DATA_DIR or SPATIALMEM_K_FINAL.
    """
    environ = os.environ if env is None else env
    values: dict = {}
    defaults = EngineConfig()
    known = [f.name for f in fields(EngineConfig)]
    types = {name: type(getattr(defaults, name)) for name in known}

    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                loaded = json.load(handle)
        except FileNotFoundError:
            raise InvalidArgumentError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"config file is not valid JSON: {exc}")
        if not isinstance(loaded, dict):
            raise InvalidArgumentError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(known))
        if unknown:
            raise InvalidArgumentError("unknown config keys: " + ", ".join(unknown))
        values.update(loaded)

    for name in known:
        env_name = ENV_PREFIX + name.upper()
        if env_name in environ:
            try:
                values[name] = _coerce(environ[env_name], types[name])
            except ValueError:
                raise InvalidArgumentError(
                    f"{env_name} is not a valid {types[name].__name__}"
                )

    config = EngineConfig(**values)
    config.validate()
    return config
