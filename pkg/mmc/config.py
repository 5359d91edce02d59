"""
MMC - Solver Configuration
Settings layered as defaults < environment (MMC_*) < config file < CLI flags
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml
from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError


def _parse_key(key: str) -> Tuple[int, int]:
    parts = key.replace(',', ':').split(':')
    if len(parts) != 2:
        raise ValueError(f"Expected 'a:b', got {key!r}")
    return int(parts[0]), int(parts[1])


class MmcConfig(BaseSettings):
    """Weights, tolerances and iteration caps for one MMC run"""

    model_config = SettingsConfigDict(env_prefix='MMC_', extra='forbid')

    default_alpha: float = Field(default=0.1, ge=0, description="View weight alpha_i^k")
    default_beta: float = Field(default=1.0, ge=0, description="Source-pair weight beta^(i,j)")
    alpha_overrides: Dict[str, float] = Field(default_factory=dict, description="'k:i' -> alpha")
    beta_overrides: Dict[str, float] = Field(default_factory=dict, description="'i:j' -> beta")
    inner_tol: float = Field(default=1e-6, gt=0)
    outer_tol: float = Field(default=1e-4, gt=0)
    max_inner: int = Field(default=100, ge=1)
    max_outer: int = Field(default=50, ge=1)
    seed: int = 0
    row_normalize: bool = True
    orthogonal_mappings: bool = Field(
        default=True, description="Re-orthogonalize the inferred mapping block after every outer update"
    )
    restarts: int = Field(default=20, ge=1, description="k-means restarts for the final labels")
    nmi_runs: int = Field(default=20, ge=1, description="Single-restart runs for the mean-NMI protocol")
    kmeans_max_iter: int = Field(default=300, ge=1)
    n_jobs: int = Field(default=1, ge=1, description="Threads for view updates and k-means restarts")

    @field_validator('alpha_overrides', 'beta_overrides')
    @classmethod
    def validate_overrides(cls, v: Dict[str, float]) -> Dict[str, float]:
        for key, weight in v.items():
            _parse_key(key)
            if not weight >= 0:
                raise ValueError(f"Weight for {key!r} must be finite and non-negative")
        return v

    def alpha(self, source: int, view: int) -> float:
        """Weight of view `view` in source `source`"""
        for key, weight in self.alpha_overrides.items():
            if _parse_key(key) == (source, view):
                return weight
        return self.default_alpha

    def beta(self, source_a: int, source_b: int) -> float:
        """Penalty weight between two sources, symmetric in its arguments"""
        wanted = {source_a, source_b}
        for key, weight in self.beta_overrides.items():
            if set(_parse_key(key)) == wanted:
                return weight
        return self.default_beta


def load_config(path: Optional[Union[str, Path]] = None, **overrides: Any) -> MmcConfig:
    """Build a config from an optional YAML/JSON file plus explicit overrides"""
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                if path.suffix in ['.yaml', '.yml']:
                    data = yaml.safe_load(f) or {}
                else:
                    data = json.load(f)
        except (yaml.YAMLError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot parse config file {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must hold a mapping")

    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return MmcConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}")
