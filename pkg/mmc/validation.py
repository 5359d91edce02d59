"""
MMC - Input Validation
Pydantic models for dataset descriptions, synthetic-data plans and sweeps
"""

import json
from enum import Enum
from pathlib import Path
from typing import List, Optional, Type, TypeVar, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import DataFormatError

SourceRef = Union[int, str]

ModelT = TypeVar('ModelT', bound=BaseModel)


class ViewKindName(str, Enum):
    """How a view file is read"""
    FEATURES = "features"
    SIMILARITY = "similarity"


class ViewSpec(BaseModel):
    """One view file of a source"""
    model_config = ConfigDict(extra='forbid')

    path: str = Field(..., min_length=1, description="Dense CSV matrix")
    kind: ViewKindName = Field(default=ViewKindName.FEATURES)
    name: Optional[str] = Field(default=None, max_length=100)


class SourceSpec(BaseModel):
    """One source: its views, optional labels and instance count"""
    model_config = ConfigDict(extra='forbid', populate_by_name=True)

    name: str = Field(..., min_length=1, max_length=100, pattern=r'^[A-Za-z0-9_.-]+$')
    views: List[ViewSpec] = Field(..., min_length=1)
    labels_path: Optional[str] = None
    n: Optional[int] = Field(default=None, ge=2, alias='n_k', description="Expected instance count")


class MappingSpec(BaseModel):
    """Known instance pairs between two sources"""
    model_config = ConfigDict(extra='forbid')

    source_a: SourceRef
    source_b: SourceRef
    pairs_path: str = Field(..., min_length=1, description="Tab-separated 0-based index pairs")


class DatasetSpec(BaseModel):
    """A multi-source multi-view dataset on disk"""
    model_config = ConfigDict(extra='forbid')

    sources: List[SourceSpec] = Field(..., min_length=1)
    mappings: List[MappingSpec] = Field(default_factory=list)
    cluster_counts: List[int] = Field(..., min_length=1)
    base_dir: Optional[str] = Field(default=None, exclude=True,
                                    description="Directory relative paths resolve against")

    @field_validator('cluster_counts')
    @classmethod
    def validate_cluster_counts(cls, v: List[int]) -> List[int]:
        if any(c < 1 for c in v):
            raise ValueError("cluster counts must be positive")
        return v

    @model_validator(mode='after')
    def validate_references(self) -> 'DatasetSpec':
        if len(self.cluster_counts) != len(self.sources):
            raise ValueError(
                f"{len(self.cluster_counts)} cluster counts for {len(self.sources)} sources"
            )
        names = [s.name for s in self.sources]
        if len(set(names)) != len(names):
            raise ValueError("source names must be unique")
        seen = set()
        for m in self.mappings:
            a, b = self.source_index(m.source_a), self.source_index(m.source_b)
            if a == b:
                raise ValueError(f"mapping links source {a} to itself")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"sources {key} have more than one mapping")
            seen.add(key)
        return self

    def source_index(self, ref: SourceRef) -> int:
        """Position of a source given by index or name"""
        if isinstance(ref, int):
            if not 0 <= ref < len(self.sources):
                raise ValueError(f"source index {ref} out of range")
            return ref
        for k, source in enumerate(self.sources):
            if source.name == ref:
                return k
        raise ValueError(f"unknown source {ref!r}")

    def resolve(self, path: str) -> Path:
        """Relative paths are taken against the spec file's directory"""
        p = Path(path)
        if p.is_absolute() or self.base_dir is None:
            return p
        return Path(self.base_dir) / p


class SynthSpec(BaseModel):
    """Plan for a planted-cluster multi-source problem"""
    model_config = ConfigDict(extra='forbid')

    n_sources: int = Field(default=2, ge=1, le=20)
    n_views: Union[int, List[int]] = Field(default=2, description="Views per source")
    n: int = Field(default=200, ge=2, description="Instances per source")
    n_clusters: int = Field(default=3, ge=1)
    dim: int = Field(default=10, ge=1, description="Feature dimension of every view")
    separation: float = Field(default=1.0, ge=0)
    noise: float = Field(default=1.0, ge=0)
    known_fraction: float = Field(default=0.6, ge=0, le=1,
                                  description="Share of the shared instances with a known pair")
    overlap_fraction: float = Field(default=1.0, ge=0, le=1,
                                    description="Share of instances present in every source")
    seed: int = 0

    @field_validator('n_views')
    @classmethod
    def validate_views(cls, v):
        counts = [v] if isinstance(v, int) else v
        if not counts or any(c < 1 for c in counts):
            raise ValueError("every source needs at least one view")
        return v

    @model_validator(mode='after')
    def validate_plan(self) -> 'SynthSpec':
        if self.n_clusters > self.n:
            raise ValueError(f"cannot plant {self.n_clusters} clusters in {self.n} instances")
        if isinstance(self.n_views, list) and len(self.n_views) != self.n_sources:
            raise ValueError(f"{len(self.n_views)} view counts for {self.n_sources} sources")
        return self

    def views_of(self, k: int) -> int:
        return self.n_views if isinstance(self.n_views, int) else self.n_views[k]

    @property
    def n_shared(self) -> int:
        return int(self.overlap_fraction * self.n + 1e-9)


class SweepParam(str, Enum):
    """Quantities a sweep may vary"""
    ALPHA = "alpha"
    BETA = "beta"
    KNOWN_FRACTION = "known_fraction"
    N_CLUSTERS = "n_clusters"


class SweepRequest(BaseModel):
    """One parameter and the values to run it at, in output order"""
    model_config = ConfigDict(extra='forbid')

    param: SweepParam
    values: List[float] = Field(..., min_length=1)

    @model_validator(mode='after')
    def validate_values(self) -> 'SweepRequest':
        if self.param in (SweepParam.ALPHA, SweepParam.BETA) and any(v < 0 for v in self.values):
            raise ValueError(f"{self.param.value} values must be non-negative")
        if self.param == SweepParam.KNOWN_FRACTION and any(not 0 <= v <= 1 for v in self.values):
            raise ValueError("known_fraction values must lie in [0, 1]")
        if self.param == SweepParam.N_CLUSTERS and any(v < 1 or v != int(v) for v in self.values):
            raise ValueError("n_clusters values must be positive integers")
        return self


def read_document(path: Union[str, Path]) -> dict:
    """Parse a JSON or YAML document into a mapping"""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"File not found: {path}", path=str(path))
    try:
        with open(path, 'r', encoding='utf-8') as f:
            if path.suffix in ['.yaml', '.yml']:
                data = yaml.safe_load(f)
            else:
                data = json.load(f)
    except (yaml.YAMLError, json.JSONDecodeError, UnicodeDecodeError) as e:
        raise DataFormatError(f"Cannot parse {path}: {e}", path=str(path))
    if not isinstance(data, dict):
        raise DataFormatError("Document must hold a mapping", path=str(path))
    return data


def load_model(path: Union[str, Path], model: Type[ModelT]) -> ModelT:
    """Read and validate a document; pydantic.ValidationError propagates"""
    return model.model_validate(read_document(path))


def load_dataset_spec(path: Union[str, Path]) -> DatasetSpec:
    spec = load_model(path, DatasetSpec)
    spec.base_dir = str(Path(path).resolve().parent)
    return spec
