from typing import List, Literal, Optional
import numpy as np
from pydantic import BaseModel, Field, ConfigDict, field_validator, model_validator

from .template import ModelKind, TemplateSpec

PRIOR_MEAN = 0.0
PRIOR_VARIANCE = 1.0


class FeatureVector(BaseModel):
    """Sparse binary feature vector: the set of active weight indices."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    active_indices: np.ndarray
    dimension: int = Field(..., gt=0, description="Total weight count M")

    @field_validator('active_indices', mode='before')
    @classmethod
    def as_index_array(cls, v):
        arr = np.array(v, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("Active indices must be one-dimensional")
        if arr.size > 1 and not np.all(np.diff(arr) > 0):
            raise ValueError("Active indices must be strictly increasing")
        arr.flags.writeable = False
        return arr

    @model_validator(mode='after')
    def check_bounds(self) -> 'FeatureVector':
        if self.active_indices.size and (
                self.active_indices[0] < 0 or self.active_indices[-1] >= self.dimension):
            raise ValueError(f"Active indices must lie in 0..{self.dimension - 1}")
        return self

    def __len__(self) -> int:
        return int(self.active_indices.size)


class Observation(BaseModel):
    """One binary-reward observation of a feature vector."""
    model_config = ConfigDict(frozen=True)

    features: FeatureVector
    reward: Literal[1, -1]


class WeightSample(BaseModel):
    """A single posterior draw of all weights."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray

    @property
    def dimension(self) -> int:
        return int(self.values.size)


class GaussianPosterior(BaseModel):
    """Independent Gaussian estimate for each weight of one model.

    Snapshots are immutable; updates produce new instances.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: ModelKind
    spec: TemplateSpec
    widget: Optional[int] = Field(
        default=None, description="Widget index for D_MABS per-widget models")
    means: np.ndarray
    variances: np.ndarray

    @field_validator('means', 'variances', mode='before')
    @classmethod
    def as_float_array(cls, v):
        arr = np.array(v, dtype=np.float64)
        arr.flags.writeable = False
        return arr

    @model_validator(mode='after')
    def check_moments(self) -> 'GaussianPosterior':
        if self.means.shape != self.variances.shape or self.means.ndim != 1:
            raise ValueError("Means and variances must be vectors of equal length")
        if not np.all(np.isfinite(self.means)):
            raise ValueError("Means must be finite")
        if not np.all(self.variances > 0):
            raise ValueError("Variances must be strictly positive")
        return self

    @property
    def dimension(self) -> int:
        return int(self.means.size)

    @classmethod
    def prior(
        cls,
        kind: ModelKind,
        spec: TemplateSpec,
        dimension: int,
        widget: Optional[int] = None
    ) -> 'GaussianPosterior':
        return cls(
            kind=kind,
            spec=spec,
            widget=widget,
            means=np.full(dimension, PRIOR_MEAN),
            variances=np.full(dimension, PRIOR_VARIANCE),
        )

    def mean_sample(self) -> WeightSample:
        """Point weights at the posterior means."""
        return WeightSample(values=self.means)


class PosteriorSnapshot(BaseModel):
    """Versioned on-disk record of a posterior.

    Floats are stored as `float.hex` strings so a save/load round trip is bit-exact.
    """
    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "version": 1,
                "kind": "MVT2",
                "widget": None,
                "spec": {"widgets": [2, 3], "context": []},
                "means": ["0x0.0p+0"],
                "variances": ["0x1.0000000000000p+0"]
            }
        }
    )

    version: int = Field(..., ge=1)
    kind: ModelKind
    widget: Optional[int] = None
    spec: TemplateSpec
    means: List[str]
    variances: List[str]

    @classmethod
    def from_posterior(cls, posterior: GaussianPosterior, version: int) -> 'PosteriorSnapshot':
        return cls(
            version=version,
            kind=posterior.kind,
            widget=posterior.widget,
            spec=posterior.spec,
            means=[float(m).hex() for m in posterior.means],
            variances=[float(s).hex() for s in posterior.variances],
        )

    def to_posterior(self) -> GaussianPosterior:
        return GaussianPosterior(
            kind=self.kind,
            spec=self.spec,
            widget=self.widget,
            means=[float.fromhex(m) for m in self.means],
            variances=[float.fromhex(s) for s in self.variances],
        )
