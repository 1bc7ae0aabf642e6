from typing import Dict, List, Optional
import numpy as np
from pydantic import BaseModel, Field, ConfigDict, model_validator

from .selection import ArgmaxMode, HillClimbConfig
from .template import ModelKind, TemplateSpec


class SimConfig(BaseModel):
    """Simulated environment plus the bandit run protocol."""
    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "example": {
                "spec": {"widgets": [8, 8, 8], "context": []},
                "alpha1": 1.0,
                "alpha2": 2.0,
                "alphac": 0.0,
                "T": 250000,
                "batch_period": 1000,
                "repetitions": 15,
                "seed": 7,
                "algorithms": ["MVT1", "MVT2", "ND_MAB"]
            }
        }
    )

    spec: TemplateSpec
    alpha1: float = Field(default=1.0, ge=0)
    alpha2: float = Field(default=1.0, ge=0)
    alphac: float = Field(default=0.0, ge=0)
    T: int = Field(default=250_000, ge=0, description="Horizon")
    batch_period: int = Field(default=1000, gt=0)
    repetitions: int = Field(default=15, gt=0)
    seed: int = Field(default=0, ge=0)
    algorithms: List[ModelKind] = Field(
        default_factory=lambda: [ModelKind.MVT1, ModelKind.MVT2, ModelKind.ND_MAB])
    argmax_modes: Dict[ModelKind, ArgmaxMode] = Field(default_factory=dict)
    hill_climb: Optional[HillClimbConfig] = None
    window: int = Field(default=2500, gt=0, description="Local regret window")

    @model_validator(mode='after')
    def check_context(self) -> 'SimConfig':
        if self.alphac > 0 and self.spec.L < 1:
            raise ValueError("alphac > 0 requires at least one context dimension")
        if ModelKind.MVT2C in self.algorithms and self.spec.L < 1:
            raise ValueError("MVT2c requires at least one context dimension")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ValueError("Algorithms must not repeat")
        return self

    def argmax_mode(self, kind: ModelKind) -> ArgmaxMode:
        """Configured mode; multivariate models climb, the layout-id bandit enumerates."""
        if kind in self.argmax_modes:
            return self.argmax_modes[kind]
        return ArgmaxMode.HILL_CLIMB if kind.is_multivariate else ArgmaxMode.EXHAUSTIVE

    def hill_climb_config(self) -> HillClimbConfig:
        return self.hill_climb or HillClimbConfig.for_widgets(self.spec.D)


class SimulationTruth(BaseModel):
    """Hidden ground-truth weights defining a reward environment."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    spec: TemplateSpec
    weights: np.ndarray
    beta: float = Field(..., gt=0)
    alpha1: float
    alpha2: float
    alphac: float


class History(BaseModel):
    """Per-step record of a bandit run, one row per step t = 1..T."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    contexts: np.ndarray
    layouts: np.ndarray
    rewards: np.ndarray
    expected: np.ndarray
    optimal: np.ndarray

    @model_validator(mode='after')
    def check_lengths(self) -> 'History':
        n = len(self.rewards)
        for name in ("contexts", "layouts", "expected", "optimal"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"History column {name} has the wrong length")
        return self

    @classmethod
    def empty(cls, d: int, l: int) -> 'History':
        return cls(
            contexts=np.zeros((0, l), dtype=np.int64),
            layouts=np.zeros((0, d), dtype=np.int64),
            rewards=np.zeros(0, dtype=np.int64),
            expected=np.zeros(0),
            optimal=np.zeros(0),
        )

    def __len__(self) -> int:
        return int(self.rewards.size)

    @property
    def reward_values(self) -> np.ndarray:
        """Rewards on the probability scale: +1 -> 1, -1 -> 0."""
        return (self.rewards > 0).astype(np.float64)

    @property
    def gaps(self) -> np.ndarray:
        """Expected-reward gap of the chosen arm to the optimal arm."""
        return self.optimal - self.expected


class RegretCurve(BaseModel):
    """Local and running regret of one repetition sampled along the horizon."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    algorithm: ModelKind
    repetition: int
    t: np.ndarray
    local_regret: np.ndarray
    regret: np.ndarray
    final_local_regret: float


class RegretSummary(BaseModel):
    """Mean and standard error of the final local regret across repetitions."""
    model_config = ConfigDict(frozen=True)

    algorithm: ModelKind
    swept_value: Optional[float] = None
    mean_regret: float
    stderr: float
    repetitions: int


class ExperimentResult(BaseModel):
    """Curves and summaries of one experiment."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    curves: List[RegretCurve] = Field(default_factory=list)
    summaries: List[RegretSummary] = Field(default_factory=list)

    def final_regrets(self, algorithm: ModelKind) -> List[float]:
        return [c.final_local_regret for c in self.curves if c.algorithm is algorithm]

    def summary(self, algorithm: ModelKind) -> RegretSummary:
        for s in self.summaries:
            if s.algorithm is algorithm:
                return s
        raise KeyError(algorithm)
