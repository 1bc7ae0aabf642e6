from typing import Literal, Optional, Tuple
import numpy as np
from pydantic import BaseModel, Field, ConfigDict


class LrtResult(BaseModel):
    """Likelihood-ratio test of a restricted model against a nesting one."""
    model_config = ConfigDict(frozen=True)

    comparison: str = ""
    statistic: float = Field(..., ge=0)
    df: int = Field(..., gt=0)
    p_value: float = Field(..., ge=0, le=1)
    ll_restricted: Optional[float] = None
    ll_full: Optional[float] = None


class HillClimbStudy(BaseModel):
    """Quality of hill climbing on a trained model at one (K, S) grid point."""
    model_config = ConfigDict(frozen=True)

    max_steps: int = Field(..., ge=1)
    restarts: int = Field(..., ge=1)
    trials: int = Field(..., ge=0)
    mean_steps: float
    sd_steps: float
    mean_sweeps: float
    p_global: float = Field(..., ge=0, le=1)
    mean_regret_random: float
    mean_regret_converged: float
    mean_evaluations: float
    mean_distinct_evaluations: float


class LoggedPlay(BaseModel):
    """One row of an observation log: what was shown, in which context, and the outcome."""
    model_config = ConfigDict(frozen=True)

    layout: Tuple[int, ...]
    context: Tuple[int, ...] = ()
    reward: Literal[1, -1]


class LayoutRewardSummary(BaseModel):
    """Expected rewards of all layouts relative to the median and worst layout."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    normalized: np.ndarray
    median: float
    best: float
    worst: float
    lift_over_median: float
    lift_over_worst: float
