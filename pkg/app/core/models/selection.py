from enum import Enum
from typing import List, Optional
from pydantic import BaseModel, Field, ConfigDict

from .template import Layout


class ArgmaxMode(str, Enum):
    """How the argmax over layouts is computed for a weight sample."""
    EXHAUSTIVE = "exhaustive"
    HILL_CLIMB = "hill_climb"


class HillClimbConfig(BaseModel):
    """Random-restart hill climbing parameters.

    `max_steps` counts single-widget optimization steps, not full sweeps.
    """
    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "example": {"restarts": 5, "max_steps": 18, "early_stop": True}
        }
    )

    restarts: int = Field(default=5, ge=1, description="Random restarts S")
    max_steps: int = Field(default=18, ge=1, description="Widget steps K per restart")
    early_stop: bool = Field(
        default=True, description="Stop a restart once a full pass changes nothing")

    @classmethod
    def for_widgets(cls, d: int, restarts: int = 5, early_stop: bool = True) -> 'HillClimbConfig':
        """Default step budget of six steps per widget."""
        return cls(restarts=restarts, max_steps=6 * d, early_stop=early_stop)


class SelectionTrace(BaseModel):
    """What a single layout selection did.

    Two evaluation counts are kept. `evaluations` counts every candidate scored
    in every widget step, the incumbent included, plus one initial score per
    restart, and is bounded by S*K*max(N_i) + S. `distinct_evaluations` does not
    re-count the incumbent, giving 1 + sum(N_i - 1) per restart.
    """
    model_config = ConfigDict(extra="forbid")

    layout: Layout
    score: float
    evaluations: int = Field(..., ge=0)
    distinct_evaluations: int = Field(..., ge=0)
    steps_to_converge: List[int] = Field(default_factory=list)
    sweeps: List[int] = Field(default_factory=list)
    converged: List[bool] = Field(default_factory=list)
    reached_global: Optional[bool] = None

    def csv_row(self) -> dict:
        """Flat row: layout, score, evaluations, steps, reached_global."""
        return {
            "layout": "-".join(str(a) for a in self.layout),
            "score": self.score,
            "evaluations": self.evaluations,
            "distinct_evaluations": self.distinct_evaluations,
            "steps": ";".join(str(s) for s in self.steps_to_converge),
            "reached_global": "" if self.reached_global is None else int(self.reached_global),
        }
