from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union
import logging

import yaml
from pydantic import BaseModel, Field, ConfigDict, ValidationError, field_validator, model_validator

from app.config import get_settings
from app.core.errors import ConfigurationError
from app.core.models.selection import ArgmaxMode, HillClimbConfig
from app.core.models.simulation import SimConfig
from app.core.models.template import ModelKind, TemplateSpec

logger = logging.getLogger(__name__)

SWEEP_PARAMETERS = ("alpha2", "N", "alphac")


class TemplateSection(BaseModel):
    """Template section of an experiment file."""
    model_config = ConfigDict(extra="forbid")

    widgets: List[int] = Field(..., min_length=1, description="Content alternatives per widget")
    context: List[int] = Field(default_factory=list, description="Values per context dimension")


class EnvironmentSection(BaseModel):
    """Simulated environment: interaction amplitudes and root seed."""
    model_config = ConfigDict(extra="forbid")

    alpha1: float = Field(default=1.0, ge=0)
    alpha2: float = Field(default=1.0, ge=0)
    alphac: float = Field(default=0.0, ge=0)
    seed: int = Field(default=0, ge=0)


class RunSection(BaseModel):
    """Bandit run protocol."""
    model_config = ConfigDict(extra="forbid")

    T: int = Field(default=250_000, ge=0)
    batch_period: int = Field(default=1000, gt=0)
    repetitions: int = Field(default=15, gt=0)
    algorithms: List[ModelKind] = Field(
        default_factory=lambda: [ModelKind.MVT1, ModelKind.MVT2, ModelKind.ND_MAB])
    argmax_mode: Union[ArgmaxMode, Dict[ModelKind, ArgmaxMode], None] = Field(
        default=None, description="One mode for every algorithm or a mode per algorithm")
    restarts: int = Field(default=5, ge=1, description="Hill-climb restarts S")
    max_steps: Optional[int] = Field(
        default=None, ge=1, description="Hill-climb widget steps K; 6 per widget when omitted")
    early_stop: bool = True
    window: int = Field(default_factory=lambda: get_settings().LOCAL_REGRET_WINDOW, gt=0)


class StudySection(BaseModel):
    """Grid of the hill-climb study run on a trained model."""
    model_config = ConfigDict(extra="forbid")

    algorithm: ModelKind = ModelKind.MVT2
    max_steps: List[int] = Field(default_factory=lambda: [1, 2, 3, 4, 6, 8, 10, 12, 15, 18])
    restarts: List[int] = Field(default_factory=lambda: [1])
    trials: int = Field(default=1000, ge=1)
    use_samples: bool = Field(
        default=False, description="Climb fresh posterior draws instead of posterior means")

    @field_validator('max_steps', 'restarts')
    @classmethod
    def check_grid(cls, v):
        if not v or any(x < 1 for x in v):
            raise ValueError("Grid values must be positive and the grid non-empty")
        return v


class OutputSection(BaseModel):
    """Where and what to emit."""
    model_config = ConfigDict(extra="forbid")

    directory: str = "runs/latest"
    experiment_id: str = "experiment"
    stride: int = Field(default=100, ge=1, description="Steps between emitted curve points")
    history: bool = Field(default=False, description="Write the per-step history of every run")
    histogram: Optional[int] = Field(
        default=None, ge=1, description="Bins of the expected-reward histogram, if emitted")
    snapshot: bool = Field(
        default=False, description="Save each algorithm's trained posterior of repetition 0")


class ExperimentFile(BaseModel):
    """Validated experiment document.

    Example YAML:

        template: {widgets: [8, 8, 8]}
        environment: {alpha1: 1, alpha2: 2, seed: 7}
        run: {T: 250000, repetitions: 15, algorithms: [MVT1, MVT2, ND_MAB]}
        output: {directory: runs/fig3}
    """
    model_config = ConfigDict(extra="forbid")

    template: TemplateSection
    environment: EnvironmentSection = Field(default_factory=EnvironmentSection)
    run: RunSection = Field(default_factory=RunSection)
    output: OutputSection = Field(default_factory=OutputSection)
    study: StudySection = Field(default_factory=StudySection)

    @model_validator(mode='after')
    def validate_simulation(self) -> 'ExperimentFile':
        # surfaces TemplateSpec and SimConfig invariants before any run
        try:
            self.to_sim_config()
        except ValidationError as e:
            raise ValueError("; ".join(err["msg"] for err in e.errors())) from e
        return self

    def spec(self) -> TemplateSpec:
        return TemplateSpec(widgets=self.template.widgets, context=self.template.context)

    def hill_climb_config(self) -> HillClimbConfig:
        d = len(self.template.widgets)
        return HillClimbConfig(
            restarts=self.run.restarts,
            max_steps=self.run.max_steps or 6 * d,
            early_stop=self.run.early_stop,
        )

    def argmax_modes(self) -> Dict[ModelKind, ArgmaxMode]:
        mode = self.run.argmax_mode
        if mode is None:
            return {}
        if isinstance(mode, ArgmaxMode):
            return {alg: mode for alg in self.run.algorithms if alg is not ModelKind.D_MABS}
        return dict(mode)

    def to_sim_config(self, seed: Optional[int] = None) -> SimConfig:
        return SimConfig(
            spec=self.spec(),
            alpha1=self.environment.alpha1,
            alpha2=self.environment.alpha2,
            alphac=self.environment.alphac,
            T=self.run.T,
            batch_period=self.run.batch_period,
            repetitions=self.run.repetitions,
            seed=self.environment.seed if seed is None else seed,
            algorithms=self.run.algorithms,
            argmax_modes=self.argmax_modes(),
            hill_climb=self.hill_climb_config(),
            window=self.run.window,
        )

    def with_value(self, parameter: str, value: float) -> 'ExperimentFile':
        """Copy with one swept parameter replaced; N sets every widget's cardinality."""
        data = self.model_dump()
        if parameter == "alpha2":
            data["environment"]["alpha2"] = float(value)
        elif parameter == "alphac":
            data["environment"]["alphac"] = float(value)
        elif parameter == "N":
            if float(value) != int(value) or int(value) < 1:
                raise ConfigurationError(f"N must be a positive integer, got {value}")
            data["template"]["widgets"] = [int(value)] * len(self.template.widgets)
        else:
            raise ConfigurationError(
                f"Cannot sweep {parameter!r}; choose one of {', '.join(SWEEP_PARAMETERS)}")
        return ExperimentFile.model_validate(data)


def _node_lines(node: yaml.Node, path: Tuple[Any, ...] = ()) -> Dict[Tuple[Any, ...], int]:
    """Map every key path of a composed YAML document to its 1-based line."""
    lines = {path: node.start_mark.line + 1}
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            child = path + (key.value,)
            lines.update(_node_lines(value, child))
            lines[child] = key.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            lines.update(_node_lines(value, path + (i,)))
    return lines


def _line_of(lines: Dict[Tuple[Any, ...], int], loc: Tuple[Any, ...]) -> Optional[int]:
    """Line of the deepest known prefix of a validation error location."""
    loc = tuple(str(p) if not isinstance(p, int) else p for p in loc)
    for end in range(len(loc), -1, -1):
        if loc[:end] in lines:
            return lines[loc[:end]]
    return None


def format_validation_error(exc: ValidationError, lines: Dict[Tuple[Any, ...], int], source: str) -> str:
    messages = []
    for err in exc.errors():
        # union branches add the member type to the location
        loc = tuple(p for p in err["loc"] if not (isinstance(p, str) and p.startswith(("function-", "union["))))
        line = _line_of(lines, loc)
        where = f"{source}:{line}" if line else source
        path = ".".join(str(p) for p in loc) or "<document>"
        messages.append(f"{where}: {path}: {err['msg']}")
    return "\n".join(messages)


def parse_experiment(text: str, source: str = "<config>") -> ExperimentFile:
    """Parse and validate an experiment document, raising ConfigurationError with line numbers."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"{source}: not valid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"{source}: expected a mapping with a 'template' section")
    try:
        return ExperimentFile.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(format_validation_error(e, _node_lines(node), source)) from e


def load_experiment(path: Union[str, Path]) -> ExperimentFile:
    """Read an experiment file; OSError propagates for the caller's I/O handling."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    experiment = parse_experiment(text, str(path))
    logger.info(f"Loaded experiment {path} ({len(experiment.template.widgets)} widgets)")
    return experiment
