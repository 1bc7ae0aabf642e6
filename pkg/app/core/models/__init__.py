from .template import Context, Layout, ModelKind, TemplateSpec
from .weights import (
    Bias, FirstOrder, Pairwise, ThirdOrder, ContextMain, ContentContext, LayoutId,
    WeightDescriptor,
)
from .posterior import (
    FeatureVector, Observation, WeightSample, GaussianPosterior, PosteriorSnapshot,
)
from .selection import ArgmaxMode, HillClimbConfig, SelectionTrace
from .simulation import (
    SimConfig, SimulationTruth, History, RegretCurve, RegretSummary, ExperimentResult,
)
from .analysis import LrtResult, HillClimbStudy, LoggedPlay, LayoutRewardSummary

__all__ = [
    'Context',
    'Layout',
    'ModelKind',
    'TemplateSpec',
    'Bias',
    'FirstOrder',
    'Pairwise',
    'ThirdOrder',
    'ContextMain',
    'ContentContext',
    'LayoutId',
    'WeightDescriptor',
    'FeatureVector',
    'Observation',
    'WeightSample',
    'GaussianPosterior',
    'PosteriorSnapshot',
    'ArgmaxMode',
    'HillClimbConfig',
    'SelectionTrace',
    'SimConfig',
    'SimulationTruth',
    'History',
    'RegretCurve',
    'RegretSummary',
    'ExperimentResult',
    'LrtResult',
    'HillClimbStudy',
    'LoggedPlay',
    'LayoutRewardSummary',
]
