from .features import FeatureEncoder, get_encoder, parameter_count, active_count, enumerate_layouts
from .blip import ProbitRegression
from .policy import LayoutPolicy
from .simulator import BanditSimulator, Environment
from .analysis import AnalysisService
from .snapshots import SnapshotStore

__all__ = [
    'FeatureEncoder',
    'get_encoder',
    'parameter_count',
    'active_count',
    'enumerate_layouts',
    'ProbitRegression',
    'LayoutPolicy',
    'BanditSimulator',
    'Environment',
    'AnalysisService',
    'SnapshotStore'
]
