"""Service factory functions for dependency injection."""
from functools import lru_cache
from app.core.services.blip import ProbitRegression
from app.core.services.policy import LayoutPolicy
from app.core.services.simulator import BanditSimulator
from app.core.services.analysis import AnalysisService
from app.core.services.snapshots import SnapshotStore


@lru_cache()
def get_regression() -> ProbitRegression:
    """Create the shared probit regression."""
    return ProbitRegression()


@lru_cache()
def get_policy() -> LayoutPolicy:
    return LayoutPolicy(get_regression())


@lru_cache()
def get_simulator() -> BanditSimulator:
    """Create a BanditSimulator wired to the shared regression and policy."""
    return BanditSimulator(get_regression(), get_policy())


@lru_cache()
def get_analysis_service() -> AnalysisService:
    return AnalysisService(get_regression(), get_policy())


@lru_cache()
def get_snapshot_store() -> SnapshotStore:
    return SnapshotStore()
