"""Versioned posterior snapshots on disk."""
from pathlib import Path
from typing import List, Optional, Sequence, Union
import json
import logging
import os
import tempfile

from pydantic import BaseModel, Field, ConfigDict, ValidationError

from app.config import get_settings
from app.core.errors import ConfigurationError, SnapshotCorruptError, SnapshotVersionError
from app.core.models.posterior import GaussianPosterior, PosteriorSnapshot
from app.core.models.template import ModelKind
from .features import parameter_count

logger = logging.getLogger(__name__)


class SnapshotFile(BaseModel):
    """All posteriors of one model: a single one, or one per widget for D_MABS."""
    model_config = ConfigDict(extra="forbid")

    version: int = Field(..., ge=1)
    models: List[PosteriorSnapshot] = Field(..., min_length=1)


def _default_mode() -> int:
    """0o666 filtered through the process umask, the mode `open()` would create with."""
    mask = os.umask(0)
    os.umask(mask)
    return 0o666 & ~mask


def write_atomic(path: Union[str, Path], text: str) -> None:
    """Write through a temporary file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        # mkstemp creates 0600 files
        os.chmod(tmp, _default_mode())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class SnapshotStore:
    """Saves and loads posteriors bit-exactly."""

    def __init__(self, version: Optional[int] = None):
        self.version = version or get_settings().SNAPSHOT_VERSION

    def dumps(self, posteriors: Sequence[GaussianPosterior]) -> str:
        if not posteriors:
            raise ConfigurationError("Nothing to snapshot")
        kinds = {p.kind for p in posteriors}
        if len(kinds) != 1 or (len(posteriors) > 1 and ModelKind.D_MABS not in kinds):
            raise ConfigurationError("A snapshot holds one model or the per-widget models of D_MABS")
        if any(p.spec != posteriors[0].spec for p in posteriors):
            raise ConfigurationError("Snapshot models must share one template")
        bundle = SnapshotFile(
            version=self.version,
            models=[PosteriorSnapshot.from_posterior(p, self.version) for p in posteriors],
        )
        return bundle.model_dump_json(indent=1)

    def loads(self, text: str, source: str = "<snapshot>") -> List[GaussianPosterior]:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise SnapshotCorruptError(f"{source}: not a snapshot: {e}") from e
        version = raw.get("version") if isinstance(raw, dict) else None
        if not isinstance(version, int):
            raise SnapshotCorruptError(f"{source}: missing snapshot version")
        if version != self.version:
            raise SnapshotVersionError(
                f"{source}: snapshot version {version}, this build reads version {self.version}")
        try:
            bundle = SnapshotFile.model_validate(raw)
            posteriors = [m.to_posterior() for m in bundle.models]
            for p in posteriors:
                expected = parameter_count(p.kind, p.spec, p.widget)
                if p.dimension != expected:
                    raise ValueError(
                        f"{p.kind.value} model has {p.dimension} weights, template needs {expected}")
        except (ValidationError, ValueError) as e:
            raise SnapshotCorruptError(f"{source}: {e}") from e
        kind = posteriors[0].kind
        if kind is ModelKind.D_MABS:
            spec = posteriors[0].spec
            if any(p.spec != spec for p in posteriors[1:]):
                raise SnapshotCorruptError(f"{source}: D_MABS widget models disagree on the template")
            if [p.widget for p in posteriors] != list(range(spec.D)):
                raise SnapshotCorruptError(f"{source}: D_MABS snapshot needs one model per widget, in order")
        elif len(posteriors) != 1:
            raise SnapshotCorruptError(f"{source}: {kind.value} snapshot holds {len(posteriors)} models")
        return posteriors

    def save(self, path: Union[str, Path], posteriors: Sequence[GaussianPosterior]) -> None:
        write_atomic(path, self.dumps(posteriors))
        logger.info(f"Saved {posteriors[0].kind.value} snapshot to {path}")

    def load(self, path: Union[str, Path]) -> List[GaussianPosterior]:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError as e:
            raise SnapshotCorruptError(f"{path}: not a text snapshot") from e
        return self.loads(text, str(path))
