"""Observation-log CSV: t, widget_1..widget_D, ctx_1..ctx_L, reward (0 or 1)."""
from pathlib import Path
from typing import List, Sequence, Union
import io
import logging

import numpy as np
import pandas as pd

from app.core.errors import ObservationLogError
from app.core.models.analysis import LoggedPlay
from app.core.models.template import TemplateSpec

logger = logging.getLogger(__name__)

MAX_REPORTED_ROWS = 20


def log_columns(spec: TemplateSpec) -> List[str]:
    return (["t"] + [f"widget_{i + 1}" for i in range(spec.D)]
            + [f"ctx_{l + 1}" for l in range(spec.L)] + ["reward"])


def _bad_rows(mask: np.ndarray) -> List[int]:
    # data rows are numbered from 1, the header excluded
    return [int(i) + 1 for i in np.flatnonzero(mask)]


def parse_observation_log(frame: pd.DataFrame, spec: TemplateSpec, source: str = "<log>") -> List[LoggedPlay]:
    """Validate a log frame against a template and convert it to plays.

    Extra columns are ignored. Every malformed row is reported, not just the first.
    """
    columns = log_columns(spec)
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ObservationLogError(f"{source}: missing columns {', '.join(missing)}")
    values = frame[columns].apply(pd.to_numeric, errors="coerce")
    bad = values.isna().any(axis=1).to_numpy()
    numeric = values.fillna(0).to_numpy()
    bad |= np.any(numeric != np.round(numeric), axis=1)
    ints = numeric.astype(np.int64)

    for i, n in enumerate(spec.widgets):
        col = ints[:, 1 + i]
        bad |= (col < 1) | (col > n)
    for l, g in enumerate(spec.context):
        col = ints[:, 1 + spec.D + l]
        bad |= (col < 1) | (col > g)
    bad |= ~np.isin(ints[:, -1], (0, 1))

    if bad.any():
        rows = _bad_rows(bad)
        shown = ", ".join(str(r) for r in rows[:MAX_REPORTED_ROWS])
        more = f" and {len(rows) - MAX_REPORTED_ROWS} more" if len(rows) > MAX_REPORTED_ROWS else ""
        raise ObservationLogError(f"{source}: malformed rows {shown}{more}", rows=rows)

    plays = [
        LoggedPlay(
            layout=tuple(int(a) for a in row[1:1 + spec.D]),
            context=tuple(int(x) for x in row[1 + spec.D:1 + spec.D + spec.L]),
            reward=1 if row[-1] == 1 else -1,
        )
        for row in ints
    ]
    logger.info(f"Read {len(plays)} observations from {source}")
    return plays


def read_observation_log(path: Union[str, Path], spec: TemplateSpec) -> List[LoggedPlay]:
    """Read a log file; lines starting with '#' are comments. OSError propagates."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        return []
    try:
        frame = pd.read_csv(io.StringIO(text), comment="#", dtype=str, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ObservationLogError(f"{path}: unreadable CSV: {e}") from e
    return parse_observation_log(frame, spec, str(path))


def plays_frame(plays: Sequence[LoggedPlay], spec: TemplateSpec) -> pd.DataFrame:
    """Plays as an observation-log frame, t numbered from 1."""
    rows = [
        [t + 1, *p.layout, *p.context, 1 if p.reward > 0 else 0]
        for t, p in enumerate(plays)
    ]
    return pd.DataFrame(rows, columns=log_columns(spec), dtype=np.int64)
