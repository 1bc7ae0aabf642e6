"""`lrt`: likelihood-ratio test of interaction order on an observation log."""
import argparse
import logging

import pandas as pd

from app.core.errors import ConfigurationError
from app.core.schemas.observation_log import read_observation_log
from app.core.services.factory import get_analysis_service
from .common import EXIT_OK, model_kind, output_dir, template_options, template_from, write_csv

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "lrt",
        help="Test whether a richer model explains a log better than a nested one",
        description="Observation-log columns: t, widget_1..widget_D, ctx_1..ctx_L, reward (0 or 1).",
    )
    parser.add_argument("--data", required=True, help="Observation-log CSV")
    parser.add_argument("--models", default="MVT1,MVT2",
                        help="Restricted and full model, e.g. MVT1,MVT2 or MVT2,MVT3")
    parser.add_argument("--passes", type=int, default=None, help="Sequential passes that warm-start the likelihood fit")
    parser.add_argument("--config", default=None, help="Experiment file to take the template from")
    parser.add_argument("--out-dir", default=None, help="Directory for lrt.csv")
    parser.add_argument("--format", choices=["csv"], default="csv")
    template_options(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    names = [n.strip() for n in args.models.split(",")]
    if len(names) != 2:
        raise ConfigurationError(f"--models needs exactly two models, got {args.models!r}")
    restricted, full = (model_kind(n) for n in names)
    spec = template_from(args)
    plays = read_observation_log(args.data, spec)

    result = get_analysis_service().lrt_models(restricted, full, spec, plays, args.passes)
    frame = pd.DataFrame([{
        "comparison": result.comparison,
        "statistic": result.statistic,
        "df": result.df,
        "p_value": result.p_value,
    }])
    write_csv(frame, output_dir(args) / "lrt.csv")
    print(frame.to_string(index=False))
    return EXIT_OK
