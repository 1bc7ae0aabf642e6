"""`snapshot save|load`: offline batch training and persistence of posteriors."""
import argparse
import logging

from app.core.errors import ConfigurationError
from app.core.models.posterior import GaussianPosterior
from app.core.models.template import ModelKind
from app.core.schemas.observation_log import read_observation_log
from app.core.services.factory import get_analysis_service, get_snapshot_store
from app.core.services.features import get_encoder
from .common import EXIT_OK, model_kind, template_options, template_from

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("snapshot", help="Save or inspect posterior snapshots")
    actions = parser.add_subparsers(dest="action", required=True)

    save = actions.add_parser(
        "save",
        help="Train on an observation log and save the posterior",
        description="Starts from the prior, or continues the model in --from with a new log.",
    )
    save.add_argument("path", help="Snapshot file to write")
    save.add_argument("--kind", type=model_kind, default=None, help="Model family (new models only)")
    save.add_argument("--log", default=None, help="Observation-log CSV to fold in")
    save.add_argument("--from", dest="start", default=None, help="Existing snapshot to continue")
    save.add_argument("--passes", type=int, default=1, help="Passes over the log")
    save.add_argument("--config", default=None, help="Experiment file to take the template from")
    template_options(save)
    save.set_defaults(handler=run_save)

    load = actions.add_parser("load", help="Validate a snapshot and print its summary")
    load.add_argument("path", help="Snapshot file to read")
    load.set_defaults(handler=run_load)


def run_save(args: argparse.Namespace) -> int:
    store = get_snapshot_store()
    if args.start:
        start = store.load(args.start)
        kind, spec = start[0].kind, start[0].spec
        if args.kind is not None and args.kind is not kind:
            raise ConfigurationError(f"--kind {args.kind.value} differs from the {kind.value} snapshot")
    else:
        if args.kind is None:
            raise ConfigurationError("A new snapshot needs --kind")
        kind, spec = args.kind, template_from(args)
        widgets = range(spec.D) if kind is ModelKind.D_MABS else [None]
        start = [
            GaussianPosterior.prior(kind, spec, get_encoder(kind, spec, w).dimension, widget=w)
            for w in widgets
        ]

    plays = read_observation_log(args.log, spec) if args.log else []
    analysis = get_analysis_service()
    posteriors = [
        analysis.fit(kind, spec, plays, passes=args.passes, start=post, widget=post.widget)
        for post in start
    ]
    store.save(args.path, posteriors)
    print(f"{kind.value} snapshot with {sum(p.dimension for p in posteriors)} weights "
          f"trained on {len(plays)} observations -> {args.path}")
    return EXIT_OK


def run_load(args: argparse.Namespace) -> int:
    posteriors = get_snapshot_store().load(args.path)
    first = posteriors[0]
    print(f"kind={first.kind.value} widgets={list(first.spec.widgets)} "
          f"context={list(first.spec.context)} models={len(posteriors)} "
          f"weights={sum(p.dimension for p in posteriors)}")
    return EXIT_OK
