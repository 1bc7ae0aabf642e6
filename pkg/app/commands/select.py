"""`select`: one Thompson-sampling layout choice against a snapshot."""
import argparse
import json
import logging

from app.core.models.selection import ArgmaxMode, HillClimbConfig
from app.core.models.template import ModelKind
from app.core.services.factory import get_policy, get_snapshot_store
from app.core.services.seeding import derive_rng
from .common import EXIT_OK, int_list

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("select", help="Choose a layout for one page view")
    parser.add_argument("snapshot", help="Snapshot file")
    parser.add_argument("--context", type=int_list, default=None, help="Context values, e.g. 2,1")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--argmax", type=ArgmaxMode, choices=list(ArgmaxMode), default=None,
                        help="Default: exhaustive up to EXHAUSTIVE_CAP layouts, hill_climb beyond")
    parser.add_argument("--restarts", type=int, default=5, help="Hill-climb restarts S")
    parser.add_argument("--max-steps", type=int, default=None, help="Hill-climb widget steps K")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    posteriors = get_snapshot_store().load(args.snapshot)
    post = posteriors[0]
    policy = get_policy()
    rng = derive_rng(args.seed, "select")

    if post.kind is ModelKind.D_MABS:
        layout = policy.dmabs_select(posteriors, post.spec, rng)
        print(json.dumps({"layout": list(layout)}))
        return EXIT_OK

    mode = args.argmax or policy.default_argmax(post.spec)
    cfg = HillClimbConfig(
        restarts=args.restarts,
        max_steps=args.max_steps or 6 * post.spec.D,
    )
    layout, trace = policy.thompson_select(post, args.context, mode, rng, cfg)
    print(json.dumps({"layout": list(layout), "trace": trace.csv_row()}))
    return EXIT_OK
