"""`sweep`: one experiment per value of alpha2, N or alphac."""
import argparse
import logging

import pandas as pd

from app.core.schemas.experiment import SWEEP_PARAMETERS
from app.core.services.factory import get_simulator
from .common import EXIT_OK, float_list, jobs, load_config, output_dir, print_table, run_options, write_csv
from .simulate import summary_frame

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "sweep",
        parents=[run_options()],
        help="Final regret of every algorithm across values of one parameter",
    )
    parser.add_argument("--parameter", required=True, choices=SWEEP_PARAMETERS)
    parser.add_argument("--values", required=True, type=float_list,
                        help="Comma-separated values, e.g. 0,0.5,1,1.5,2")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    base = load_config(args)
    out = output_dir(args, base)
    simulator = get_simulator()
    frames = []
    for value in args.values:
        experiment = base.with_value(args.parameter, value)
        cfg = experiment.to_sim_config(seed=args.seed)
        logger.info(f"Sweep {args.parameter}={value:g}")
        result = simulator.run_experiment(
            cfg, jobs=jobs(args), stride=experiment.output.stride, swept_value=value)
        frames.append(summary_frame(result))
    summary = pd.concat(frames, ignore_index=True)
    summary.insert(1, "parameter", args.parameter)
    write_csv(summary, out / f"sweep_{args.parameter}.csv")
    print_table(summary, ["algorithm", "swept_value", "mean_regret", "stderr"])
    return EXIT_OK
