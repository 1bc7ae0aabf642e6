"""`hillclimb-study`: train one model in simulation, then measure hill climbing on it."""
import argparse
import logging

import pandas as pd

from app.core.services.factory import get_analysis_service, get_simulator
from app.core.services.seeding import derive_rng
from .common import EXIT_OK, load_config, output_dir, print_table, run_options, write_csv

logger = logging.getLogger(__name__)

STUDY_COLUMNS = [
    "K", "S", "trials", "mean_steps", "sd_steps", "mean_sweeps", "p_global",
    "regret_random", "regret_converged", "mean_evaluations", "mean_distinct_evaluations",
]


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "hillclimb-study",
        parents=[run_options()],
        help="Convergence and global-optimum rate of hill climbing on a trained model",
    )
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    experiment = load_config(args)
    cfg = experiment.to_sim_config(seed=args.seed)
    study = experiment.study
    simulator = get_simulator()

    truth = simulator.repetition_truth(cfg, 0)
    logger.info(f"Training {study.algorithm.value} for T={cfg.T} before the study")
    _, posteriors = simulator.train(
        cfg, truth, study.algorithm, derive_rng(cfg.seed, f"run:{study.algorithm.value}", 0))

    results = get_analysis_service().hill_climb_study(
        posteriors[0], truth, study.max_steps, study.restarts, study.trials,
        derive_rng(cfg.seed, "study"), use_samples=study.use_samples)
    frame = pd.DataFrame(
        [
            [r.max_steps, r.restarts, r.trials, r.mean_steps, r.sd_steps, r.mean_sweeps,
             r.p_global, r.mean_regret_random, r.mean_regret_converged,
             r.mean_evaluations, r.mean_distinct_evaluations]
            for r in results
        ],
        columns=STUDY_COLUMNS,
    )
    write_csv(frame, output_dir(args, experiment) / "hillclimb_study.csv")
    print_table(frame, ["K", "S", "mean_steps", "p_global", "regret_random", "regret_converged"])
    return EXIT_OK
