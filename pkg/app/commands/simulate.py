"""`simulate`: run every configured algorithm against simulated truths."""
from pathlib import Path
from typing import List
import argparse
import logging

import numpy as np
import pandas as pd

from app.core.models.simulation import ExperimentResult, History, SimConfig
from app.core.schemas.experiment import ExperimentFile
from app.core.services.factory import get_analysis_service, get_simulator, get_snapshot_store
from .common import (
    EXIT_OK, jobs, load_config, output_dir, print_table, run_options, write_csv,
)

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "simulate",
        parents=[run_options()],
        help="Run the configured algorithms and emit regret curves",
        description="Run every algorithm over all repetitions and write regret CSVs.",
    )
    parser.set_defaults(handler=run)


def curves_frame(result: ExperimentResult, experiment_id: str) -> pd.DataFrame:
    """Tidy local and running regret curves, one row per (algorithm, repetition, t)."""
    frames = [
        pd.DataFrame({
            "experiment_id": experiment_id,
            "algorithm": curve.algorithm.value,
            "repetition": curve.repetition,
            "t": curve.t,
            "local_regret": curve.local_regret,
            "regret": curve.regret,
        })
        for curve in result.curves
    ]
    columns = ["experiment_id", "algorithm", "repetition", "t", "local_regret", "regret"]
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=columns)


def summary_frame(result: ExperimentResult) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "algorithm": s.algorithm.value,
                "swept_value": s.swept_value,
                "mean_regret": s.mean_regret,
                "stderr": s.stderr,
                "repetitions": s.repetitions,
            }
            for s in result.summaries
        ],
        columns=["algorithm", "swept_value", "mean_regret", "stderr", "repetitions"],
    )


def history_frame(history: History) -> pd.DataFrame:
    """Per-step history in observation-log layout plus both expectations."""
    frame = pd.DataFrame({"t": np.arange(1, len(history) + 1)})
    for i in range(history.layouts.shape[1]):
        frame[f"widget_{i + 1}"] = history.layouts[:, i]
    for l in range(history.contexts.shape[1]):
        frame[f"ctx_{l + 1}"] = history.contexts[:, l]
    frame["reward"] = (history.rewards > 0).astype(np.int64)
    frame["expected"] = history.expected
    frame["optimal"] = history.optimal
    return frame


def write_extras(experiment: ExperimentFile, cfg: SimConfig, out: Path) -> List[Path]:
    """Histogram, first-repetition histories and snapshots, as requested by the output section."""
    simulator = get_simulator()
    analysis = get_analysis_service()
    written = []
    truth = simulator.repetition_truth(cfg, 0)
    options = experiment.output

    if options.histogram:
        counts, edges = simulator.expected_reward_histogram(truth, options.histogram)
        written.append(write_csv(pd.DataFrame({
            "bin_left": edges[:-1], "bin_right": edges[1:], "count": counts,
        }), out / "reward_histogram.csv"))
        rewards = analysis.normalized_layout_rewards(truth)
        written.append(write_csv(pd.DataFrame([{
            "median": rewards.median,
            "best": rewards.best,
            "worst": rewards.worst,
            "lift_over_median": rewards.lift_over_median,
            "lift_over_worst": rewards.lift_over_worst,
        }]), out / "layout_rewards.csv"))

    if not (options.history or options.snapshot) or cfg.T == 0:
        return written
    median = analysis.normalized_layout_rewards(truth).median
    series = []
    for algorithm in cfg.algorithms:
        # repetition 0 is rerun; runs are deterministic so it matches the curves
        _, history, posteriors = simulator.run_repetition(cfg, algorithm, 0, options.stride)
        if options.history:
            written.append(write_csv(history_frame(history), out / f"history_{algorithm.value}.csv"))
            window = min(cfg.window, len(history))
            convergence = analysis.convergence_series(history, window)
            lift = analysis.normalized_success_series(history, window, median)
            series.append(pd.DataFrame({
                "algorithm": algorithm.value,
                "window_end": window * np.arange(1, len(convergence) + 1),
                "convergence": convergence,
                "normalized_success": lift,
            }))
        if options.snapshot:
            path = out / f"snapshot_{algorithm.value}.json"
            get_snapshot_store().save(path, posteriors)
            written.append(path)
    if series:
        written.append(write_csv(pd.concat(series, ignore_index=True), out / "convergence.csv"))
    return written


def run(args: argparse.Namespace) -> int:
    experiment = load_config(args)
    cfg = experiment.to_sim_config(seed=args.seed)
    out = output_dir(args, experiment)
    logger.info(f"Simulating {', '.join(a.value for a in cfg.algorithms)} "
                f"on {list(cfg.spec.widgets)} for {cfg.repetitions} repetitions")

    result = get_simulator().run_experiment(cfg, jobs=jobs(args), stride=experiment.output.stride)
    write_csv(curves_frame(result, experiment.output.experiment_id), out / "curves.csv")
    summary = summary_frame(result)
    write_csv(summary, out / "summary.csv")
    write_extras(experiment, cfg, out)

    print_table(summary, ["algorithm", "mean_regret", "stderr"])
    return EXIT_OK
