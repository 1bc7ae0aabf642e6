"""Post-hoc statistics: interaction-order tests, convergence and hill-climb quality."""
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import logging

import numpy as np
import scipy.sparse as sparse
from scipy.optimize import minimize
from scipy.special import log_ndtr
from scipy.stats import chi2

from app.config import get_settings
from app.core.errors import ConfigurationError, EmptyWindowError, NonNestedModelsError
from app.core.models.analysis import HillClimbStudy, LayoutRewardSummary, LoggedPlay, LrtResult
from app.core.models.posterior import GaussianPosterior, Observation
from app.core.models.selection import HillClimbConfig
from app.core.models.simulation import History, SimulationTruth
from app.core.models.template import Context, Layout, ModelKind, TemplateSpec
from .blip import ProbitRegression, v_function
from .features import get_encoder, identifiable_count
from .policy import LayoutPolicy
from .seeding import split
from .simulator import Environment

logger = logging.getLogger(__name__)

# (restricted, full) pairs whose weight sets are nested
NESTED_PAIRS = {
    (ModelKind.MVT1, ModelKind.MVT2),
    (ModelKind.MVT2, ModelKind.MVT3),
    (ModelKind.MVT1, ModelKind.MVT3),
    (ModelKind.MVT2, ModelKind.MVT2C),
    (ModelKind.MVT1, ModelKind.MVT2C),
}


class AnalysisService:
    """Likelihood-ratio tests, convergence series and hill-climb studies."""

    def __init__(self, regression: ProbitRegression, policy: LayoutPolicy):
        self.regression = regression
        self.policy = policy

    # -------------------------------------------------------------------- LRT

    @staticmethod
    def lrt(ll_restricted: float, ll_full: float, df: int, tolerance: float = 1e-6) -> LrtResult:
        """Chi-square upper-tail test of 2 * (ll_full - ll_restricted) at `df` degrees of freedom."""
        if df < 1:
            raise ConfigurationError(f"Degrees of freedom must be positive, got {df}")
        statistic = 2.0 * (ll_full - ll_restricted)
        if statistic < 0:
            allowed = tolerance * max(1.0, abs(ll_restricted))
            if -statistic > allowed:
                raise NonNestedModelsError(
                    f"Restricted model fits better by {-statistic / 2:.6g} nats; models are not nested")
            logger.warning(f"Clamping small negative LRT statistic {statistic:.3g} to 0")
            statistic = 0.0
        return LrtResult(
            statistic=statistic,
            df=df,
            p_value=float(chi2.sf(statistic, df)),
            ll_restricted=ll_restricted,
            ll_full=ll_full,
        )

    def encode_plays(
        self,
        kind: ModelKind,
        spec: TemplateSpec,
        plays: Iterable[LoggedPlay],
        widget: Optional[int] = None
    ) -> List[Observation]:
        enc = get_encoder(kind, spec, widget)
        return [
            Observation(
                features=enc.build_features(p.layout, p.context if kind.uses_context else None),
                reward=p.reward,
            )
            for p in plays
        ]

    def fit(
        self,
        kind: ModelKind,
        spec: TemplateSpec,
        plays: Sequence[LoggedPlay],
        passes: Optional[int] = None,
        start: Optional[GaussianPosterior] = None,
        widget: Optional[int] = None
    ) -> GaussianPosterior:
        """Posterior after `passes` sequential sweeps over the logged plays.

        Starting from `start` continues an existing model, as in a daily batch update.
        """
        passes = get_settings().LRT_PASSES if passes is None else passes
        if passes < 1:
            raise ConfigurationError(f"passes must be positive, got {passes}")
        data = self.encode_plays(kind, spec, plays, widget)
        post = start or GaussianPosterior.prior(
            kind, spec, get_encoder(kind, spec, widget).dimension, widget=widget)
        for _ in range(passes):
            post = self.regression.batch_update(post, data)
        return post

    def _tallies(
        self,
        kind: ModelKind,
        spec: TemplateSpec,
        plays: Sequence[LoggedPlay]
    ) -> Tuple[sparse.csr_matrix, np.ndarray, np.ndarray]:
        """Design rows of the distinct (layout, context) cells with win and loss counts."""
        counts: Dict[Tuple[Layout, Context], List[int]] = {}
        for p in plays:
            cell = counts.setdefault((p.layout, p.context if kind.uses_context else ()), [0, 0])
            cell[0 if p.reward > 0 else 1] += 1
        enc = get_encoder(kind, spec)
        rows = [enc.build_features(layout, context or None).active_indices for layout, context in counts]
        width = len(rows[0])
        design = sparse.csr_matrix(
            (np.ones(len(rows) * width), np.concatenate(rows), np.arange(len(rows) + 1) * width),
            shape=(len(rows), enc.dimension),
        )
        tally = np.asarray(list(counts.values()), dtype=np.float64)
        return design, tally[:, 0], tally[:, 1]

    def fit_mle(
        self,
        kind: ModelKind,
        spec: TemplateSpec,
        plays: Sequence[LoggedPlay],
        start: Optional[np.ndarray] = None,
        passes: Optional[int] = None
    ) -> Tuple[np.ndarray, float]:
        """Maximum-likelihood probit weights and the log-likelihood they reach.

        Minimizes -sum(log Phi(r * w.x)) with L-BFGS-B from `start`, or from the
        posterior means of a fresh sequential fit. Weights along unidentifiable
        directions stay where the start put them; the likelihood does not move.
        """
        if not plays:
            return np.zeros(get_encoder(kind, spec).dimension), 0.0
        design, wins, losses = self._tallies(kind, spec, plays)
        if start is None:
            start = self.fit(kind, spec, plays, passes).means

        def objective(w: np.ndarray) -> Tuple[float, np.ndarray]:
            s = design @ w
            value = -(wins @ log_ndtr(s) + losses @ log_ndtr(-s))
            slope = wins * v_function(s) - losses * v_function(-s)
            return float(value), -(design.T @ slope)

        res = minimize(objective, np.array(start, dtype=np.float64), jac=True, method="L-BFGS-B",
                       options={"maxiter": 5000, "ftol": 1e-12, "gtol": 1e-9})
        if not res.success:
            logger.warning(f"{kind.value} likelihood fit stopped early: {res.message}")
        return res.x, -float(res.fun)

    def fit_for_lrt(
        self,
        kind: ModelKind,
        spec: TemplateSpec,
        plays: Sequence[LoggedPlay],
        passes: Optional[int] = None
    ) -> float:
        """Maximized log-likelihood of the logged plays, starting from a fresh sequential fit."""
        return self.fit_mle(kind, spec, plays, passes=passes)[1]

    def lrt_models(
        self,
        restricted: ModelKind,
        full: ModelKind,
        spec: TemplateSpec,
        plays: Sequence[LoggedPlay],
        passes: Optional[int] = None
    ) -> LrtResult:
        """Fit both models by maximum likelihood on the same log and test the extra terms.

        The full model starts from the restricted optimum (its index scheme
        extends the restricted one), so its likelihood can only improve.
        Degrees of freedom count identifiable weights, not raw one-hot weights.
        """
        if (restricted, full) not in NESTED_PAIRS:
            raise NonNestedModelsError(f"{restricted.value} is not nested in {full.value}")
        df = identifiable_count(full, spec) - identifiable_count(restricted, spec)
        w_small, ll_small = self.fit_mle(restricted, spec, plays, passes=passes)
        start = np.zeros(get_encoder(full, spec).dimension)
        start[:w_small.size] = w_small
        _, ll_big = self.fit_mle(full, spec, plays, start=start)
        result = self.lrt(ll_small, ll_big, df)
        logger.info(f"{full.value} vs {restricted.value}: statistic {result.statistic:.4f}, "
                    f"df {df}, p {result.p_value:.4g}")
        return result.model_copy(update={"comparison": f"{full.value} vs {restricted.value}"})

    # ------------------------------------------------------------ convergence

    @staticmethod
    def _windows(h: History, window: int) -> List[slice]:
        if window < 1 or window > len(h):
            raise EmptyWindowError(f"Window {window} does not fit a history of length {len(h)}")
        # the trailing partial window is dropped
        return [slice(s, s + window) for s in range(0, len(h) - window + 1, window)]

    def convergence_series(self, h: History, window: int) -> np.ndarray:
        """Per window, the share of plays equal to the window's most played layout."""
        out = []
        for w in self._windows(h, window):
            _, counts = np.unique(h.layouts[w], axis=0, return_counts=True)
            out.append(counts.max() / window)
        return np.asarray(out)

    @staticmethod
    def normalized_success(rate: float, median_rate: float) -> float:
        """Relative lift of a success rate over the median layout's rate."""
        if median_rate <= 0:
            raise ConfigurationError("Median success rate must be positive")
        return rate / median_rate - 1.0

    def normalized_success_series(self, h: History, window: int, median_rate: float) -> np.ndarray:
        """Per-window empirical success rate as lift over `median_rate`."""
        values = h.reward_values
        return np.asarray([
            self.normalized_success(float(values[w].mean()), median_rate)
            for w in self._windows(h, window)
        ])

    def normalized_layout_rewards(self, truth: SimulationTruth) -> LayoutRewardSummary:
        """Expected reward of every layout, averaged over contexts, relative to the median layout."""
        rewards = Environment(truth).probs.mean(axis=0)
        median = float(np.median(rewards))
        best, worst = float(rewards.max()), float(rewards.min())
        return LayoutRewardSummary(
            normalized=rewards / median - 1.0,
            median=median,
            best=best,
            worst=worst,
            lift_over_median=self.normalized_success(best, median),
            lift_over_worst=self.normalized_success(best, worst),
        )

    # ---------------------------------------------------------- hill climbing

    def hill_climb_study(
        self,
        post: GaussianPosterior,
        truth: SimulationTruth,
        max_steps_grid: Sequence[int],
        restarts_grid: Sequence[int],
        trials: int,
        rng: np.random.Generator,
        use_samples: bool = False
    ) -> List[HillClimbStudy]:
        """Hill-climb a trained model repeatedly at every (K, S) grid point.

        Each trial climbs the posterior means (or a fresh posterior draw when
        `use_samples`) from random starts, compares the result with the
        exhaustive optimum of the same weights, and measures the true regret of
        a uniformly random layout and of the converged layout.
        """
        spec = post.spec
        if post.kind is ModelKind.D_MABS:
            raise ConfigurationError("Hill climbing applies to a single joint model")
        if spec.layout_count > get_settings().EXHAUSTIVE_CAP:
            raise ConfigurationError("The study needs an exhaustively enumerable layout space")
        env = Environment(truth)
        sizes = np.asarray(spec.widgets, dtype=np.int64)
        studies = []
        grid = [(k, s) for k in max_steps_grid for s in restarts_grid]
        for (k, s), point_rng in zip(grid, split(rng, len(grid))):
            cfg = HillClimbConfig(restarts=s, max_steps=k, early_stop=True)
            steps, sweeps, hits = [], [], []
            random_regret, converged_regret = [], []
            evaluations, distinct = [], []
            for trial_rng in split(point_rng, trials):
                context = spec.context_at(int(trial_rng.integers(spec.context_count))) if spec.L else ()
                sample = (self.regression.sample_weights(post, trial_rng) if use_samples
                          else post.mean_sample())
                oracle = self.policy.exhaustive_argmax(sample, spec, post.kind, context)
                layout, trace = self.policy.hill_climb(
                    sample, spec, post.kind, context, cfg, trial_rng, oracle=oracle)
                c = env.context_index(context)
                start = tuple(int(a) + 1 for a in trial_rng.integers(0, sizes))
                random_regret.append(env.best[c] - env.probs[c, spec.layout_index(start)])
                converged_regret.append(env.best[c] - env.probs[c, spec.layout_index(layout)])
                steps.extend(trace.steps_to_converge)
                sweeps.extend(trace.sweeps)
                hits.append(trace.reached_global)
                evaluations.append(trace.evaluations)
                distinct.append(trace.distinct_evaluations)
            studies.append(HillClimbStudy(
                max_steps=k,
                restarts=s,
                trials=trials,
                mean_steps=float(np.mean(steps)) if steps else 0.0,
                sd_steps=float(np.std(steps, ddof=1)) if len(steps) > 1 else 0.0,
                mean_sweeps=float(np.mean(sweeps)) if sweeps else 0.0,
                p_global=float(np.mean(hits)) if hits else 0.0,
                mean_regret_random=float(np.mean(random_regret)) if trials else 0.0,
                mean_regret_converged=float(np.mean(converged_regret)) if trials else 0.0,
                mean_evaluations=float(np.mean(evaluations)) if trials else 0.0,
                mean_distinct_evaluations=float(np.mean(distinct)) if trials else 0.0,
            ))
            logger.info(f"Hill-climb study K={k} S={s}: p_global {studies[-1].p_global:.3f}")
        return studies
