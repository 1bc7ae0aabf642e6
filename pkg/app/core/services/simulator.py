"""Simulated reward environments and the delayed-feedback bandit loop."""
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.special import ndtr
from scipy.stats import sem

from app.core.errors import ConfigurationError, EmptyWindowError
from app.core.models.posterior import FeatureVector, GaussianPosterior, Observation
from app.core.models.simulation import (
    ExperimentResult, History, RegretCurve, RegretSummary, SimConfig, SimulationTruth,
)
from app.core.models.template import Context, ModelKind, TemplateSpec
from .blip import ProbitRegression
from .features import FeatureEncoder, get_encoder
from .policy import LayoutPolicy
from .seeding import derive_rng, split

logger = logging.getLogger(__name__)


def truth_kind(spec: TemplateSpec) -> ModelKind:
    """Shape of the ground-truth weight vector: MVT2c with context, MVT2 without."""
    return ModelKind.MVT2C if spec.L >= 1 else ModelKind.MVT2


def truth_beta(spec: TemplateSpec, alpha1: float, alpha2: float, alphac: float) -> float:
    """Scale giving the scaled score unit variance over the weight draw.

    Every feature vector has one active weight per term, so the variance is the
    sum of squared group amplitudes times the number of active terms.
    """
    d, l = spec.D, spec.L
    pairs = d * (d - 1) // 2
    return math.sqrt(1.0 + alpha1 ** 2 * d + alpha2 ** 2 * pairs
                     + alphac ** 2 * l + alphac ** 2 * d * l)


class Environment:
    """Expected reward of every (context, layout) pair of a truth."""

    def __init__(self, truth: SimulationTruth):
        self.truth = truth
        spec = truth.spec
        self.encoder = get_encoder(truth_kind(spec), spec)
        self.scaled = scaled_weights(truth, self.encoder)
        rows = []
        # context_count is 1 for a template without context
        for c in range(spec.context_count):
            context0 = np.asarray(spec.context_at(c), dtype=np.int64) - 1 if spec.L else None
            matrix = self.encoder.layout_matrix(context0)
            rows.append(ndtr(self.scaled[matrix].sum(axis=1)))
        self.probs = np.vstack(rows)
        self.best_index = self.probs.argmax(axis=1)
        self.best = self.probs.max(axis=1)

    def context_index(self, context: Context) -> int:
        return self.truth.spec.context_index(context) if self.truth.spec.L else 0


def scaled_weights(truth: SimulationTruth, encoder: FeatureEncoder) -> np.ndarray:
    """Truth weights multiplied by their group amplitude and divided by beta."""
    amplitude = {
        "bias": 1.0,
        "first_order": truth.alpha1,
        "pairwise": truth.alpha2,
        "context_main": truth.alphac,
        "content_context": truth.alphac,
    }
    scale = np.empty(encoder.dimension)
    for name, _, start, stop in encoder.groups():
        scale[start:stop] = amplitude[name]
    return truth.weights * scale / truth.beta


class BanditSimulator:
    """Runs bandit algorithms against simulated truths and measures regret."""

    def __init__(self, regression: ProbitRegression, policy: LayoutPolicy):
        self.regression = regression
        self.policy = policy

    # ------------------------------------------------------------ environment

    def make_truth(self, cfg: SimConfig, rng: np.random.Generator) -> SimulationTruth:
        """Draw i.i.d. N(0, 1) truth weights and the matching scale beta."""
        spec = cfg.spec
        dimension = get_encoder(truth_kind(spec), spec).dimension
        return SimulationTruth(
            spec=spec,
            weights=rng.standard_normal(dimension),
            beta=truth_beta(spec, cfg.alpha1, cfg.alpha2, cfg.alphac),
            alpha1=cfg.alpha1,
            alpha2=cfg.alpha2,
            alphac=cfg.alphac,
        )

    def repetition_truth(self, cfg: SimConfig, repetition: int) -> SimulationTruth:
        """Truth of one repetition; shared by every algorithm of that repetition."""
        return self.make_truth(cfg, derive_rng(cfg.seed, "truth", repetition))

    def true_expected_reward(
        self,
        truth: SimulationTruth,
        layout: Sequence[int],
        context: Optional[Sequence[int]] = None
    ) -> float:
        spec = truth.spec
        enc = get_encoder(truth_kind(spec), spec)
        layout0 = np.asarray(spec.validate_layout(layout), dtype=np.int64) - 1
        context0 = np.asarray(spec.validate_context(context), dtype=np.int64) - 1 if spec.L else None
        return float(ndtr(enc.score(scaled_weights(truth, enc), layout0, context0)))

    def step(
        self,
        truth: SimulationTruth,
        layout: Sequence[int],
        context: Optional[Sequence[int]],
        rng: np.random.Generator
    ) -> int:
        """Bernoulli reward coded as +1 / -1."""
        p = self.true_expected_reward(truth, layout, context)
        return 1 if rng.random() < p else -1

    def expected_reward_histogram(
        self,
        truth: SimulationTruth,
        bins: int = 20
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Histogram of expected rewards over all layouts and contexts."""
        env = Environment(truth)
        return np.histogram(env.probs.ravel(), bins=bins, range=(0.0, 1.0))

    # ------------------------------------------------------------------- loop

    def run_loop(
        self,
        cfg: SimConfig,
        truth: SimulationTruth,
        algorithm: ModelKind,
        rng: np.random.Generator
    ) -> History:
        history, _ = self.train(cfg, truth, algorithm, rng)
        return history

    def train(
        self,
        cfg: SimConfig,
        truth: SimulationTruth,
        algorithm: ModelKind,
        rng: np.random.Generator
    ) -> Tuple[History, List[GaussianPosterior]]:
        """Bandit loop with batch feedback; returns the history and the final posteriors.

        Selections at step t use the snapshot trained on all complete batches
        before t. Observations still pending at the horizon are folded into the
        returned posteriors but never influenced a selection.
        """
        spec = cfg.spec
        if algorithm is ModelKind.MVT2C and spec.L < 1:
            raise ConfigurationError("MVT2c requires at least one context dimension")
        env_rng, policy_rng = split(rng, 2)
        env = Environment(truth)
        posteriors = self._priors(spec, algorithm)
        encoders = [get_encoder(p.kind, spec, p.widget) for p in posteriors]
        mode = cfg.argmax_mode(algorithm)
        hc_cfg = cfg.hill_climb_config()
        T = cfg.T
        if T == 0:
            return History.empty(spec.D, spec.L), posteriors

        contexts0 = np.empty((T, spec.L), dtype=np.int64)
        for l, g in enumerate(spec.context):
            contexts0[:, l] = env_rng.integers(0, g, size=T)
        uniforms = env_rng.random(T)
        layouts = np.empty((T, spec.D), dtype=np.int64)
        rewards = np.empty(T, dtype=np.int64)
        expected = np.empty(T)
        optimal = np.empty(T)
        pending_from = 0

        for t in range(T):
            context = tuple(int(x) + 1 for x in contexts0[t])
            if algorithm is ModelKind.D_MABS:
                layout = self.policy.dmabs_select(posteriors, spec, policy_rng)
            else:
                layout, _ = self.policy.thompson_select(
                    posteriors[0], context, mode, policy_rng, hc_cfg)
            c = env.context_index(context)
            p = env.probs[c, spec.layout_index(layout)]
            layouts[t] = layout
            rewards[t] = 1 if uniforms[t] < p else -1
            expected[t] = p
            optimal[t] = env.best[c]
            if (t + 1) % cfg.batch_period == 0:
                posteriors = self._fold(posteriors, encoders, layouts, contexts0, rewards, pending_from, t + 1)
                pending_from = t + 1
                logger.debug(f"{algorithm.value}: trained on batch ending at t={t + 1}")
        if pending_from < T:
            posteriors = self._fold(posteriors, encoders, layouts, contexts0, rewards, pending_from, T)

        history = History(
            contexts=contexts0 + 1,
            layouts=layouts,
            rewards=rewards,
            expected=expected,
            optimal=optimal,
        )
        return history, posteriors

    @staticmethod
    def _priors(spec: TemplateSpec, algorithm: ModelKind) -> List[GaussianPosterior]:
        if algorithm is ModelKind.D_MABS:
            return [
                GaussianPosterior.prior(algorithm, spec, get_encoder(algorithm, spec, i).dimension, widget=i)
                for i in range(spec.D)
            ]
        return [GaussianPosterior.prior(algorithm, spec, get_encoder(algorithm, spec).dimension)]

    def _fold(
        self,
        posteriors: List[GaussianPosterior],
        encoders: List[FeatureEncoder],
        layouts: np.ndarray,
        contexts0: np.ndarray,
        rewards: np.ndarray,
        start: int,
        stop: int
    ) -> List[GaussianPosterior]:
        """Fold steps [start, stop) into every posterior; D_MABS models see only their widget."""
        out = []
        for post, enc in zip(posteriors, encoders):
            batch = []
            for t in range(start, stop):
                layout0 = layouts[t] - 1
                context0 = contexts0[t] if enc.kind.uses_context else None
                features = FeatureVector(
                    active_indices=enc.active(layout0, context0), dimension=enc.dimension)
                batch.append(Observation(features=features, reward=int(rewards[t])))
            out.append(self.regression.batch_update(post, batch))
        return out

    # ----------------------------------------------------------------- regret

    @staticmethod
    def regret(h: History) -> float:
        """Mean over the horizon of E[R | optimal arm] minus the 0/1 reward."""
        if len(h) == 0:
            raise EmptyWindowError("Regret of an empty history")
        return float(np.mean(h.optimal - h.reward_values))

    @staticmethod
    def local_regret(h: History, t0: int, t1: int) -> float:
        """Regret over the inclusive 1-based window [t0, t1]."""
        if not 1 <= t0 <= t1 <= len(h):
            raise EmptyWindowError(f"Window [{t0}, {t1}] is empty or outside 1..{len(h)}")
        window = slice(t0 - 1, t1)
        return float(np.sum(h.optimal[window] - h.reward_values[window]) / (1 + t1 - t0))

    @staticmethod
    def regret_curve(h: History, window: int, stride: int = 1) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(t, local regret over the trailing window, running regret) every `stride` steps."""
        n = len(h)
        if n == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0)
        per_step = h.optimal - h.reward_values
        cumulative = np.concatenate([[0.0], np.cumsum(per_step)])
        t = np.arange(stride, n + 1, stride, dtype=np.int64)
        if t.size == 0 or t[-1] != n:
            t = np.append(t, n)
        t0 = np.maximum(t - window, 0)
        local = (cumulative[t] - cumulative[t0]) / (t - t0)
        running = cumulative[t] / t
        return t, local, running

    # ------------------------------------------------------------- experiment

    def run_repetition(
        self,
        cfg: SimConfig,
        algorithm: ModelKind,
        repetition: int,
        stride: int = 1
    ) -> Tuple[RegretCurve, History, List[GaussianPosterior]]:
        """One (algorithm, repetition) cell; every algorithm of a repetition shares its truth."""
        truth = self.repetition_truth(cfg, repetition)
        rng = derive_rng(cfg.seed, f"run:{algorithm.value}", repetition)
        logger.info(f"Repetition {repetition}: running {algorithm.value} for T={cfg.T}")
        history, posteriors = self.train(cfg, truth, algorithm, rng)
        t, local, running = self.regret_curve(history, cfg.window, stride)
        final = self.local_regret(history, max(1, cfg.T - cfg.window + 1), cfg.T)
        curve = RegretCurve(
            algorithm=algorithm,
            repetition=repetition,
            t=t,
            local_regret=local,
            regret=running,
            final_local_regret=final,
        )
        return curve, history, posteriors

    def run_experiment(
        self,
        cfg: SimConfig,
        jobs: int = 1,
        stride: int = 1,
        swept_value: Optional[float] = None
    ) -> ExperimentResult:
        """All algorithms over all repetitions, with mean and standard error per algorithm."""
        if cfg.T < 1:
            raise ConfigurationError("An experiment needs a horizon T of at least 1")
        cells = [(alg, rep) for alg in cfg.algorithms for rep in range(cfg.repetitions)]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                curves = list(pool.map(
                    _curve_cell,
                    [cfg] * len(cells), [a for a, _ in cells], [r for _, r in cells],
                    [stride] * len(cells)))
        else:
            curves = [self.run_repetition(cfg, alg, rep, stride)[0] for alg, rep in cells]

        result = ExperimentResult(curves=curves)
        for alg in cfg.algorithms:
            finals = np.asarray(result.final_regrets(alg))
            stderr = float(sem(finals)) if finals.size > 1 else 0.0
            result.summaries.append(RegretSummary(
                algorithm=alg,
                swept_value=swept_value,
                mean_regret=float(finals.mean()),
                stderr=stderr,
                repetitions=int(finals.size),
            ))
            logger.info(f"{alg.value}: final local regret {finals.mean():.4f} +/- {stderr:.4f}")
        return result


def _curve_cell(cfg: SimConfig, algorithm: ModelKind, repetition: int, stride: int) -> RegretCurve:
    """Process-pool entry point for one experiment cell."""
    from .factory import get_simulator
    return get_simulator().run_repetition(cfg, algorithm, repetition, stride)[0]
