"""Layout selection: Thompson sampling with an exhaustive or hill-climbing argmax."""
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from app.config import get_settings
from app.core.errors import ConfigurationError
from app.core.models.posterior import GaussianPosterior, WeightSample
from app.core.models.selection import ArgmaxMode, HillClimbConfig, SelectionTrace
from app.core.models.template import Context, Layout, ModelKind, TemplateSpec
from .blip import ProbitRegression
from .features import FeatureEncoder, get_encoder

logger = logging.getLogger(__name__)


def _context0(enc: FeatureEncoder, context: Optional[Sequence[int]]) -> Optional[np.ndarray]:
    """0-based context for contextual models; other models ignore the context."""
    if not enc.kind.uses_context:
        return None
    if context is None:
        raise ConfigurationError("MVT2c selection needs a context")
    return np.asarray(enc.spec.validate_context(context), dtype=np.int64) - 1


class LayoutPolicy:
    """Selects layouts from sampled weights."""

    def __init__(self, regression: ProbitRegression):
        self.regression = regression

    def score(
        self,
        sample: WeightSample,
        spec: TemplateSpec,
        kind: ModelKind,
        layout: Sequence[int],
        context: Optional[Sequence[int]] = None
    ) -> float:
        """Layout score B^T w under sampled weights."""
        enc = get_encoder(kind, spec)
        layout0 = np.asarray(spec.validate_layout(layout), dtype=np.int64) - 1
        return enc.score(sample.values, layout0, _context0(enc, context))

    def exhaustive_argmax(
        self,
        sample: WeightSample,
        spec: TemplateSpec,
        kind: ModelKind,
        context: Optional[Sequence[int]] = None,
        cap: Optional[int] = None
    ) -> Layout:
        """Best layout by scoring all of them; ties go to the lexicographically smallest."""
        enc = get_encoder(kind, spec)
        index, _ = self._exhaustive(sample.values, enc, _context0(enc, context), cap)
        return spec.layout_at(index)

    @staticmethod
    def _exhaustive(
        weights: np.ndarray,
        enc: FeatureEncoder,
        context0: Optional[np.ndarray],
        cap: Optional[int] = None
    ) -> Tuple[int, float]:
        cap = get_settings().EXHAUSTIVE_CAP if cap is None else cap
        matrix = enc.layout_matrix(context0, cap)
        scores = weights[matrix].sum(axis=1)
        index = int(np.argmax(scores))
        return index, float(scores[index])

    def hill_climb(
        self,
        sample: WeightSample,
        spec: TemplateSpec,
        kind: ModelKind,
        context: Optional[Sequence[int]],
        cfg: HillClimbConfig,
        rng: np.random.Generator,
        oracle: Optional[Layout] = None,
        start: Optional[Sequence[int]] = None
    ) -> Tuple[Layout, SelectionTrace]:
        """Greedy single-widget ascent from S random layouts; best final layout wins.

        Each sweep visits the widgets in a fresh random order. A widget step sets
        the widget to its best content with all others fixed, keeping the
        incumbent on ties and otherwise the lowest content. A restart converges
        once every widget has been visited without a change since the last move.
        """
        enc = get_encoder(kind, spec)
        weights = sample.values
        context0 = _context0(enc, context)
        sizes = np.asarray(spec.widgets, dtype=np.int64)
        d = spec.D

        best_layout: Optional[np.ndarray] = None
        best_score = -np.inf
        evaluations = 0
        distinct = 0
        steps_log: List[int] = []
        sweeps_log: List[int] = []
        converged_log: List[bool] = []

        for restart in range(cfg.restarts):
            if start is not None and restart == 0:
                layout0 = np.asarray(spec.validate_layout(start), dtype=np.int64) - 1
            else:
                layout0 = rng.integers(0, sizes)
            current = enc.score(weights, layout0, context0)
            evaluations += 1
            distinct += 1
            steps = sweeps = 0
            order: List[int] = []
            stable = set()
            converged = False
            while steps < cfg.max_steps:
                if not order:
                    order = [int(i) for i in rng.permutation(d)]
                    sweeps += 1
                widget = order.pop()
                candidates = enc.candidate_scores(weights, layout0, widget, current, context0)
                steps += 1
                evaluations += int(sizes[widget])
                distinct += int(sizes[widget]) - 1
                incumbent = int(layout0[widget])
                top = int(np.argmax(candidates))
                if candidates[top] > candidates[incumbent]:
                    layout0[widget] = top
                    current = float(candidates[top])
                    stable = {widget}
                else:
                    stable.add(widget)
                if cfg.early_stop and len(stable) == d:
                    converged = True
                    break
            final = enc.score(weights, layout0, context0)
            steps_log.append(steps)
            sweeps_log.append(sweeps)
            converged_log.append(converged)
            if final > best_score:
                best_score = final
                best_layout = layout0.copy()

        layout = tuple(int(a) + 1 for a in best_layout)
        trace = SelectionTrace(
            layout=layout,
            score=best_score,
            evaluations=evaluations,
            distinct_evaluations=distinct,
            steps_to_converge=steps_log,
            sweeps=sweeps_log,
            converged=converged_log,
            reached_global=None if oracle is None else layout == tuple(oracle),
        )
        return layout, trace

    @staticmethod
    def default_argmax(spec: TemplateSpec) -> ArgmaxMode:
        """Exhaustive search whenever the layout space can be enumerated, hill climbing beyond."""
        if spec.layout_count <= get_settings().EXHAUSTIVE_CAP:
            return ArgmaxMode.EXHAUSTIVE
        return ArgmaxMode.HILL_CLIMB

    def thompson_select(
        self,
        post: GaussianPosterior,
        context: Optional[Sequence[int]],
        argmax_mode: ArgmaxMode,
        rng: np.random.Generator,
        cfg: Optional[HillClimbConfig] = None,
        check_global: bool = False
    ) -> Tuple[Layout, SelectionTrace]:
        """Sample weights from the posterior, then pick the best layout for the draw."""
        if post.kind is ModelKind.D_MABS:
            raise ConfigurationError("Per-widget posteriors are selected with dmabs_select")
        spec, kind = post.spec, post.kind
        sample = self.regression.sample_weights(post, rng)
        return self.select_for_sample(sample, spec, kind, context, argmax_mode, rng, cfg, check_global)

    def select_for_sample(
        self,
        sample: WeightSample,
        spec: TemplateSpec,
        kind: ModelKind,
        context: Optional[Sequence[int]],
        argmax_mode: ArgmaxMode,
        rng: np.random.Generator,
        cfg: Optional[HillClimbConfig] = None,
        check_global: bool = False
    ) -> Tuple[Layout, SelectionTrace]:
        enc = get_encoder(kind, spec)
        cap = get_settings().EXHAUSTIVE_CAP
        if argmax_mode is ArgmaxMode.EXHAUSTIVE:
            index, best = self._exhaustive(sample.values, enc, _context0(enc, context), cap)
            layout = spec.layout_at(index)
            trace = SelectionTrace(
                layout=layout,
                score=best,
                evaluations=spec.layout_count,
                distinct_evaluations=spec.layout_count,
                reached_global=True if check_global else None,
            )
            return layout, trace
        oracle = None
        if check_global and spec.layout_count <= cap:
            oracle = self.exhaustive_argmax(sample, spec, kind, context, cap)
        cfg = cfg or HillClimbConfig.for_widgets(spec.D)
        return self.hill_climb(sample, spec, kind, context, cfg, rng, oracle=oracle)

    def dmabs_select(
        self,
        posteriors: Sequence[GaussianPosterior],
        spec: TemplateSpec,
        rng: np.random.Generator
    ) -> Layout:
        """Independent Thompson draw per widget model; contents composed into a layout."""
        if len(posteriors) != spec.D:
            raise ConfigurationError(
                f"D_MABS needs {spec.D} per-widget posteriors, got {len(posteriors)}")
        layout = []
        for i, post in enumerate(posteriors):
            if post.kind is not ModelKind.D_MABS or post.widget != i:
                raise ConfigurationError(f"Posterior {i} is not the D_MABS model of widget {i}")
            if post.dimension != 1 + spec.widgets[i]:
                raise ConfigurationError(
                    f"Widget {i} model has {post.dimension} weights, expected {1 + spec.widgets[i]}")
            draw = self.regression.sample_weights(post, rng).values
            # bias is shared by every content of the widget
            layout.append(int(np.argmax(draw[1:])) + 1)
        return tuple(layout)
