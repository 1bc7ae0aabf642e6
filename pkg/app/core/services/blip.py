"""Bayesian linear probit regression with independent Gaussian weights.

Online updates use assumed density filtering: after each binary observation the
exact (non-Gaussian) posterior is projected back onto independent Gaussians by
matching first and second moments. The probit noise variance is 1.
"""
from typing import Iterable, Sequence, Union
import logging
import math

import numpy as np
from scipy.special import log_ndtr, ndtr

from app.core.errors import ConfigurationError, NumericalError
from app.core.models.posterior import FeatureVector, GaussianPosterior, Observation, WeightSample

logger = logging.getLogger(__name__)

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def v_function(t):
    """Inverse Mills ratio phi(t) / Phi(t), elementwise for arrays.

    Evaluated in log space; `log_ndtr` switches to its asymptotic expansion in
    the far lower tail so the ratio never becomes 0/0.
    """
    return np.exp(-0.5 * np.square(t) - _LOG_SQRT_2PI - log_ndtr(t))


def w_function(t: float) -> float:
    """v(t) * (v(t) + t), always in (0, 1)."""
    v = v_function(t)
    return v * (v + t)


WeightsLike = Union[WeightSample, GaussianPosterior, np.ndarray]


def _weights(source: WeightsLike) -> np.ndarray:
    if isinstance(source, WeightSample):
        return source.values
    if isinstance(source, GaussianPosterior):
        return source.means
    return np.asarray(source, dtype=np.float64)


class ProbitRegression:
    """Prediction, sampling and moment-matched updates over a GaussianPosterior."""

    @staticmethod
    def _check(post: GaussianPosterior, f: FeatureVector) -> None:
        if f.dimension != post.dimension:
            raise ConfigurationError(
                f"Feature dimension {f.dimension} does not match posterior dimension {post.dimension}")

    def predict(self, post: GaussianPosterior, f: FeatureVector) -> float:
        """Success probability marginalized over the posterior."""
        self._check(post, f)
        idx = f.active_indices
        m = float(post.means[idx].sum())
        s2 = float(post.variances[idx].sum())
        return float(ndtr(m / math.sqrt(1.0 + s2)))

    def sample_weights(self, post: GaussianPosterior, rng: np.random.Generator) -> WeightSample:
        """One independent draw of every weight."""
        values = rng.normal(post.means, np.sqrt(post.variances))
        values.flags.writeable = False
        return WeightSample(values=values)

    @staticmethod
    def _apply(means: np.ndarray, variances: np.ndarray, idx: np.ndarray, reward: int) -> None:
        """In-place moment-matched update of the active coordinates."""
        var = variances[idx]
        total = 1.0 + float(var.sum())
        scale = math.sqrt(total)
        t = reward * float(means[idx].sum()) / scale
        v = v_function(t)
        w = v * (v + t)
        new_means = means[idx] + reward * (var / scale) * v
        new_vars = var * (1.0 - (var / total) * w)
        if not (np.all(np.isfinite(new_means)) and np.all(new_vars > 0)):
            raise NumericalError(f"Non-finite posterior update at t={t}")
        means[idx] = new_means
        variances[idx] = new_vars

    def update(self, post: GaussianPosterior, obs: Observation) -> GaussianPosterior:
        """Posterior after one observation; only active coordinates change."""
        return self.batch_update(post, [obs])

    def batch_update(self, post: GaussianPosterior, batch: Iterable[Observation]) -> GaussianPosterior:
        """Sequential updates over a batch, in order, producing one new snapshot."""
        means = post.means.copy()
        variances = post.variances.copy()
        count = 0
        for obs in batch:
            self._check(post, obs.features)
            self._apply(means, variances, obs.features.active_indices, obs.reward)
            count += 1
        if count == 0:
            return post
        logger.debug(f"Folded {count} observations into {post.kind.value} posterior")
        return post.model_copy(update={"means": _frozen(means), "variances": _frozen(variances)})

    def log_likelihood(self, weights: WeightsLike, data: Sequence[Observation]) -> float:
        """Sum of log Phi(r * B^T w) at point weights."""
        if not data:
            return 0.0
        w = _weights(weights)
        margins = np.fromiter(
            (obs.reward * w[obs.features.active_indices].sum() for obs in data),
            dtype=np.float64, count=len(data))
        return float(log_ndtr(margins).sum())


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr
