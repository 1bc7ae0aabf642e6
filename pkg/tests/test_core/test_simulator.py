import math

import numpy as np
import pytest

from app.core.errors import ConfigurationError, EmptyWindowError
from app.core.models import (
    GaussianPosterior, History, ModelKind, SimConfig, SimulationTruth, TemplateSpec,
)
from app.core.services.factory import get_simulator
from app.core.services.features import enumerate_layouts, get_encoder
from app.core.services.simulator import Environment, scaled_weights, truth_beta, truth_kind


def make_history(expected, optimal, rewards, d=1):
    n = len(rewards)
    return History(
        contexts=np.zeros((n, 0), dtype=np.int64),
        layouts=np.ones((n, d), dtype=np.int64),
        rewards=np.asarray(rewards),
        expected=np.asarray(expected, dtype=float),
        optimal=np.asarray(optimal, dtype=float),
    )


def small_config(**overrides):
    values = dict(spec=TemplateSpec.uniform(3, 3), alpha1=1.0, alpha2=1.0, T=300,
                  batch_period=50, repetitions=2, seed=13,
                  algorithms=[ModelKind.MVT1, ModelKind.MVT2, ModelKind.ND_MAB, ModelKind.D_MABS],
                  window=100)
    values.update(overrides)
    return SimConfig(**values)


def test_beta():
    spec = TemplateSpec.uniform(8, 3)
    assert truth_beta(spec, 0, 0, 0) == 1.0
    assert truth_beta(spec, 1, 0, 0) == pytest.approx(2.0)
    assert truth_beta(spec, 1, 1, 0) == pytest.approx(math.sqrt(7))


def test_beta_normalizes_score_variance():
    simulator = get_simulator()
    spec = TemplateSpec.uniform(4, 3)
    cfg = SimConfig(spec=spec, alpha1=1.0, alpha2=1.0, T=0)
    encoder = get_encoder(truth_kind(spec), spec)
    rng = np.random.default_rng(0)
    scores = [
        encoder.score(scaled_weights(simulator.make_truth(cfg, rng), encoder), np.array([0, 1, 2]))
        for _ in range(20_000)
    ]
    assert np.var(scores) == pytest.approx(1.0, rel=0.03)


def test_config_validation():
    with pytest.raises(ValueError, match="alphac > 0 requires"):
        SimConfig(spec=TemplateSpec.uniform(3, 2), alphac=1.0)
    with pytest.raises(ValueError, match="MVT2c requires"):
        SimConfig(spec=TemplateSpec.uniform(3, 2), algorithms=[ModelKind.MVT2C])
    with pytest.raises(ValueError, match="must not repeat"):
        SimConfig(spec=TemplateSpec.uniform(3, 2), algorithms=[ModelKind.MVT1, ModelKind.MVT1])


def test_zero_truth_gives_even_odds():
    simulator = get_simulator()
    spec = TemplateSpec(widgets=[2, 3], context=[2])
    truth = SimulationTruth(spec=spec, weights=np.zeros(get_encoder(ModelKind.MVT2C, spec).dimension),
                            beta=1.0, alpha1=1.0, alpha2=1.0, alphac=1.0)
    for layout in enumerate_layouts(spec):
        assert simulator.true_expected_reward(truth, layout, (1,)) == 0.5


def test_environment_optimum_matches_enumeration():
    simulator = get_simulator()
    cfg = small_config()
    truth = simulator.repetition_truth(cfg, 0)
    env = Environment(truth)
    rewards = [simulator.true_expected_reward(truth, a) for a in enumerate_layouts(cfg.spec)]
    assert env.best[0] == pytest.approx(max(rewards))
    np.testing.assert_allclose(env.probs[0], rewards)


def test_step():
    simulator = get_simulator()
    spec = TemplateSpec.uniform(2, 1)
    weights = np.zeros(get_encoder(ModelKind.MVT2, spec).dimension)
    weights[0] = 50.0
    certain = SimulationTruth(spec=spec, weights=weights, beta=1.0, alpha1=1.0, alpha2=1.0, alphac=0.0)
    rng = np.random.default_rng(0)
    assert all(simulator.step(certain, (1,), None, rng) == 1 for _ in range(100))

    weights[0] = 0.3
    truth = certain.model_copy(update={"weights": weights})
    p = simulator.true_expected_reward(truth, (2,))
    rng = np.random.default_rng(1)
    draws = np.array([simulator.step(truth, (2,), None, rng) for _ in range(100_000)])
    mean = float(np.mean(draws > 0))
    assert abs(mean - p) < 3 * math.sqrt(p * (1 - p) / 100_000)

    a = [simulator.step(truth, (1,), None, np.random.default_rng(5)) for _ in range(3)]
    b = [simulator.step(truth, (1,), None, np.random.default_rng(5)) for _ in range(3)]
    assert a == b


def test_regret_arithmetic():
    simulator = get_simulator()
    h = make_history([0.8] * 3, [0.8] * 3, [1, -1, 1])
    assert simulator.regret(h) == pytest.approx(0.4 / 3)
    assert simulator.local_regret(h, 1, 3) == pytest.approx(simulator.regret(h))
    assert simulator.local_regret(h, 2, 2) == pytest.approx(0.8)
    with pytest.raises(EmptyWindowError):
        simulator.local_regret(h, 3, 2)
    with pytest.raises(EmptyWindowError):
        simulator.local_regret(h, 1, 4)
    with pytest.raises(EmptyWindowError):
        simulator.regret(History.empty(1, 0))


def test_random_policy_regret_is_the_mean_gap():
    simulator = get_simulator()
    spec = TemplateSpec.uniform(8, 3)
    truth = simulator.repetition_truth(small_config(spec=spec), 0)
    env = Environment(truth)
    rng = np.random.default_rng(17)
    n = 200_000
    indices = rng.integers(0, spec.layout_count, size=n)
    probs = env.probs[0, indices]
    h = History(
        contexts=np.zeros((n, 0), dtype=np.int64),
        layouts=np.asarray([spec.layout_at(i) for i in range(spec.layout_count)])[indices],
        rewards=np.where(rng.random(n) < probs, 1, -1),
        expected=probs,
        optimal=np.full(n, env.best[0]),
    )
    gap = float(np.mean(env.best[0] - env.probs[0]))
    assert simulator.local_regret(h, 1, n) == pytest.approx(gap, rel=0.02)
    assert simulator.local_regret(h, n // 2 + 1, n) == pytest.approx(gap, rel=0.04)


def test_regret_curve():
    simulator = get_simulator()
    h = make_history([0.5] * 5, [0.9] * 5, [1, -1, -1, 1, -1])
    t, local, running = simulator.regret_curve(h, window=2, stride=2)
    assert list(t) == [2, 4, 5]
    assert local[0] == pytest.approx(simulator.local_regret(h, 1, 2))
    assert local[1] == pytest.approx(simulator.local_regret(h, 3, 4))
    assert local[2] == pytest.approx(simulator.local_regret(h, 4, 5))
    assert running[-1] == pytest.approx(simulator.regret(h))


def test_run_loop_records_a_consistent_history():
    simulator = get_simulator()
    cfg = small_config(spec=TemplateSpec(widgets=[3, 2, 3], context=[2]), alphac=1.0,
                       algorithms=[ModelKind.MVT2C])
    truth = simulator.repetition_truth(cfg, 0)
    for algorithm in (ModelKind.MVT2C, ModelKind.MVT1, ModelKind.D_MABS, ModelKind.ND_MAB):
        h = simulator.run_loop(cfg, truth, algorithm, np.random.default_rng(1))
        assert len(h) == cfg.T
        assert h.layouts.shape == (cfg.T, 3)
        assert h.contexts.min() >= 1 and h.contexts.max() <= 2
        assert set(np.unique(h.rewards)) <= {1, -1}
        assert np.all(h.gaps >= -1e-15)


def test_run_loop_edge_cases():
    simulator = get_simulator()
    cfg = small_config(T=0)
    truth = simulator.repetition_truth(cfg, 0)
    assert len(simulator.run_loop(cfg, truth, ModelKind.MVT2, np.random.default_rng(0))) == 0
    with pytest.raises(ConfigurationError, match="MVT2c requires"):
        simulator.run_loop(cfg, truth, ModelKind.MVT2C, np.random.default_rng(0))


def test_train_folds_every_observation():
    simulator = get_simulator()
    cfg = small_config(T=120, batch_period=50)
    truth = simulator.repetition_truth(cfg, 0)
    history, posteriors = simulator.train(cfg, truth, ModelKind.D_MABS, np.random.default_rng(3))
    assert [p.widget for p in posteriors] == [0, 1, 2]
    for i, post in enumerate(posteriors):
        # the bias of each per-widget model sees every step
        assert post.variances[0] < 1.0
        shown = set(history.layouts[:, i])
        for content in range(1, 4):
            assert (post.variances[content] < 1.0) == (content in shown)


def test_oracle_policy_has_no_regret():
    simulator = get_simulator()
    cfg = small_config(T=200, argmax_modes={ModelKind.MVT2: "exhaustive"})
    truth = simulator.repetition_truth(cfg, 0)
    env = Environment(truth)
    post = GaussianPosterior(kind=ModelKind.MVT2, spec=cfg.spec, means=env.scaled,
                             variances=np.full(env.scaled.size, 1e-300))
    layout, _ = simulator.policy.thompson_select(post, None, cfg.argmax_mode(ModelKind.MVT2),
                                                 np.random.default_rng(0))
    assert simulator.true_expected_reward(truth, layout) == pytest.approx(env.best[0])


def test_experiment_is_reproducible():
    simulator = get_simulator()
    cfg = small_config()
    a = simulator.run_experiment(cfg, stride=25)
    b = simulator.run_experiment(cfg, stride=25)
    assert len(a.curves) == len(cfg.algorithms) * cfg.repetitions
    for x, y in zip(a.curves, b.curves):
        np.testing.assert_array_equal(x.local_regret, y.local_regret)
    for alg in cfg.algorithms:
        summary = a.summary(alg)
        finals = a.final_regrets(alg)
        assert summary.mean_regret == pytest.approx(np.mean(finals))
        assert summary.repetitions == 2


def test_experiment_runs_in_parallel_with_identical_results():
    simulator = get_simulator()
    cfg = small_config(algorithms=[ModelKind.MVT1, ModelKind.ND_MAB])
    serial = simulator.run_experiment(cfg, jobs=1, stride=50)
    parallel = simulator.run_experiment(cfg, jobs=2, stride=50)
    for x, y in zip(serial.curves, parallel.curves):
        assert (x.algorithm, x.repetition) == (y.algorithm, y.repetition)
        np.testing.assert_array_equal(x.regret, y.regret)


def test_reward_histogram_covers_every_layout():
    simulator = get_simulator()
    cfg = small_config(spec=TemplateSpec(widgets=[3, 3], context=[2]), alphac=1.0)
    counts, edges = simulator.expected_reward_histogram(simulator.repetition_truth(cfg, 0), bins=10)
    assert counts.sum() == 9 * 2
    assert edges[0] == 0.0 and edges[-1] == 1.0
