from pathlib import Path

import pytest

from app.core.errors import ConfigurationError
from app.core.models import ArgmaxMode, ModelKind
from app.core.schemas.experiment import load_experiment, parse_experiment

CONFIGS = Path(__file__).resolve().parents[2] / "configs"

BASE = """\
template:
  widgets: [2, 3, 2]
environment:
  alpha2: 2
  seed: 7
run:
  T: 100
  repetitions: 3
"""


def test_defaults_and_conversion():
    experiment = parse_experiment(BASE)
    cfg = experiment.to_sim_config()
    assert cfg.spec.widgets == (2, 3, 2)
    assert cfg.alpha1 == 1.0
    assert cfg.alpha2 == 2.0
    assert cfg.seed == 7
    assert cfg.algorithms == [ModelKind.MVT1, ModelKind.MVT2, ModelKind.ND_MAB]
    assert cfg.window == 2500
    # Test hill climbing defaults to six steps per widget
    assert cfg.hill_climb_config().max_steps == 18
    assert cfg.hill_climb_config().restarts == 5
    assert experiment.to_sim_config(seed=11).seed == 11


def test_argmax_modes():
    single = parse_experiment(BASE + "  algorithms: [MVT2, D_MABS]\n  argmax_mode: exhaustive\n")
    cfg = single.to_sim_config()
    assert cfg.argmax_mode(ModelKind.MVT2) is ArgmaxMode.EXHAUSTIVE
    assert ModelKind.D_MABS not in cfg.argmax_modes

    per_algorithm = parse_experiment(BASE + "  argmax_mode: {MVT1: exhaustive}\n")
    cfg = per_algorithm.to_sim_config()
    assert cfg.argmax_mode(ModelKind.MVT1) is ArgmaxMode.EXHAUSTIVE
    assert cfg.argmax_mode(ModelKind.MVT2) is ArgmaxMode.HILL_CLIMB
    assert cfg.argmax_mode(ModelKind.ND_MAB) is ArgmaxMode.EXHAUSTIVE


def test_unknown_key_reports_its_line():
    text = BASE + "  bogus: 1\n"
    with pytest.raises(ConfigurationError) as info:
        parse_experiment(text, "exp.yaml")
    assert "exp.yaml:9: run.bogus" in str(info.value)


def test_invalid_values_report_their_lines():
    text = BASE.replace("T: 100", "T: -5")
    with pytest.raises(ConfigurationError) as info:
        parse_experiment(text, "exp.yaml")
    assert "exp.yaml:7: run.T" in str(info.value)

    with pytest.raises(ConfigurationError, match="algorithms"):
        parse_experiment(BASE + "  algorithms: [MVT1, MVT9]\n")


def test_cross_field_rules():
    # Test context amplitude without a context dimension
    with pytest.raises(ConfigurationError, match="alphac > 0 requires"):
        parse_experiment(BASE.replace("alpha2: 2", "alphac: 1"))

    with pytest.raises(ConfigurationError, match="MVT2c requires"):
        parse_experiment(BASE + "  algorithms: [MVT2c]\n")

    with pytest.raises(ConfigurationError, match="content alternative"):
        parse_experiment(BASE.replace("[2, 3, 2]", "[2, 0, 2]"))

    with_context = parse_experiment(
        BASE.replace("widgets: [2, 3, 2]", "widgets: [2, 3, 2]\n  context: [4]")
        + "  algorithms: [MVT2, MVT2c]\n")
    assert with_context.spec().context == (4,)


def test_malformed_documents():
    with pytest.raises(ConfigurationError, match="not valid YAML"):
        parse_experiment("template: [unclosed")
    with pytest.raises(ConfigurationError, match="mapping"):
        parse_experiment("- just\n- a list\n")
    with pytest.raises(ConfigurationError, match="template"):
        parse_experiment("run: {T: 5}\n")


def test_with_value():
    experiment = parse_experiment(BASE)
    assert experiment.with_value("alpha2", 0.5).environment.alpha2 == 0.5
    assert experiment.with_value("N", 4).template.widgets == [4, 4, 4]
    assert experiment.template.widgets == [2, 3, 2]
    with pytest.raises(ConfigurationError):
        experiment.with_value("N", 2.5)
    with pytest.raises(ConfigurationError):
        experiment.with_value("T", 10)


def test_study_section():
    experiment = parse_experiment(BASE + "study:\n  algorithm: MVT1\n  max_steps: [1, 3]\n  trials: 10\n")
    assert experiment.study.algorithm is ModelKind.MVT1
    assert experiment.study.max_steps == [1, 3]
    assert experiment.study.restarts == [1]
    with pytest.raises(ConfigurationError):
        parse_experiment(BASE + "study:\n  max_steps: []\n")


def test_shipped_configs_are_valid():
    for name in ("smoke", "interactions", "context", "hillclimb_study"):
        experiment = load_experiment(CONFIGS / f"{name}.yaml")
        assert experiment.to_sim_config().repetitions >= 1


def test_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        load_experiment(tmp_path / "absent.yaml")
