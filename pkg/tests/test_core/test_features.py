import itertools

import numpy as np
import pytest

from app.core.errors import ConfigurationError, InvalidLayoutError, LayoutSpaceTooLargeError
from app.core.models import (
    Bias, ContentContext, ContextMain, FirstOrder, LayoutId, ModelKind, Pairwise, TemplateSpec,
    ThirdOrder,
)
from app.core.services.features import (
    FeatureEncoder, active_count, enumerate_layouts, get_encoder, identifiable_count, layout_grid,
    parameter_count,
)

ALL_KINDS = [ModelKind.MVT1, ModelKind.MVT2, ModelKind.MVT2C, ModelKind.MVT3, ModelKind.ND_MAB]


def test_parameter_counts():
    spec = TemplateSpec.uniform(8, 3)
    assert parameter_count(ModelKind.ND_MAB, spec) == 512
    assert parameter_count(ModelKind.MVT1, spec) == 25
    assert parameter_count(ModelKind.MVT2, spec) == 1 + 24 + 3 * 64
    assert parameter_count(ModelKind.MVT3, spec) == 217 + 512
    assert parameter_count(ModelKind.D_MABS, spec, widget=2) == 9

    # No pairs exist for a single widget
    assert parameter_count(ModelKind.MVT2, TemplateSpec.uniform(5, 1)) == 6

    contextual = TemplateSpec(widgets=[2, 3], context=[4, 2])
    assert parameter_count(ModelKind.MVT2C, contextual) == (1 + 5 + 6) + 6 + 5 * 6


def test_kind_requirements():
    spec = TemplateSpec.uniform(3, 2)
    with pytest.raises(ConfigurationError, match="MVT2c requires"):
        parameter_count(ModelKind.MVT2C, spec)
    with pytest.raises(ConfigurationError, match="widget index"):
        parameter_count(ModelKind.D_MABS, spec)
    with pytest.raises(ConfigurationError, match="does not take a widget"):
        parameter_count(ModelKind.MVT1, spec, widget=0)


def test_template_validation():
    with pytest.raises(ValueError, match="at least one content"):
        TemplateSpec(widgets=[3, 0])
    with pytest.raises(ValueError):
        TemplateSpec(widgets=[])
    with pytest.raises(ValueError, match="more than the supported"):
        TemplateSpec.uniform(2, 33)

    spec = TemplateSpec(widgets=[2, 3], context=[4])
    with pytest.raises(InvalidLayoutError, match="outside 1..3"):
        spec.validate_layout([1, 4])
    with pytest.raises(InvalidLayoutError, match="2 widgets"):
        spec.validate_layout([1])
    with pytest.raises(InvalidLayoutError, match="outside 1..4"):
        spec.validate_context([5])


def test_layout_index_is_lexicographic():
    spec = TemplateSpec(widgets=[2, 3, 2, 2, 2])
    layouts = list(enumerate_layouts(spec))
    assert len(layouts) == 48
    assert layouts == sorted(layouts)
    for index, layout in enumerate(layouts):
        assert spec.layout_index(layout) == index
        assert spec.layout_at(index) == layout

    grid = layout_grid(spec)
    assert [tuple(row + 1) for row in grid] == layouts


def test_enumerate_small_and_capped():
    assert list(enumerate_layouts(TemplateSpec.uniform(3, 1))) == [(1,), (2,), (3,)]
    assert sum(1 for _ in enumerate_layouts(TemplateSpec.uniform(8, 3))) == 512
    with pytest.raises(LayoutSpaceTooLargeError, match="hill_climb"):
        enumerate_layouts(TemplateSpec.uniform(8, 3), cap=100)


def test_active_counts():
    spec = TemplateSpec.uniform(8, 3)
    f = get_encoder(ModelKind.MVT2, spec).build_features([1, 1, 1])
    # bias, 3 first-order, 3 pairwise
    assert len(f) == 7
    assert f.dimension == 217

    nd = get_encoder(ModelKind.ND_MAB, spec).build_features([2, 1, 1])
    assert list(nd.active_indices) == [spec.layout_index((2, 1, 1))] == [64]

    contextual = TemplateSpec(widgets=[4, 4, 4], context=[4])
    fc = get_encoder(ModelKind.MVT2C, contextual).build_features([1, 2, 3], [2])
    assert len(fc) == 11 == active_count(ModelKind.MVT2C, contextual)

    fd = get_encoder(ModelKind.D_MABS, spec, 1).build_features([3, 5, 2])
    assert list(fd.active_indices) == [0, 5]


def test_context_rules():
    contextual = TemplateSpec(widgets=[2, 2], context=[3])
    with pytest.raises(ConfigurationError, match="need a context"):
        get_encoder(ModelKind.MVT2C, contextual).build_features([1, 1])
    with pytest.raises(ConfigurationError, match="take no context"):
        get_encoder(ModelKind.MVT2, contextual).build_features([1, 1], [2])
    with pytest.raises(InvalidLayoutError):
        get_encoder(ModelKind.MVT2C, contextual).build_features([1, 1], [4])


@pytest.mark.parametrize("kind", ALL_KINDS + [ModelKind.D_MABS])
def test_index_scheme_is_a_bijection(kind):
    rng = np.random.default_rng(5)
    for _ in range(50):
        d = int(rng.integers(1, 5))
        widgets = [int(n) for n in rng.integers(1, 5, size=d)]
        context = [int(g) for g in rng.integers(1, 4, size=int(rng.integers(1, 3)))]
        spec = TemplateSpec(widgets=widgets, context=context)
        widget = int(rng.integers(d)) if kind is ModelKind.D_MABS else None
        enc = FeatureEncoder(kind, spec, widget)
        descriptors = list(enc.descriptors())
        assert len(descriptors) == enc.dimension
        assert len(set(descriptors)) == enc.dimension
        assert [enc.index_of(desc) for desc in descriptors] == list(range(enc.dimension))


@pytest.mark.parametrize("widgets,context", [
    ([3, 3, 3], [2]),
    ([2, 4], [3]),
    ([2, 3, 2, 2], [2, 3]),
    ([5], [1, 2]),
    ([1, 3, 2], [2]),
])
def test_identifiable_count_is_the_design_rank(widgets, context):
    spec = TemplateSpec(widgets=widgets, context=context)
    for kind in ALL_KINDS:
        enc = get_encoder(kind, spec)
        contexts = [spec.context_at(c) for c in range(spec.context_count)] if kind.uses_context else [None]
        design = np.zeros((spec.layout_count * len(contexts), enc.dimension))
        rows = itertools.product(enumerate_layouts(spec), contexts)
        for row, (layout, ctx) in zip(design, rows):
            row[enc.build_features(layout, ctx).active_indices] = 1.0
        assert identifiable_count(kind, spec) == np.linalg.matrix_rank(design)
        assert identifiable_count(kind, spec) <= parameter_count(kind, spec)
    for i in range(spec.D):
        assert identifiable_count(ModelKind.D_MABS, spec, i) == widgets[i]


def test_canonical_order():
    spec = TemplateSpec(widgets=[2, 3, 2], context=[2])
    enc = get_encoder(ModelKind.MVT2C, spec)
    assert enc.index_of(Bias()) == 0
    assert enc.index_of(FirstOrder(widget=0, content=1)) == 1
    assert enc.index_of(FirstOrder(widget=1, content=1)) == 3
    assert enc.index_of(Pairwise(widget_a=0, content_a=1, widget_b=1, content_b=1)) == 8
    assert enc.index_of(Pairwise(widget_a=0, content_a=1, widget_b=1, content_b=2)) == 9
    assert enc.index_of(Pairwise(widget_a=0, content_a=2, widget_b=1, content_b=1)) == 11
    assert enc.index_of(ContextMain(dim=0, value=1)) == 1 + 7 + 6 + 4 + 6
    assert enc.descriptor_of(enc.dimension - 1) == ContentContext(widget=2, content=2, dim=0, value=2)

    mvt3 = get_encoder(ModelKind.MVT3, TemplateSpec.uniform(8, 3))
    assert mvt3.index_of(ThirdOrder(widgets=(0, 1, 2), contents=(1, 1, 1))) == 217
    assert get_encoder(ModelKind.MVT2, TemplateSpec.uniform(8, 3)).descriptor_of(216) == Pairwise(
        widget_a=1, content_a=8, widget_b=2, content_b=8)


def test_descriptors_foreign_to_the_kind_are_rejected():
    spec = TemplateSpec.uniform(3, 3)
    with pytest.raises(ConfigurationError):
        get_encoder(ModelKind.MVT1, spec).index_of(
            Pairwise(widget_a=0, content_a=1, widget_b=1, content_b=1))
    with pytest.raises(ConfigurationError):
        get_encoder(ModelKind.MVT2, spec).index_of(FirstOrder(widget=0, content=4))
    with pytest.raises(ConfigurationError):
        get_encoder(ModelKind.MVT2, spec).index_of(LayoutId(index=0))
    with pytest.raises(ConfigurationError):
        get_encoder(ModelKind.MVT2, spec).descriptor_of(spec.layout_count + 100)


def test_single_widget_change_substitutes_only_its_indices():
    spec = TemplateSpec(widgets=[3, 4, 2, 3], context=[2, 3])
    enc = get_encoder(ModelKind.MVT2C, spec)
    a = set(enc.build_features([1, 2, 1, 3], [2, 1]).active_indices)
    b = set(enc.build_features([1, 4, 1, 3], [2, 1]).active_indices)
    # one first-order, D-1 pairwise and L content-context weights
    assert len(a - b) == len(b - a) == 1 + 3 + 2


def test_incremental_rescoring_matches_full_scoring():
    rng = np.random.default_rng(11)
    spec = TemplateSpec(widgets=[3, 4, 2, 5], context=[3])
    for kind in ALL_KINDS:
        enc = get_encoder(kind, spec)
        context0 = np.array([1]) if kind.uses_context else None
        for _ in range(50):
            weights = rng.normal(size=enc.dimension)
            layout0 = rng.integers(0, np.asarray(spec.widgets))
            widget = int(rng.integers(spec.D))
            current = enc.score(weights, layout0, context0)
            candidates = enc.candidate_scores(weights, layout0, widget, current, context0)
            for content in range(spec.widgets[widget]):
                moved = layout0.copy()
                moved[widget] = content
                assert candidates[content] == pytest.approx(enc.score(weights, moved, context0))


def test_layout_matrix_rows_match_active_sets():
    spec = TemplateSpec(widgets=[2, 3, 2], context=[2])
    for kind in ALL_KINDS:
        enc = get_encoder(kind, spec)
        context0 = np.array([1]) if kind.uses_context else None
        matrix = enc.layout_matrix(context0)
        assert matrix.shape[0] == spec.layout_count
        assert not matrix.flags.writeable
        for index, layout in enumerate(itertools.product(*(range(n) for n in spec.widgets))):
            assert list(matrix[index]) == list(enc.active(np.array(layout), context0))
