"""Weight-index scheme and sparse feature construction for every model family.

Canonical index order for the multivariate models: bias, first-order by
(widget, content), pairwise by (j, k, a, b), third-order by (j, k, m, a, b, c),
context main by (dim, value), content-context by (widget, dim, content, value).
The layout-id bandit uses the flat lexicographic layout index, and the
per-widget bandit of widget i uses bias followed by the contents of widget i.
"""
from functools import lru_cache
from itertools import combinations, product
from math import comb
from typing import Dict, Iterator, List, Optional, Sequence, Tuple
import bisect
import logging

import numpy as np

from app.config import get_settings
from app.core.errors import ConfigurationError, LayoutSpaceTooLargeError
from app.core.models.posterior import FeatureVector
from app.core.models.template import Context, Layout, ModelKind, TemplateSpec
from app.core.models.weights import (
    Bias, ContentContext, ContextMain, FirstOrder, LayoutId, Pairwise, ThirdOrder,
    WeightDescriptor,
)

logger = logging.getLogger(__name__)


def parameter_count(kind: ModelKind, spec: TemplateSpec, widget: Optional[int] = None) -> int:
    """Exact number of weights M of a model family on a template."""
    spec.check_kind(kind, widget)
    n = spec.widgets
    if kind is ModelKind.ND_MAB:
        m = spec.layout_count
    elif kind is ModelKind.D_MABS:
        m = 1 + n[widget]
    else:
        m = 1 + sum(n)
        if kind is not ModelKind.MVT1:
            m += sum(n[j] * n[k] for j, k in combinations(range(spec.D), 2))
        if kind is ModelKind.MVT3:
            m += sum(n[j] * n[k] * n[c] for j, k, c in combinations(range(spec.D), 3))
        if kind is ModelKind.MVT2C:
            m += sum(spec.context) + sum(nm * g for nm in n for g in spec.context)
    limit = get_settings().LAYOUT_SPACE_LIMIT
    if m > limit:
        raise ConfigurationError(f"{kind.value} would need {m} weights, more than {limit}")
    return m


def identifiable_count(kind: ModelKind, spec: TemplateSpec, widget: Optional[int] = None) -> int:
    """Rank of a model's design over every (layout, context) pair.

    One-hot blocks are over-parameterized: each widget (and context dimension)
    spends one level on the bias, so a term over factors of sizes n1, n2, ...
    contributes (n1 - 1)(n2 - 1)... directions the data can pin down. This is
    the number of weights a likelihood fit actually estimates.
    """
    spec.check_kind(kind, widget)
    free = [n - 1 for n in spec.widgets]
    if kind is ModelKind.ND_MAB:
        return spec.layout_count
    if kind is ModelKind.D_MABS:
        return 1 + free[widget]
    rank = 1 + sum(free)
    if kind is not ModelKind.MVT1:
        rank += sum(free[j] * free[k] for j, k in combinations(range(spec.D), 2))
    if kind is ModelKind.MVT3:
        rank += sum(free[j] * free[k] * free[c] for j, k, c in combinations(range(spec.D), 3))
    if kind is ModelKind.MVT2C:
        levels = [g - 1 for g in spec.context]
        rank += sum(levels) + sum(f * g for f in free for g in levels)
    return rank


def active_count(kind: ModelKind, spec: TemplateSpec) -> int:
    """Number of active indices in every feature vector of a model family."""
    d, l = spec.D, spec.L
    if kind is ModelKind.ND_MAB:
        return 1
    if kind is ModelKind.D_MABS:
        return 2
    count = 1 + d
    if kind is not ModelKind.MVT1:
        count += comb(d, 2)
    if kind is ModelKind.MVT3:
        count += comb(d, 3)
    if kind is ModelKind.MVT2C:
        count += l + d * l
    return count


def enumerate_layouts(spec: TemplateSpec, cap: Optional[int] = None) -> Iterator[Layout]:
    """Every layout exactly once, in lexicographic order."""
    cap = get_settings().EXHAUSTIVE_CAP if cap is None else cap
    if spec.layout_count > cap:
        raise LayoutSpaceTooLargeError(spec.layout_count, cap)
    return product(*(range(1, n + 1) for n in spec.widgets))


def layout_grid(spec: TemplateSpec, cap: Optional[int] = None) -> np.ndarray:
    """All layouts as a (count, D) array of 0-based contents, lexicographic order."""
    cap = get_settings().EXHAUSTIVE_CAP if cap is None else cap
    if spec.layout_count > cap:
        raise LayoutSpaceTooLargeError(spec.layout_count, cap)
    grids = np.indices(spec.widgets).reshape(spec.D, -1)
    return np.ascontiguousarray(grids.T)


class FeatureEncoder:
    """Maps (layout, context) to active weight indices for one model family.

    Lookup tables hold, per weight group, the index of every content
    combination so that scoring and single-widget rescoring are array gathers.
    """

    def __init__(self, kind: ModelKind, spec: TemplateSpec, widget: Optional[int] = None):
        spec.check_kind(kind, widget)
        self.kind = kind
        self.spec = spec
        self.widget = widget
        self.dimension = parameter_count(kind, spec, widget)
        self.active_count = active_count(kind, spec)
        self._strides = np.asarray(spec.strides, dtype=np.int64)
        self._matrices: Dict[Context, np.ndarray] = {}
        self._build_tables()

    # ------------------------------------------------------------------ tables

    def _build_tables(self) -> None:
        n = self.spec.widgets
        self.first: Dict[int, np.ndarray] = {}
        self.pairs: Dict[Tuple[int, int], np.ndarray] = {}
        self.triples: Dict[Tuple[int, int, int], np.ndarray] = {}
        self.context_main: Dict[int, np.ndarray] = {}
        self.content_context: Dict[Tuple[int, int], np.ndarray] = {}
        # (group name, key, offset) in index order, for descriptor_of
        self._groups: List[Tuple[str, tuple, int]] = []
        self._neighbors: Dict[int, List[Tuple[np.ndarray, Tuple[int, ...]]]] = {}

        if self.kind is ModelKind.ND_MAB:
            self._groups.append(("layout_id", (), 0))
            return

        offset = 0
        self._groups.append(("bias", (), offset))
        offset += 1

        if self.kind is ModelKind.D_MABS:
            i = self.widget
            self.first[i] = offset + np.arange(n[i])
            self._groups.append(("first_order", (i,), offset))
            return

        for i in range(self.spec.D):
            self.first[i] = offset + np.arange(n[i])
            self._groups.append(("first_order", (i,), offset))
            offset += n[i]

        if self.kind is not ModelKind.MVT1:
            for j, k in combinations(range(self.spec.D), 2):
                self.pairs[(j, k)] = offset + np.arange(n[j] * n[k]).reshape(n[j], n[k])
                self._groups.append(("pairwise", (j, k), offset))
                offset += n[j] * n[k]

        if self.kind is ModelKind.MVT3:
            for j, k, c in combinations(range(self.spec.D), 3):
                size = n[j] * n[k] * n[c]
                self.triples[(j, k, c)] = offset + np.arange(size).reshape(n[j], n[k], n[c])
                self._groups.append(("third_order", (j, k, c), offset))
                offset += size

        if self.kind is ModelKind.MVT2C:
            for l, g in enumerate(self.spec.context):
                self.context_main[l] = offset + np.arange(g)
                self._groups.append(("context_main", (l,), offset))
                offset += g
            for m in range(self.spec.D):
                for l, g in enumerate(self.spec.context):
                    self.content_context[(m, l)] = offset + np.arange(n[m] * g).reshape(n[m], g)
                    self._groups.append(("content_context", (m, l), offset))
                    offset += n[m] * g

        assert offset == self.dimension, (offset, self.dimension)
        self._neighbors = {i: self._neighbors_of(i) for i in range(self.spec.D)}

    def _neighbors_of(self, i: int) -> List[Tuple[np.ndarray, Tuple[int, ...]]]:
        """Interaction tables touching widget i, with widget i moved to axis 0."""
        out = []
        for key, table in list(self.pairs.items()) + list(self.triples.items()):
            if i in key:
                axis = key.index(i)
                others = tuple(w for w in key if w != i)
                out.append((np.moveaxis(table, axis, 0), others))
        return out

    # ---------------------------------------------------------- index scheme

    def index_of(self, desc: WeightDescriptor) -> int:
        """Weight index of a descriptor under this model family."""
        n = self.spec.widgets
        try:
            if isinstance(desc, LayoutId) and self.kind is ModelKind.ND_MAB:
                if desc.index >= self.spec.layout_count:
                    raise IndexError(desc.index)
                return desc.index
            if isinstance(desc, Bias) and self.kind is not ModelKind.ND_MAB:
                return 0
            if isinstance(desc, FirstOrder) and desc.widget in self.first:
                return int(self.first[desc.widget][self._content(desc.widget, desc.content)])
            if isinstance(desc, Pairwise) and (desc.widget_a, desc.widget_b) in self.pairs:
                table = self.pairs[(desc.widget_a, desc.widget_b)]
                return int(table[self._content(desc.widget_a, desc.content_a),
                                 self._content(desc.widget_b, desc.content_b)])
            if isinstance(desc, ThirdOrder) and desc.widgets in self.triples:
                table = self.triples[desc.widgets]
                return int(table[tuple(self._content(w, c)
                                       for w, c in zip(desc.widgets, desc.contents))])
            if isinstance(desc, ContextMain) and desc.dim in self.context_main:
                return int(self.context_main[desc.dim][self._value(desc.dim, desc.value)])
            if isinstance(desc, ContentContext) and (desc.widget, desc.dim) in self.content_context:
                table = self.content_context[(desc.widget, desc.dim)]
                return int(table[self._content(desc.widget, desc.content),
                                 self._value(desc.dim, desc.value)])
        except IndexError:
            pass
        raise ConfigurationError(f"{desc!r} is not a weight of {self.kind.value} on {n}")

    def _content(self, widget: int, content: int) -> int:
        if not 1 <= content <= self.spec.widgets[widget]:
            raise IndexError(content)
        return content - 1

    def _value(self, dim: int, value: int) -> int:
        if not 1 <= value <= self.spec.context[dim]:
            raise IndexError(value)
        return value - 1

    def descriptor_of(self, index: int) -> WeightDescriptor:
        """Inverse of index_of."""
        if not 0 <= index < self.dimension:
            raise ConfigurationError(
                f"Weight index {index} outside 0..{self.dimension - 1} for {self.kind.value}")
        offsets = [g[2] for g in self._groups]
        name, key, offset = self._groups[bisect.bisect_right(offsets, index) - 1]
        local = index - offset
        n = self.spec.widgets
        if name == "layout_id":
            return LayoutId(index=index)
        if name == "bias":
            return Bias()
        if name == "first_order":
            return FirstOrder(widget=key[0], content=local + 1)
        if name == "pairwise":
            j, k = key
            a, b = divmod(local, n[k])
            return Pairwise(widget_a=j, content_a=a + 1, widget_b=k, content_b=b + 1)
        if name == "third_order":
            shape = tuple(n[w] for w in key)
            contents = np.unravel_index(local, shape)
            return ThirdOrder(widgets=key, contents=tuple(int(c) + 1 for c in contents))
        if name == "context_main":
            return ContextMain(dim=key[0], value=local + 1)
        m, l = key
        content, value = divmod(local, self.spec.context[l])
        return ContentContext(widget=m, content=content + 1, dim=l, value=value + 1)

    def groups(self) -> Iterator[Tuple[str, tuple, int, int]]:
        """(weight class, key, start, stop) of every contiguous weight group."""
        bounds = [g[2] for g in self._groups[1:]] + [self.dimension]
        for (name, key, start), stop in zip(self._groups, bounds):
            yield name, key, start, stop

    def descriptors(self) -> Iterator[WeightDescriptor]:
        """Every weight descriptor in index order."""
        for index in range(self.dimension):
            yield self.descriptor_of(index)

    # ---------------------------------------------------------------- features

    def build_features(self, layout: Sequence[int], context: Optional[Sequence[int]] = None) -> FeatureVector:
        """Sparse feature vector of a layout (and context for MVT2c)."""
        layout = self.spec.validate_layout(layout)
        if self.kind.uses_context:
            if context is None:
                raise ConfigurationError("MVT2c features need a context")
            ctx = np.asarray(self.spec.validate_context(context), dtype=np.int64) - 1
        else:
            if context is not None and len(context):
                raise ConfigurationError(f"{self.kind.value} features take no context")
            ctx = None
        indices = self.active(np.asarray(layout, dtype=np.int64) - 1, ctx)
        return FeatureVector(active_indices=indices, dimension=self.dimension)

    def active(self, layout0: np.ndarray, context0: Optional[np.ndarray] = None) -> np.ndarray:
        """Active indices for a validated 0-based layout and context, in index order."""
        if self.kind is ModelKind.ND_MAB:
            return np.array([int(layout0 @ self._strides)], dtype=np.int64)
        out = [0]
        for i, table in self.first.items():
            out.append(table[layout0[i]])
        for (j, k), table in self.pairs.items():
            out.append(table[layout0[j], layout0[k]])
        for (j, k, c), table in self.triples.items():
            out.append(table[layout0[j], layout0[k], layout0[c]])
        if context0 is not None:
            for l, table in self.context_main.items():
                out.append(table[context0[l]])
            for (m, l), table in self.content_context.items():
                out.append(table[layout0[m], context0[l]])
        return np.asarray(out, dtype=np.int64)

    # ----------------------------------------------------------------- scoring

    def score(self, weights: np.ndarray, layout0: np.ndarray, context0: Optional[np.ndarray] = None) -> float:
        """B^T w for a 0-based layout."""
        return float(weights[self.active(layout0, context0)].sum())

    def contributions(
        self,
        weights: np.ndarray,
        layout0: np.ndarray,
        widget: int,
        context0: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Sum of the weights involving `widget`, for each of its contents.

        Only O(D + L) tables are touched; everything not involving the widget is
        unchanged by a single-widget move.
        """
        if self.kind is ModelKind.ND_MAB:
            base = int(layout0 @ self._strides) - int(layout0[widget]) * int(self._strides[widget])
            return weights[base + self._strides[widget] * np.arange(self.spec.widgets[widget])]
        if widget not in self.first:
            return np.zeros(self.spec.widgets[widget])
        total = weights[self.first[widget]].copy()
        for table, others in self._neighbors.get(widget, ()):
            total += weights[table[(slice(None),) + tuple(int(layout0[o]) for o in others)]]
        if context0 is not None:
            for l in self.context_main:
                total += weights[self.content_context[(widget, l)][:, context0[l]]]
        return total

    def candidate_scores(
        self,
        weights: np.ndarray,
        layout0: np.ndarray,
        widget: int,
        current: float,
        context0: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Scores of every content for `widget`, other widgets fixed."""
        contrib = self.contributions(weights, layout0, widget, context0)
        return (current - contrib[layout0[widget]]) + contrib

    def layout_matrix(self, context0: Optional[np.ndarray] = None, cap: Optional[int] = None) -> np.ndarray:
        """Active indices of every layout, one row per layout in lexicographic order."""
        key = tuple(int(x) for x in context0) if context0 is not None else ()
        cached = self._matrices.get(key)
        if cached is not None:
            return cached
        grid = layout_grid(self.spec, cap)
        if self.kind is ModelKind.ND_MAB:
            matrix = (grid @ self._strides)[:, None]
        else:
            cols = [np.zeros(len(grid), dtype=np.int64)]
            for i, table in self.first.items():
                cols.append(table[grid[:, i]])
            for (j, k), table in self.pairs.items():
                cols.append(table[grid[:, j], grid[:, k]])
            for (j, k, c), table in self.triples.items():
                cols.append(table[grid[:, j], grid[:, k], grid[:, c]])
            if context0 is not None:
                for l, table in self.context_main.items():
                    cols.append(np.full(len(grid), table[context0[l]], dtype=np.int64))
                for (m, l), table in self.content_context.items():
                    cols.append(table[grid[:, m], context0[l]])
            matrix = np.stack(cols, axis=1)
        matrix.flags.writeable = False
        self._matrices[key] = matrix
        logger.debug(f"Built {matrix.shape} layout matrix for {self.kind.value} context {key}")
        return matrix


@lru_cache(maxsize=256)
def get_encoder(kind: ModelKind, spec: TemplateSpec, widget: Optional[int] = None) -> FeatureEncoder:
    """Shared encoder per (kind, template, widget); encoders are read-only after construction."""
    return FeatureEncoder(kind, spec, widget)
