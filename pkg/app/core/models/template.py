from enum import Enum
from math import prod
from typing import List, Optional, Sequence, Tuple
from pydantic import BaseModel, Field, ConfigDict, field_validator, model_validator

from app.config import get_settings
from app.core.errors import ConfigurationError, InvalidLayoutError

# Content values and context values are 1-based, widget and dimension
# positions are 0-based.
Layout = Tuple[int, ...]
Context = Tuple[int, ...]


class ModelKind(str, Enum):
    """Model families for layout reward regression."""
    MVT1 = "MVT1"
    MVT2 = "MVT2"
    MVT2C = "MVT2c"
    MVT3 = "MVT3"
    ND_MAB = "ND_MAB"
    D_MABS = "D_MABS"

    @property
    def uses_context(self) -> bool:
        return self is ModelKind.MVT2C

    @property
    def is_multivariate(self) -> bool:
        return self in (ModelKind.MVT1, ModelKind.MVT2, ModelKind.MVT2C, ModelKind.MVT3)


class TemplateSpec(BaseModel):
    """Page template: content alternatives per widget and context cardinalities."""
    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "example": {
                "widgets": [2, 3, 2, 2, 2],
                "context": []
            }
        }
    )

    widgets: Tuple[int, ...] = Field(
        ..., min_length=1, description="Number of content alternatives N_i per widget")
    context: Tuple[int, ...] = Field(
        default=(), description="Number of values G_l per context dimension")

    @field_validator('widgets')
    @classmethod
    def check_widget_sizes(cls, v):
        if any(n < 1 for n in v):
            raise ValueError("Every widget needs at least one content alternative")
        return v

    @field_validator('context')
    @classmethod
    def check_context_sizes(cls, v):
        if any(g < 1 for g in v):
            raise ValueError("Every context dimension needs at least one value")
        return v

    @model_validator(mode='after')
    def check_layout_space(self) -> 'TemplateSpec':
        limit = get_settings().LAYOUT_SPACE_LIMIT
        if self.layout_count > limit:
            raise ValueError(
                f"Template has {self.layout_count} layouts, more than the supported {limit}")
        return self

    @classmethod
    def uniform(cls, n: int, d: int, g: Optional[int] = None, l: int = 0) -> 'TemplateSpec':
        """Template with d widgets of n contents and l context dimensions of g values."""
        return cls(widgets=(n,) * d, context=(g,) * l if l else ())

    @property
    def D(self) -> int:
        return len(self.widgets)

    @property
    def L(self) -> int:
        return len(self.context)

    @property
    def layout_count(self) -> int:
        return prod(self.widgets)

    @property
    def context_count(self) -> int:
        return prod(self.context)

    @property
    def strides(self) -> Tuple[int, ...]:
        """Flat-index strides; the last widget varies fastest (lexicographic order)."""
        out = [1] * self.D
        for i in range(self.D - 2, -1, -1):
            out[i] = out[i + 1] * self.widgets[i + 1]
        return tuple(out)

    def validate_layout(self, layout: Sequence[int]) -> Layout:
        layout = tuple(int(a) for a in layout)
        if len(layout) != self.D:
            raise InvalidLayoutError(
                f"Layout has {len(layout)} entries, template has {self.D} widgets")
        for i, (a, n) in enumerate(zip(layout, self.widgets)):
            if not 1 <= a <= n:
                raise InvalidLayoutError(
                    f"Widget {i} content {a} outside 1..{n}")
        return layout

    def validate_context(self, context: Optional[Sequence[int]]) -> Context:
        context = tuple(int(x) for x in context) if context is not None else ()
        if len(context) != self.L:
            raise InvalidLayoutError(
                f"Context has {len(context)} entries, template has {self.L} dimensions")
        for l, (x, g) in enumerate(zip(context, self.context)):
            if not 1 <= x <= g:
                raise InvalidLayoutError(
                    f"Context dimension {l} value {x} outside 1..{g}")
        return context

    def layout_index(self, layout: Layout) -> int:
        return sum((a - 1) * s for a, s in zip(layout, self.strides))

    def layout_at(self, index: int) -> Layout:
        if not 0 <= index < self.layout_count:
            raise InvalidLayoutError(
                f"Layout index {index} outside 0..{self.layout_count - 1}")
        return tuple(index // s % n + 1 for s, n in zip(self.strides, self.widgets))

    def context_index(self, context: Context) -> int:
        index = 0
        for x, g in zip(context, self.context):
            index = index * g + (x - 1)
        return index

    def context_at(self, index: int) -> Context:
        values: List[int] = []
        for g in reversed(self.context):
            values.append(index % g + 1)
            index //= g
        return tuple(reversed(values))

    def check_kind(self, kind: ModelKind, widget: Optional[int] = None) -> None:
        """Raise ConfigurationError when a model kind cannot describe this template."""
        if kind is ModelKind.MVT2C and self.L < 1:
            raise ConfigurationError("MVT2c requires at least one context dimension")
        if kind is ModelKind.D_MABS:
            if widget is None or not 0 <= widget < self.D:
                raise ConfigurationError(
                    f"D_MABS needs a widget index in 0..{self.D - 1}, got {widget}")
        elif widget is not None:
            raise ConfigurationError(f"{kind.value} does not take a widget index")
