from typing import Annotated, Literal, Tuple, Union
from pydantic import BaseModel, Field, ConfigDict, model_validator


class _Weight(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Bias(_Weight):
    """Common bias weight."""
    weight_class: Literal["bias"] = "bias"


class FirstOrder(_Weight):
    """Impact of content `content` in widget `widget`."""
    weight_class: Literal["first_order"] = "first_order"
    widget: int = Field(..., ge=0)
    content: int = Field(..., ge=1)


class Pairwise(_Weight):
    """Interaction of two widget contents, widgets in increasing order."""
    weight_class: Literal["pairwise"] = "pairwise"
    widget_a: int = Field(..., ge=0)
    content_a: int = Field(..., ge=1)
    widget_b: int = Field(..., ge=0)
    content_b: int = Field(..., ge=1)

    @model_validator(mode='after')
    def check_order(self) -> 'Pairwise':
        if not self.widget_a < self.widget_b:
            raise ValueError("Pairwise widgets must be strictly increasing")
        return self


class ThirdOrder(_Weight):
    """Three-way content interaction, widgets strictly increasing."""
    weight_class: Literal["third_order"] = "third_order"
    widgets: Tuple[int, int, int]
    contents: Tuple[int, int, int]

    @model_validator(mode='after')
    def check_order(self) -> 'ThirdOrder':
        a, b, c = self.widgets
        if not 0 <= a < b < c:
            raise ValueError("Third-order widgets must be strictly increasing")
        if min(self.contents) < 1:
            raise ValueError("Content values start at 1")
        return self


class ContextMain(_Weight):
    """Impact of value `value` of context dimension `dim`."""
    weight_class: Literal["context_main"] = "context_main"
    dim: int = Field(..., ge=0)
    value: int = Field(..., ge=1)


class ContentContext(_Weight):
    """Interaction of a widget content with a context value."""
    weight_class: Literal["content_context"] = "content_context"
    widget: int = Field(..., ge=0)
    content: int = Field(..., ge=1)
    dim: int = Field(..., ge=0)
    value: int = Field(..., ge=1)


class LayoutId(_Weight):
    """Weight of one distinct layout, by flat lexicographic index."""
    weight_class: Literal["layout_id"] = "layout_id"
    index: int = Field(..., ge=0)


WeightDescriptor = Annotated[
    Union[Bias, FirstOrder, Pairwise, ThirdOrder, ContextMain, ContentContext, LayoutId],
    Field(discriminator="weight_class"),
]
