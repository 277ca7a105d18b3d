from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, PlainSerializer


def _as_float_array(value: Any) -> np.ndarray:
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_float_array),
    PlainSerializer(lambda array: array.tolist(), return_type=list),
]


class DomainModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ArrayModel(DomainModel):
    """Domain value that carries per-node numpy arrays."""

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)
