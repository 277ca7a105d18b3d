import math
from enum import Enum

import numpy as np
from pydantic import Field, model_validator

from app.core.config import settings
from app.schemas.base import DomainModel


class Strategy(str, Enum):
    COOPERATOR = "cooperator"
    DEFECTOR = "defector"
    LONER = "loner"


class GameParams(DomainModel):
    n: int = Field(default=5, ge=2)
    r: float = 3.0
    sigma: float = 1.0

    @model_validator(mode="after")
    def check_assumptions(self) -> "GameParams":
        if not 1.0 < self.r < self.n:
            raise ValueError(f"r must satisfy 1 < r < n, got r={self.r}, n={self.n}")
        if not 0.0 < self.sigma < self.r - 1.0:
            raise ValueError(
                f"sigma must satisfy 0 < sigma < r - 1, got sigma={self.sigma}, r={self.r}"
            )
        return self


class SimplexState(DomainModel):
    x: float
    y: float
    z: float

    @model_validator(mode="after")
    def check_simplex(self) -> "SimplexState":
        tol = settings.SIMPLEX_TOLERANCE
        values = (self.x, self.y, self.z)
        if not all(math.isfinite(value) for value in values):
            raise ValueError("frequencies must be finite")
        if min(values) < -tol:
            raise ValueError(f"frequencies must be non-negative, got {values}")
        if abs(sum(values) - 1.0) > tol:
            raise ValueError(f"frequencies must sum to 1, got sum={sum(values)!r}")
        return self

    @classmethod
    def from_array(cls, values) -> "SimplexState":
        return cls(x=float(values[0]), y=float(values[1]), z=float(values[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def distance(self, other: "SimplexState") -> float:
        return float(np.linalg.norm(self.as_array() - other.as_array()))


FULL_COOPERATION = SimplexState(x=1.0, y=0.0, z=0.0)


class PayoffVector(DomainModel):
    p_x: float
    p_y: float
    p_z: float
    p_bar: float
