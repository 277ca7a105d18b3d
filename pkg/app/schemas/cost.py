from pydantic import Field, model_validator

from app.core.exceptions import InvalidWeightsError
from app.schemas.base import DomainModel
from app.schemas.game import FULL_COOPERATION, SimplexState


class CostWeights(DomainModel):
    alpha1: float = Field(default=0.0, ge=0.0)
    alpha2: float = Field(default=0.0, ge=0.0)
    alpha3: float = Field(default=0.0, ge=0.0)
    alpha4: float = Field(default=0.0, ge=0.0)
    w_star: SimplexState = FULL_COOPERATION
    v_max: float = Field(default=1.0, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def check_weights(self) -> "CostWeights":
        if self.total_weight <= 0.0:
            raise InvalidWeightsError("at least one cost weight must be positive")
        return self

    @property
    def alphas(self) -> tuple[float, float, float, float]:
        return (self.alpha1, self.alpha2, self.alpha3, self.alpha4)

    @property
    def total_weight(self) -> float:
        return sum(self.alphas)

    @property
    def strictly_convex(self) -> bool:
        # the Hamiltonian is strictly convex in v only with a quadratic control penalty
        return self.alpha3 > 0.0 or self.alpha4 > 0.0


# weights of the constant-versus-optimal comparison functional
COMPARISON_WEIGHTS = CostWeights(alpha1=0.0, alpha2=0.04, alpha3=0.001, alpha4=0.959)


class CostBreakdown(DomainModel):
    terminal: float
    tracking: float
    effort: float
    punished: float
    total: float
    punished_integral: float
