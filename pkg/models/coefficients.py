"""
Coefficient Function Models
Time-dependent scalar coefficients (velocity, damping, mean level)
"""
from typing import Annotated, List, Literal, Union
from pydantic import BaseModel, Field, model_validator


class ConstantFn(BaseModel):
    """
    f(t) = value
    """
    kind: Literal["const"] = "const"
    value: float


class SinusoidFn(BaseModel):
    """
    f(t) = offset + amplitude * sin(omega * t + phase)
    """
    kind: Literal["sin"] = "sin"
    offset: float
    amplitude: float
    omega: float
    phase: float = 0.0

    @model_validator(mode="after")
    def _check_frequency(self):
        if self.omega == 0.0:
            raise ValueError("omega must be non-zero; use a const coefficient instead")
        return self


class PiecewiseConstantFn(BaseModel):
    """
    Step function: values[0] before breakpoints[0], values[k] on [breakpoints[k-1], breakpoints[k])
    """
    kind: Literal["pwc"] = "pwc"
    breakpoints: List[float]
    values: List[float]

    @model_validator(mode="after")
    def _check_steps(self):
        if len(self.values) != len(self.breakpoints) + 1:
            raise ValueError("pwc needs exactly one more value than breakpoints")
        for left, right in zip(self.breakpoints, self.breakpoints[1:]):
            if right <= left:
                raise ValueError("pwc breakpoints must be strictly increasing")
        return self


CoefFn = Annotated[
    Union[ConstantFn, SinusoidFn, PiecewiseConstantFn],
    Field(discriminator="kind"),
]
