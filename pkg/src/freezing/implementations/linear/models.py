from pydantic import Field

from py_models.base import StrictModel


class LinearFreezeConfig(StrictModel):
    """Per-unit cosine schedules whose zero points t_i are evenly spaced over [t0 * total, total]"""
    t0: float = Field(0.5, gt=0, le=1)
    total_iterations: int = Field(..., ge=0)
    base_lr: float = Field(..., ge=0)
    num_units: int = Field(..., ge=1)
