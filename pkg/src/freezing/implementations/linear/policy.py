import math
from typing import Dict, List

import numpy as np

from freezing.base.policy_base import PolicyBase, PolicyDecision, RunContext
from freezing.implementations.linear.models import LinearFreezeConfig
from freezing.schedules import cosine_lr
from py_models.configs import LinearPolicyConfig
from py_models.freeze_mask import FreezeMask


def zero_times(cfg: LinearFreezeConfig) -> List[float]:
    """t_i per unit, linearly spaced from t0 * total to total"""
    return np.linspace(cfg.t0 * cfg.total_iterations, cfg.total_iterations, cfg.num_units).tolist()


def linear_lr(cfg: LinearFreezeConfig, unit: int, t: float) -> float:
    """0.5 * lr(0) * (1 + cos(pi * t / t_i)); zero from t_i on"""
    return cosine_lr(cfg.base_lr, t, zero_times(cfg)[unit])


def linear_decide(cfg: LinearFreezeConfig, t: float) -> FreezeMask:
    """Units whose learning rate has reached zero, each stamped with the first iteration at or after its t_i"""
    frozen = {i: int(math.ceil(t_i)) for i, t_i in enumerate(zero_times(cfg)) if t >= t_i}
    return FreezeMask(frozen=frozen, total_units=cfg.num_units)


class LinearFreezingPolicy(PolicyBase):

    def __init__(self, params: LinearPolicyConfig, run: RunContext, **kwargs):
        super().__init__('linear', params, run, **kwargs)
        self.schedule = LinearFreezeConfig(t0=params.t0, total_iterations=run.total_iterations,
                                           base_lr=run.base_lr, num_units=run.num_units)

    def is_stage(self, t: int) -> bool:
        return True

    def decide(self, t: int, mask: FreezeMask) -> PolicyDecision:
        return PolicyDecision(units=set(linear_decide(self.schedule, t).frozen))

    def learning_rates(self, t: int, mask: FreezeMask) -> Dict[int, float]:
        return {u: linear_lr(self.schedule, u, t) for u in range(self.run.num_units) if u not in mask}
