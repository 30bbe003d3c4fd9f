"""
Gradient-norm freezing. M times per epoch each active unit's gradient norm
is recorded; its change rate is |now - prev| / max(prev, eps). The
floor(N * active) units with the lowest rates are freezable, but a unit
only freezes once every unit in front of it is frozen.
"""
import logging
from typing import Dict, List, Set

import numpy as np

from engine.network import Gradients, NetworkState
from freezing.base.policy_base import PolicyBase, PolicyDecision, RunContext
from py_models.configs import GradNormPolicyConfig
from py_models.freeze_mask import FreezeMask

logger = logging.getLogger('forensics')

EPS = 1e-12


def change_rate(previous: float, current: float) -> float:
    return abs(current - previous) / max(previous, EPS)


def gradnorm_decide(norms: Dict[int, List[float]], mask: FreezeMask, percentile: float) -> Set[int]:
    """Units to add to the mask; units with fewer than two evaluations are never freezable"""
    active = mask.active_units
    rates = {u: change_rate(norms[u][-2], norms[u][-1]) for u in active if len(norms.get(u, ())) >= 2}
    n_freezable = int(np.floor(percentile * len(active)))
    ranked = sorted(rates, key=lambda u: (rates[u], u))
    freezable = set(ranked[:n_freezable])

    added: Set[int] = set()
    for unit in range(mask.total_units):
        if unit in mask:
            continue
        if unit not in freezable:
            break
        added.add(unit)
    return added


def unit_grad_norm(unit_grads: Dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in unit_grads.values())))


class GradNormPolicy(PolicyBase):

    def __init__(self, params: GradNormPolicyConfig, run: RunContext, **kwargs):
        super().__init__('gradnorm', params, run, **kwargs)
        self.eval_interval = max(1, run.iterations_per_epoch // params.intervals_per_epoch)
        self.norms: Dict[int, List[float]] = {}

    def is_stage(self, t: int) -> bool:
        return t > 0 and t % self.eval_interval == 0

    def observe(self, t: int, state: NetworkState, grads: Gradients, mask: FreezeMask) -> None:
        if t % self.eval_interval != 0:
            return
        for unit_id, unit_grads in grads.by_unit.items():
            self.norms.setdefault(unit_id, []).append(unit_grad_norm(unit_grads))

    def decide(self, t: int, mask: FreezeMask) -> PolicyDecision:
        units = gradnorm_decide(self.norms, mask, self.params.percentile)
        if units:
            logger.debug(f"gradnorm: freezing {sorted(units)} at t={t}")
        for unit_id in units:
            self.norms.pop(unit_id, None)
        return PolicyDecision(units=units)
