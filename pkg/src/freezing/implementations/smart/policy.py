import logging
from typing import Optional

from engine.network import Gradients, NetworkState
from freezing.base.policy_base import PolicyBase, PolicyDecision, RunContext
from helpers.errors import ConfigError, DimensionMismatchError
from predictor.model import AttentionPredictor
from py_models.configs import SmartPolicyConfig
from py_models.freeze_mask import FreezeMask
from tailoring.history import HistoryBuffer
from tailoring.plan import TailorPlan, make_plan, snapshot

logger = logging.getLogger('forensics')


def smart_decide(predictor: Optional[AttentionPredictor], buffers: HistoryBuffer, mask: FreezeMask,
                 min_history: int = 5) -> PolicyDecision:
    """
    Ask the predictor about every active unit with at least `min_history`
    snapshots. Any unit may freeze, front units need not go first.
    """
    if predictor is None:
        raise ConfigError("attention-guided freezing needs a predictor", key_path='predictor')
    decision = PolicyDecision()
    for unit_id in mask.active_units:
        if buffers.count(unit_id) < min_history:
            continue
        sequence = buffers.sequence(unit_id)
        trace = predictor.decide(sequence)
        decision.predictor_flops += predictor.inference_flops(len(sequence))
        if trace.decision == 1:
            decision.units.add(unit_id)
            decision.confidences[unit_id] = trace.freeze_confidence
    return decision


class SmartFreezingPolicy(PolicyBase):

    def __init__(self, params: SmartPolicyConfig, run: RunContext, predictor: Optional[AttentionPredictor] = None,
                 **kwargs):
        super().__init__('smart', params, run, **kwargs)
        if predictor is None:
            raise ConfigError("policy 'smart' requires a predictor", key_path='predictor')
        if predictor.tailored_size != params.tailored_size:
            raise DimensionMismatchError(
                f"predictor expects snapshots of {predictor.tailored_size} values, policy tailors to {params.tailored_size}")
        self.predictor = predictor
        self.freeze_interval = params.freeze_interval or max(1, run.iterations_per_epoch // 4)
        self.snapshot_interval = params.snapshot_interval or self.freeze_interval
        self.plan: Optional[TailorPlan] = None
        self._buffers = HistoryBuffer(window=params.window, tailored_size=params.tailored_size)

    @property
    def buffers(self) -> HistoryBuffer:
        return self._buffers

    def start(self, state: NetworkState, mask: FreezeMask) -> None:
        self.plan = make_plan(state, self.params.tailored_size, self.params.tailor_seed)
        self._buffers.push(snapshot(state, self.plan, 0, mask))

    def is_stage(self, t: int) -> bool:
        return t > 0 and t % self.freeze_interval == 0

    def observe(self, t: int, state: NetworkState, grads: Gradients, mask: FreezeMask) -> None:
        if t % self.snapshot_interval == 0:
            self._buffers.push(snapshot(state, self.plan, t, mask))

    def decide(self, t: int, mask: FreezeMask) -> PolicyDecision:
        decision = smart_decide(self.predictor, self._buffers, mask, self.params.min_history)
        if decision.units:
            logger.debug(f"smart: freezing {sorted(decision.units)} at t={t}")
        return decision
