"""Base class for freezing policies and the mask-update rule they share"""
import logging
from pathlib import Path
from typing import Dict, Iterable, Optional, Set, Union

import yaml
from pydantic import BaseModel, Field

from engine.network import Gradients, NetworkState
from freezing.schedules import global_lr
from helpers.errors import ContractError
from py_models.freeze_mask import FreezeMask
from tailoring.history import HistoryBuffer

logger = logging.getLogger('forensics')


class RunContext(BaseModel):
    """What a policy knows about the run it steers"""
    num_units: int = Field(..., ge=1)
    iterations_per_epoch: int = Field(..., ge=1)
    total_iterations: int = Field(..., ge=0)
    base_lr: float = Field(..., ge=0)
    lr_schedule: str = 'cosine'


class PolicyDecision(BaseModel):
    units: Set[int] = Field(default_factory=set)
    confidences: Dict[int, float] = Field(default_factory=dict)
    predictor_flops: int = 0


def apply_mask(old: FreezeMask, new_units: Union[FreezeMask, Iterable[int]], t: int,
               buffers: Optional[HistoryBuffer] = None) -> FreezeMask:
    """
    Union of the old mask and the new units, stamped with iteration t.
    A proposed mask that drops a frozen unit is an attempt to unfreeze.
    """
    if isinstance(new_units, FreezeMask):
        dropped = set(old.frozen) - set(new_units.frozen)
        if dropped:
            raise ContractError(f"cannot unfreeze units {sorted(dropped)}")
        new_units = new_units.frozen.keys()
    mask = old.with_units(new_units, t)
    added = set(mask.frozen) - set(old.frozen)
    if added and buffers is not None:
        buffers.release(added)
    return mask


class PolicyBase:
    """
    A freezing policy. The training loop calls, per iteration t:
    is_stage(t) -> decide(t, mask) -> learning_rates(t, mask) -> [train step] -> observe(t + 1, ...)
    """

    def __init__(self, kind: str, params: BaseModel, run: RunContext, config_override: Optional[Dict] = None):
        self.kind = kind
        self.params = params
        self.run = run
        self.config = self._load_config(kind, config_override)
        self.name = self.config.get('name', kind)

    def _load_config(self, kind: str, config_override: Optional[Dict] = None) -> Dict:
        """Policy metadata from implementations/<kind>/config.yaml"""
        config_path = Path(__file__).parent.parent / "implementations" / kind / "config.yaml"
        if not config_path.exists():
            logger.warning(f"Config file not found for policy '{kind}' at {config_path}")
            return dict(config_override or {})
        with open(config_path, 'r') as f:
            config = yaml.safe_load(f) or {}
        if config_override:
            config.update(config_override)
        return config

    def get_capability(self, capability: str) -> bool:
        return capability in self.config.get('capabilities', [])

    def get_description(self) -> str:
        return self.config.get('description', f"Policy: {self.kind}")

    @property
    def buffers(self) -> Optional[HistoryBuffer]:
        return None

    def start(self, state: NetworkState, mask: FreezeMask) -> None:
        """Called once before the first iteration"""

    def is_stage(self, t: int) -> bool:
        return False

    def decide(self, t: int, mask: FreezeMask) -> PolicyDecision:
        return PolicyDecision()

    def learning_rates(self, t: int, mask: FreezeMask) -> Dict[int, float]:
        lr = global_lr(self.run.lr_schedule, self.run.base_lr, t, self.run.total_iterations)
        return {u: lr for u in range(self.run.num_units) if u not in mask}

    def observe(self, t: int, state: NetworkState, grads: Gradients, mask: FreezeMask) -> None:
        """Called after the update of iteration t - 1, with the gradients it used"""
