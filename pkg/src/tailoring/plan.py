from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import Field

from engine.network import NetworkState
from helpers.errors import ContractError
from py_models.base import ArrayModel
from py_models.freeze_mask import FreezeMask

DEFAULT_TAILORED_SIZE = 1024


class TailorPlan(ArrayModel):
    """Fixed flat indices into each unit's weight tensor, drawn once per run"""
    tailored_size: int = Field(..., ge=1)
    seed: int
    indices: Dict[int, np.ndarray]

    def sample(self, unit_id: int, weight: np.ndarray) -> np.ndarray:
        return np.asarray(weight, dtype=np.float32).reshape(-1)[self.indices[unit_id]]


class WeightSnapshot(ArrayModel):
    unit_id: int
    timestamp: int
    values: np.ndarray


def _unit_indices(size: int, tailored_size: int, rng: np.random.Generator) -> np.ndarray:
    if size >= tailored_size:
        return np.sort(rng.choice(size, size=tailored_size, replace=False))
    # small tensors: every index once, then cycled to the uniform length
    return np.resize(np.arange(size), tailored_size)


def make_plan(state: NetworkState, tailored_size: int = DEFAULT_TAILORED_SIZE, seed: int = 0) -> TailorPlan:
    if tailored_size < 1:
        raise ContractError(f"tailored_size must be >= 1, got {tailored_size}")
    indices = {}
    for unit in state.units:
        size = state.weight_tensor(unit.unit_id).size
        rng = np.random.default_rng([seed, unit.unit_id])
        indices[unit.unit_id] = _unit_indices(size, tailored_size, rng)
    return TailorPlan(tailored_size=tailored_size, seed=seed, indices=indices)


def snapshot(state: NetworkState, plan: TailorPlan, t: int,
             mask: Optional[Union[FreezeMask, set]] = None) -> List[WeightSnapshot]:
    """Tailored weights of every active unit at iteration t"""
    frozen = set(mask.frozen) if isinstance(mask, FreezeMask) else set(mask or ())
    snapshots = []
    for unit in state.units:
        if unit.unit_id in frozen:
            continue
        if unit.unit_id not in plan.indices:
            raise ContractError(f"tailor plan has no indices for unit {unit.unit_id}")
        values = plan.sample(unit.unit_id, state.weight_tensor(unit.unit_id))
        snapshots.append(WeightSnapshot(unit_id=unit.unit_id, timestamp=t, values=values))
    return snapshots
