from typing import Dict, Iterable, List

from pydantic import Field

from helpers.errors import ContractError
from py_models.base import StrictModel


class FreezeMask(StrictModel):
    """
    Frozen units mapped to the iteration they were frozen at.
    Masks only grow; insertion order follows freeze time.
    """
    frozen: Dict[int, int] = Field(default_factory=dict)
    total_units: int = Field(..., ge=0)

    def is_frozen(self, unit_id: int) -> bool:
        return unit_id in self.frozen

    @property
    def active_units(self) -> List[int]:
        return [u for u in range(self.total_units) if u not in self.frozen]

    @property
    def all_frozen(self) -> bool:
        return len(self.frozen) == self.total_units

    def __len__(self) -> int:
        return len(self.frozen)

    def __contains__(self, unit_id: object) -> bool:
        return unit_id in self.frozen

    def with_units(self, units: Iterable[int], iteration: int) -> 'FreezeMask':
        """Return a new mask with `units` added at `iteration`; already-frozen units keep their time"""
        new_units = sorted(set(units) - set(self.frozen))
        if not new_units:
            return self.model_copy(deep=True)
        for unit_id in new_units:
            if not 0 <= unit_id < self.total_units:
                raise ContractError(f"unit {unit_id} out of range for {self.total_units} units")
        if self.frozen and iteration < max(self.frozen.values()):
            raise ContractError(
                f"cannot freeze at iteration {iteration}: mask already holds a freeze at "
                f"iteration {max(self.frozen.values())}")
        frozen = dict(self.frozen)
        for unit_id in new_units:
            frozen[unit_id] = iteration
        return FreezeMask(frozen=frozen, total_units=self.total_units)
