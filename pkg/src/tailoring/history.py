import logging
from collections import deque
from typing import Deque, Dict, Iterable, List

import numpy as np

from helpers.errors import ContractError
from tailoring.plan import WeightSnapshot

logger = logging.getLogger('forensics')

DEFAULT_WINDOW = 30


class HistoryBuffer:
    """Per-unit ring of the most recent `capacity` snapshots, oldest first"""

    def __init__(self, window: int = DEFAULT_WINDOW, tailored_size: int = 1024):
        if window < 1:
            raise ContractError(f"window must be >= 1, got {window}")
        self.capacity = window
        self.tailored_size = tailored_size
        self._rings: Dict[int, Deque[WeightSnapshot]] = {}
        self._released: set = set()

    def push(self, snapshots: Iterable[WeightSnapshot]) -> None:
        for snap in snapshots:
            if snap.unit_id in self._released:
                raise ContractError(f"unit {snap.unit_id} is frozen; its history was released")
            if len(snap.values) != self.tailored_size:
                raise ContractError(
                    f"snapshot of unit {snap.unit_id} has {len(snap.values)} values, expected {self.tailored_size}")
            ring = self._rings.setdefault(snap.unit_id, deque(maxlen=self.capacity))
            if ring and snap.timestamp <= ring[-1].timestamp:
                raise ContractError(
                    f"snapshot at t={snap.timestamp} for unit {snap.unit_id} is not after t={ring[-1].timestamp}")
            ring.append(snap)

    def window(self, unit_id: int) -> List[WeightSnapshot]:
        return list(self._rings.get(unit_id, ()))

    def sequence(self, unit_id: int) -> np.ndarray:
        """(length, tailored_size) array of the unit's window"""
        snaps = self.window(unit_id)
        if not snaps:
            return np.zeros((0, self.tailored_size), dtype=np.float32)
        return np.stack([s.values for s in snaps]).astype(np.float32, copy=False)

    def __len__(self) -> int:
        return len(self._rings)

    def count(self, unit_id: int) -> int:
        return len(self._rings.get(unit_id, ()))

    def release(self, unit_ids: Iterable[int]) -> None:
        for unit_id in unit_ids:
            self._released.add(unit_id)
            if self._rings.pop(unit_id, None) is not None:
                logger.debug(f"Released history of unit {unit_id}")

    @property
    def units(self) -> List[int]:
        return sorted(self._rings)

    @property
    def nbytes(self) -> int:
        return sum(s.values.nbytes for ring in self._rings.values() for s in ring)
