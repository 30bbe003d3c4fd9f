import numpy as np
from pydantic import field_validator

from py_models.base import ArrayModel


class TrainRecord(ArrayModel):
    """A unit's weight history (oldest snapshot first) and whether it was ready to freeze"""
    sequence: np.ndarray
    label: int

    @field_validator('sequence')
    @classmethod
    def _two_dimensional(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float32)
        if v.ndim != 2 or len(v) == 0:
            raise ValueError(f"sequence must be a non-empty (length, tailored_size) array, got shape {v.shape}")
        return v

    @field_validator('label')
    @classmethod
    def _binary(cls, v: int) -> int:
        if v not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {v}")
        return v

    @property
    def length(self) -> int:
        return len(self.sequence)

    @property
    def tailored_size(self) -> int:
        return self.sequence.shape[1]
