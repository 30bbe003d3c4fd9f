from typing import Set

from pydantic import BaseModel, ConfigDict


class StrictModel(BaseModel):
    """
    Base class for every config and record model.
    Unknown keys are rejected so typos in JSON configs surface as errors.
    """
    model_config = ConfigDict(extra='forbid')

    @classmethod
    def get_skip_fields(cls) -> Set[str]:
        """
        Fields left out of digests and comparisons.
        Can be overridden by subclasses.
        """
        return set()


class ArrayModel(BaseModel):
    """Base class for in-memory models that hold numpy arrays"""
    model_config = ConfigDict(arbitrary_types_allowed=True)
