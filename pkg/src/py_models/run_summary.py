import json
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd
from pydantic import BaseModel, Field

from helpers.errors import FormatError

EVENT_COLUMNS = ['unit_id', 'iteration_frozen', 'policy', 'confidence']


class FreezeEvent(BaseModel):
    unit_id: int
    iteration_frozen: int
    policy: str
    confidence: Optional[float] = None
    param_digest: str = Field(..., description="sha256 of the unit's parameters when it froze")


class RunSummary(BaseModel):
    method: str
    name: Optional[str] = None
    task: str
    seed: int
    final_test_accuracy: float
    final_train_loss: float
    iterations: int
    fwd_flops: int
    bwd_flops: int
    predictor_flops: int
    total_flops: int
    peak_act_bytes: int
    peak_memory_bytes: int
    freeze_events: List[FreezeEvent] = Field(default_factory=list)
    final_digests: Dict[int, str] = Field(default_factory=dict, description="frozen units only")
    config_digest: str
    setup_digest: str = Field(..., description="network, task and training length; runs sharing it are comparable")
    wall_clock_seconds: float = 0.0

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2), encoding='utf-8')
        return path

    @classmethod
    def read(cls, path: Union[str, Path]) -> 'RunSummary':
        try:
            return cls.model_validate(json.loads(Path(path).read_text(encoding='utf-8')))
        except (ValueError, UnicodeDecodeError) as e:
            raise FormatError(f"{path} is not a run summary: {e}") from e


def events_frame(events: List[FreezeEvent]) -> pd.DataFrame:
    return pd.DataFrame([e.model_dump(include=set(EVENT_COLUMNS)) for e in events], columns=EVENT_COLUMNS)


def write_events_csv(events: List[FreezeEvent], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    events_frame(events).to_csv(path, index=False)
    return path
