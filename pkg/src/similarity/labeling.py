from typing import Dict, List, Sequence, Tuple

from pydantic import Field

from py_models.base import StrictModel
from similarity.cka import CkaTrace


class StabilizationConfig(StrictModel):
    """A unit counts as stable once its last `window` scores span at most `eps` and end at or above `min_score`"""
    window: int = Field(5, ge=2)
    eps: float = Field(0.01, gt=0)
    min_score: float = Field(0.6, ge=0, le=1)


def stabilized(scores: Sequence[float], cfg: StabilizationConfig) -> bool:
    if len(scores) < cfg.window:
        return False
    recent = scores[-cfg.window:]
    return (max(recent) - min(recent)) <= cfg.eps and recent[-1] >= cfg.min_score


def first_stable_checkpoint(scores: Sequence[float], cfg: StabilizationConfig) -> int:
    """Index of the first checkpoint at which the prefix is stable, or -1"""
    for end in range(cfg.window, len(scores) + 1):
        if stabilized(scores[:end], cfg):
            return end - 1
    return -1


def label_units(scores: Sequence[float], cfg: StabilizationConfig) -> List[int]:
    """0 before the first stable checkpoint, 1 from it on"""
    first = first_stable_checkpoint(scores, cfg)
    if first < 0:
        return [0] * len(scores)
    return [0] * first + [1] * (len(scores) - first)


def label_history(trace: CkaTrace, cfg: StabilizationConfig) -> Dict[Tuple[int, int], int]:
    labels: Dict[Tuple[int, int], int] = {}
    for unit_id, scores in trace.scores.items():
        for checkpoint, label in enumerate(label_units(scores, cfg)):
            labels[(unit_id, checkpoint)] = label
    return labels
