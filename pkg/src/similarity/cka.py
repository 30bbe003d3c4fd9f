"""
Linear CKA between two activation matrices (rows are probe samples).

    score = ||Y^T X||_F^2 / (||X^T X||_F * ||Y^T Y||_F)

Evaluated in float64. When features outnumber samples the equivalent
Gram-matrix form (n x n) is used instead of the d x d cross products.
"""
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from helpers.errors import ContractError, DegenerateInputError

TRACE_COLUMNS = ['layer_id', 'checkpoint_index', 'epoch', 'score']


def _as_matrix(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    a = a.reshape(len(a), -1)
    if len(a) < 2:
        raise ContractError(f"{name} needs at least 2 rows, got {len(a)}")
    if not np.all(np.isfinite(a)):
        raise ContractError(f"{name} holds non-finite values")
    return a


def cka(x: np.ndarray, y: np.ndarray, center: bool = True) -> float:
    x = _as_matrix(x, 'X')
    y = _as_matrix(y, 'Y')
    if len(x) != len(y):
        raise ContractError(f"X has {len(x)} rows, Y has {len(y)}")
    if center:
        x = x - x.mean(axis=0, keepdims=True)
        y = y - y.mean(axis=0, keepdims=True)

    if max(x.shape[1], y.shape[1]) > len(x):
        gram_x = x @ x.T
        gram_y = y @ y.T
        numerator = float(np.sum(gram_x * gram_y))
        denominator = float(np.linalg.norm(gram_x) * np.linalg.norm(gram_y))
    else:
        numerator = float(np.linalg.norm(y.T @ x) ** 2)
        denominator = float(np.linalg.norm(x.T @ x) * np.linalg.norm(y.T @ y))

    if denominator == 0.0:
        raise DegenerateInputError("CKA is undefined for constant activations")
    # rounding can land just outside [0, 1] for near-identical inputs
    return float(np.clip(numerator / denominator, 0.0, 1.0))


class CkaTrace(BaseModel):
    """Per-unit CKA scores against the reference model, one per checkpoint"""
    scores: Dict[int, List[float]] = Field(default_factory=dict)
    epochs: List[float] = Field(default_factory=list)

    def add_checkpoint(self, epoch: float, unit_scores: Dict[int, float]) -> int:
        index = len(self.epochs)
        self.epochs.append(float(epoch))
        for unit_id, score in unit_scores.items():
            series = self.scores.setdefault(unit_id, [])
            if len(series) != index:
                raise ContractError(f"unit {unit_id} skipped a checkpoint ({len(series)} scores at checkpoint {index})")
            series.append(float(score))
        return index

    @property
    def num_checkpoints(self) -> int:
        return len(self.epochs)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {'layer_id': unit_id, 'checkpoint_index': i, 'epoch': self.epochs[i], 'score': score}
            for unit_id in sorted(self.scores)
            for i, score in enumerate(self.scores[unit_id])
        ]
        return pd.DataFrame(rows, columns=TRACE_COLUMNS)

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format='%.17g')
        return path

    @classmethod
    def read_csv(cls, path: Union[str, Path]) -> 'CkaTrace':
        frame = pd.read_csv(path)[TRACE_COLUMNS].sort_values(['layer_id', 'checkpoint_index'])
        epochs = (frame.drop_duplicates('checkpoint_index').sort_values('checkpoint_index')['epoch']
                  .astype(float).tolist())
        scores = {int(unit_id): group['score'].astype(float).tolist()
                  for unit_id, group in frame.groupby('layer_id')}
        return cls(scores=scores, epochs=epochs)
