"""
Offline predictor training: momentum SGD on class-weighted cross-entropy,
model selection by balanced accuracy on a stratified holdout.
"""
import hashlib
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field, field_validator

from engine.network import momentum_update
from helpers.errors import DatasetError
from predictor.model import AttentionPredictor, PredictorDims, init_params, predictor_grad
from py_models.base import StrictModel
from py_models.train_record import TrainRecord

logger = logging.getLogger('forensics')


class PredictorTrainConfig(StrictModel):
    lr: float = Field(0.01, ge=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    epochs: int = Field(20, ge=0)
    batch_size: int = Field(32, ge=1)
    class_weights: Optional[Tuple[float, float]] = None
    seed: int = Field(0, ge=0)
    holdout: float = Field(0.1, ge=0, lt=1)
    window: int = Field(30, ge=1)
    dims: PredictorDims = Field(default_factory=PredictorDims)
    standardize: bool = False
    query_every_timestamp: bool = False

    @field_validator('class_weights')
    @classmethod
    def _positive(cls, v):
        if v is not None and min(v) <= 0:
            raise ValueError("class weights must be > 0")
        return v


def _record_key(record: TrainRecord) -> Tuple[int, str]:
    return record.label, hashlib.sha256(record.sequence.tobytes()).hexdigest()


def class_weights_for(labels: Sequence[int]) -> Tuple[float, float]:
    """Inversely proportional to class frequency, normalised so a balanced set gets (1, 1)"""
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=2)
    total = counts.sum()
    return (float(total / (2 * counts[0])), float(total / (2 * counts[1])))


def stratified_split(labels: Sequence[int], fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """(train, holdout) positions; each class gives ceil(fraction * count) to the holdout but keeps at least one"""
    labels = np.asarray(labels)
    rng = np.random.default_rng([seed, 1])
    train, holdout = [], []
    for cls in (0, 1):
        members = rng.permutation(np.flatnonzero(labels == cls))
        n_hold = min(math.ceil(fraction * len(members)), len(members) - 1) if fraction > 0 else 0
        holdout.extend(members[:n_hold])
        train.extend(members[n_hold:])
    return np.sort(np.array(train, dtype=np.int64)), np.sort(np.array(holdout, dtype=np.int64))


def balanced_accuracy(predictions: Sequence[int], labels: Sequence[int]) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    recalls = [np.mean(predictions[labels == cls] == cls) for cls in (0, 1) if np.any(labels == cls)]
    return float(np.mean(recalls)) if recalls else 0.0


def _predict_all(predictor: AttentionPredictor, records: Sequence[TrainRecord]) -> List[int]:
    return [predictor.decide(r.sequence).decision for r in records]


def train_predictor(records: Sequence[TrainRecord], cfg: Optional[PredictorTrainConfig] = None) -> AttentionPredictor:
    cfg = cfg or PredictorTrainConfig()
    if not records:
        raise DatasetError("predictor dataset is empty")
    labels = [r.label for r in records]
    if len(set(labels)) < 2:
        raise DatasetError(f"predictor dataset holds only label {labels[0]}; both classes are needed")
    for r in records:
        if r.tailored_size != cfg.dims.tailored_size:
            raise DatasetError(f"record tailored size {r.tailored_size} does not match predictor input {cfg.dims.tailored_size}")

    # canonical order, so the result depends on the seed and not on how the records were listed
    records = sorted(records, key=_record_key)
    labels = [r.label for r in records]
    weights = cfg.class_weights or class_weights_for(labels)
    train_idx, hold_idx = stratified_split(labels, cfg.holdout, cfg.seed)
    selection = [records[i] for i in (hold_idx if len(hold_idx) else train_idx)]
    selection_labels = [r.label for r in selection]

    predictor = AttentionPredictor(params=init_params(cfg.dims, cfg.seed), window=cfg.window,
                                   standardize=cfg.standardize, query_every_timestamp=cfg.query_every_timestamp)
    prepared = [predictor.prepare(r.sequence) for r in records]
    velocity = {k: np.zeros_like(v) for k, v in predictor.params.tensors.items()}

    best_score = balanced_accuracy(_predict_all(predictor, selection), selection_labels)
    best_params = predictor.params.copy()
    logger.info(f"Predictor training: {len(train_idx)} train / {len(hold_idx)} holdout records, "
                f"class weights {weights[0]:.3f}/{weights[1]:.3f}, initial balanced accuracy {best_score:.4f}")

    for epoch in range(cfg.epochs):
        order = train_idx[np.random.default_rng([cfg.seed, 2, epoch]).permutation(len(train_idx))]
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            total: Dict[str, np.ndarray] = {k: np.zeros_like(v) for k, v in predictor.params.tensors.items()}
            for i in batch:
                loss, grads = predictor_grad(predictor.params, prepared[i], records[i].label, weights)
                epoch_loss += loss
                for name, g in grads.items():
                    total[name] += g
            for name, param in predictor.params.tensors.items():
                momentum_update(param, velocity[name], total[name] / len(batch), cfg.lr, cfg.momentum)

        score = balanced_accuracy(_predict_all(predictor, selection), selection_labels)
        logger.info(f"Predictor epoch {epoch + 1}/{cfg.epochs}: loss={epoch_loss / max(len(train_idx), 1):.5f} "
                    f"balanced_accuracy={score:.4f}")
        if score > best_score:
            best_score = score
            best_params = predictor.params.copy()

    predictor.params = best_params
    predictor.best_balanced_accuracy = best_score
    return predictor


def evaluate_predictor(predictor: AttentionPredictor, records: Sequence[TrainRecord]) -> float:
    """Balanced accuracy of the predictor's decisions on labelled records"""
    return balanced_accuracy(_predict_all(predictor, records), [r.label for r in records])
