from typing import Tuple

import numpy as np
from sklearn.model_selection import train_test_split

from py_models.base import ArrayModel
from py_models.configs import TaskConfig


class TaskDataset(ArrayModel):
    id: str
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    probe: np.ndarray
    num_classes: int

    @property
    def input_shape(self) -> Tuple[int, ...]:
        return tuple(self.x_train.shape[1:])


def split_task(task_id: str, x: np.ndarray, y: np.ndarray, cfg: TaskConfig) -> TaskDataset:
    """Stratified, seeded train/test split plus a fixed probe drawn from the training inputs"""
    x_train, x_test, y_train, y_test = train_test_split(
        x, y, test_size=cfg.test_fraction, random_state=cfg.seed, stratify=y)
    rng = np.random.default_rng([cfg.seed, 3])
    probe_idx = np.sort(rng.choice(len(x_train), size=min(cfg.probe_size, len(x_train)), replace=False))
    return TaskDataset(
        id=task_id,
        x_train=np.ascontiguousarray(x_train, dtype=np.float32),
        y_train=np.asarray(y_train, dtype=np.int64),
        x_test=np.ascontiguousarray(x_test, dtype=np.float32),
        y_test=np.asarray(y_test, dtype=np.int64),
        probe=np.ascontiguousarray(x_train[probe_idx], dtype=np.float32),
        num_classes=int(np.max(y)) + 1,
    )


class TaskProvider:
    """
    Base class for all task providers. Subclasses turn a TaskConfig into
    a TaskDataset.
    """

    def __init__(self):
        pass

    def get_task(self, cfg: TaskConfig) -> TaskDataset:
        """
        Build the task's splits and probe set. This method should be implemented by all subclasses.
        """
        raise NotImplementedError("Subclasses must implement this method.")
