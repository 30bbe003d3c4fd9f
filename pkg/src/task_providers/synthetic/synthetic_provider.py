from typing import Tuple

import numpy as np
from sklearn.datasets import make_blobs

from py_models.configs import TaskConfig
from task_providers.task_provider import TaskDataset, TaskProvider, split_task


def make_spirals(n_samples: int, n_classes: int = 2, noise: float = 0.2,
                 seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Interleaved spiral arms, one per class, in the unit disc"""
    rng = np.random.default_rng(seed)
    per_class = n_samples // n_classes
    xs, ys = [], []
    for cls in range(n_classes):
        radius = np.linspace(0.0, 1.0, per_class)
        theta = (np.linspace(0.0, 3 * np.pi, per_class) + cls * 2 * np.pi / n_classes
                 + rng.normal(scale=noise, size=per_class))
        xs.append(np.column_stack([radius * np.sin(theta), radius * np.cos(theta)]))
        ys.append(np.full(per_class, cls))
    return np.concatenate(xs).astype(np.float32), np.concatenate(ys).astype(np.int64)


class BlobsProvider(TaskProvider):
    """Gaussian clusters, one per class, standardised per feature"""

    def get_task(self, cfg: TaskConfig) -> TaskDataset:
        x, y = make_blobs(n_samples=cfg.n_samples, centers=cfg.n_classes, n_features=cfg.n_features,
                          random_state=cfg.seed)
        x = (x - x.mean(axis=0)) / x.std(axis=0)
        return split_task('blobs', x, y, cfg)


class SpiralsProvider(TaskProvider):

    def get_task(self, cfg: TaskConfig) -> TaskDataset:
        x, y = make_spirals(cfg.n_samples, cfg.n_classes, cfg.noise, cfg.seed)
        return split_task('spirals', x, y, cfg)
