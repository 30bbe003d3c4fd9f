"""Desk-scale classification tasks"""
from py_models.configs import TaskConfig

from .task_provider import TaskDataset, TaskProvider, split_task
from .synthetic import BlobsProvider, SpiralsProvider
from .idx import Digits8Provider, load_idx

PROVIDERS = {
    'blobs': BlobsProvider,
    'spirals': SpiralsProvider,
    'digits8': Digits8Provider,
}


def get_task(cfg: TaskConfig) -> TaskDataset:
    return PROVIDERS[cfg.id]().get_task(cfg)


__all__ = ['TaskDataset', 'TaskProvider', 'split_task', 'BlobsProvider', 'SpiralsProvider', 'Digits8Provider',
           'load_idx', 'get_task', 'PROVIDERS']
