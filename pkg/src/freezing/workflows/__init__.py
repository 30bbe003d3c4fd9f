from .base_workflow import BaseWorkflow
from .experiment_workflow import ExperimentWorkflow, run_experiment, run_repeats, setup_digest
from .generation_workflow import (DatasetFile, GenerationResult, GenerationWorkflow, OracleFreezingPolicy,
                                  concatenate_datasets, generate, read_dataset, train_reference, write_dataset)

__all__ = [
    'BaseWorkflow', 'ExperimentWorkflow', 'run_experiment', 'run_repeats', 'setup_digest',
    'DatasetFile', 'GenerationResult', 'GenerationWorkflow', 'OracleFreezingPolicy',
    'concatenate_datasets', 'generate', 'read_dataset', 'train_reference', 'write_dataset',
]
