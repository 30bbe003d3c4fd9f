"""Configuration models for experiments, dataset generation and predictor training jobs"""
from typing import Annotated, List, Literal, Optional, Union

from pydantic import Field, model_validator

from engine.layers import NetworkSpec
from predictor.training import PredictorTrainConfig
from py_models.base import StrictModel
from similarity.labeling import StabilizationConfig


class TaskConfig(StrictModel):
    id: Literal['blobs', 'spirals', 'digits8'] = 'blobs'
    n_samples: int = Field(1200, ge=8, description="Synthetic tasks only")
    n_features: int = Field(2, ge=1, description="blobs only")
    n_classes: int = Field(3, ge=2, description="blobs and spirals")
    noise: float = Field(0.2, ge=0, description="spirals only")
    test_fraction: float = Field(0.25, gt=0, lt=1)
    probe_size: int = Field(256, ge=2)
    data_dir: Optional[str] = Field(None, description="digits8 IDX directory, FRZ_DATA_DIR or ./data when unset")
    seed: int = Field(0, ge=0)


class FullPolicyConfig(StrictModel):
    kind: Literal['full'] = 'full'


class LinearPolicyConfig(StrictModel):
    kind: Literal['linear'] = 'linear'
    t0: float = Field(0.5, gt=0, le=1)


class GradNormPolicyConfig(StrictModel):
    kind: Literal['gradnorm'] = 'gradnorm'
    intervals_per_epoch: int = Field(4, ge=1, description="M")
    percentile: float = Field(0.5, gt=0, lt=1, description="N")


class SmartPolicyConfig(StrictModel):
    kind: Literal['smart'] = 'smart'
    freeze_interval: Optional[int] = Field(None, ge=1, description="S; iterations_per_epoch // 4 when unset")
    snapshot_interval: Optional[int] = Field(None, ge=1, description="R; equals S when unset")
    min_history: int = Field(5, ge=1)
    window: int = Field(30, ge=1)
    tailored_size: int = Field(1024, ge=1)
    tailor_seed: int = Field(0, ge=0)

    @model_validator(mode='after')
    def _window_holds_min_history(self) -> 'SmartPolicyConfig':
        if self.window < self.min_history:
            raise ValueError(f"window ({self.window}) must be >= min_history ({self.min_history})")
        return self


PolicyConfig = Annotated[
    Union[FullPolicyConfig, LinearPolicyConfig, GradNormPolicyConfig, SmartPolicyConfig],
    Field(discriminator='kind'),
]


class TrainingConfig(StrictModel):
    epochs: int = Field(10, ge=0)
    batch_size: int = Field(32, ge=1)
    lr: float = Field(0.05, ge=0)
    lr_schedule: Literal['cosine', 'constant'] = 'cosine'
    momentum: float = Field(0.9, ge=0, lt=1)


class ExperimentConfig(StrictModel):
    name: Optional[str] = None
    network: NetworkSpec
    task: TaskConfig = Field(default_factory=TaskConfig)
    epochs: int = Field(10, ge=0)
    batch_size: int = Field(32, ge=1)
    lr: float = Field(0.05, ge=0)
    lr_schedule: Literal['cosine', 'constant'] = 'cosine'
    momentum: float = Field(0.9, ge=0, lt=1)
    policy: PolicyConfig = Field(default_factory=FullPolicyConfig)
    predictor: Optional[str] = None
    seed: int = Field(0, ge=0, description="Network initialisation")
    data_seed: int = Field(0, ge=0, description="Batch order")
    repeats: int = Field(1, ge=1, description="Seeds seed..seed+repeats-1")
    out_dir: str = 'runs'

    @model_validator(mode='after')
    def _smart_needs_predictor(self) -> 'ExperimentConfig':
        if self.policy.kind == 'smart' and not self.predictor:
            raise ValueError("policy 'smart' requires a predictor path")
        return self

    @classmethod
    def get_skip_fields(cls):
        # fields that do not change what a run computes
        return {'name', 'out_dir', 'repeats'}

    @property
    def training(self) -> TrainingConfig:
        return TrainingConfig(epochs=self.epochs, batch_size=self.batch_size, lr=self.lr,
                              lr_schedule=self.lr_schedule, momentum=self.momentum)


class GenConfig(StrictModel):
    name: Optional[str] = None
    network: NetworkSpec
    task: TaskConfig = Field(default_factory=TaskConfig)
    reference_epochs: int = Field(10, ge=0)
    generation_epochs: int = Field(10, ge=1)
    batch_size: int = Field(32, ge=1)
    lr: float = Field(0.05, ge=0)
    lr_schedule: Literal['cosine', 'constant'] = 'cosine'
    momentum: float = Field(0.9, ge=0, lt=1)
    checkpoints_per_epoch: int = Field(1, ge=1)
    snapshot_interval: Optional[int] = Field(None, ge=1, description="iterations_per_epoch // 4 when unset")
    tailored_size: int = Field(1024, ge=1)
    window: int = Field(30, ge=1)
    stabilization: StabilizationConfig = Field(default_factory=StabilizationConfig)
    oracle_freeze: bool = True
    require_both_labels: bool = Field(True, description="fail when the dataset holds a single label")
    reference_seed: int = Field(0, ge=0)
    generation_seed: int = Field(1, ge=0)
    tailor_seed: int = Field(2, ge=0)
    data_seed: int = Field(0, ge=0)
    out_dir: str = 'datasets'

    @classmethod
    def get_skip_fields(cls):
        return {'name', 'out_dir'}

    def reference_training(self) -> TrainingConfig:
        return TrainingConfig(epochs=self.reference_epochs, batch_size=self.batch_size, lr=self.lr,
                              lr_schedule=self.lr_schedule, momentum=self.momentum)

    def generation_training(self) -> TrainingConfig:
        return TrainingConfig(epochs=self.generation_epochs, batch_size=self.batch_size, lr=self.lr,
                              lr_schedule=self.lr_schedule, momentum=self.momentum)


class PredictorJobConfig(StrictModel):
    datasets: List[str] = Field(..., min_length=1)
    train: PredictorTrainConfig = Field(default_factory=PredictorTrainConfig)
    out: str = 'predictor.frzp'
