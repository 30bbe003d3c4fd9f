"""Predictor dataset generation: reference training, then a labelled retraining run"""
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from engine.checkpoint import load_checkpoint, save_checkpoint
from engine.network import Gradients, NetworkState, build_network, unit_outputs
from freezing.base.policy_base import PolicyBase, PolicyDecision, RunContext
from freezing.registry.policy_registry import get_registry
from helpers.config_helper import config_digest, dump_config
from helpers.container import pack_records, pack_tensors, read_container, unpack_records, write_container
from helpers.cost_ledger import write_trace_csv
from helpers.errors import (ConfigError, DatasetError, DegenerateInputError, DimensionMismatchError, FormatError)
from py_models.configs import FullPolicyConfig, GenConfig
from py_models.freeze_mask import FreezeMask
from py_models.run_summary import RunSummary, write_events_csv
from py_models.train_record import TrainRecord
from similarity.cka import CkaTrace, cka
from similarity.labeling import StabilizationConfig, label_history
from tailoring.history import HistoryBuffer
from tailoring.plan import TailorPlan, make_plan, snapshot
from task_providers import get_task
from task_providers.task_provider import TaskDataset
from train_helper import FitResult, TrainHelper

from .base_workflow import BaseWorkflow
from .experiment_workflow import build_summary, run_context, setup_digest

DATASET_KIND = 'dataset'


class DatasetFile(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    window: int = Field(..., ge=1)
    tailored_size: int = Field(..., ge=1)
    provenance: List[str] = Field(default_factory=list, description="config digests of the generation runs")
    records: List[TrainRecord] = Field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.records)

    def label_counts(self) -> Tuple[int, int]:
        ones = sum(r.label for r in self.records)
        return self.count - ones, ones

    def check(self) -> 'DatasetFile':
        for i, record in enumerate(self.records):
            if record.length > self.window:
                raise FormatError(f"record {i} holds {record.length} snapshots, window is {self.window}")
            if record.tailored_size != self.tailored_size:
                raise DimensionMismatchError(
                    f"record {i} has snapshots of {record.tailored_size} values, dataset uses {self.tailored_size}")
        return self


def write_dataset(dataset: DatasetFile, path: Union[str, Path]) -> Path:
    dataset.check()
    header = {
        'window': dataset.window,
        'tailored_size': dataset.tailored_size,
        'count': dataset.count,
        'provenance': dataset.provenance,
    }
    blob = pack_tensors(DATASET_KIND, header, {})
    payload = pack_records(((r.sequence, r.label) for r in dataset.records), dataset.tailored_size)
    return write_container(path, blob + payload)


def read_dataset(path: Union[str, Path]) -> DatasetFile:
    header, payload = read_container(path, expected_kind=DATASET_KIND)
    try:
        window, tailored_size, count = int(header['window']), int(header['tailored_size']), int(header['count'])
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"dataset header is incomplete: {e}") from e
    pairs = unpack_records(payload, count, tailored_size)
    try:
        records = [TrainRecord(sequence=seq, label=label) for seq, label in pairs]
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from e
    provenance = header.get('provenance') or []
    return DatasetFile(window=window, tailored_size=tailored_size, provenance=list(provenance),
                       records=records).check()


def concatenate_datasets(datasets: Sequence[DatasetFile]) -> DatasetFile:
    """Records of several generation runs in order; window and tailored size must agree"""
    if not datasets:
        raise DatasetError("nothing to concatenate")
    first = datasets[0]
    for other in datasets[1:]:
        if (other.window, other.tailored_size) != (first.window, first.tailored_size):
            raise DimensionMismatchError(
                f"cannot join a window {other.window}/tailored {other.tailored_size} dataset with "
                f"window {first.window}/tailored {first.tailored_size}")
    return DatasetFile(window=first.window, tailored_size=first.tailored_size,
                       provenance=[p for d in datasets for p in d.provenance],
                       records=[r for d in datasets for r in d.records])


def check_architecture(reference: NetworkState, cfg: GenConfig) -> None:
    expected = build_network(cfg.network, seed=0)
    if reference.spec.model_dump() != cfg.network.model_dump() or reference.units != expected.units:
        raise ConfigError("reference checkpoint does not match the configured network", key_path='network')


def checkpoint_interval(cfg: GenConfig, ipe: int) -> int:
    if ipe % cfg.checkpoints_per_epoch != 0:
        raise ConfigError(f"{cfg.checkpoints_per_epoch} checkpoints do not divide an epoch of {ipe} iterations",
                          key_path='checkpoints_per_epoch')
    return ipe // cfg.checkpoints_per_epoch


def unit_scores(outputs: Dict[int, np.ndarray], reference_outputs: Dict[int, np.ndarray]) -> Dict[int, float]:
    """CKA of every unit against the reference; constant activations score 0"""
    scores = {}
    for unit_id, x in outputs.items():
        try:
            scores[unit_id] = cka(x, reference_outputs[unit_id])
        except DegenerateInputError:
            scores[unit_id] = 0.0
    return scores


class OracleFreezingPolicy(PolicyBase):
    """
    Records tailored histories of active units and scores every unit
    against the reference at each checkpoint. Each active unit yields one
    record per checkpoint, labelled by the CKA stabilization rule. With
    freezing on, a unit freezes at the iteration after its label turns 1.
    """

    def __init__(self, cfg: GenConfig, run: RunContext, reference_outputs: Dict[int, np.ndarray], probe: np.ndarray):
        self.gen = cfg
        super().__init__('oracle' if cfg.oracle_freeze else 'label-only', cfg, run)
        self.reference_outputs = reference_outputs
        self.probe = probe
        self.snapshot_interval = cfg.snapshot_interval or max(1, run.iterations_per_epoch // 4)
        self.checkpoint_interval = checkpoint_interval(cfg, run.iterations_per_epoch)
        self.plan: Optional[TailorPlan] = None
        self.trace = CkaTrace()
        self.records: List[TrainRecord] = []
        self.record_keys: List[Tuple[int, int]] = []
        self._buffers = HistoryBuffer(window=cfg.window, tailored_size=cfg.tailored_size)
        self._pending: Set[int] = set()

    def _load_config(self, kind: str, config_override: Optional[Dict] = None) -> Dict:
        return {'name': 'CKA Oracle', 'description': 'Freezes units once their CKA to the reference stabilizes',
                'capabilities': ['global_schedule', 'records_history']}

    @property
    def buffers(self) -> HistoryBuffer:
        return self._buffers

    @property
    def stabilization(self) -> StabilizationConfig:
        return self.gen.stabilization

    def start(self, state: NetworkState, mask: FreezeMask) -> None:
        self.plan = make_plan(state, self.gen.tailored_size, self.gen.tailor_seed)
        self._buffers.push(snapshot(state, self.plan, 0, mask))

    def observe(self, t: int, state: NetworkState, grads: Gradients, mask: FreezeMask) -> None:
        if t % self.snapshot_interval == 0:
            self._buffers.push(snapshot(state, self.plan, t, mask))
        if t % self.checkpoint_interval == 0:
            self._checkpoint(t, state, mask)

    def _checkpoint(self, t: int, state: NetworkState, mask: FreezeMask) -> None:
        scores = unit_scores(unit_outputs(state, self.probe), self.reference_outputs)
        index = self.trace.add_checkpoint(t / self.run.iterations_per_epoch, scores)
        labels = label_history(self.trace, self.stabilization)
        for unit_id in mask.active_units:
            if self._buffers.count(unit_id) == 0:
                continue
            label = labels[(unit_id, index)]
            self.records.append(TrainRecord(sequence=self._buffers.sequence(unit_id), label=label))
            self.record_keys.append((unit_id, index))
            if label == 1 and self.gen.oracle_freeze:
                self._pending.add(unit_id)

    def is_stage(self, t: int) -> bool:
        return t > 0 and bool(self._pending)

    def decide(self, t: int, mask: FreezeMask) -> PolicyDecision:
        units, self._pending = set(self._pending), set()
        return PolicyDecision(units=units, confidences={u: 1.0 for u in units})


class GenerationResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    dataset: DatasetFile
    trace: CkaTrace
    summary: RunSummary
    record_keys: List[Tuple[int, int]] = Field(default_factory=list, description="(unit, checkpoint) per record")
    paths: Dict[str, Path] = Field(default_factory=dict)


def train_reference(cfg: GenConfig, task: Optional[TaskDataset] = None,
                    path: Optional[Union[str, Path]] = None) -> NetworkState:
    """Full training for the reference epochs; saved as a checkpoint when `path` is given"""
    task = task or get_task(cfg.task)
    state = build_network(cfg.network, seed=cfg.reference_seed)
    training = cfg.reference_training()
    policy = get_registry().create_policy(FullPolicyConfig(), run_context(state, len(task.x_train), training))
    TrainHelper(state).fit(task.x_train, task.y_train, training, policy, cfg.data_seed)
    if path is not None:
        save_checkpoint(state, path)
    return state


class GenerationWorkflow(BaseWorkflow):
    """reference -> labelled retraining -> dataset, CKA trace and run summary"""

    def __init__(self, cfg: GenConfig, quiet: bool = False):
        super().__init__('dataset_generation', quiet=quiet)
        self.cfg = cfg
        self.out = Path(cfg.out_dir)

    def _generation_run(self, task: TaskDataset, reference: NetworkState) -> Tuple[NetworkState, OracleFreezingPolicy,
                                                                                    FitResult]:
        cfg = self.cfg
        check_architecture(reference, cfg)
        state = build_network(cfg.network, seed=cfg.generation_seed)
        training = cfg.generation_training()
        policy = OracleFreezingPolicy(cfg, run_context(state, len(task.x_train), training),
                                      unit_outputs(reference, task.probe), task.probe)
        fit = TrainHelper(state).fit(task.x_train, task.y_train, training, policy, cfg.data_seed)
        return state, policy, fit

    def _dataset(self, policy: OracleFreezingPolicy) -> DatasetFile:
        dataset = DatasetFile(window=self.cfg.window, tailored_size=self.cfg.tailored_size,
                              provenance=[config_digest(self.cfg)], records=policy.records)
        zeros, ones = dataset.label_counts()
        self._log(f"Dataset: {dataset.count} records, {zeros} labelled 0 and {ones} labelled 1")
        if self.cfg.require_both_labels and (zeros == 0 or ones == 0):
            raise DatasetError(f"generated dataset holds a single label ({zeros} zeros, {ones} ones); "
                               f"adjust epochs or the stabilization settings", key_path='stabilization')
        return dataset

    def execute(self, reference: Optional[Union[NetworkState, str, Path]] = None, write: bool = True) -> GenerationResult:
        cfg = self.cfg
        started = time.time()
        self.reset_state()

        task = self._execute_stage('load_task', get_task, cfg.task)
        if reference is None:
            ref_path = self.out / self.output_name('reference', 'reference.frz1') if write else None
            reference = self._execute_stage('train_reference', train_reference, cfg, task, ref_path)
        elif not isinstance(reference, NetworkState):
            reference = self._execute_stage('train_reference', load_checkpoint, reference)

        state, policy, fit = self._execute_stage('generation_run', self._generation_run, task, reference)
        summary = self._execute_stage(
            'evaluation', build_summary, policy.kind, config_digest(cfg),
            setup_digest(cfg.network, cfg.task, cfg.generation_epochs, cfg.batch_size), task, state, fit,
            cfg.generation_seed, cfg.name, time.time() - started)

        paths: Dict[str, Path] = {}
        if write:
            # the CKA trace is kept even when the dataset is rejected
            paths['cka_trace'] = policy.trace.write_csv(self.out / self.output_name('cka_trace', 'cka_trace.csv'))
        dataset = self._dataset(policy)
        if write:
            paths.update(self._execute_stage('write_artifacts', self._write_artifacts, dataset, summary, fit))
        return GenerationResult(dataset=dataset, trace=policy.trace, summary=summary,
                                record_keys=policy.record_keys, paths=paths)

    def _write_artifacts(self, dataset: DatasetFile, summary: RunSummary, fit: FitResult) -> Dict[str, Path]:
        self.out.mkdir(parents=True, exist_ok=True)
        config_path = self.out / self.output_name('config', 'gen_config.json')
        dump_config(self.cfg, config_path)
        return {
            'dataset': write_dataset(dataset, self.out / self.output_name('dataset', 'dataset.frzd')),
            'summary': summary.write(self.out / self.output_name('summary', 'summary.json')),
            'trace': write_trace_csv(fit.ledger, self.out / self.output_name('trace', 'trace.csv')),
            'events': write_events_csv(summary.freeze_events, self.out / self.output_name('events', 'events.csv')),
            'config': config_path,
        }


def generate(cfg: GenConfig, reference: Optional[Union[NetworkState, str, Path]] = None, quiet: bool = False,
             write: bool = True) -> GenerationResult:
    return GenerationWorkflow(cfg, quiet=quiet).execute(reference=reference, write=write)
