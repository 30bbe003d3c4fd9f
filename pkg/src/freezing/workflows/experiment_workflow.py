"""Policy-controlled training runs and their artifacts"""
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional

from engine.layers import NetworkSpec
from engine.network import NetworkState, build_network, evaluate
from freezing.base.policy_base import PolicyBase, RunContext
from freezing.registry.policy_registry import get_registry
from helpers.config_helper import config_digest, dump_config
from helpers.cost_ledger import write_trace_csv
from helpers.errors import ContractError
from predictor.model import AttentionPredictor
from predictor.storage import load_predictor
from py_models.configs import ExperimentConfig, TaskConfig, TrainingConfig
from py_models.run_summary import FreezeEvent, RunSummary, write_events_csv
from task_providers import get_task
from task_providers.task_provider import TaskDataset
from train_helper import FitResult, TrainHelper, iterations_per_epoch, unit_digest

from .base_workflow import BaseWorkflow


def setup_digest(network: NetworkSpec, task: TaskConfig, epochs: int, batch_size: int) -> str:
    """Runs sharing this digest differ only in policy and seeds, so a report may compare them"""
    payload = {
        'network': network.model_dump(mode='json'),
        'task': task.model_dump(mode='json'),
        'epochs': epochs,
        'batch_size': batch_size,
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True, separators=(',', ':')).encode('utf-8')).hexdigest()


def run_context(state: NetworkState, n_train: int, training: TrainingConfig) -> RunContext:
    ipe = iterations_per_epoch(n_train, training.batch_size)
    return RunContext(num_units=state.num_units, iterations_per_epoch=ipe, total_iterations=training.epochs * ipe,
                      base_lr=training.lr, lr_schedule=training.lr_schedule)


def final_digests(state: NetworkState, events: List[FreezeEvent]) -> Dict[int, str]:
    """Digest of every frozen unit at end of run; a unit that changed after freezing breaks the contract"""
    digests = {}
    for event in events:
        digest = unit_digest(state, event.unit_id)
        if digest != event.param_digest:
            raise ContractError(f"unit {event.unit_id} changed after it froze at iteration {event.iteration_frozen}")
        digests[event.unit_id] = digest
    return digests


def build_summary(method: str, cfg_digest: str, setup: str, task: TaskDataset, state: NetworkState, fit: FitResult,
                  seed: int, name: Optional[str] = None, wall_clock: float = 0.0) -> RunSummary:
    ledger = fit.ledger
    return RunSummary(
        method=method,
        name=name,
        task=task.id,
        seed=seed,
        final_test_accuracy=evaluate(state, task.x_test, task.y_test),
        final_train_loss=fit.final_train_loss,
        iterations=len(ledger.rows),
        fwd_flops=ledger.fwd_flops,
        bwd_flops=ledger.bwd_flops,
        predictor_flops=ledger.predictor_flops,
        total_flops=ledger.total_flops,
        peak_act_bytes=ledger.peak_act_bytes,
        peak_memory_bytes=ledger.peak_memory_bytes,
        freeze_events=fit.events,
        final_digests=final_digests(state, fit.events),
        config_digest=cfg_digest,
        setup_digest=setup,
        wall_clock_seconds=wall_clock,
    )


def run_dir(cfg: ExperimentConfig, seed: Optional[int] = None) -> Path:
    seed = cfg.seed if seed is None else seed
    return Path(cfg.out_dir) / f"{cfg.policy.kind}-seed{seed}"


class ExperimentWorkflow(BaseWorkflow):
    """
    One training run under the configured policy:
    task -> network -> policy -> training -> evaluation -> artifacts.
    """

    def __init__(self, cfg: ExperimentConfig, predictor: Optional[AttentionPredictor] = None, quiet: bool = False):
        super().__init__('experiment', quiet=quiet)
        self.cfg = cfg
        self.predictor = predictor
        self.state: Optional[NetworkState] = None
        self.fit: Optional[FitResult] = None

    def _load_predictor(self) -> Optional[AttentionPredictor]:
        if self.predictor is not None or not self.cfg.predictor:
            return self.predictor
        return load_predictor(self.cfg.predictor, tailored_size=getattr(self.cfg.policy, 'tailored_size', None))

    def _create_policy(self, state: NetworkState, task: TaskDataset) -> PolicyBase:
        run = run_context(state, len(task.x_train), self.cfg.training)
        policy = get_registry().create_policy(self.cfg.policy, run, predictor=self._load_predictor())
        self._log(f"Policy {policy.name} ({policy.kind}): {run.iterations_per_epoch} iterations per epoch, "
                  f"{run.total_iterations} in total")
        return policy

    def _write_artifacts(self, summary: RunSummary, out: Path) -> Dict[str, Path]:
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            'trace': write_trace_csv(self.fit.ledger, out / self.output_name('trace', 'trace.csv')),
            'events': write_events_csv(summary.freeze_events, out / self.output_name('events', 'events.csv')),
            'summary': summary.write(out / self.output_name('summary', 'summary.json')),
        }
        config_path = out / self.output_name('config', 'config.json')
        dump_config(self.cfg, config_path)
        paths['config'] = config_path
        return paths

    def execute(self, write: bool = True) -> RunSummary:
        cfg = self.cfg
        started = time.time()
        self.reset_state()

        task = self._execute_stage('load_task', get_task, cfg.task)
        self.state = self._execute_stage('build_network', build_network, cfg.network, None, cfg.seed)
        policy = self._execute_stage('create_policy', self._create_policy, self.state, task)

        helper = TrainHelper(self.state)
        self.fit = self._execute_stage('training', helper.fit, task.x_train, task.y_train, cfg.training, policy,
                                       cfg.data_seed)

        summary = self._execute_stage(
            'evaluation', build_summary, cfg.policy.kind, config_digest(cfg),
            setup_digest(cfg.network, cfg.task, cfg.epochs, cfg.batch_size), task, self.state, self.fit, cfg.seed,
            cfg.name, time.time() - started)

        if write:
            paths = self._execute_stage('write_artifacts', self._write_artifacts, summary, run_dir(cfg))
            self._log(f"Run artifacts: {', '.join(str(p) for p in paths.values())}")
        self._log(f"Run {cfg.policy.kind} seed {cfg.seed}: report {self._generate_report()}", level='debug')
        return summary


def run_experiment(cfg: ExperimentConfig, predictor: Optional[AttentionPredictor] = None, quiet: bool = False,
                   write: bool = True) -> RunSummary:
    return ExperimentWorkflow(cfg, predictor=predictor, quiet=quiet).execute(write=write)


def _run_seed(cfg_data: Dict[str, Any], quiet: bool) -> RunSummary:
    # worker entry point; configs travel as plain data
    return run_experiment(ExperimentConfig.model_validate(cfg_data), quiet=quiet)


def run_repeats(cfg: ExperimentConfig, predictor: Optional[AttentionPredictor] = None, quiet: bool = False,
                jobs: int = 1) -> List[RunSummary]:
    """Seeds cfg.seed .. cfg.seed + repeats - 1; with jobs > 1 each seed runs in its own process"""
    configs = [cfg.model_copy(update={'seed': cfg.seed + k}) for k in range(cfg.repeats)]
    if jobs <= 1 or len(configs) == 1:
        return [run_experiment(c, predictor=predictor, quiet=quiet) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_run_seed, c.model_dump(mode='json'), True) for c in configs]
        return [f.result() for f in futures]
