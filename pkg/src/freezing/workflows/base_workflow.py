"""Staged workflow orchestration shared by experiment runs and dataset generation"""
import logging
import time
import traceback
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Callable, Dict, List

import yaml

WORKFLOWS_FILE = Path(__file__).parent.parent / "config" / "workflows.yaml"


def load_workflow_definition(workflow_name: str) -> Dict[str, Any]:
    """Stage list and artifact names for one workflow; empty when not configured"""
    if not WORKFLOWS_FILE.exists():
        return {}
    with open(WORKFLOWS_FILE, 'r') as f:
        definitions = yaml.safe_load(f) or {}
    return definitions.get('workflows', {}).get(workflow_name, {})


class BaseWorkflow(ABC):
    """
    Runs named stages in order, prints "Stage N: ..." unless quiet and logs
    timings to the forensics logger.

    Stage numbers come from the stage list in workflows.yaml when the stage is
    listed there, otherwise from the order of execution.
    """

    def __init__(self, workflow_name: str, quiet: bool = False):
        self.workflow_name = workflow_name
        self.quiet = quiet
        self.definition = load_workflow_definition(workflow_name)
        self.logger = logging.getLogger('forensics')
        self.stage_seconds: Dict[str, float] = {}

    @property
    def stages(self) -> List[str]:
        return list(self.definition.get('stages', []))

    def _stage_number(self, stage_name: str) -> int:
        if stage_name in self.stages:
            return self.stages.index(stage_name) + 1
        return len(self.stage_seconds) + 1

    def _execute_stage(self, stage_name: str, func: Callable, *args, **kwargs):
        number = self._stage_number(stage_name)
        if not self.quiet:
            print(f"Stage {number}: {stage_name.replace('_', ' ').title()}...")

        started = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            self._log(f"{self.workflow_name} stage {number} ({stage_name}) failed after "
                      f"{time.perf_counter() - started:.2f}s: {e}", level='error')
            raise

        self.stage_seconds[stage_name] = time.perf_counter() - started
        self._log(f"{self.workflow_name} stage {number} ({stage_name}) took {self.stage_seconds[stage_name]:.2f}s")
        return result

    def _generate_report(self) -> Dict[str, Any]:
        return {
            'workflow': self.workflow_name,
            'stages': list(self.stage_seconds),
            'seconds': dict(self.stage_seconds),
            'total_seconds': sum(self.stage_seconds.values()),
        }

    def _log(self, message: str, level: str = 'info'):
        getattr(self.logger, level)(message)
        if level == 'error':
            self.logger.debug(traceback.format_exc())

    def reset_state(self):
        self.stage_seconds = {}

    def output_name(self, key: str, default: str) -> str:
        """Artifact file name from the workflow's `outputs` block"""
        return self.definition.get('outputs', {}).get(key, default)

    @abstractmethod
    def execute(self, **kwargs):
        """Run every stage and return the workflow result"""
