"""Policy registry with discovery of implementations/<kind>/policy.py"""
import importlib
import logging
from pathlib import Path
from typing import Dict, List, Optional, Type

import yaml
from pydantic import BaseModel

from freezing.base.policy_base import PolicyBase, RunContext
from helpers.errors import ConfigError

logger = logging.getLogger('forensics')


class PolicyRegistry:
    def __init__(self):
        self._policies: Dict[str, Type[PolicyBase]] = {}
        self._config = self._load_registry_config()

    def _load_registry_config(self) -> Dict:
        implementations_dir = Path(__file__).parent.parent / "implementations"
        policies_config = {}
        for policy_dir in sorted(implementations_dir.iterdir()):
            config_file = policy_dir / "config.yaml"
            if policy_dir.is_dir() and not policy_dir.name.startswith('_') and config_file.exists():
                with open(config_file, 'r') as f:
                    policies_config[policy_dir.name] = yaml.safe_load(f) or {}
        return {"policies": policies_config}

    def register_policy(self, kind: str, policy_class: Type[PolicyBase]):
        self._policies[kind] = policy_class

    def get_policy_class(self, kind: str) -> Optional[Type[PolicyBase]]:
        return self._policies.get(kind)

    def list_policies(self) -> List[str]:
        return sorted(self._policies)

    def auto_discover_policies(self):
        """Register the class ending in 'Policy' from every implementations/<kind>/policy.py"""
        implementations_dir = Path(__file__).parent.parent / "implementations"
        for policy_dir in sorted(implementations_dir.iterdir()):
            if not policy_dir.is_dir() or policy_dir.name.startswith('_'):
                continue
            try:
                module = importlib.import_module(f"freezing.implementations.{policy_dir.name}.policy")
            except ImportError as e:
                logger.warning(f"Could not import policy from {policy_dir.name}: {e}")
                continue
            for attr_name in dir(module):
                attr = getattr(module, attr_name)
                if (isinstance(attr, type) and issubclass(attr, PolicyBase) and attr_name.endswith('Policy')
                        and attr is not PolicyBase):
                    self.register_policy(policy_dir.name, attr)
                    break

    def create_policy(self, params: BaseModel, run: RunContext, predictor=None) -> PolicyBase:
        kind = getattr(params, 'kind')
        policy_class = self.get_policy_class(kind)
        if not policy_class:
            raise ConfigError(f"unknown policy {kind!r}; known: {', '.join(self.list_policies())}", key_path='policy.kind')
        if 'requires_predictor' in self.get_policy_info(kind).get('capabilities', []):
            return policy_class(params, run, predictor=predictor)
        return policy_class(params, run)

    def get_policy_info(self, kind: str) -> Dict:
        return self._config.get("policies", {}).get(kind, {})


_registry = None


def get_registry() -> PolicyRegistry:
    global _registry
    if _registry is None:
        _registry = PolicyRegistry()
        _registry.auto_discover_policies()
    return _registry
