"""
Freezing policies and the workflows that run them.

Policies live in implementations/<kind>/ and are discovered by the
registry; workflows drive training runs and dataset generation.
"""
from .base import PolicyBase, PolicyDecision, RunContext, apply_mask
from .registry import get_registry

__all__ = ['PolicyBase', 'PolicyDecision', 'RunContext', 'apply_mask', 'get_registry']
