"""Base classes for freezing policies"""
from .policy_base import PolicyBase, PolicyDecision, RunContext, apply_mask

__all__ = ['PolicyBase', 'PolicyDecision', 'RunContext', 'apply_mask']
