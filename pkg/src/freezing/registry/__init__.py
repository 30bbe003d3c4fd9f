"""Policy registry"""
from .policy_registry import PolicyRegistry, get_registry

__all__ = ['PolicyRegistry', 'get_registry']
