"""Representation similarity: linear CKA, stabilization and freeze labels"""
from .cka import cka, CkaTrace
from .labeling import StabilizationConfig, stabilized, label_history, label_units

__all__ = ['cka', 'CkaTrace', 'StabilizationConfig', 'stabilized', 'label_history', 'label_units']
