"""Layer tailoring, weight-history buffers and the gradient-subset diagnostic"""
from .plan import TailorPlan, WeightSnapshot, make_plan, snapshot
from .history import HistoryBuffer
from .diagnostics import grad_subset_divergence, histogram_distance, unit_gradient_divergence

__all__ = [
    'TailorPlan', 'WeightSnapshot', 'make_plan', 'snapshot',
    'HistoryBuffer',
    'grad_subset_divergence', 'histogram_distance', 'unit_gradient_divergence',
]
