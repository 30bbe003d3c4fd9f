"""
How well a tailored weight subset represents its layer: total-variation
distance between the gradient histogram of all weights and that of the
sampled subset.
"""
from typing import Sequence, Union

import numpy as np

from engine.network import Gradients
from helpers.errors import ContractError, DegenerateInputError
from tailoring.plan import TailorPlan


def histogram_distance(a: np.ndarray, b: np.ndarray, bins: int = 30) -> float:
    """TV distance, 0.5 * sum |p - q|, over bins shared by both samples"""
    if bins < 2:
        raise ContractError(f"bins must be >= 2, got {bins}")
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise DegenerateInputError("cannot build a histogram of an empty gradient tensor")
    low = min(a.min(), b.min())
    high = max(a.max(), b.max())
    if low == high:
        return 0.0
    edges = np.linspace(low, high, bins + 1)
    p, _ = np.histogram(a, bins=edges)
    q, _ = np.histogram(b, bins=edges)
    return float(0.5 * np.abs(p / p.sum() - q / q.sum()).sum())


def grad_subset_divergence(full_grads: np.ndarray, indices: Union[np.ndarray, Sequence[int]], bins: int = 30) -> float:
    full = np.asarray(full_grads).reshape(-1)
    if full.size == 0:
        raise DegenerateInputError("cannot build a histogram of an empty gradient tensor")
    return histogram_distance(full, full[np.asarray(indices)], bins)


def unit_gradient_divergence(grads: Gradients, plan: TailorPlan, unit_id: int, bins: int = 30) -> float:
    """The diagnostic for one live unit, on its weight gradient from a backward pass"""
    if unit_id not in grads.by_unit:
        raise ContractError(f"no gradients for unit {unit_id}; it is frozen or was never run")
    weight_names = sorted((name for name in grads.by_unit[unit_id] if name.endswith('.weight')),
                          key=lambda name: int(name.split('.')[0]))
    if not weight_names:
        raise ContractError(f"unit {unit_id} has no weight gradient")
    return grad_subset_divergence(grads.by_unit[unit_id][weight_names[0]], plan.indices[unit_id], bins)
