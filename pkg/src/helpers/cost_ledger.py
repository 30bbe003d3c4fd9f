# cost_ledger.py

from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
from tabulate import tabulate

from engine.layers import FreezeUnit, NetworkSpec, Shape
from helpers.errors import ContractError
from py_models.freeze_mask import FreezeMask

BYTES_PER_VALUE = 4  # float32

TRACE_COLUMNS = ['iteration', 'epoch', 'fwd_flops', 'bwd_flops', 'predictor_flops', 'act_bytes',
                 'frozen_units', 'train_loss']


def format_ledger_summary(ledger: 'CostLedger', title: str = 'TRAINING COST SUMMARY') -> str:
    """
    Format a ledger into a grid table: cumulative FLOPs split by pass, the share
    of the backward pass, and peak memory.
    """
    output = ["=" * 60, title, "=" * 60]
    total = ledger.total_flops
    rows = [
        ['Iterations', len(ledger.rows)],
        ['Forward FLOPs', f"{ledger.fwd_flops:,}"],
        ['Backward FLOPs', f"{ledger.bwd_flops:,}"],
        ['Predictor FLOPs', f"{ledger.predictor_flops:,}"],
        ['Total FLOPs', f"{total:,}"],
        ['Total TFLOPs', f"{total / 1e12:.6f}"],
        ['Backward share', f"{(ledger.bwd_flops / total * 100) if total else 0.0:.2f}%"],
        ['Peak activation bytes', f"{ledger.peak_act_bytes:,}"],
        ['Peak activation+gradient bytes', f"{ledger.peak_memory_bytes:,}"],
    ]
    output.append(tabulate(rows, headers=['Metric', 'Value'], tablefmt='grid'))
    return "\n".join(output)


class LayerCost(BaseModel):
    layer_index: int
    kind: str
    unit_id: Optional[int] = None
    fwd_flops: int = Field(default=0, ge=0)
    wgrad_flops: int = Field(default=0, ge=0)
    agrad_flops: int = Field(default=0, ge=0)
    act_bytes: int = Field(default=0, ge=0)
    param_bytes: int = Field(default=0, ge=0)


class IterationCost(BaseModel):
    fwd: int = 0
    bwd: int = 0
    act_bytes: int = 0
    grad_bytes: int = 0

    @property
    def memory_bytes(self) -> int:
        return self.act_bytes + self.grad_bytes


class TraceRow(BaseModel):
    iteration: int
    epoch: int
    fwd_flops: int
    bwd_flops: int
    predictor_flops: int
    act_bytes: int
    frozen_units: int
    train_loss: float


class CostLedger(BaseModel):
    fwd_flops: int = 0
    bwd_flops: int = 0
    predictor_flops: int = 0
    peak_act_bytes: int = 0
    peak_memory_bytes: int = 0
    rows: List[TraceRow] = Field(default_factory=list)

    @property
    def total_flops(self) -> int:
        return self.fwd_flops + self.bwd_flops + self.predictor_flops

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.model_dump() for row in self.rows], columns=TRACE_COLUMNS)


def _unit_lookup(units: Sequence[FreezeUnit]) -> Dict[int, int]:
    return {index: unit.unit_id for unit in units for index in unit.layer_indices}


def layer_costs(spec: NetworkSpec, batch_size: int, units: Optional[Sequence[FreezeUnit]] = None) -> List[LayerCost]:
    """
    FLOPs and bytes of every layer for one iteration at the given batch size.
    One multiply-accumulate counts as 2 FLOPs; activations, comparisons and
    reshapes are free.
    """
    from engine.network import default_units  # local import: network builds on this module

    lookup = _unit_lookup(units if units is not None else (spec.units or default_units(spec)))
    costs = []
    shape: Shape = tuple(spec.input_shape)
    for index, layer in enumerate(spec.layers):
        out_shape = layer.output_shape(shape)
        in_values = batch_size * int(np.prod(shape))
        cost = LayerCost(layer_index=index, kind=layer.kind, unit_id=lookup.get(index))
        if layer.kind == 'dense':
            flops = 2 * batch_size * layer.in_features * layer.out_features
            cost.fwd_flops = cost.wgrad_flops = cost.agrad_flops = flops
            cost.act_bytes = in_values * BYTES_PER_VALUE
            cost.param_bytes = (layer.in_features * layer.out_features + layer.out_features) * BYTES_PER_VALUE
        elif layer.kind == 'conv2d':
            positions = out_shape[1] * out_shape[2]
            flops = 2 * batch_size * positions * layer.in_channels * layer.kernel ** 2 * layer.out_channels
            cost.fwd_flops = cost.wgrad_flops = cost.agrad_flops = flops
            cost.act_bytes = in_values * BYTES_PER_VALUE
            weights = layer.out_channels * layer.in_channels * layer.kernel ** 2
            cost.param_bytes = (weights + layer.out_channels) * BYTES_PER_VALUE
        elif layer.kind == 'norm':
            # scale+shift forward, scale/shift grads, one multiply for the input grad
            cost.fwd_flops = 2 * in_values
            cost.wgrad_flops = 2 * in_values
            cost.agrad_flops = in_values
            cost.act_bytes = in_values * BYTES_PER_VALUE
            cost.param_bytes = 2 * layer.channels * BYTES_PER_VALUE
        elif layer.kind == 'relu':
            cost.act_bytes = in_values * BYTES_PER_VALUE
        costs.append(cost)
        shape = out_shape
    return costs


def first_active_layer(costs: Sequence[LayerCost], frozen: Iterable[int]) -> Optional[int]:
    """Index of the earliest layer that belongs to an unfrozen unit, None when everything is frozen"""
    frozen = set(frozen)
    active = [c.layer_index for c in costs if c.unit_id is not None and c.unit_id not in frozen]
    return min(active) if active else None


def backward_plan(costs: Sequence[LayerCost], frozen: Iterable[int]) -> List[Dict[str, bool]]:
    """
    Which backward computations run for each layer under a freeze set.

    weights: the unit is trainable.
    inputs:  an unfrozen parametric layer sits before this layer, so the gradient
             has to keep flowing down; the first trainable layer never computes it.
    stores:  the forward pass must keep this layer's input for the backward pass.
    """
    frozen = set(frozen)
    first = first_active_layer(costs, frozen)
    plan = []
    for cost in costs:
        weights = cost.unit_id is not None and cost.unit_id not in frozen
        inputs = first is not None and cost.layer_index > first
        if cost.kind in ('dense', 'conv2d', 'norm'):
            stores = weights
        elif cost.kind == 'relu':
            stores = inputs
        else:
            stores = False
        plan.append({'weights': weights, 'inputs': inputs, 'stores': stores})
    return plan


def iteration_cost(costs: Sequence[LayerCost], mask: Union[FreezeMask, Iterable[int]]) -> IterationCost:
    frozen = set(mask.frozen) if isinstance(mask, FreezeMask) else set(mask)
    known_units = {c.unit_id for c in costs if c.unit_id is not None}
    unknown = frozen - known_units
    if unknown:
        raise ContractError(f"freeze mask names units {sorted(unknown)} that are not in the cost table")

    result = IterationCost()
    for cost, todo in zip(costs, backward_plan(costs, frozen)):
        result.fwd += cost.fwd_flops
        if todo['weights']:
            result.bwd += cost.wgrad_flops
            result.grad_bytes += cost.param_bytes
        if todo['inputs']:
            result.bwd += cost.agrad_flops
        if todo['stores']:
            result.act_bytes += cost.act_bytes
    return result


def accumulate(ledger: CostLedger, cost: IterationCost, predictor_cost: int = 0, *, iteration: int = 0,
               epoch: int = 0, frozen_units: int = 0, train_loss: float = 0.0) -> CostLedger:
    """Add one iteration to the ledger and append its trace row"""
    ledger.fwd_flops += cost.fwd
    ledger.bwd_flops += cost.bwd
    ledger.predictor_flops += predictor_cost
    ledger.peak_act_bytes = max(ledger.peak_act_bytes, cost.act_bytes)
    ledger.peak_memory_bytes = max(ledger.peak_memory_bytes, cost.memory_bytes)
    ledger.rows.append(TraceRow(
        iteration=iteration,
        epoch=epoch,
        fwd_flops=cost.fwd,
        bwd_flops=cost.bwd,
        predictor_flops=predictor_cost,
        act_bytes=cost.act_bytes,
        frozen_units=frozen_units,
        train_loss=float(train_loss),
    ))
    return ledger


def write_trace_csv(ledger: CostLedger, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ledger.to_frame().to_csv(path, index=False)
    return path


def read_trace_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path)[TRACE_COLUMNS]


def ledger_totals_from_trace(frame: pd.DataFrame) -> Dict[str, Any]:
    return {
        'fwd_flops': int(frame['fwd_flops'].sum()),
        'bwd_flops': int(frame['bwd_flops'].sum()),
        'predictor_flops': int(frame['predictor_flops'].sum()),
    }
