"""
Sequential network engine: build, forward, masked backward, SGD with momentum.

Parameters live per freeze unit (`state.params[unit_id][name]`), where
`name` is `"{layer_index}.weight"`, `"{layer_index}.bias"`,
`"{layer_index}.scale"` or `"{layer_index}.shift"`.
"""
import logging
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np
from pydantic import Field, model_validator

from engine import layers as L
from engine.layers import FreezeUnit, NetworkSpec, Shape
from helpers.errors import ConfigError, ContractError, NumericOverflowError, SpecificationError
from py_models.base import ArrayModel
from py_models.freeze_mask import FreezeMask

logger = logging.getLogger('forensics')

DTYPE = np.float32

ParamDict = Dict[str, np.ndarray]


class Batch(ArrayModel):
    inputs: np.ndarray
    labels: np.ndarray

    @model_validator(mode='after')
    def _check(self) -> 'Batch':
        if len(self.inputs) < 1:
            raise ValueError("batch size must be >= 1")
        if len(self.labels) != len(self.inputs):
            raise ValueError(f"{len(self.inputs)} inputs but {len(self.labels)} labels")
        return self

    def __len__(self) -> int:
        return len(self.inputs)


def default_units(spec: NetworkSpec) -> List[FreezeUnit]:
    """One unit per parametric layer, with the Norm that follows it"""
    units: List[FreezeUnit] = []
    for index, layer in enumerate(spec.layers):
        if L.is_parametric(layer):
            units.append(FreezeUnit(unit_id=len(units), layer_indices=[index]))
        elif layer.kind == 'norm' and units and units[-1].layer_indices[-1] == index - 1:
            units[-1].layer_indices.append(index)
    return units


def layer_shapes(spec: NetworkSpec) -> List[Tuple[Shape, Shape]]:
    """(input_shape, output_shape) per layer; raises SpecificationError when the chain does not compose"""
    shapes = []
    shape: Shape = tuple(spec.input_shape)
    for index, layer in enumerate(spec.layers):
        if not layer.accepts(shape):
            source = 'input' if index == 0 else str(index - 1)
            raise SpecificationError(
                f"shape mismatch at layers {source}→{index} ({layer.kind} cannot take {shape})")
        out = layer.output_shape(shape)
        if any(d < 1 for d in out):
            raise SpecificationError(f"layer {index} ({layer.kind}) produces empty shape {out}")
        shapes.append((shape, out))
        shape = out
    if len(shape) != 1:
        raise SpecificationError(f"network output must be flat logits, got shape {shape}")
    return shapes


def validate_spec(spec: NetworkSpec, units: Sequence[FreezeUnit]) -> List[Tuple[Shape, Shape]]:
    shapes = layer_shapes(spec)
    for index, layer in enumerate(spec.layers):
        if layer.kind == 'norm' and (index == 0 or not L.is_parametric(spec.layers[index - 1])):
            raise SpecificationError(f"norm layer {index} must directly follow a dense or conv2d layer")

    owner: Dict[int, int] = {}
    for position, unit in enumerate(units):
        if unit.unit_id != position:
            raise SpecificationError(f"unit ids must be 0..{len(units) - 1} in order, got {unit.unit_id}")
        for index in unit.layer_indices:
            if not 0 <= index < len(spec.layers):
                raise SpecificationError(f"unit {unit.unit_id} names unknown layer {index}")
            if index in owner:
                raise SpecificationError(f"layer {index} belongs to units {owner[index]} and {unit.unit_id}")
            owner[index] = unit.unit_id
    for index, layer in enumerate(spec.layers):
        if L.has_parameters(layer) and index not in owner:
            raise SpecificationError(f"layer {index} ({layer.kind}) is not covered by any unit")
        if not L.has_parameters(layer) and index in owner:
            raise SpecificationError(f"layer {index} ({layer.kind}) has no parameters and cannot join a unit")
    firsts = [min(u.layer_indices) for u in units]
    if firsts != sorted(firsts):
        raise SpecificationError("units must be ordered by position")
    return shapes


class NetworkState(ArrayModel):
    spec: NetworkSpec
    units: List[FreezeUnit]
    params: Dict[int, Dict[str, np.ndarray]]
    momentum: Dict[int, Dict[str, np.ndarray]]
    seed: int
    shapes: List[Tuple[Tuple[int, ...], Tuple[int, ...]]] = Field(default_factory=list)

    @property
    def num_units(self) -> int:
        return len(self.units)

    @property
    def dtype(self) -> np.dtype:
        return next(iter(self.params[0].values())).dtype if self.params else np.dtype(DTYPE)

    @property
    def num_classes(self) -> int:
        return int(self.shapes[-1][1][0])

    def unit_of(self, layer_index: int) -> Optional[int]:
        for unit in self.units:
            if layer_index in unit.layer_indices:
                return unit.unit_id
        return None

    def layer_params(self, layer_index: int) -> ParamDict:
        unit_id = self.unit_of(layer_index)
        if unit_id is None:
            return {}
        prefix = f"{layer_index}."
        return {name[len(prefix):]: value for name, value in self.params[unit_id].items()
                if name.startswith(prefix)}

    def weight_tensor(self, unit_id: int) -> np.ndarray:
        """The unit's parametric-layer weight (Norm and bias excluded)"""
        unit = self.units[unit_id]
        return self.params[unit_id][f"{unit.layer_indices[0]}.weight"]

    def copy(self, dtype=None) -> 'NetworkState':
        cast = (lambda a: a.astype(dtype)) if dtype is not None else (lambda a: a.copy())
        return NetworkState(
            spec=self.spec,
            units=self.units,
            params={u: {k: cast(v) for k, v in p.items()} for u, p in self.params.items()},
            momentum={u: {k: cast(v) for k, v in p.items()} for u, p in self.momentum.items()},
            seed=self.seed,
            shapes=self.shapes,
        )


def _init_layer(layer, index: int, in_shape: Shape, rng: np.random.Generator) -> ParamDict:
    if layer.kind == 'dense':
        fan_in = layer.in_features
        w_shape = (layer.out_features, layer.in_features)
        b_shape = (layer.out_features,)
    elif layer.kind == 'conv2d':
        fan_in = layer.in_channels * layer.kernel ** 2
        w_shape = (layer.out_channels, layer.in_channels, layer.kernel, layer.kernel)
        b_shape = (layer.out_channels,)
    else:
        return {
            f"{index}.scale": np.ones(layer.channels, dtype=DTYPE),
            f"{index}.shift": np.zeros(layer.channels, dtype=DTYPE),
        }
    bound = np.sqrt(6.0 / fan_in)
    bias_bound = 1.0 / np.sqrt(fan_in)
    return {
        f"{index}.weight": rng.uniform(-bound, bound, size=w_shape).astype(DTYPE),
        f"{index}.bias": rng.uniform(-bias_bound, bias_bound, size=b_shape).astype(DTYPE),
    }


def build_network(spec: NetworkSpec, units: Optional[Sequence[FreezeUnit]] = None, seed: int = 0) -> NetworkState:
    """
    Build a network with Kaiming-uniform (fan-in) weights.

    Initialization is a pure function of (spec, units, seed): layer i draws
    from its own generator seeded with (seed, i).
    """
    units = list(units if units is not None else (spec.units or default_units(spec)))
    shapes = validate_spec(spec, units)
    params: Dict[int, ParamDict] = {}
    for unit in units:
        params[unit.unit_id] = {}
        for index in unit.layer_indices:
            rng = np.random.default_rng([seed, index])
            params[unit.unit_id].update(_init_layer(spec.layers[index], index, shapes[index][0], rng))
    momentum = {u: {k: np.zeros_like(v) for k, v in p.items()} for u, p in params.items()}
    logger.debug(f"Built network with {len(spec.layers)} layers, {len(units)} units, seed={seed}")
    return NetworkState(spec=spec, units=units, params=params, momentum=momentum, seed=seed, shapes=shapes)


# --- forward -----------------------------------------------------------------

class ActivationCache(ArrayModel):
    """Layer inputs kept for backward, and the freeze set they were kept for"""
    frozen: Set[int]
    inputs: Dict[int, np.ndarray] = Field(default_factory=dict)
    batch_size: int


def _frozen_set(mask: Optional[Union[FreezeMask, Set[int]]]) -> Set[int]:
    if mask is None:
        return set()
    if isinstance(mask, FreezeMask):
        return set(mask.frozen)
    return set(mask)


def _plan(state: NetworkState, frozen: Set[int]) -> List[Dict[str, bool]]:
    from helpers.cost_ledger import backward_plan, layer_costs  # local import: cost_ledger imports this module
    return backward_plan(layer_costs(state.spec, 1, state.units), frozen)


def _layer_forward(layer, params: ParamDict, x: np.ndarray) -> np.ndarray:
    if layer.kind == 'dense':
        return L.dense_forward(x, params['weight'], params['bias'])
    if layer.kind == 'conv2d':
        return L.conv2d_forward(x, params['weight'], params['bias'], layer.stride, layer.padding)
    if layer.kind == 'norm':
        return L.norm_forward(x, params['scale'], params['shift'])
    if layer.kind == 'relu':
        return L.relu_forward(x)
    return x.reshape(len(x), -1)


def _check_input(state: NetworkState, inputs: np.ndarray) -> None:
    if inputs.ndim < 1 or len(inputs) < 1:
        raise ConfigError("batch must hold at least one sample")
    if tuple(inputs.shape[1:]) != tuple(state.spec.input_shape):
        raise ConfigError(
            f"batch input shape {tuple(inputs.shape[1:])} does not match network input {tuple(state.spec.input_shape)}")


def _run_layers(state: NetworkState, inputs: np.ndarray, keep=None, outputs=None) -> np.ndarray:
    x = inputs
    for index, layer in enumerate(state.spec.layers):
        if keep is not None and keep(index):
            outputs[index] = x
        x = _layer_forward(layer, state.layer_params(index), x)
        if not np.all(np.isfinite(x)):
            raise NumericOverflowError(index)
    return x


def forward(state: NetworkState, batch: Union[Batch, np.ndarray],
            mask: Optional[Union[FreezeMask, Set[int]]] = None) -> Tuple[ActivationCache, np.ndarray]:
    """
    Run every layer. Only the inputs the masked backward pass will read are
    kept in the cache.
    """
    inputs = batch.inputs if isinstance(batch, Batch) else batch
    _check_input(state, inputs)
    frozen = _frozen_set(mask)
    plan = _plan(state, frozen)
    cache = ActivationCache(frozen=frozen, batch_size=len(inputs))
    logits = _run_layers(state, inputs.astype(state.dtype, copy=False),
                         keep=lambda i: plan[i]['stores'], outputs=cache.inputs)
    return cache, logits


def predict_logits(state: NetworkState, inputs: np.ndarray) -> np.ndarray:
    _check_input(state, inputs)
    return _run_layers(state, inputs.astype(state.dtype, copy=False))


def unit_outputs(state: NetworkState, inputs: np.ndarray) -> Dict[int, np.ndarray]:
    """Each unit's output (its last layer's output), flattened per sample"""
    _check_input(state, inputs)
    last_layer = {max(u.layer_indices): u.unit_id for u in state.units}
    outputs: Dict[int, np.ndarray] = {}
    x = inputs.astype(state.dtype, copy=False)
    for index, layer in enumerate(state.spec.layers):
        x = _layer_forward(layer, state.layer_params(index), x)
        if not np.all(np.isfinite(x)):
            raise NumericOverflowError(index)
        if index in last_layer:
            outputs[last_layer[index]] = x.reshape(len(x), -1)
    return outputs


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray,
                          weights: Optional[np.ndarray] = None) -> Tuple[float, np.ndarray]:
    """Mean (optionally weighted) cross-entropy and its gradient w.r.t. the logits"""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise ConfigError(f"labels must lie in [0, {logits.shape[1]})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    rows = np.arange(len(labels))
    sample_w = np.ones(len(labels), dtype=logits.dtype) if weights is None else np.asarray(weights)[labels]
    norm = sample_w.sum()
    loss = float(-(sample_w * log_probs[rows, labels]).sum() / norm)
    grad = np.exp(log_probs)
    grad[rows, labels] -= 1
    grad *= (sample_w / norm)[:, None]
    return loss, grad.astype(logits.dtype, copy=False)


# --- backward ----------------------------------------------------------------

class Gradients(ArrayModel):
    by_unit: Dict[int, Dict[str, np.ndarray]] = Field(default_factory=dict)
    wgrad_flops: int = 0
    agrad_flops: int = 0

    @property
    def flops(self) -> int:
        return self.wgrad_flops + self.agrad_flops

    def __contains__(self, unit_id: object) -> bool:
        return unit_id in self.by_unit


def backward(state: NetworkState, cache: ActivationCache, dlogits: np.ndarray,
             mask: Optional[Union[FreezeMask, Set[int]]] = None) -> Gradients:
    """
    Weight gradients for unfrozen units only. The gradient stops flowing
    below the earliest unfrozen layer.
    """
    from helpers.cost_ledger import layer_costs

    frozen = _frozen_set(mask)
    if frozen != cache.frozen:
        raise ContractError(f"cache was built for frozen units {sorted(cache.frozen)}, backward got {sorted(frozen)}")
    if len(dlogits) != cache.batch_size:
        raise ContractError(f"dlogits hold {len(dlogits)} rows, cache was built for {cache.batch_size}")
    costs = layer_costs(state.spec, cache.batch_size, state.units)
    plan = _plan(state, frozen)
    grads = Gradients()
    g = dlogits
    for index in range(len(state.spec.layers) - 1, -1, -1):
        todo = plan[index]
        if not (todo['weights'] or todo['inputs']):
            break
        layer = state.spec.layers[index]
        in_shape = state.shapes[index][0]
        if todo['stores'] and index not in cache.inputs:
            raise ContractError(f"cache lacks the input of layer {index}")
        x = cache.inputs.get(index)
        p = state.layer_params(index)

        if todo['weights']:
            if layer.kind == 'dense':
                gw, gb = L.dense_weight_grads(x, g)
                names = {'weight': gw, 'bias': gb}
            elif layer.kind == 'conv2d':
                gw, gb = L.conv2d_weight_grads(x, g, layer.kernel, layer.stride, layer.padding)
                names = {'weight': gw, 'bias': gb}
            else:
                gs, gsh = L.norm_weight_grads(x, g)
                names = {'scale': gs, 'shift': gsh}
            unit_grads = grads.by_unit.setdefault(state.unit_of(index), {})
            for name, value in names.items():
                unit_grads[f"{index}.{name}"] = value
            grads.wgrad_flops += costs[index].wgrad_flops

        if not todo['inputs']:
            break
        if layer.kind == 'dense':
            g = L.dense_input_grad(p['weight'], g)
        elif layer.kind == 'conv2d':
            g = L.conv2d_input_grad(p['weight'], g, in_shape, layer.stride, layer.padding)
        elif layer.kind == 'norm':
            g = L.norm_input_grad(p['scale'], g)
        elif layer.kind == 'relu':
            g = L.relu_input_grad(x, g)
        else:
            g = g.reshape((len(g),) + tuple(in_shape))
        grads.agrad_flops += costs[index].agrad_flops
    return grads


# --- optimizer ---------------------------------------------------------------

def momentum_update(param: np.ndarray, velocity: np.ndarray, grad: np.ndarray, lr: float, momentum: float) -> None:
    """In place: v <- mu*v + g, w <- w - lr*v"""
    velocity *= momentum
    velocity += grad.astype(velocity.dtype, copy=False)
    param -= np.asarray(lr, dtype=param.dtype) * velocity


def sgd_step(state: NetworkState, grads: Gradients, lr: Union[float, Mapping[int, float]], momentum: float,
             mask: Optional[Union[FreezeMask, Set[int]]] = None) -> NetworkState:
    """
    Momentum SGD over the unfrozen units. `lr` is one rate or a rate per unit.
    Frozen units are not touched.
    """
    if not 0 <= momentum < 1:
        raise ConfigError(f"momentum must lie in [0, 1), got {momentum}")
    rates = dict(lr) if isinstance(lr, Mapping) else {u.unit_id: float(lr) for u in state.units}
    for unit_id, rate in rates.items():
        if rate < 0 or not np.isfinite(rate):
            raise ConfigError(f"learning rate must be >= 0, got {rate} for unit {unit_id}")

    frozen = _frozen_set(mask)
    expected = {u.unit_id for u in state.units} - frozen
    if set(grads.by_unit) != expected:
        raise ContractError(
            f"gradients cover units {sorted(grads.by_unit)}, expected exactly {sorted(expected)}")
    for unit_id, unit_grads in grads.by_unit.items():
        rate = rates.get(unit_id, 0.0)
        for name, grad in unit_grads.items():
            momentum_update(state.params[unit_id][name], state.momentum[unit_id][name], grad, rate, momentum)
    return state


# --- evaluation --------------------------------------------------------------

def predict(state: NetworkState, inputs: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Argmax class per sample; ties go to the lowest class index"""
    preds = [np.argmax(predict_logits(state, inputs[i:i + batch_size]), axis=1)
             for i in range(0, len(inputs), batch_size)]
    return np.concatenate(preds)


def evaluate(state: NetworkState, inputs: np.ndarray, labels: np.ndarray, batch_size: int = 256) -> float:
    if len(inputs) == 0:
        raise ConfigError("cannot evaluate on an empty dataset")
    return float(np.mean(predict(state, inputs, batch_size) == np.asarray(labels)))
