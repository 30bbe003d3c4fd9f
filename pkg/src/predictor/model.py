"""
Single-head attention over a unit's tailored weight history.

    K_j = MLP_k(W_j)   V_j = MLP_v(W_j)   Q = MLP_q(W_t)
    a_j = Q . K_j      alpha = softmax(a)  C = sum_j alpha_j V_j
    confidence = softmax(MLP_z(C)),  decision = argmax (ties -> 0, keep training)

Scores are the raw dot product (no 1/sqrt(d) scaling) and no positional
encoding is added.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field, field_validator, model_validator

from engine import layers as L
from helpers.errors import ContractError
from py_models.base import ArrayModel, StrictModel

logger = logging.getLogger('forensics')

ENCODERS = ('k', 'q', 'v')
HEAD = 'z'


class PredictorDims(StrictModel):
    """Widths of the linear layers, input first"""
    encoder: List[int] = Field(default_factory=lambda: [1024, 256, 256, 64])
    head: List[int] = Field(default_factory=lambda: [64, 32, 32, 2])

    @field_validator('encoder', 'head')
    @classmethod
    def _at_least_one_layer(cls, v: List[int]) -> List[int]:
        if len(v) < 2 or any(d < 1 for d in v):
            raise ValueError("needs at least two positive widths")
        return v

    @field_validator('head')
    @classmethod
    def _two_classes(cls, v: List[int]) -> List[int]:
        if v[-1] != 2:
            raise ValueError("head must end in 2 outputs (continue, freeze)")
        return v

    @property
    def tailored_size(self) -> int:
        return self.encoder[0]

    @model_validator(mode='after')
    def _encoder_feeds_head(self) -> 'PredictorDims':
        if self.encoder[-1] != self.head[0]:
            raise ValueError(f"encoder output {self.encoder[-1]} does not feed head input {self.head[0]}")
        return self


class PredictorParams(ArrayModel):
    dims: PredictorDims
    tensors: Dict[str, np.ndarray]

    def layers(self, mlp: str) -> List[Tuple[np.ndarray, np.ndarray]]:
        widths = self.dims.head if mlp == HEAD else self.dims.encoder
        return [(self.tensors[f"{mlp}.{i}.weight"], self.tensors[f"{mlp}.{i}.bias"]) for i in range(len(widths) - 1)]

    def astype(self, dtype) -> 'PredictorParams':
        return PredictorParams(dims=self.dims, tensors={k: v.astype(dtype) for k, v in self.tensors.items()})

    def copy(self) -> 'PredictorParams':
        return PredictorParams(dims=self.dims, tensors={k: v.copy() for k, v in self.tensors.items()})


def init_params(dims: Optional[PredictorDims] = None, seed: int = 0, zero: bool = False) -> PredictorParams:
    """Kaiming-uniform (fan-in) weights per linear layer; `zero` gives an all-zero predictor"""
    dims = dims or PredictorDims()
    tensors: Dict[str, np.ndarray] = {}
    for m, mlp in enumerate(ENCODERS + (HEAD,)):
        widths = dims.head if mlp == HEAD else dims.encoder
        for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
            rng = np.random.default_rng([seed, m, i])
            bound = np.sqrt(6.0 / fan_in)
            bias_bound = 1.0 / np.sqrt(fan_in)
            weight = rng.uniform(-bound, bound, size=(fan_out, fan_in))
            bias = rng.uniform(-bias_bound, bias_bound, size=fan_out)
            if zero:
                weight, bias = np.zeros_like(weight), np.zeros_like(bias)
            tensors[f"{mlp}.{i}.weight"] = weight.astype(np.float32)
            tensors[f"{mlp}.{i}.bias"] = bias.astype(np.float32)
    return PredictorParams(dims=dims, tensors=tensors)


# --- MLPs --------------------------------------------------------------------

def mlp_forward(layers: Sequence[Tuple[np.ndarray, np.ndarray]], x: np.ndarray) -> Tuple[np.ndarray, List]:
    """ReLU between linear layers, none after the last. Returns (output, cache of (input, pre-activation))."""
    cache = []
    h = x
    for i, (weight, bias) in enumerate(layers):
        z = L.dense_forward(h, weight, bias)
        cache.append((h, z))
        h = L.relu_forward(z) if i < len(layers) - 1 else z
    return h, cache


def mlp_backward(layers: Sequence[Tuple[np.ndarray, np.ndarray]], cache: List, grad_out: np.ndarray,
                 need_input: bool = False) -> Tuple[List[Tuple[np.ndarray, np.ndarray]], Optional[np.ndarray]]:
    """(weight, bias) gradients per layer, and the gradient w.r.t. the MLP input when asked for"""
    grads: List[Tuple[np.ndarray, np.ndarray]] = [None] * len(layers)
    g = grad_out
    for i in range(len(layers) - 1, -1, -1):
        h, z = cache[i]
        if i < len(layers) - 1:
            g = L.relu_input_grad(z, g)
        grads[i] = L.dense_weight_grads(h, g)
        if i > 0 or need_input:
            g = L.dense_input_grad(layers[i][0], g)
    return grads, (g if need_input else None)


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max())
    return e / e.sum()


def _as_sequence(params: PredictorParams, sequence: np.ndarray) -> np.ndarray:
    seq = np.asarray(sequence)
    if seq.ndim == 1:
        seq = seq[None, :]
    if seq.ndim != 2 or len(seq) == 0:
        raise ContractError(f"sequence must be a non-empty (length, {params.dims.tailored_size}) array")
    if seq.shape[1] != params.dims.tailored_size:
        raise ContractError(f"snapshot length {seq.shape[1]} does not match tailored size {params.dims.tailored_size}")
    return seq.astype(next(iter(params.tensors.values())).dtype, copy=False)


def standardize_sequence(sequence: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance over the whole sequence; constant sequences are only centered"""
    std = sequence.std()
    centered = sequence - sequence.mean()
    return centered / std if std > 0 else centered


# --- inference ---------------------------------------------------------------

def encode(params: PredictorParams, snapshot: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = _as_sequence(params, snapshot)
    if len(x) != 1:
        raise ContractError("encode takes one snapshot")
    k, _ = mlp_forward(params.layers('k'), x)
    q, _ = mlp_forward(params.layers('q'), x)
    v, _ = mlp_forward(params.layers('v'), x)
    return k[0], q[0], v[0]


def attend(params: PredictorParams, sequence: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Attention weights over the sequence and the context vector, queried from the last timestamp"""
    x = _as_sequence(params, sequence)
    keys, _ = mlp_forward(params.layers('k'), x)
    values, _ = mlp_forward(params.layers('v'), x)
    query, _ = mlp_forward(params.layers('q'), x[-1:])
    alphas = _softmax(keys @ query[0])
    return alphas, alphas @ values


class DecisionTrace(ArrayModel):
    alphas: np.ndarray
    context: np.ndarray
    confidence: np.ndarray
    decision: int

    @property
    def freeze_confidence(self) -> float:
        return float(self.confidence[1])


def decision_from(confidence: np.ndarray) -> int:
    # a tie keeps the unit training
    return 1 if confidence[1] > confidence[0] else 0


def decide(params: PredictorParams, sequence: np.ndarray) -> DecisionTrace:
    alphas, context = attend(params, sequence)
    logits, _ = mlp_forward(params.layers(HEAD), context[None, :])
    confidence = _softmax(logits[0])
    return DecisionTrace(alphas=alphas, context=context, confidence=confidence, decision=decision_from(confidence))


def _mlp_flops(widths: Sequence[int]) -> int:
    return sum(2 * a * b for a, b in zip(widths[:-1], widths[1:]))


def inference_flops(dims: Optional[PredictorDims] = None, length: int = 30, query_every_timestamp: bool = False) -> int:
    """
    FLOPs of one decision on a sequence of `length` snapshots, counted like
    the cost ledger (MAC = 2 FLOPs, activations and softmax free).

    The smart policy charges whatever the loaded predictor runs, which is
    the `query_every_timestamp=False` count unless the predictor file says
    otherwise. A decision only reads the attention of the newest query, so
    the query encoder runs once: about 0.042 GFLOPs at the default
    dimensions and a window of 30. With `query_every_timestamp` the query
    encoder also runs on every older snapshot, about 0.062 GFLOPs.
    """
    dims = dims or PredictorDims()
    encoder = _mlp_flops(dims.encoder)
    width = dims.encoder[-1]
    queries = length if query_every_timestamp else 1
    per_step = 2 * encoder + 2 * width + 2 * width  # K, V, score, weighted sum
    return length * per_step + queries * encoder + _mlp_flops(dims.head)


# --- training gradient -------------------------------------------------------

def predictor_grad(params: PredictorParams, sequence: np.ndarray, label: int,
                   class_weights: Tuple[float, float] = (1.0, 1.0)) -> Tuple[float, Dict[str, np.ndarray]]:
    """Class-weighted cross-entropy of one record and its gradient w.r.t. every tensor"""
    x = _as_sequence(params, sequence)
    k_layers, q_layers, v_layers, z_layers = (params.layers(m) for m in ENCODERS + (HEAD,))

    keys, k_cache = mlp_forward(k_layers, x)
    values, v_cache = mlp_forward(v_layers, x)
    query, q_cache = mlp_forward(q_layers, x[-1:])
    q = query[0]
    alphas = _softmax(keys @ q)
    context = alphas @ values
    logits, z_cache = mlp_forward(z_layers, context[None, :])
    probs = _softmax(logits[0])

    weight = float(class_weights[label])
    loss = -weight * float(np.log(max(probs[label], np.finfo(probs.dtype).tiny)))

    dlogits = probs.copy()
    dlogits[label] -= 1
    dlogits *= weight
    z_grads, d_context = mlp_backward(z_layers, z_cache, dlogits[None, :], need_input=True)
    d_context = d_context[0]

    d_values = alphas[:, None] * d_context[None, :]
    d_alphas = values @ d_context
    d_scores = alphas * (d_alphas - np.sum(alphas * d_alphas))
    d_keys = d_scores[:, None] * q[None, :]
    d_query = d_scores @ keys

    grads: Dict[str, np.ndarray] = {}
    for mlp, layer_grads in (('z', z_grads),
                             ('k', mlp_backward(k_layers, k_cache, d_keys)[0]),
                             ('v', mlp_backward(v_layers, v_cache, d_values)[0]),
                             ('q', mlp_backward(q_layers, q_cache, d_query[None, :])[0])):
        for i, (gw, gb) in enumerate(layer_grads):
            grads[f"{mlp}.{i}.weight"] = gw
            grads[f"{mlp}.{i}.bias"] = gb
    return loss, grads


# --- wrapper -----------------------------------------------------------------

class AttentionPredictor(ArrayModel):
    """Trained params plus the settings they were trained with"""
    params: PredictorParams
    window: int = Field(30, ge=1)
    standardize: bool = False
    query_every_timestamp: bool = False
    best_balanced_accuracy: Optional[float] = None

    @property
    def tailored_size(self) -> int:
        return self.params.dims.tailored_size

    def prepare(self, sequence: np.ndarray) -> np.ndarray:
        seq = np.asarray(sequence, dtype=np.float32)
        if seq.ndim == 1:
            seq = seq[None, :]
        seq = seq[-self.window:]
        return standardize_sequence(seq) if self.standardize else seq

    def decide(self, sequence: np.ndarray) -> DecisionTrace:
        return decide(self.params, self.prepare(sequence))

    def inference_flops(self, length: int) -> int:
        return inference_flops(self.params.dims, min(length, self.window), self.query_every_timestamp)
