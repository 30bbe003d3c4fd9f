"""
Layer specifications and the numpy kernels behind them.

Every kernel is dtype-preserving: float32 parameters give float32
activations, float64 copies give float64 activations (used by the
finite-difference checks).
"""
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import Field

from py_models.base import StrictModel

Shape = Tuple[int, ...]


class DenseSpec(StrictModel):
    kind: Literal['dense'] = 'dense'
    in_features: int = Field(..., ge=1)
    out_features: int = Field(..., ge=1)

    def accepts(self, input_shape: Shape) -> bool:
        return tuple(input_shape) == (self.in_features,)

    def output_shape(self, input_shape: Shape) -> Shape:
        return (self.out_features,)


class Conv2dSpec(StrictModel):
    kind: Literal['conv2d'] = 'conv2d'
    in_channels: int = Field(..., ge=1)
    out_channels: int = Field(..., ge=1)
    kernel: int = Field(..., ge=1)
    stride: int = Field(1, ge=1)
    padding: int = Field(0, ge=0)

    def accepts(self, input_shape: Shape) -> bool:
        if len(input_shape) != 3 or input_shape[0] != self.in_channels:
            return False
        _, h, w = input_shape
        return h + 2 * self.padding >= self.kernel and w + 2 * self.padding >= self.kernel

    def output_shape(self, input_shape: Shape) -> Shape:
        _, h, w = input_shape
        out_h = (h + 2 * self.padding - self.kernel) // self.stride + 1
        out_w = (w + 2 * self.padding - self.kernel) // self.stride + 1
        return (self.out_channels, out_h, out_w)


class NormSpec(StrictModel):
    """Per-channel affine scale and shift; running statistics stay at their init values"""
    kind: Literal['norm'] = 'norm'
    channels: int = Field(..., ge=1)

    def accepts(self, input_shape: Shape) -> bool:
        return len(input_shape) in (1, 3) and input_shape[0] == self.channels

    def output_shape(self, input_shape: Shape) -> Shape:
        return tuple(input_shape)


class ReLUSpec(StrictModel):
    kind: Literal['relu'] = 'relu'

    def accepts(self, input_shape: Shape) -> bool:
        return True

    def output_shape(self, input_shape: Shape) -> Shape:
        return tuple(input_shape)


class FlattenSpec(StrictModel):
    kind: Literal['flatten'] = 'flatten'

    def accepts(self, input_shape: Shape) -> bool:
        return True

    def output_shape(self, input_shape: Shape) -> Shape:
        return (int(np.prod(input_shape)),)


LayerSpec = Annotated[
    Union[DenseSpec, Conv2dSpec, NormSpec, ReLUSpec, FlattenSpec],
    Field(discriminator='kind'),
]

PARAMETRIC_KINDS = ('dense', 'conv2d')


def is_parametric(layer) -> bool:
    return layer.kind in PARAMETRIC_KINDS


def has_parameters(layer) -> bool:
    return layer.kind in PARAMETRIC_KINDS or layer.kind == 'norm'


class FreezeUnit(StrictModel):
    unit_id: int = Field(..., ge=0)
    layer_indices: List[int] = Field(..., min_length=1)


class NetworkSpec(StrictModel):
    input_shape: Tuple[int, ...]
    layers: List[LayerSpec] = Field(..., min_length=1)
    units: Optional[List[FreezeUnit]] = None


# --- dense -------------------------------------------------------------------

def dense_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    return x @ weight.T + bias


def dense_weight_grads(x: np.ndarray, grad_out: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return grad_out.T @ x, grad_out.sum(axis=0)


def dense_input_grad(weight: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return grad_out @ weight


# --- conv2d ------------------------------------------------------------------

def _pad(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _windows(x_padded: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    # (N, C, H_out, W_out, k, k) view, no copy
    view = sliding_window_view(x_padded, (kernel, kernel), axis=(2, 3))
    return view[:, :, ::stride, ::stride]


def conv2d_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int, padding: int) -> np.ndarray:
    kernel = weight.shape[-1]
    cols = _windows(_pad(x, padding), kernel, stride)
    out = np.einsum('nchwij,ocij->nohw', cols, weight, optimize=True)
    return out + bias[None, :, None, None]


def conv2d_weight_grads(x: np.ndarray, grad_out: np.ndarray, kernel: int, stride: int,
                        padding: int) -> Tuple[np.ndarray, np.ndarray]:
    cols = _windows(_pad(x, padding), kernel, stride)
    grad_weight = np.einsum('nohw,nchwij->ocij', grad_out, cols, optimize=True)
    return grad_weight, grad_out.sum(axis=(0, 2, 3))


def conv2d_input_grad(weight: np.ndarray, grad_out: np.ndarray, input_shape: Shape, stride: int,
                      padding: int) -> np.ndarray:
    n = grad_out.shape[0]
    c, h, w = input_shape
    kernel = weight.shape[-1]
    out_h, out_w = grad_out.shape[2], grad_out.shape[3]
    grad_cols = np.einsum('nohw,ocij->nchwij', grad_out, weight, optimize=True)
    grad_padded = np.zeros((n, c, h + 2 * padding, w + 2 * padding), dtype=grad_out.dtype)
    for i in range(kernel):
        for j in range(kernel):
            grad_padded[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride] += grad_cols[..., i, j]
    if padding:
        return grad_padded[:, :, padding:-padding, padding:-padding]
    return grad_padded


# --- norm --------------------------------------------------------------------

def _channel_view(param: np.ndarray, ndim: int) -> np.ndarray:
    if ndim == 4:
        return param[None, :, None, None]
    return param[None, :]


def _channel_axes(ndim: int) -> Tuple[int, ...]:
    return (0, 2, 3) if ndim == 4 else (0,)


def norm_forward(x: np.ndarray, scale: np.ndarray, shift: np.ndarray) -> np.ndarray:
    return x * _channel_view(scale, x.ndim) + _channel_view(shift, x.ndim)


def norm_weight_grads(x: np.ndarray, grad_out: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    axes = _channel_axes(x.ndim)
    return (grad_out * x).sum(axis=axes), grad_out.sum(axis=axes)


def norm_input_grad(scale: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return grad_out * _channel_view(scale, grad_out.ndim)


# --- relu --------------------------------------------------------------------

def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_input_grad(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return grad_out * (x > 0)
