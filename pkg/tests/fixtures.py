"""Small networks and configs shared by the tests"""
from typing import List, Optional

import numpy as np

from engine.layers import NetworkSpec
from engine.network import NetworkState, build_network
from py_models.configs import ExperimentConfig, GenConfig, TaskConfig


def mlp_spec(sizes: List[int], norm: bool = True) -> NetworkSpec:
    """dense(+norm)+relu blocks, a bare dense head"""
    layers = []
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        layers.append({'kind': 'dense', 'in_features': a, 'out_features': b})
        if i < len(sizes) - 2:
            if norm:
                layers.append({'kind': 'norm', 'channels': b})
            layers.append({'kind': 'relu'})
    return NetworkSpec.model_validate({'input_shape': [sizes[0]], 'layers': layers})


def conv_spec() -> NetworkSpec:
    return NetworkSpec.model_validate({
        'input_shape': [1, 6, 6],
        'layers': [
            {'kind': 'conv2d', 'in_channels': 1, 'out_channels': 3, 'kernel': 3, 'padding': 1},
            {'kind': 'norm', 'channels': 3},
            {'kind': 'relu'},
            {'kind': 'conv2d', 'in_channels': 3, 'out_channels': 4, 'kernel': 3, 'stride': 2},
            {'kind': 'relu'},
            {'kind': 'flatten'},
            {'kind': 'dense', 'in_features': 16, 'out_features': 3},
        ],
    })


def digits_conv_spec() -> NetworkSpec:
    return NetworkSpec.model_validate({
        'input_shape': [1, 8, 8],
        'layers': [
            {'kind': 'conv2d', 'in_channels': 1, 'out_channels': 8, 'kernel': 3, 'padding': 1},
            {'kind': 'norm', 'channels': 8},
            {'kind': 'relu'},
            {'kind': 'conv2d', 'in_channels': 8, 'out_channels': 16, 'kernel': 3, 'stride': 2, 'padding': 1},
            {'kind': 'norm', 'channels': 16},
            {'kind': 'relu'},
            {'kind': 'flatten'},
            {'kind': 'dense', 'in_features': 256, 'out_features': 64},
            {'kind': 'norm', 'channels': 64},
            {'kind': 'relu'},
            {'kind': 'dense', 'in_features': 64, 'out_features': 10},
        ],
    })


def random_conv_spec(rng: np.random.Generator) -> NetworkSpec:
    """One or two small conv blocks, flatten and a dense head"""
    channels, side = int(rng.integers(1, 3)), int(rng.integers(4, 6))
    input_shape = [channels, side, side]
    shape = list(input_shape)
    layers = []
    for _ in range(int(rng.integers(1, 3))):
        out, stride = int(rng.integers(2, 4)), int(rng.integers(1, 3))
        layers.append({'kind': 'conv2d', 'in_channels': shape[0], 'out_channels': out, 'kernel': 3,
                       'stride': stride, 'padding': 1})
        if rng.random() < 0.5:
            layers.append({'kind': 'norm', 'channels': out})
        layers.append({'kind': 'relu'})
        side = (shape[1] + 2 - 3) // stride + 1
        shape = [out, side, side]
    layers.append({'kind': 'flatten'})
    layers.append({'kind': 'dense', 'in_features': int(np.prod(shape)), 'out_features': int(rng.integers(2, 4))})
    return NetworkSpec.model_validate({'input_shape': input_shape, 'layers': layers})


def random_mlp_spec(rng: np.random.Generator) -> NetworkSpec:
    """Depth 1 to 3, widths 2 to 5, norm layers on or off"""
    sizes = [int(n) for n in rng.integers(2, 6, size=int(rng.integers(2, 5)))]
    return mlp_spec(sizes, norm=bool(rng.random() < 0.5))


def small_mlp(seed: int = 0, sizes: Optional[List[int]] = None) -> NetworkState:
    return build_network(mlp_spec(sizes or [4, 8, 8, 3]), seed=seed)


def random_batch(state: NetworkState, n: int = 5, seed: int = 0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n,) + tuple(state.spec.input_shape))
    y = rng.integers(0, state.num_classes, size=n)
    return x, y


def blobs_task(n_samples: int = 240, n_classes: int = 3, **kwargs) -> TaskConfig:
    return TaskConfig(id='blobs', n_samples=n_samples, n_classes=n_classes, probe_size=64, **kwargs)


def blobs_experiment(policy: Optional[dict] = None, out_dir: str = 'runs', **kwargs) -> ExperimentConfig:
    data = {
        'network': mlp_spec([2, 16, 16, 3]).model_dump(mode='json'),
        'task': blobs_task().model_dump(mode='json'),
        'epochs': 4,
        'batch_size': 32,
        'lr': 0.05,
        'policy': policy or {'kind': 'full'},
        'out_dir': out_dir,
    }
    data.update(kwargs)
    return ExperimentConfig.model_validate(data)


def blobs_generation(out_dir: str = 'datasets', **kwargs) -> GenConfig:
    data = {
        'network': mlp_spec([2, 16, 16, 3]).model_dump(mode='json'),
        'task': blobs_task().model_dump(mode='json'),
        'reference_epochs': 6,
        'generation_epochs': 6,
        'tailored_size': 16,
        'window': 5,
        'stabilization': {'window': 2, 'eps': 0.05, 'min_score': 0.5},
        'require_both_labels': False,
        'out_dir': out_dir,
    }
    data.update(kwargs)
    return GenConfig.model_validate(data)
