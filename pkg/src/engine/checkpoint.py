from pathlib import Path
from typing import Dict, Union

import numpy as np

from engine.layers import FreezeUnit, NetworkSpec
from engine.network import NetworkState, build_network
from helpers.container import pack_tensors, read_container, read_tensors, write_container
from helpers.errors import FormatError

KIND = 'checkpoint'


def save_checkpoint(state: NetworkState, path: Union[str, Path]) -> Path:
    """Parameters only; momentum buffers start from zero when a checkpoint is loaded"""
    tensors: Dict[str, np.ndarray] = {}
    for unit in state.units:
        for name, value in state.params[unit.unit_id].items():
            tensors[name] = value
    header = {
        'spec': state.spec.model_dump(mode='json'),
        'units': [u.model_dump() for u in state.units],
        'seed': state.seed,
    }
    return write_container(path, pack_tensors(KIND, header, tensors))


def load_checkpoint(path: Union[str, Path]) -> NetworkState:
    header, payload = read_container(path, expected_kind=KIND)
    try:
        spec = NetworkSpec.model_validate(header['spec'])
        units = [FreezeUnit.model_validate(u) for u in header['units']]
        seed = int(header['seed'])
    except (KeyError, ValueError) as e:
        raise FormatError(f"checkpoint header is incomplete: {e}") from e
    tensors = read_tensors(header, payload)
    state = build_network(spec, units, seed)
    for expected in state.params.values():
        for name, template in expected.items():
            if name not in tensors:
                raise FormatError(f"checkpoint lacks tensor {name!r}")
            if tensors[name].shape != template.shape:
                raise FormatError(f"tensor {name!r} has shape {tensors[name].shape}, network needs {template.shape}")
            expected[name] = tensors[name]
    return state


def states_equal(a: NetworkState, b: NetworkState) -> bool:
    """Bit-identical parameters"""
    if a.params.keys() != b.params.keys():
        return False
    for unit_id, tensors in a.params.items():
        other = b.params[unit_id]
        if tensors.keys() != other.keys():
            return False
        if any(tensors[k].tobytes() != other[k].tobytes() for k in tensors):
            return False
    return True
