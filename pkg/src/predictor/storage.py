from pathlib import Path
from typing import Optional, Union

from helpers.container import pack_tensors, read_container, read_tensors, write_container
from helpers.errors import DimensionMismatchError, FormatError
from predictor.model import AttentionPredictor, PredictorDims, PredictorParams, init_params

KIND = 'predictor'


def save_predictor(predictor: AttentionPredictor, path: Union[str, Path]) -> Path:
    header = {
        'tailored_size': predictor.tailored_size,
        'window': predictor.window,
        'dims': predictor.params.dims.model_dump(),
        'standardize': predictor.standardize,
        'query_every_timestamp': predictor.query_every_timestamp,
    }
    return write_container(path, pack_tensors(KIND, header, predictor.params.tensors))


def load_predictor(path: Union[str, Path], tailored_size: Optional[int] = None) -> AttentionPredictor:
    """Load a predictor file; `tailored_size` is the snapshot length the caller will feed it"""
    header, payload = read_container(path, expected_kind=KIND)
    try:
        dims = PredictorDims.model_validate(header['dims'])
        window = int(header['window'])
        stored_size = int(header['tailored_size'])
    except (KeyError, ValueError) as e:
        raise FormatError(f"predictor header is incomplete: {e}") from e
    if stored_size != dims.tailored_size:
        raise FormatError(f"header tailored_size {stored_size} disagrees with encoder input {dims.tailored_size}")
    if tailored_size is not None and tailored_size != stored_size:
        raise DimensionMismatchError(
            f"predictor was trained on snapshots of {stored_size} values, run uses {tailored_size}")

    tensors = read_tensors(header, payload)
    expected = init_params(dims, zero=True).tensors
    for name, template in expected.items():
        if name not in tensors:
            raise FormatError(f"predictor file lacks tensor {name!r}")
        if tensors[name].shape != template.shape:
            raise FormatError(f"tensor {name!r} has shape {tensors[name].shape}, expected {template.shape}")
    params = PredictorParams(dims=dims, tensors={name: tensors[name] for name in expected})
    return AttentionPredictor(params=params, window=window,
                              standardize=bool(header.get('standardize', False)),
                              query_every_timestamp=bool(header.get('query_every_timestamp', False)))
