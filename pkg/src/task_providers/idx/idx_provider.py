"""
digits8: 8x8 grayscale digits stored as IDX files.

IDX layout: two zero bytes, a type byte (0x08 = unsigned byte), a byte
giving the number of dimensions, one big-endian u32 per dimension, then
the data. Images use magic 0x00000803, labels 0x00000801.
"""
import logging
import os
import struct
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from sklearn.datasets import load_digits

from helpers.errors import FormatError
from py_models.configs import TaskConfig
from task_providers.task_provider import TaskDataset, TaskProvider, split_task

logger = logging.getLogger('forensics')

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
IMAGES_FILE = 'digits8-images.idx3-ubyte'
LABELS_FILE = 'digits8-labels.idx1-ubyte'


def write_idx(path: Union[str, Path], array: np.ndarray) -> Path:
    array = np.asarray(array, dtype=np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = struct.pack('>I', 0x00000800 | array.ndim) + struct.pack(f'>{array.ndim}I', *array.shape)
    path.write_bytes(header + array.tobytes())
    return path


def _parse_idx(path: Union[str, Path], expected_magic: Optional[int] = None) -> Tuple[int, np.ndarray]:
    blob = Path(path).read_bytes()
    if len(blob) < 4:
        raise FormatError(f"{path}: too short for an IDX header")
    (magic,) = struct.unpack_from('>I', blob)
    if magic >> 8 != 0x08:
        raise FormatError(f"{path}: unsupported IDX magic 0x{magic:08x} (only unsigned-byte data)")
    if expected_magic is not None and magic != expected_magic:
        raise FormatError(f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    header_len = 4 + 4 * ndim
    if len(blob) < header_len:
        raise FormatError(f"{path}: truncated IDX dimensions")
    dims = struct.unpack_from(f'>{ndim}I', blob, 4)
    count = int(np.prod(dims))
    if len(blob) - header_len != count:
        raise FormatError(f"{path}: header declares {count} values, payload holds {len(blob) - header_len}")
    return magic, np.frombuffer(blob, dtype=np.uint8, offset=header_len).reshape(dims)


def read_idx(path: Union[str, Path], expected_magic: Optional[int] = None) -> np.ndarray:
    """Raw uint8 array; FormatError on a wrong magic number or a short payload"""
    return _parse_idx(path, expected_magic)[1]


def load_idx(path: Union[str, Path]) -> np.ndarray:
    """
    Images become float32 (n, 1, h, w) scaled to [0, 1]; label files become int64 (n,).
    """
    magic, data = _parse_idx(path)
    if magic == LABELS_MAGIC:
        return data.astype(np.int64)
    if magic != IMAGES_MAGIC:
        raise FormatError(f"{path}: magic 0x{magic:08x} is neither an image (0x{IMAGES_MAGIC:08x}) nor a label file")
    images = data
    return (images.astype(np.float32) / 255.0)[:, None, :, :]


def ensure_digits8(data_dir: Union[str, Path]) -> Tuple[Path, Path]:
    """Write the digits8 IDX pair from scikit-learn's bundled 8x8 digits unless it already exists"""
    data_dir = Path(data_dir)
    images_path, labels_path = data_dir / IMAGES_FILE, data_dir / LABELS_FILE
    if images_path.exists() and labels_path.exists():
        return images_path, labels_path
    digits = load_digits()
    # pixel values are 0..16
    images = np.round(digits.images * (255.0 / 16.0)).astype(np.uint8)
    write_idx(images_path, images)
    write_idx(labels_path, digits.target.astype(np.uint8))
    logger.info(f"Materialised digits8 ({len(images)} images) in {data_dir}")
    return images_path, labels_path


class Digits8Provider(TaskProvider):

    def get_task(self, cfg: TaskConfig) -> TaskDataset:
        data_dir = cfg.data_dir or os.getenv('FRZ_DATA_DIR', 'data')
        images_path, labels_path = ensure_digits8(data_dir)
        x = load_idx(images_path)
        y = load_idx(labels_path)
        if len(x) != len(y):
            raise FormatError(f"{len(x)} images but {len(y)} labels")
        return split_task('digits8', x, y, cfg)
