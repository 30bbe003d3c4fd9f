"""
FRZ1 binary container.

    magic     4 bytes  b"FRZ1"
    version   u32 LE   1
    hlen      u32 LE   byte length of the header
    header    UTF-8 JSON, always carrying "kind" and "tensors"
    payload   raw data

For tensor containers (checkpoints, predictors) the header's "tensors"
index maps name -> {"offset", "shape"} and the payload holds float32 LE
tensors in index order. Dataset containers keep an empty index and a
record payload (see `pack_records`).
"""
import hashlib
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np

from helpers.errors import FormatError

logger = logging.getLogger('forensics')

MAGIC = b"FRZ1"
VERSION = 1
PREAMBLE = struct.Struct('<4sII')
FLOAT_LE = np.dtype('<f4')


def tensor_digest(array: np.ndarray) -> str:
    """sha256 of the array's float32 LE bytes"""
    return hashlib.sha256(np.ascontiguousarray(array, dtype=FLOAT_LE).tobytes()).hexdigest()


def _encode(header: Mapping[str, Any], payload: bytes) -> bytes:
    header_bytes = json.dumps(header, sort_keys=True).encode('utf-8')
    return PREAMBLE.pack(MAGIC, VERSION, len(header_bytes)) + header_bytes + payload


def pack_tensors(kind: str, header: Mapping[str, Any], tensors: Mapping[str, np.ndarray]) -> bytes:
    index: Dict[str, Dict[str, Any]] = {}
    chunks: List[bytes] = []
    offset = 0
    for name, tensor in tensors.items():
        data = np.ascontiguousarray(tensor, dtype=FLOAT_LE).tobytes()
        index[name] = {'offset': offset, 'shape': list(np.shape(tensor))}
        chunks.append(data)
        offset += len(data)
    full_header = dict(header, kind=kind, tensors=index)
    return _encode(full_header, b''.join(chunks))


def unpack(blob: bytes, expected_kind: Optional[str] = None) -> Tuple[Dict[str, Any], bytes]:
    """Split a container into (header, payload); FormatError on any structural problem"""
    if len(blob) < PREAMBLE.size:
        raise FormatError(f"file too short for an FRZ1 preamble ({len(blob)} bytes)")
    magic, version, header_len = PREAMBLE.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    end = PREAMBLE.size + header_len
    if len(blob) < end:
        raise FormatError("truncated header")
    try:
        header = json.loads(blob[PREAMBLE.size:end].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"unreadable header: {e}") from e
    if not isinstance(header, dict) or 'kind' not in header or 'tensors' not in header:
        raise FormatError("header lacks 'kind' or 'tensors'")
    if expected_kind is not None and header['kind'] != expected_kind:
        raise FormatError(f"expected a {expected_kind!r} container, found {header['kind']!r}")
    return header, blob[end:]


def read_tensors(header: Mapping[str, Any], payload: bytes) -> Dict[str, np.ndarray]:
    tensors: Dict[str, np.ndarray] = {}
    for name, entry in header['tensors'].items():
        shape = tuple(entry['shape'])
        count = int(np.prod(shape)) if shape else 1
        start = int(entry['offset'])
        stop = start + count * FLOAT_LE.itemsize
        if stop > len(payload):
            raise FormatError(f"truncated payload: tensor {name!r} needs bytes {start}..{stop}, have {len(payload)}")
        tensors[name] = np.frombuffer(payload, dtype=FLOAT_LE, count=count, offset=start).reshape(shape).astype(np.float32)
    return tensors


def write_container(path: Union[str, Path], blob: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(blob)
    logger.debug(f"Wrote {len(blob)} bytes to {path}")
    return path


def read_container(path: Union[str, Path], expected_kind: Optional[str] = None) -> Tuple[Dict[str, Any], bytes]:
    return unpack(Path(path).read_bytes(), expected_kind)


# --- dataset records ---------------------------------------------------------

RECORD_LEN = struct.Struct('<H')
RECORD_LABEL = struct.Struct('<B')


def pack_records(records: Iterable[Tuple[np.ndarray, int]], tailored_size: int) -> bytes:
    """(u16 length, length x tailored_size float32 LE, u8 label) per record"""
    chunks: List[bytes] = []
    for sequence, label in records:
        sequence = np.asarray(sequence)
        if sequence.ndim != 2 or sequence.shape[1] != tailored_size:
            raise FormatError(f"record shape {sequence.shape} does not match tailored size {tailored_size}")
        chunks.append(RECORD_LEN.pack(sequence.shape[0]))
        chunks.append(np.ascontiguousarray(sequence, dtype=FLOAT_LE).tobytes())
        chunks.append(RECORD_LABEL.pack(int(label)))
    return b''.join(chunks)


def unpack_records(payload: bytes, count: int, tailored_size: int) -> List[Tuple[np.ndarray, int]]:
    records = []
    offset = 0
    for i in range(count):
        if offset + RECORD_LEN.size > len(payload):
            raise FormatError(f"truncated dataset: record {i} of {count} missing")
        (length,) = RECORD_LEN.unpack_from(payload, offset)
        offset += RECORD_LEN.size
        n_bytes = length * tailored_size * FLOAT_LE.itemsize
        if offset + n_bytes + RECORD_LABEL.size > len(payload):
            raise FormatError(f"truncated dataset: record {i} of {count} is cut short")
        values = np.frombuffer(payload, dtype=FLOAT_LE, count=length * tailored_size, offset=offset)
        offset += n_bytes
        (label,) = RECORD_LABEL.unpack_from(payload, offset)
        offset += RECORD_LABEL.size
        records.append((values.reshape(length, tailored_size).astype(np.float32), int(label)))
    if offset != len(payload):
        raise FormatError(f"{len(payload) - offset} trailing bytes after {count} records")
    return records
