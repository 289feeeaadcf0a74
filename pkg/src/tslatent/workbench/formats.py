"""Binary and text artifact formats shared by the store, service and UI.

Matrix payloads are little-endian: 4 magic bytes, uint64 row count, uint64
column count, then float64 row-major data.  The same layout serves both
embedding matrices (``EMB1``) and 2D projections (``PRJ1``).
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

from ..core import WindowSlice
from ..errors import ValidationError
from ..finetune import RunRecord

EMBEDDINGS_MAGIC = b"EMB1"
PROJECTION_MAGIC = b"PRJ1"


def encode_matrix(magic: bytes, matrix: np.ndarray) -> bytes:
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    if matrix.ndim != 2:
        raise ValidationError(f"matrix payload must be 2D, got shape {matrix.shape}")
    header = magic + struct.pack("<QQ", *matrix.shape)
    return header + matrix.tobytes()


def decode_matrix(magic: bytes, data: bytes) -> np.ndarray:
    if len(data) < 20 or data[:4] != magic:
        raise ValidationError(f"bad matrix payload (expected magic {magic!r})")
    n, d = struct.unpack("<QQ", data[4:20])
    expected = 20 + n * d * 8
    if len(data) != expected:
        raise ValidationError(f"matrix payload is {len(data)} bytes, expected {expected}")
    return np.frombuffer(data[20:], dtype="<f8").reshape(n, d).astype(np.float64)


def encode_provenance(slices, dataset_id: str, model_ref: str, window: int, stride: int,
                      bucket: int) -> bytes:
    doc = {
        "dataset_id": dataset_id,
        "model_ref": model_ref,
        "window": window,
        "stride": stride,
        "bucket": bucket,
        "slices": [[s.start, s.length, s.source] for s in slices],
    }
    return json.dumps(doc, indent=2).encode()


def decode_provenance(data: bytes) -> dict:
    doc = json.loads(data.decode())
    doc["slices"] = tuple(WindowSlice(int(a), int(b), str(c)) for a, b, c in doc["slices"])
    return doc


def encode_loss_curves(record: RunRecord) -> bytes:
    buf = io.StringIO()
    buf.write("train_loss,valid_loss\n")
    for tr, va in zip(record.train_curve, record.valid_curve):
        buf.write(f"{tr!r},{va!r}\n")
    return buf.getvalue().encode()


def encode_sweep_table(columns, rows) -> bytes:
    """Six fixed columns; failed cells carry nan time/improvement so readers
    can drop them."""
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        values = list(row.values())
        if row.failed:
            values[columns.index("time")] = float("nan")
            values[columns.index("improvement")] = float("nan")
        buf.write(",".join(repr(float(v)) for v in values) + "\n")
    return buf.getvalue().encode()


def jsonsafe_bytes(obj) -> bytes:
    return (json.dumps(jsonsafe(obj), indent=2) + "\n").encode()


def jsonsafe(obj):
    """Recursively replace non-finite floats with None for JSON transport."""
    if isinstance(obj, dict):
        return {k: jsonsafe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonsafe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonsafe(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if np.isfinite(value) else None
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj
