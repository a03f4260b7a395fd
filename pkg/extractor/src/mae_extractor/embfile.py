"""Writer for the .emb embedding file format.

The format is the contract with the downstream selection toolkit: a single
UTF-8 JSON header line with sorted keys and no extra whitespace, a newline,
then the matrix as raw little-endian float32 bytes in row-major order.
Everything is validated before any byte is written so a partial or invalid
file never reaches disk.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

FORMAT_VERSION = "emb-v1"


def write_embeddings(
    ids: list[str], data: np.ndarray, path: str, meta: dict | None = None
) -> None:
    """Write one embedding row per id; rejects anything malformed up front."""
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
        raise ValueError(f"data must be a non-empty 2-D matrix, got shape {data.shape}")
    if len(ids) != data.shape[0]:
        raise ValueError(f"{len(ids)} ids for {data.shape[0]} rows")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate patch ids")
    if not all(isinstance(i, str) and i for i in ids):
        raise ValueError("ids must be non-empty strings")
    if not np.all(np.isfinite(data)):
        raise ValueError("embedding matrix contains non-finite values")

    header = {
        "format": FORMAT_VERSION,
        "n": int(data.shape[0]),
        "d": int(data.shape[1]),
        "dtype": "f32",
        "ids": list(ids),
    }
    if meta:
        header["meta"] = meta
    header_line = json.dumps(header, sort_keys=True, separators=(",", ":"))
    payload = data.astype("<f4", copy=False).tobytes(order="C")

    out_dir = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".emb-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header_line.encode("utf-8"))
            fh.write(b"\n")
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
