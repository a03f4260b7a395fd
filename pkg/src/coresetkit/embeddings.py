"""Embedding matrix type and bit-exact .emb file I/O.

An .emb file is a UTF-8 JSON header line followed by the raw float payload:

    {"d":2,"dtype":"f32","format":"emb-v1","ids":["a:0:0"],"n":1}\n
    <n*d*4 bytes, little-endian row-major float32>

The header is one line (keys sorted, compact separators) so the file stays
human-inspectable with `head -1`; the payload round-trips bit for bit. This
format is the contract between coreset selection and any feature extractor
that feeds it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

FORMAT_VERSION = "emb-v1"

_HEADER_KEYS = {"format", "n", "d", "dtype", "ids", "meta"}


class EmbeddingFormatError(ValueError):
    """Malformed .emb file or invalid embedding matrix."""


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """n patch embeddings of dimension d plus their id strings.

    Immutable after construction: `data` is normalized to a read-only,
    C-contiguous float32 array, `ids` to a tuple. Safe to share across
    threads.

    Args:
        ids: n unique, non-empty id strings (canonically "image:row:col").
        data: (n, d) array of finite values; converted to float32.
        meta: optional JSON-serializable mapping stored in the file header.
    """

    ids: tuple[str, ...]
    data: np.ndarray
    meta: Mapping[str, Any] | None = None
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise EmbeddingFormatError(
                f"data must be 2-dimensional, got shape {arr.shape}"
            )
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        n, d = arr.shape
        if n < 1 or d < 1:
            raise EmbeddingFormatError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        if not np.isfinite(arr).all():
            raise EmbeddingFormatError("data contains NaN or Inf")
        ids = tuple(self.ids)
        if len(ids) != n:
            raise EmbeddingFormatError(
                f"got {len(ids)} ids for {n} rows"
            )
        for pid in ids:
            if not isinstance(pid, str) or not pid:
                raise EmbeddingFormatError(f"ids must be non-empty strings, got {pid!r}")
        if len(set(ids)) != n:
            raise EmbeddingFormatError("duplicate ids")
        if self.meta is not None and not isinstance(self.meta, Mapping):
            raise EmbeddingFormatError("meta must be a mapping or None")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "_index", {pid: i for i, pid in enumerate(ids)})

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def row(self, patch_id: str) -> np.ndarray:
        """The embedding row for one patch id."""
        try:
            return self.data[self._index[patch_id]]
        except KeyError:
            raise KeyError(f"unknown patch id: {patch_id!r}") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return (
            self.ids == other.ids
            and self.data.shape == other.data.shape
            and self.data.tobytes() == other.data.tobytes()
            and _meta_dict(self.meta) == _meta_dict(other.meta)
        )

    __hash__ = None  # type: ignore[assignment]


def _meta_dict(meta: Mapping[str, Any] | None) -> dict[str, Any] | None:
    return None if meta is None else dict(meta)


def write_embeddings(matrix: EmbeddingMatrix, path: str) -> None:
    """Write `matrix` to `path` in .emb format.

    The payload is the matrix bytes verbatim, so read_embeddings returns a
    bit-identical matrix.
    """
    header: dict[str, Any] = {
        "format": FORMAT_VERSION,
        "n": matrix.n,
        "d": matrix.d,
        "dtype": "f32",
        "ids": list(matrix.ids),
    }
    if matrix.meta is not None:
        header["meta"] = _meta_dict(matrix.meta)
    try:
        line = json.dumps(header, sort_keys=True, separators=(",", ":"))
    except (TypeError, ValueError) as exc:
        raise EmbeddingFormatError(f"meta is not JSON-serializable: {exc}") from exc
    payload = matrix.data.astype("<f4", copy=False).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(line.encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def read_embeddings(path: str) -> EmbeddingMatrix:
    """Read an .emb file, validating header and payload.

    Errors (all EmbeddingFormatError): malformed or incomplete header,
    unsupported format version, payload shorter or longer than n*d*4 bytes,
    duplicate ids, non-finite values.
    """
    with open(path, "rb") as fh:
        raw_line = fh.readline()
        payload = fh.read()
    if not raw_line.endswith(b"\n"):
        raise EmbeddingFormatError("missing header line terminator")
    try:
        header = json.loads(raw_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise EmbeddingFormatError(f"malformed header: {exc}") from exc
    if not isinstance(header, dict):
        raise EmbeddingFormatError("header is not a JSON object")
    unknown = set(header) - _HEADER_KEYS
    if unknown:
        raise EmbeddingFormatError(f"unknown header keys: {sorted(unknown)}")
    for key in ("format", "n", "d", "dtype", "ids"):
        if key not in header:
            raise EmbeddingFormatError(f"header missing key {key!r}")
    if header["format"] != FORMAT_VERSION:
        raise EmbeddingFormatError(f"unsupported format {header['format']!r}")
    if header["dtype"] != "f32":
        raise EmbeddingFormatError(f"unsupported dtype {header['dtype']!r}")
    n, d = header["n"], header["d"]
    if not isinstance(n, int) or not isinstance(d, int) or isinstance(n, bool) or isinstance(d, bool):
        raise EmbeddingFormatError("header n and d must be integers")
    if n < 1 or d < 1:
        raise EmbeddingFormatError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    ids = header["ids"]
    if not isinstance(ids, list):
        raise EmbeddingFormatError("header ids must be a list")
    if len(ids) != n:
        raise EmbeddingFormatError(f"header n={n} but {len(ids)} ids listed")
    expected = n * d * 4
    if len(payload) != expected:
        raise EmbeddingFormatError(
            f"payload length mismatch: expected {expected} bytes, got {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(n, d)
    return EmbeddingMatrix(ids=tuple(ids), data=data, meta=header.get("meta"))
