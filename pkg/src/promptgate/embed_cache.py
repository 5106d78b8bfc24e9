"""File-backed embedding cache with bit-exact round-trips.

Single append-friendly binary file: a magic header, a version byte, the
vector dimension, then one fixed-layout record per cached embedding. Every
record carries a 128-bit check so corruption is rejected rather than
silently served.
"""

from __future__ import annotations

import hashlib
import struct
import threading
import time
from pathlib import Path

import numpy as np

from .embedding import EMBEDDING_DIM, EmbeddingVector
from .errors import IntegrityError

MAGIC = b"PGEC"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sBI")  # magic, version, dim
_ENTRY_FIXED = struct.Struct("<32sdH")  # key, created_at, tag length
_CHECK_SIZE = 16


def _entry_check(body: bytes) -> bytes:
    return hashlib.blake2b(body, digest_size=_CHECK_SIZE).digest()


class EmbeddingCache:
    """Keyed store of embedding vectors, optionally persisted to one file.

    Readers may be concurrent; writes are serialized through an internal
    lock. Values are immutable, so a duplicate store under a race is
    harmless (last write wins with an identical payload).
    """

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path is not None else None
        self._lock = threading.RLock()
        self._entries: dict[bytes, tuple[EmbeddingVector, float]] = {}
        self._fh = None
        if self._path is not None and self._path.exists() and self._path.stat().st_size:
            self._load(self._path)
        if self._path is not None:
            self._fh = open(self._path, "ab")
            if self._path.stat().st_size == 0:
                self._fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, EMBEDDING_DIM))
                self._fh.flush()

    def _load(self, path: Path) -> None:
        blob = path.read_bytes()
        if len(blob) < _HEADER.size:
            raise IntegrityError(f"{path}: truncated header")
        magic, version, dim = _HEADER.unpack_from(blob, 0)
        if magic != MAGIC:
            raise IntegrityError(f"{path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise IntegrityError(f"{path}: unsupported cache format version {version}")
        if dim != EMBEDDING_DIM:
            raise IntegrityError(f"{path}: dimension {dim} != {EMBEDDING_DIM}")
        offset = _HEADER.size
        vec_bytes = EMBEDDING_DIM * 8
        while offset < len(blob):
            if offset + _ENTRY_FIXED.size > len(blob):
                raise IntegrityError(f"{path}: truncated entry at byte {offset}")
            key, created_at, tag_len = _ENTRY_FIXED.unpack_from(blob, offset)
            body_len = _ENTRY_FIXED.size + tag_len + vec_bytes
            if offset + body_len + _CHECK_SIZE > len(blob):
                raise IntegrityError(f"{path}: truncated entry at byte {offset}")
            body = blob[offset : offset + body_len]
            check = blob[offset + body_len : offset + body_len + _CHECK_SIZE]
            if _entry_check(body) != check:
                raise IntegrityError(f"{path}: checksum mismatch at byte {offset}")
            tag = body[_ENTRY_FIXED.size : _ENTRY_FIXED.size + tag_len].decode("utf-8")
            values = np.frombuffer(
                body, dtype="<f8", count=EMBEDDING_DIM, offset=_ENTRY_FIXED.size + tag_len
            ).astype(np.float64)
            self._entries[key] = (EmbeddingVector(values, tag), created_at)
            offset += body_len + _CHECK_SIZE

    def get(self, key: bytes) -> EmbeddingVector | None:
        with self._lock:
            entry = self._entries.get(key)
        return entry[0] if entry is not None else None

    def created_at(self, key: bytes) -> float | None:
        with self._lock:
            entry = self._entries.get(key)
        return entry[1] if entry is not None else None

    def put(self, key: bytes, vector: EmbeddingVector, created_at: float | None = None) -> None:
        if created_at is None:
            created_at = time.time()
        with self._lock:
            self._entries[key] = (vector, created_at)
            if self._fh is not None:
                tag = vector.model_tag.encode("utf-8")
                body = (
                    _ENTRY_FIXED.pack(key, created_at, len(tag))
                    + tag
                    + vector.values.astype("<f8").tobytes()
                )
                self._fh.write(body + _entry_check(body))
                self._fh.flush()

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def __contains__(self, key: bytes) -> bool:
        with self._lock:
            return key in self._entries
