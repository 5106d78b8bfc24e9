"""Versioned binary model files.

Layout: magic, version byte, section count, then named sections
(header, codec, standardizer, weights). Every section carries its own
SHA-256, so corruption is rejected with the failing section named and no
partial model is ever returned.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from ..errors import IntegrityError, PromptGateError
from ..types import TemplateId
from .model import MODEL_FORMAT_VERSION, LabelCodec, MlpModel, Standardizer

MAGIC = b"PGMLP"
_SECTION_ORDER = ("header", "codec", "standardizer", "weights")


def _pack_section(name: str, payload: bytes) -> bytes:
    raw_name = name.encode("ascii")
    return (
        struct.pack("<B", len(raw_name))
        + raw_name
        + struct.pack("<Q", len(payload))
        + payload
        + hashlib.sha256(payload).digest()
    )


def save_model(model: MlpModel, path: str | Path) -> None:
    dims = model.layer_sizes
    header = struct.pack("<I", len(dims))
    header += struct.pack(f"<{len(dims)}I", *dims)
    header += struct.pack("<dd", model.l2_alpha, model.standardizer.epsilon)

    codec = struct.pack("<H", len(model.codec))
    for label in model.codec.labels:
        raw = label.name.encode("utf-8")
        codec += struct.pack("<H", len(raw)) + raw

    standardizer = (
        model.standardizer.mean.astype("<f8").tobytes()
        + model.standardizer.std.astype("<f8").tobytes()
    )

    weights = b"".join(
        W.astype("<f8").tobytes() + b.astype("<f8").tobytes()
        for W, b in zip(model.weights, model.biases)
    )

    payloads = {
        "header": header,
        "codec": codec,
        "standardizer": standardizer,
        "weights": weights,
    }
    blob = MAGIC + struct.pack("<BB", MODEL_FORMAT_VERSION, len(_SECTION_ORDER))
    for name in _SECTION_ORDER:
        blob += _pack_section(name, payloads[name])
    Path(path).write_bytes(blob)


class _Reader:
    def __init__(self, blob: bytes, path: str):
        self.blob = blob
        self.offset = 0
        self.path = path

    def take(self, n: int, context: str) -> bytes:
        if self.offset + n > len(self.blob):
            raise IntegrityError(f"{self.path}: truncated in {context}")
        chunk = self.blob[self.offset : self.offset + n]
        self.offset += n
        return chunk


def _read_sections(blob: bytes, path: str) -> dict[str, bytes]:
    reader = _Reader(blob, path)
    magic = reader.take(len(MAGIC), "file header")
    if magic != MAGIC:
        raise IntegrityError(f"{path}: bad magic {magic!r}")
    version, n_sections = struct.unpack("<BB", reader.take(2, "file header"))
    if version != MODEL_FORMAT_VERSION:
        raise IntegrityError(f"{path}: unsupported model format version {version}")
    sections: dict[str, bytes] = {}
    for _ in range(n_sections):
        (name_len,) = struct.unpack("<B", reader.take(1, "section table"))
        name = reader.take(name_len, "section table").decode("ascii", "replace")
        (payload_len,) = struct.unpack("<Q", reader.take(8, f"{name} section"))
        payload = reader.take(payload_len, f"{name} section")
        digest = reader.take(32, f"{name} section")
        if hashlib.sha256(payload).digest() != digest:
            raise IntegrityError(f"{path}: {name} section checksum mismatch")
        sections[name] = payload
    if reader.offset != len(blob):
        raise IntegrityError(f"{path}: {len(blob) - reader.offset} trailing bytes")
    missing = [n for n in _SECTION_ORDER if n not in sections]
    if missing:
        raise IntegrityError(f"{path}: missing sections {missing}")
    return sections


def load_model(path: str | Path) -> MlpModel:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise IntegrityError(f"{path}: {exc}") from exc
    sections = _read_sections(blob, str(path))

    try:
        header = sections["header"]
        (n_dims,) = struct.unpack_from("<I", header, 0)
        dims = struct.unpack_from(f"<{n_dims}I", header, 4)
        l2_alpha, epsilon = struct.unpack_from("<dd", header, 4 + 4 * n_dims)

        codec_blob = sections["codec"]
        (n_labels,) = struct.unpack_from("<H", codec_blob, 0)
        offset = 2
        labels = []
        for _ in range(n_labels):
            (raw_len,) = struct.unpack_from("<H", codec_blob, offset)
            offset += 2
            labels.append(TemplateId(codec_blob[offset : offset + raw_len].decode("utf-8")))
            offset += raw_len
        codec = LabelCodec(tuple(labels))

        d = dims[0]
        std_blob = sections["standardizer"]
        if len(std_blob) != 2 * d * 8:
            raise IntegrityError(f"{path}: standardizer section has wrong size")
        mean = np.frombuffer(std_blob, dtype="<f8", count=d).astype(np.float64)
        std = np.frombuffer(std_blob, dtype="<f8", count=d, offset=d * 8).astype(np.float64)
        standardizer = Standardizer(mean=mean, std=std, epsilon=epsilon)

        weights_blob = sections["weights"]
        expected = sum(
            dims[i] * dims[i + 1] * 8 + dims[i + 1] * 8 for i in range(len(dims) - 1)
        )
        if len(weights_blob) != expected:
            raise IntegrityError(f"{path}: weights section has wrong size")
        weights: list[np.ndarray] = []
        biases: list[np.ndarray] = []
        offset = 0
        for i in range(len(dims) - 1):
            fan_in, fan_out = dims[i], dims[i + 1]
            W = np.frombuffer(weights_blob, dtype="<f8", count=fan_in * fan_out, offset=offset)
            offset += fan_in * fan_out * 8
            b = np.frombuffer(weights_blob, dtype="<f8", count=fan_out, offset=offset)
            offset += fan_out * 8
            weights.append(W.reshape(fan_in, fan_out).astype(np.float64))
            biases.append(b.astype(np.float64))

        return MlpModel(
            weights=tuple(weights),
            biases=tuple(biases),
            l2_alpha=l2_alpha,
            codec=codec,
            standardizer=standardizer,
        )
    except IntegrityError:
        raise
    except (PromptGateError, struct.error, UnicodeDecodeError, ValueError) as exc:
        raise IntegrityError(f"{path}: invalid model data: {exc}") from exc
