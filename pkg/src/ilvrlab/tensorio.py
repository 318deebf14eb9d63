"""On-disk formats: raw float32 tensors, portable pixmaps, mixture JSON.

Tensor files: magic "ILVRTEN1", little-endian u32 dtype code (1 = float32),
u32 rank, rank u32 dims, then the payload as little-endian float32 in
row-major order.  Images are binary portable pixmaps (P5 grayscale /
P6 color, maxval 255) whose 8-bit values map linearly onto [-1, 1].
Both layouts are endianness-pinned and bit-auditable.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .denoise import GaussianMixture

TENSOR_MAGIC = b"ILVRTEN1"
_DTYPE_F32 = 1


class TensorIOError(Exception):
    """Base for malformed on-disk data."""


class BadMagicError(TensorIOError):
    pass


class UnsupportedDtypeError(TensorIOError):
    pass


class TruncatedPayloadError(TensorIOError):
    pass


class MalformedImageError(TensorIOError):
    pass


class UnsupportedMaxvalError(TensorIOError):
    pass


def write_tensor(path, x: np.ndarray) -> None:
    x = np.asarray(x, dtype=np.float32)
    header = TENSOR_MAGIC + struct.pack("<II", _DTYPE_F32, x.ndim)
    header += struct.pack(f"<{x.ndim}I", *x.shape)
    Path(path).write_bytes(header + x.astype("<f4").tobytes())


def read_tensor(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if blob[:8] != TENSOR_MAGIC:
        raise BadMagicError(f"{path}: magic {blob[:8]!r} != {TENSOR_MAGIC!r}")
    if len(blob) < 16:
        raise TruncatedPayloadError(f"{path}: header cut short")
    dtype_code, rank = struct.unpack_from("<II", blob, 8)
    if dtype_code != _DTYPE_F32:
        raise UnsupportedDtypeError(f"{path}: dtype code {dtype_code}")
    if len(blob) < 16 + 4 * rank:
        raise TruncatedPayloadError(f"{path}: shape header cut short")
    shape = struct.unpack_from(f"<{rank}I", blob, 16)
    off = 16 + 4 * rank
    n = int(np.prod(shape)) if rank else 1
    if len(blob) - off < 4 * n:
        raise TruncatedPayloadError(
            f"{path}: payload holds {(len(blob) - off) // 4} of {n} elements"
        )
    return np.frombuffer(blob, dtype="<f4", count=n, offset=off).reshape(shape).copy()


def _to_u8(x: np.ndarray) -> np.ndarray:
    # clamp to the model's dynamic range, then round half away from zero
    v = np.clip(np.asarray(x, dtype=np.float64), -1.0, 1.0)
    return np.floor(255.0 * (v + 1.0) / 2.0 + 0.5).astype(np.uint8)


def save_image(path, x: np.ndarray) -> None:
    """Write a (1,H,W) or (3,H,W) tensor in [-1,1] as a binary P5/P6 pixmap."""
    Path(path).write_bytes(encode_pixmap(x))


def load_image(path) -> np.ndarray:
    """Read a binary P5/P6 pixmap as a float (C,H,W) tensor in [-1,1]."""
    return decode_pixmap(Path(path).read_bytes())


def encode_pixmap(x: np.ndarray) -> bytes:
    x = np.asarray(x)
    if x.ndim != 3 or x.shape[0] not in (1, 3):
        raise ValueError(f"expected (1,H,W) or (3,H,W) tensor, got {x.shape}")
    c, h, w = x.shape
    u8 = _to_u8(x)
    kind = b"P5" if c == 1 else b"P6"
    payload = u8[0] if c == 1 else np.moveaxis(u8, 0, 2)
    return kind + f"\n{w} {h}\n255\n".encode() + payload.tobytes()


def decode_pixmap(blob: bytes) -> np.ndarray:
    if blob[:2] not in (b"P5", b"P6"):
        raise MalformedImageError(f"not a binary pixmap: starts {blob[:2]!r}")
    channels = 1 if blob[:2] == b"P5" else 3

    # header tokens (width, height, maxval) with '#' comments, then one
    # whitespace byte before the binary payload
    pos, fields = 2, []
    while len(fields) < 3:
        if pos >= len(blob):
            raise MalformedImageError("header ended early")
        ch = blob[pos : pos + 1]
        if ch == b"#":
            nl = blob.find(b"\n", pos)
            if nl < 0:
                raise MalformedImageError("unterminated comment")
            pos = nl + 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(blob) and not blob[end : end + 1].isspace():
                end += 1
            tok = blob[pos:end]
            if not tok.isdigit():
                raise MalformedImageError(f"bad header token {tok!r}")
            fields.append(int(tok))
            pos = end
    if pos >= len(blob) or not blob[pos : pos + 1].isspace():
        raise MalformedImageError("missing separator before payload")
    pos += 1

    w, h, maxval = fields
    if maxval != 255:
        raise UnsupportedMaxvalError(f"maxval {maxval} (only 255 supported)")
    n = w * h * channels
    if len(blob) - pos < n:
        raise TruncatedPayloadError(f"pixmap payload holds {len(blob) - pos} of {n} bytes")
    u8 = np.frombuffer(blob, dtype=np.uint8, count=n, offset=pos)
    if channels == 1:
        img = u8.reshape(1, h, w)
    else:
        img = np.moveaxis(u8.reshape(h, w, 3), 2, 0)
    return 2.0 * (img.astype(np.float64) / 255.0) - 1.0


def save_mixture(path, mix: GaussianMixture) -> None:
    Path(path).write_text(
        json.dumps(
            {
                "weights": mix.weights.tolist(),
                "means": mix.means.tolist(),
                "vars": mix.vars.tolist(),
                "shape": list(mix.data_shape),
            },
            indent=1,
        )
    )


def load_mixture(path) -> GaussianMixture:
    doc = json.loads(Path(path).read_text())
    means = np.asarray(doc["means"], dtype=np.float64)
    shape = tuple(doc.get("shape", (means.shape[1],)))
    return GaussianMixture(
        weights=np.asarray(doc["weights"], dtype=np.float64),
        means=means,
        vars=np.asarray(doc["vars"], dtype=np.float64),
        data_shape=shape,
    )
