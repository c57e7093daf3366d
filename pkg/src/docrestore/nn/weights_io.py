"""Versioned binary weight files: magic, spec hash, little-endian float64."""

from __future__ import annotations

import struct

import numpy as np

from .network import net_spec_hash

MAGIC = b"DRWT"
VERSION = 1


class WeightFileError(ValueError):
    pass


def save_weights(path, spec, weights):
    spec_hash = net_spec_hash(spec).encode("ascii")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(spec_hash)))
        fh.write(spec_hash)
        fh.write(struct.pack("<I", len(weights)))
        for w, b in weights:
            fh.write(struct.pack("<I", w.ndim))
            fh.write(struct.pack(f"<{w.ndim}I", *w.shape))
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(struct.pack("<I", b.size))
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def _read_exact(fh, count, what):
    blob = fh.read(count)
    if len(blob) != count:
        raise WeightFileError(
            f"truncated weight file reading {what}: wanted {count} bytes at "
            f"offset {fh.tell() - len(blob)}, got {len(blob)}"
        )
    return blob


def load_weights(path, spec):
    """Loads weights saved for exactly this network spec."""
    expected_hash = net_spec_hash(spec)
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MAGIC:
            raise WeightFileError(f"bad magic {magic!r}, not a weight file")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != VERSION:
            raise WeightFileError(f"unsupported weight file version {version}")
        (hash_len,) = struct.unpack("<I", _read_exact(fh, 4, "hash length"))
        file_hash = _read_exact(fh, hash_len, "spec hash").decode("ascii")
        if file_hash != expected_hash:
            raise WeightFileError(
                "weight file was saved for a different network spec "
                f"(file {file_hash[:12]}.., expected {expected_hash[:12]}..)"
            )
        (n_layers,) = struct.unpack("<I", _read_exact(fh, 4, "layer count"))
        if n_layers != len(spec.layers):
            raise WeightFileError(f"layer count {n_layers} != spec {len(spec.layers)}")
        weights = []
        for i in range(n_layers):
            (ndim,) = struct.unpack("<I", _read_exact(fh, 4, f"layer {i} ndim"))
            shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim, f"layer {i} shape"))
            count = int(np.prod(shape))
            w = np.frombuffer(_read_exact(fh, 8 * count, f"layer {i} weights"), dtype="<f8")
            w = w.reshape(shape).astype(np.float64)
            (blen,) = struct.unpack("<I", _read_exact(fh, 4, f"layer {i} bias length"))
            b = np.frombuffer(_read_exact(fh, 8 * blen, f"layer {i} bias"), dtype="<f8")
            weights.append((w, b.astype(np.float64)))
        trailing = fh.read(1)
        if trailing:
            raise WeightFileError(f"trailing bytes after weights at offset {fh.tell() - 1}")
    return weights
