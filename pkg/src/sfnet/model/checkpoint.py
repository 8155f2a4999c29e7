"""Versioned checkpoint container.

Layout::

    b"SFNETCK1"
    u32 little-endian header length
    header: UTF-8 JSON (architecture, schema, schema hash, tensor table, config)
    body:   little-endian float32 arrays, one per tensor, in header order
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from ..data.schema import FeatureSchema
from ..errors import CheckpointError
from .network import Architecture, SFNetParams

MAGIC = b"SFNETCK1"
FORMAT = "sfnet-checkpoint"
VERSION = 1


@dataclass
class Checkpoint:
    params: SFNetParams
    schema: FeatureSchema
    config: dict
    header: dict


def save_checkpoint(params: SFNetParams, schema: FeatureSchema, config, path) -> None:
    cfg = config.to_dict() if hasattr(config, "to_dict") else dict(config or {})
    header = {
        "format": FORMAT,
        "version": VERSION,
        "architecture": params.arch.to_dict(),
        "widths": params.arch.pathways(),
        "k": params.arch.k,
        "fields": schema.field_names,
        "schema_hash": schema.hash,
        "schema": schema.to_dict(),
        "config": cfg,
        "tensors": [{"name": k, "shape": list(v.shape)} for k, v in params.tensors.items()],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for v in params.tensors.values():
            fh.write(np.ascontiguousarray(v, dtype="<f4").tobytes())


def _read_header(fh, path) -> dict:
    if fh.read(8) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    raw = fh.read(4)
    if len(raw) != 4:
        raise CheckpointError(f"{path}: truncated header")
    (n,) = struct.unpack("<I", raw)
    blob = fh.read(n)
    if len(blob) != n:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(blob.decode("utf-8"))
    except ValueError as exc:
        raise CheckpointError(f"{path}: corrupt header ({exc})") from None
    if header.get("format") != FORMAT or header.get("version") != VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {header.get('version')!r} (expected {VERSION})"
        )
    return header


def read_header(path) -> dict:
    """Header only; tensor data is not read."""
    with open(path, "rb") as fh:
        return _read_header(fh, path)


def load_checkpoint(path, expected_schema_hash: str | None = None) -> Checkpoint:
    with open(path, "rb") as fh:
        header = _read_header(fh, path)
        body = fh.read()
    schema = FeatureSchema.from_dict(header["schema"])
    if schema.hash != header["schema_hash"]:
        raise CheckpointError(
            f"{path}: embedded schema hash {schema.hash} does not match header hash {header['schema_hash']}"
        )
    if expected_schema_hash is not None and expected_schema_hash != header["schema_hash"]:
        raise CheckpointError(
            f"{path}: schema hash mismatch (checkpoint {header['schema_hash']}, expected {expected_schema_hash})"
        )
    arch = Architecture.from_dict(header["architecture"])
    tensors = {}
    off = 0
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if off + nbytes > len(body):
            raise CheckpointError(f"{path}: truncated tensor data at {entry['name']!r}")
        tensors[entry["name"]] = (
            np.frombuffer(body, dtype="<f4", count=count, offset=off).astype(np.float64).reshape(shape)
        )
        off += nbytes
    if off != len(body):
        raise CheckpointError(f"{path}: {len(body) - off} trailing bytes")
    return Checkpoint(SFNetParams(arch, tensors), schema, header.get("config", {}), header)
