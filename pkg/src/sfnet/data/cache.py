"""Flat binary cache for encoded splits.

Layout, all little-endian::

    b"SFNETDS1"
    u32 version, u32 n, u32 n_cust_cat, u32 n_cust_cont, u32 n_art_cat, u32 n_art_cont
    32 bytes  sha256 digest of the schema the split was encoded with
    u32[n, n_cust_cat]  customer categorical indices
    f64[n, n_cust_cont] customer continuous values
    u8 [n, n_cust_cont] customer presence indicators
    u32[n, n_art_cat]   article categorical indices
    f64[n, n_art_cont]  article continuous values
    u8 [n, n_art_cont]  article presence indicators
    u32[n]              outcome indices
"""
from __future__ import annotations

import struct

import numpy as np

from ..errors import CheckpointError
from .schema import EncodedDataset

MAGIC = b"SFNETDS1"
VERSION = 1
_HEADER = struct.Struct("<6I")


def save_split(path, data: EncodedDataset, schema_hash: str) -> None:
    n = len(data)
    dims = (data.customer_cat.shape[1], data.customer_cont.shape[1],
            data.article_cat.shape[1], data.article_cont.shape[1])
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(VERSION, n, *dims))
        fh.write(bytes.fromhex(schema_hash))
        fh.write(data.customer_cat.astype("<u4").tobytes())
        fh.write(data.customer_cont.astype("<f8").tobytes())
        fh.write(data.customer_present.astype("u1").tobytes())
        fh.write(data.article_cat.astype("<u4").tobytes())
        fh.write(data.article_cont.astype("<f8").tobytes())
        fh.write(data.article_present.astype("u1").tobytes())
        fh.write(data.outcome.astype("<u4").tobytes())


def load_split(path, expected_schema_hash: str | None = None) -> tuple[EncodedDataset, str]:
    """Read a cached split; returns the data and the schema hash it carries."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:8] != MAGIC:
        raise CheckpointError(f"{path}: not an encoded split file")
    if len(buf) < 8 + _HEADER.size + 32:
        raise CheckpointError(f"{path}: truncated header")
    version, n, ccat, ccont, acat, acont = _HEADER.unpack_from(buf, 8)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported split version {version}")
    off = 8 + _HEADER.size
    digest = buf[off:off + 32].hex()
    off += 32
    if expected_schema_hash is not None and digest != expected_schema_hash:
        raise CheckpointError(
            f"{path}: schema hash mismatch (file {digest}, expected {expected_schema_hash})"
        )
    spec = [
        ("<u4", (n, ccat), np.int64),
        ("<f8", (n, ccont), np.float64),
        ("u1", (n, ccont), np.float64),
        ("<u4", (n, acat), np.int64),
        ("<f8", (n, acont), np.float64),
        ("u1", (n, acont), np.float64),
        ("<u4", (n,), np.int64),
    ]
    arrays = []
    for dt, shape, target in spec:
        count = int(np.prod(shape))
        nbytes = count * np.dtype(dt).itemsize
        if off + nbytes > len(buf):
            raise CheckpointError(f"{path}: truncated body")
        arrays.append(np.frombuffer(buf, dtype=dt, count=count, offset=off).reshape(shape).astype(target))
        off += nbytes
    if off != len(buf):
        raise CheckpointError(f"{path}: {len(buf) - off} trailing bytes")
    return EncodedDataset(*arrays), digest
