"""Checkpoints, CSV tables and content hashes for run outputs."""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .lattice import Grid
from .propagator import WaveState

MAGIC = b"GPWS"
VERSION = 1
_HEAD = struct.Struct("<4sII")


def write_checkpoint(path, state: WaveState, epsilon: float) -> Path:
    """Binary state dump: header (dims, extents, h, eps, m, tau, origin) then ``<c16`` payload."""
    path = Path(path)
    g = state.grid
    parts = [_HEAD.pack(MAGIC, VERSION, g.ndim),
             struct.pack(f"<{g.ndim}Q", *g.shape),
             struct.pack("<4d", g.h, float(epsilon), state.m, state.tau),
             struct.pack(f"<{g.ndim}d", *g.origin),
             np.ascontiguousarray(state.amplitudes, dtype="<c16").tobytes()]
    path.write_bytes(b"".join(parts))
    return path


def read_checkpoint(path) -> tuple[WaveState, float]:
    data = Path(path).read_bytes()
    magic, version, ndim = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError("not a wave-state checkpoint")
    if version != VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    off = _HEAD.size
    shape = struct.unpack_from(f"<{ndim}Q", data, off)
    off += 8 * ndim
    h, eps, m, tau = struct.unpack_from("<4d", data, off)
    off += 32
    origin = struct.unpack_from(f"<{ndim}d", data, off)
    off += 8 * ndim
    n = int(np.prod(shape))
    if len(data) - off != 16 * n:
        raise ValueError("checkpoint payload has the wrong size")
    amps = np.frombuffer(data, dtype="<c16", count=n, offset=off).reshape(shape)
    return WaveState(Grid(shape, h, origin), amps.copy(), tau, m), eps


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path, header: Sequence[str], columns: Iterable[Sequence[float]]) -> Path:
    """Columns of floats (17 significant digits) under a fixed header."""
    path = Path(path)
    cols = [np.asarray(c) for c in columns]
    if len({len(c) for c in cols}) > 1:
        raise ValueError("columns differ in length")
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(fmt(v) if not isinstance(v, (int, np.integer)) else str(int(v))
                              for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def density_slice(state: WaveState, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """``|psi|^2`` along ``axis`` through the centre of the other axes."""
    g = state.grid
    idx = tuple(slice(None) if a == axis else n // 2 for a, n in enumerate(g.shape))
    return g.axis(axis), np.abs(state.amplitudes[idx]) ** 2


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")
