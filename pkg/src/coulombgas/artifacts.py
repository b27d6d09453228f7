"""Artifact persistence: atomic writes, CSV, JSON, binary snapshots, manifest."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import struct
import tempfile
import time
from typing import Iterable, Sequence

import numpy as np

SNAPSHOT_MAGIC = b"CGAS1"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<5sBII")   # magic, version, n, count


def atomic_write(path: str, data) -> None:
    """Write bytes or text to ``path`` through a temp file and rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    payload = data.encode() if isinstance(data, str) else bytes(data)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    atomic_write(path, csv_text(header, rows))


def read_csv(path: str):
    """(header, rows as lists of strings)."""
    with open(path, newline="") as fh:
        r = list(csv.reader(fh))
    if not r:
        raise ValueError(f"{path} is empty")
    return r[0], r[1:]


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")


def write_json(path: str, obj) -> None:
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n")


def read_json(path: str):
    with open(path) as fh:
        return json.load(fh)


# --------------------------------------------------------------- snapshots


def snapshot_bytes(configs: np.ndarray) -> bytes:
    """Binary frame: header then little-endian f64 (x, y) pairs, row-major."""
    configs = np.atleast_2d(np.asarray(configs, dtype=complex))
    count, n = configs.shape
    body = np.empty((count, n, 2), dtype="<f8")
    body[..., 0] = configs.real
    body[..., 1] = configs.imag
    return _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, n, count) + body.tobytes()


def write_snapshot(path: str, configs: np.ndarray) -> None:
    atomic_write(path, snapshot_bytes(configs))


def read_snapshot(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_snapshot(data)


def parse_snapshot(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise ValueError("truncated snapshot header")
    magic, version, n, count = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"bad snapshot magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    expected = _HEADER.size + 16 * n * count
    if len(data) != expected:
        raise ValueError(f"snapshot size {len(data)} != expected {expected}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(count, n, 2)
    return body[..., 0] + 1j * body[..., 1]


# ---------------------------------------------------------------- manifest


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Manifest:
    """Run manifest: config hash, version, per-file checksums, stage timings."""

    def __init__(self, out_dir: str, config_hash: str, version: str):
        self.path = os.path.join(out_dir, "manifest.json")
        self.out_dir = out_dir
        if os.path.exists(self.path):
            self.data = read_json(self.path)
        else:
            self.data = {"files": {}, "timings": {}, "stages": {}}
        self.data["config_hash"] = config_hash
        self.data["version"] = version

    def add(self, path: str, stage: str) -> None:
        rel = os.path.relpath(path, self.out_dir)
        self.data["files"][rel] = {"sha256": sha256_file(path), "stage": stage,
                                   "bytes": os.path.getsize(path)}

    def record(self, stage: str, seconds: float, extra=None) -> None:
        self.data["timings"][stage] = round(seconds, 3)
        if extra is not None:
            self.data["stages"][stage] = extra
        self.data["updated"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())

    def save(self) -> None:
        write_json(self.path, self.data)
