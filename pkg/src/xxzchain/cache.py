"""Disk cache for solved grid functions.

One JSON file per solve, named by a content hash of the identifying
parameters. All reals are stored as 17-significant-digit decimals and files
are written atomically (temp file + rename).
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

ENV_CACHE_DIR = "XXZ_CACHE_DIR"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_complex(z) -> list:
    z = complex(z)
    return [_fmt(z.real), _fmt(z.imag)]


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_CACHE_DIR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "xxzchain"


class SolveCache:
    """Content-addressed store of {meta, nodes, weights, values} records."""

    def __init__(self, directory: str | os.PathLike | None = None):
        self.dir = Path(directory) if directory is not None else default_cache_dir()

    @staticmethod
    def key(kind: str, **params) -> str:
        canon = {"kind": kind}
        for name in sorted(params):
            val = params[name]
            if isinstance(val, complex):
                canon[name] = _fmt_complex(val)
            elif isinstance(val, float):
                canon[name] = _fmt(val)
            else:
                canon[name] = val
        blob = json.dumps(canon, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:32]

    def _path(self, key: str) -> Path:
        return self.dir / f"{key}.json"

    def load(self, key: str):
        path = self._path(key)
        if not path.exists():
            return None
        try:
            rec = json.loads(path.read_text())
        except (json.JSONDecodeError, OSError):
            return None
        nodes = np.array([float(v) for v in rec["nodes"]])
        weights = np.array([float(v) for v in rec["weights"]])
        vals = rec["values"]
        if vals and isinstance(vals[0], list):
            values = np.array([complex(float(a), float(b)) for a, b in vals])
        else:
            values = np.array([float(v) for v in vals])
        return rec.get("meta", {}), nodes, weights, values

    def store(self, key: str, meta: dict, nodes, weights, values) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        values = np.asarray(values)
        if np.iscomplexobj(values):
            val_repr = [_fmt_complex(v) for v in values]
        else:
            val_repr = [_fmt(v) for v in values]
        rec = {
            "meta": meta,
            "nodes": [_fmt(v) for v in np.asarray(nodes)],
            "weights": [_fmt(v) for v in np.asarray(weights)],
            "values": val_repr,
        }
        fd, tmp = tempfile.mkstemp(dir=self.dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(rec, fh, sort_keys=True)
            os.replace(tmp, self._path(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def list(self) -> list:
        if not self.dir.exists():
            return []
        return sorted(p.name for p in self.dir.glob("*.json"))

    def clear(self) -> int:
        n = 0
        if self.dir.exists():
            for p in self.dir.glob("*.json"):
                p.unlink()
                n += 1
        return n
