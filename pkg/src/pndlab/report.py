"""Run reports, JSON-lines metrics, and input hashing.

Reports are written with sorted keys and fixed formatting so that identical
inputs give byte-identical files.  Wall-clock time is kept out of them and
goes to a separate ``timing.json``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps(obj))
    return p


def write_jsonl(path, records) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w") as f:
        for r in records:
            f.write(json.dumps(_plain(r), sort_keys=True) + "\n")
    return p


def write_tsv(path, header, rows) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)

    def fmt(v):
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        return str(v)

    with open(p, "w") as f:
        f.write("\t".join(header) + "\n")
        for row in rows:
            f.write("\t".join(fmt(v) for v in row) + "\n")
    return p


def content_hash(paths=(), extra=None) -> str:
    """sha256 over (name, size, bytes) of each file, then the canonical JSON of ``extra``."""
    h = hashlib.sha256()
    for p in sorted(Path(x) for x in paths):
        data = p.read_bytes()
        h.update(f"{p.name}\0{len(data)}\0".encode())
        h.update(data)
    if extra is not None:
        h.update(json.dumps(_plain(extra), sort_keys=True).encode())
    return h.hexdigest()


def dataset_files(directory) -> list[Path]:
    d = Path(directory)
    return [p for p in sorted(d.iterdir()) if p.is_file() and p.suffix in (".tsv", ".json")]


def mean_std(values) -> dict:
    """Population standard deviation, so a single value has std 0."""
    a = np.asarray(values, dtype=np.float64)
    return {"mean": float(np.mean(a)), "std": float(np.std(a)), "n": int(a.size)}


@dataclass
class RunReport:
    command: str
    config: dict
    input_hash: str
    per_seed: dict = field(default_factory=dict)    # seed -> metrics dict
    extra: dict = field(default_factory=dict)

    def add(self, seed, metrics) -> None:
        self.per_seed[str(seed)] = metrics

    def summary(self) -> dict:
        keys = sorted({k for m in self.per_seed.values() for k, v in m.items()
                       if isinstance(v, (int, float, np.floating)) and not isinstance(v, bool)
                       and k.endswith("_acc")})
        order = sorted(self.per_seed, key=int)
        return {k: mean_std([self.per_seed[s][k] for s in order if k in self.per_seed[s]])
                for k in keys}

    def to_dict(self) -> dict:
        return {"command": self.command, "config": self.config, "input_hash": self.input_hash,
                "per_seed": self.per_seed, "summary": self.summary(), **self.extra}

    def write(self, path) -> Path:
        return write_json(path, self.to_dict())
