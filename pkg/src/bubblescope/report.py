"""JSON report written by every CLI command."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

KEYS = ("command", "input_sha256", "config", "results", "artifacts")


def sha256_of(*blobs: bytes) -> str:
    h = hashlib.sha256()
    for b in blobs:
        h.update(b)
    return h.hexdigest()


def round_numbers(obj, digits: int = 12):
    """Recursively round floats to ``digits`` significant digits; nan -> None."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{digits}g}")
    if isinstance(obj, dict):
        return {str(k): round_numbers(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [round_numbers(v, digits) for v in obj]
    return obj


@dataclass
class Report:
    command: str
    input_sha256: str
    config: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return round_numbers({k: getattr(self, k) for k in KEYS})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        missing = [k for k in KEYS if k not in d]
        if missing:
            raise ValueError(f"report missing keys: {missing}")
        return cls(**{k: d[k] for k in KEYS})

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))
