"""Certificate records and their deterministic JSON form."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

__all__ = ["Certificate", "jsonable", "dumps"]


def jsonable(obj: Any) -> Any:
    """Convert numpy scalars, arrays, tuples and non-finite floats for JSON.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj: Any) -> str:
    """Byte-stable JSON: sorted keys, fixed separators, trailing newline."""
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


@dataclass(frozen=True)
class Certificate:
    """Constants plus the outcome of an inequality sweep.

    ``margin`` is the smallest ``rhs + slack - lhs`` over the samples, so a
    pass has ``margin >= 0``. ``witness`` names the sample attaining it.
    """

    kind: str
    verdict: str
    margin: float
    constants: dict = field(default_factory=dict)
    witness: Optional[dict] = None
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in ("pass", "fail"):
            raise ValueError(f"verdict must be pass or fail, got {self.verdict!r}")
        if self.verdict == "fail" and self.witness is None:
            raise ValueError("a failing certificate needs a witness")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def with_sweep(self, **extra) -> "Certificate":
        return replace(self, sweep={**self.sweep, **extra})

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "constants": dict(self.constants),
            "verdict": self.verdict,
            "margin": self.margin,
            "witness": self.witness,
            "sweep": dict(self.sweep),
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_margin(cls, kind: str, margin: float, constants: dict, witness: Optional[dict],
                    sweep: dict) -> "Certificate":
        """Pass iff ``margin >= 0`` (margins already include slack)."""
        margin = float(margin)
        verdict = "pass" if margin >= 0 else "fail"
        if verdict == "fail" and witness is None:
            witness = {}
        return cls(kind, verdict, margin, constants, witness, sweep)
