"""Result records for transport computations, with JSON serialization."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np


def _clean(obj):
    """JSON-ready copy: floats to 17 significant digits, arrays to lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return repr(x)
        return float(format(x, ".17g"))
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=1) + "\n"


@dataclass
class TransportResult:
    value: float
    method: str
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    dual_value: float | None = None
    duality_gap: float = 0.0
    iterations: int = 0
    converged: bool = True
    marginal_error: float = 0.0
    plan: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self, include_plan: bool = True) -> dict:
        d = asdict(self)
        if not include_plan:
            d.pop("plan")
        elif self.plan is not None:
            rows, cols, mass = self.plan
            d["plan"] = {"rows": rows, "cols": cols, "mass": mass}
        return _clean(d)

    def to_json(self, include_plan: bool = True) -> str:
        return dumps(self.to_dict(include_plan))


@dataclass
class FourierBoundReport:
    T: float
    k: int
    head_term: float
    tail_term: float
    bound: float
    optimal_T: float | None = None
    optimal_bound: float | None = None
    scan: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return _clean(asdict(self))

    def to_json(self) -> str:
        return dumps(self.to_dict())
