from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

SLACK = 1e-9


@dataclass(frozen=True)
class BoundReport:
    """One measured-versus-bound comparison.

    ``satisfied`` is derived: ``measured <= bound + 1e-9 * |bound|``.
    """

    name: str
    measured: float
    bound: float
    parameters: dict = field(default_factory=dict)
    kind: str = "envelope"

    @property
    def satisfied(self) -> bool:
        if math.isnan(self.measured) or math.isnan(self.bound):
            return False
        return self.measured <= self.bound + SLACK * abs(self.bound)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "measured": self.measured,
            "bound": self.bound,
            "satisfied": self.satisfied,
            "parameters": self.parameters,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if hasattr(x, "tolist"):
        return x.tolist()
    if hasattr(x, "item"):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")
