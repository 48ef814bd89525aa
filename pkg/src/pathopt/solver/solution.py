"""Solver result container shared by the LP and branch-and-bound entry points."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit"
NUMERIC_FAILURE = "numeric_failure"


@dataclass
class Solution:
    status: str
    objective: float = None
    values: dict = field(default_factory=dict)
    iterations: int = 0
    nodes: int = 0
    duals: dict = None
    dual_objective: float = None
    mip_gap: float = None
    basis: dict = None
    trace: list = None

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    def value(self, name: str, default: float = 0.0) -> float:
        return self.values.get(name, default)

    def to_doc(self) -> dict:
        return {"status": self.status, "objective": self.objective, "values": dict(self.values)}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_doc(), sort_keys=True, **kwargs)


def solution_from_doc(doc: dict) -> Solution:
    return Solution(status=doc["status"], objective=doc.get("objective"),
                    values=dict(doc.get("values", {})))
