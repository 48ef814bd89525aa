"""Pydantic request/response models mirroring the on-disk JSON formats."""
from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field


class NodeDoc(BaseModel):
    id: int
    name: Optional[str] = None
    services: list[str] = Field(default_factory=list)
    resources: dict[str, Union[float, Literal["TBA"]]] = Field(default_factory=dict)


class LinkDoc(BaseModel):
    src: int
    dst: int
    resources: dict[str, float] = Field(default_factory=dict)


class TopologyDoc(BaseModel):
    nodes: list[NodeDoc]
    links: list[LinkDoc] = Field(default_factory=list)


class TrafficClassDoc(BaseModel):
    id: int
    ingress: int
    egress: int
    vol_flows: float
    vol_bytes: float
    cpu_cost: float = 1.0
    chain: list[str] = Field(default_factory=list)
    priority: float = 1.0


class FatTreeRequest(BaseModel):
    k: int
    link_bandwidth: float = 10 ** 7


class GravityRequest(BaseModel):
    topology: TopologyDoc
    total_volume: float
    seed: int = 0


class UniformRequest(BaseModel):
    topology: TopologyDoc
    per_pair_volume: float


class InstanceSpec(BaseModel):
    topology: TopologyDoc
    traffic: list[TrafficClassDoc]
    recipe: str
    recipe_params: dict = Field(default_factory=dict)
    select_number: Optional[int] = None
    strategy: Optional[Literal["shortest", "random"]] = None
    seed: int = 0
    gap: float = 1e-4
    backend: Literal["auto", "bundled", "reference"] = "auto"


class RunRequest(InstanceSpec):
    class_prefixes: Optional[dict[int, tuple[str, str]]] = None
    with_rules: bool = True


class FlowRuleDoc(BaseModel):
    node: int
    match: dict
    action: dict
    class_: int = Field(alias="class")
    path_index: int

    model_config = {"populate_by_name": True}


class RunResponse(BaseModel):
    status: str
    objective: Optional[float] = None
    values: dict[str, float] = Field(default_factory=dict)
    path_fractions: dict[int, list[float]] = Field(default_factory=dict)
    rules: list[FlowRuleDoc] = Field(default_factory=list)
    metrics: dict = Field(default_factory=dict)
    generated_paths: dict = Field(default_factory=dict)
    selected_paths: dict = Field(default_factory=dict)


class EventDoc(BaseModel):
    kind: Literal["fail-node", "fail-link", "new-traffic"]
    node: Optional[int] = None
    link: Optional[tuple[int, int]] = None
    traffic: Optional[list[TrafficClassDoc]] = None


class PrevStateDoc(BaseModel):
    solution: dict
    selected_paths: dict
    generated_paths: dict


class ReoptimizeRequest(InstanceSpec):
    event: EventDoc
    prev: PrevStateDoc
    theta: float = 0.1
    churn_weight: float = 0.0


class BenchRequest(InstanceSpec):
    select_numbers: list[int] = Field(default_factory=lambda: [1, 3, 5])
    strategies: list[Literal["shortest", "random"]] = Field(
        default_factory=lambda: ["shortest", "random"])
    trials: int = 1
    baseline_max_paths: int = 20000


class BenchResponse(BaseModel):
    rows: list[dict]
    csv: str


class LpExportRequest(InstanceSpec):
    pass


class LpExportResponse(BaseModel):
    lp_text: str
    num_vars: int
    num_rows: int
