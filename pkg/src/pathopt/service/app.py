"""FastAPI service wrapping the optimization pipeline.

Endpoints are stateless: requests carry the topology, traffic and any
previous-run state inline, and responses return all artifacts (solution,
rules, metrics, path caches) so a thin client can persist them locally.
"""
from __future__ import annotations

import logging

from fastapi import FastAPI, HTTPException

from .. import pipeline
from ..model import ModelError
from ..paths import InfeasibleClassError, PathError, pathset_from_doc, pathset_to_doc
from ..recipes import RecipeError, get_recipe
from ..rules import RuleError, rules_to_doc
from ..solver import export_lp_text
from ..topology import TopologyError, topology_from_doc
from ..traffic import TrafficError, traffic_from_doc
from . import schemas

log = logging.getLogger(__name__)

_CLIENT_ERRORS = (TopologyError, TrafficError, PathError, ModelError,
                  RecipeError, RuleError, pipeline.PipelineError)


def _load_instance(spec: schemas.InstanceSpec):
    topo = topology_from_doc(spec.topology.model_dump())
    tm = traffic_from_doc([tc.model_dump() for tc in spec.traffic])
    recipe = get_recipe(spec.recipe, **spec.recipe_params)
    return topo, tm, recipe


def _run_response(result: pipeline.RunResult) -> schemas.RunResponse:
    return schemas.RunResponse(
        status=result.solution.status,
        objective=result.solution.objective,
        values=result.solution.values,
        path_fractions=result.fractions,
        rules=rules_to_doc(result.rules),
        metrics=result.metrics,
        generated_paths=pathset_to_doc(result.generated),
        selected_paths=pathset_to_doc(result.selected),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="pathopt", version="0.1.0",
                  description="Path-based network optimization service")

    @app.exception_handler(_CLIENT_ERRORS[0])
    async def _topo_error(request, exc):  # pragma: no cover - fastapi plumbing
        raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/topology/fat-tree", response_model=schemas.TopologyDoc)
    def make_fat_tree(req: schemas.FatTreeRequest):
        from ..topology import fat_tree, topology_to_doc

        try:
            return topology_to_doc(fat_tree(req.k, link_bandwidth=req.link_bandwidth))
        except TopologyError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/traffic/gravity", response_model=list[schemas.TrafficClassDoc])
    def make_gravity(req: schemas.GravityRequest):
        from ..traffic import gravity_matrix, traffic_to_doc

        try:
            topo = topology_from_doc(req.topology.model_dump())
            return traffic_to_doc(gravity_matrix(topo, req.total_volume, req.seed))
        except (TopologyError, TrafficError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/traffic/uniform", response_model=list[schemas.TrafficClassDoc])
    def make_uniform(req: schemas.UniformRequest):
        from ..traffic import traffic_to_doc, uniform_matrix

        try:
            topo = topology_from_doc(req.topology.model_dump())
            return traffic_to_doc(uniform_matrix(topo, req.per_pair_volume))
        except (TopologyError, TrafficError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/optimize/run", response_model=schemas.RunResponse)
    def run(req: schemas.RunRequest):
        try:
            topo, tm, recipe = _load_instance(req)
            prefixes = None
            if req.class_prefixes:
                prefixes = {int(cid): tuple(pair) for cid, pair in req.class_prefixes.items()}
            result = pipeline.run_pipeline(
                topo, tm, recipe, select_number=req.select_number,
                strategy=req.strategy, seed=req.seed, gap=req.gap,
                backend=req.backend, class_prefixes=prefixes,
                with_rules=req.with_rules)
        except _CLIENT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return _run_response(result)

    @app.post("/optimize/reoptimize", response_model=schemas.RunResponse)
    def reoptimize(req: schemas.ReoptimizeRequest):
        try:
            topo, tm, recipe = _load_instance(req)
            if req.event.kind == "fail-node":
                if req.event.node is None:
                    raise pipeline.PipelineError("fail-node event needs a node id")
                event = ("fail-node", req.event.node)
            elif req.event.kind == "fail-link":
                if not req.event.link:
                    raise pipeline.PipelineError("fail-link event needs a (src, dst) pair")
                event = ("fail-link", tuple(req.event.link))
            else:
                if req.event.traffic is None:
                    raise pipeline.PipelineError("new-traffic event needs a traffic matrix")
                event = ("new-traffic",
                         traffic_from_doc([tc.model_dump() for tc in req.event.traffic]))
            result = pipeline.reoptimize(
                topo, tm, recipe,
                generated=pathset_from_doc(req.prev.generated_paths),
                prev_selected=pathset_from_doc(req.prev.selected_paths),
                prev_solution_doc=req.prev.solution,
                event=event, select_number=req.select_number,
                strategy=req.strategy, seed=req.seed, theta=req.theta,
                churn_weight=req.churn_weight, gap=req.gap, backend=req.backend)
        except InfeasibleClassError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except _CLIENT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return _run_response(result)

    @app.post("/optimize/bench", response_model=schemas.BenchResponse)
    def bench(req: schemas.BenchRequest):
        try:
            topo, tm, recipe = _load_instance(req)
            rows = pipeline.bench(topo, tm, recipe,
                                  select_numbers=req.select_numbers,
                                  strategies=req.strategies, trials=req.trials,
                                  seed=req.seed, gap=req.gap, backend=req.backend,
                                  baseline_max_paths=req.baseline_max_paths)
        except _CLIENT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.BenchResponse(rows=rows, csv=pipeline.bench_rows_to_csv(rows))

    @app.post("/model/lp-text", response_model=schemas.LpExportResponse)
    def lp_text(req: schemas.LpExportRequest):
        try:
            topo, tm, recipe = _load_instance(req)
            generated = pipeline.generate_for_recipe(topo, tm, recipe)
            from ..paths import select_paths

            selected = select_paths(generated, req.strategy or recipe.strategy,
                                    req.select_number or recipe.select_number,
                                    seed=req.seed)
            model = pipeline.build_for_recipe(topo, tm, recipe, selected).build()
        except _CLIENT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.LpExportResponse(lp_text=export_lp_text(model),
                                        num_vars=model.num_vars,
                                        num_rows=model.num_rows)

    return app


app = create_app()
