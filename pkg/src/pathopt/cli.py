"""Thin command-line client for the optimization service.

Every subcommand speaks the service's HTTP API. With --server it targets a
running instance; without it the service app is mounted in-process, so the
CLI works standalone while exercising exactly the same request path.

Config file (JSON):
    {
      "topology": "topo.json",            # path, relative to the config file
      "traffic": "traffic.json",          # path, or {"gravity": {...}} / {"uniform": {...}}
      "recipe": "te",
      "recipe_params": {},
      "select_number": 5,
      "strategy": "random",
      "seed": 0,
      "gap": 1e-4
    }
"""
from __future__ import annotations

import json
import pathlib
import sys

import click

EXIT_OK = 0
EXIT_NOT_OPTIMAL = 1
EXIT_BAD_INPUT = 2


def _fail(message: str, code: int = EXIT_BAD_INPUT):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _make_client(server: str):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service.app import app

    return TestClient(app)


def _request(client, method: str, url: str, **kwargs):
    resp = client.request(method, url, **kwargs)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        _fail(f"{url} -> HTTP {resp.status_code}: {detail}",
              EXIT_BAD_INPUT if resp.status_code != 409 else EXIT_NOT_OPTIMAL)
    return resp.json()


def _load_json(path: pathlib.Path, what: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        _fail(f"{what} file not found: {path}")
    except json.JSONDecodeError as exc:
        _fail(f"{what} file {path} is not valid JSON: {exc}")


def _load_config(config_path: str):
    cfg_path = pathlib.Path(config_path)
    cfg = _load_json(cfg_path, "config")
    base = cfg_path.parent
    if "topology" not in cfg or "recipe" not in cfg or "traffic" not in cfg:
        _fail(f"config {cfg_path} must declare 'topology', 'traffic' and 'recipe'")
    topo_doc = _load_json(base / cfg["topology"], "topology")
    return cfg, base, topo_doc


def _resolve_traffic(client, cfg, base, topo_doc):
    traffic = cfg["traffic"]
    if isinstance(traffic, str):
        return _load_json(base / traffic, "traffic")
    if isinstance(traffic, dict) and "gravity" in traffic:
        params = dict(traffic["gravity"])
        return _request(client, "POST", "/traffic/gravity",
                        json={"topology": topo_doc, **params})
    if isinstance(traffic, dict) and "uniform" in traffic:
        params = dict(traffic["uniform"])
        return _request(client, "POST", "/traffic/uniform",
                        json={"topology": topo_doc, **params})
    _fail("config 'traffic' must be a file path or a {'gravity'|'uniform': {...}} object")


def _instance_payload(cfg, topo_doc, traffic_doc, select_number, strategy, seed, gap, backend):
    payload = {
        "topology": topo_doc,
        "traffic": traffic_doc,
        "recipe": cfg["recipe"],
        "recipe_params": cfg.get("recipe_params", {}),
        "seed": seed if seed is not None else cfg.get("seed", 0),
        "gap": gap if gap is not None else cfg.get("gap", 1e-4),
        "backend": backend or cfg.get("backend", "auto"),
    }
    n = select_number if select_number is not None else cfg.get("select_number")
    if n is not None:
        payload["select_number"] = n
    strat = strategy or cfg.get("strategy")
    if strat is not None:
        payload["strategy"] = strat
    return payload


def _write(out_dir: pathlib.Path, name: str, text: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    return path


def _write_run_artifacts(out_dir, body):
    from . import pipeline
    from .rules import MockControllerClient, rules_from_doc

    out = pathlib.Path(out_dir)
    solution = {"status": body["status"], "objective": body["objective"],
                "values": body["values"]}
    _write(out, "solution.json", json.dumps(solution, indent=2, sort_keys=True) + "\n")
    _write(out, "rules.json", json.dumps(body["rules"], indent=2) + "\n")
    _write(out, "metrics.csv", pipeline.metrics_to_csv(body["metrics"]))
    _write(out, "paths_generated.json", json.dumps(body["generated_paths"], sort_keys=True) + "\n")
    _write(out, "paths_selected.json", json.dumps(body["selected_paths"], sort_keys=True) + "\n")
    MockControllerClient(out / "controller_payload.json").push_rules(
        rules_from_doc(body["rules"]))


_common = [
    click.option("--config", "config_path", required=True, type=click.Path(),
                 help="instance config file"),
    click.option("--out-dir", default="out", show_default=True),
    click.option("--seed", type=int, default=None),
    click.option("--select-number", type=int, default=None),
    click.option("--strategy", type=click.Choice(["shortest", "random"]), default=None),
    click.option("--gap", type=float, default=None),
    click.option("--backend", type=click.Choice(["auto", "bundled", "reference"]),
                 default=None),
]


def _with_common(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@click.group()
@click.option("--server", envvar="PATHOPT_SERVER", default=None,
              help="service base URL; omit to run the service in-process")
@click.pass_context
def main(ctx, server):
    """Path-based network optimization client."""
    ctx.obj = {"server": server}


@main.command()
@_with_common
@click.pass_context
def run(ctx, config_path, out_dir, seed, select_number, strategy, gap, backend):
    """Solve one instance and write solution/rules/metrics artifacts."""
    client = _make_client(ctx.obj["server"])
    cfg, base, topo_doc = _load_config(config_path)
    traffic_doc = _resolve_traffic(client, cfg, base, topo_doc)
    payload = _instance_payload(cfg, topo_doc, traffic_doc, select_number,
                                strategy, seed, gap, backend)
    if "class_prefixes" in cfg:
        payload["class_prefixes"] = cfg["class_prefixes"]
    body = _request(client, "POST", "/optimize/run", json=payload)
    _write_run_artifacts(out_dir, body)
    click.echo(f"status={body['status']} objective={body['objective']} "
               f"artifacts={out_dir}")
    sys.exit(EXIT_OK if body["status"] == "optimal" else EXIT_NOT_OPTIMAL)


@main.command()
@_with_common
@click.option("--fail-node", type=int, default=None, help="failed node id")
@click.option("--fail-link", type=(int, int), default=None, help="failed link endpoints")
@click.option("--new-traffic", "new_traffic", type=click.Path(), default=None,
              help="replacement traffic file")
@click.option("--prev-dir", default=None,
              help="artifacts dir of the previous run [default: --out-dir]")
@click.option("--theta", type=float, default=0.1, show_default=True,
              help="objective-degradation threshold triggering re-selection")
@click.option("--churn-weight", type=float, default=0.0, show_default=True)
@click.pass_context
def reoptimize(ctx, config_path, out_dir, seed, select_number, strategy, gap,
               backend, fail_node, fail_link, new_traffic, prev_dir, theta,
               churn_weight):
    """React to a failure or traffic change using the previous run's artifacts."""
    events = [e for e in (fail_node is not None, fail_link is not None,
                          new_traffic is not None) if e]
    if len(events) != 1:
        _fail("provide exactly one of --fail-node, --fail-link, --new-traffic")
    client = _make_client(ctx.obj["server"])
    cfg, base, topo_doc = _load_config(config_path)
    traffic_doc = _resolve_traffic(client, cfg, base, topo_doc)
    prev = pathlib.Path(prev_dir or out_dir)
    prev_state = {
        "solution": _load_json(prev / "solution.json", "previous solution"),
        "selected_paths": _load_json(prev / "paths_selected.json", "previous selected paths"),
        "generated_paths": _load_json(prev / "paths_generated.json", "previous generated paths"),
    }
    if fail_node is not None:
        event = {"kind": "fail-node", "node": fail_node}
    elif fail_link is not None:
        event = {"kind": "fail-link", "link": list(fail_link)}
    else:
        event = {"kind": "new-traffic",
                 "traffic": _load_json(base / new_traffic, "new traffic")}
    payload = _instance_payload(cfg, topo_doc, traffic_doc, select_number,
                                strategy, seed, gap, backend)
    payload.update({"event": event, "prev": prev_state, "theta": theta,
                    "churn_weight": churn_weight})
    body = _request(client, "POST", "/optimize/reoptimize", json=payload)
    _write_run_artifacts(out_dir, body)
    click.echo(f"status={body['status']} objective={body['objective']} "
               f"step={body['metrics'].get('fault_step')} "
               f"diff={body['metrics'].get('diff')}")
    sys.exit(EXIT_OK if body["status"] == "optimal" else EXIT_NOT_OPTIMAL)


@main.command()
@_with_common
@click.option("--select-numbers", default="1,3,5", show_default=True,
              help="comma-separated candidate counts")
@click.option("--strategies", default="shortest,random", show_default=True)
@click.option("--trials", type=int, default=1, show_default=True)
@click.pass_context
def bench(ctx, config_path, out_dir, seed, select_number, strategy, gap, backend,
          select_numbers, strategies, trials):
    """Sweep selection parameters and compare against the all-paths baseline."""
    client = _make_client(ctx.obj["server"])
    cfg, base, topo_doc = _load_config(config_path)
    traffic_doc = _resolve_traffic(client, cfg, base, topo_doc)
    payload = _instance_payload(cfg, topo_doc, traffic_doc, select_number,
                                strategy, seed, gap, backend)
    try:
        payload["select_numbers"] = [int(x) for x in select_numbers.split(",") if x]
    except ValueError:
        _fail(f"bad --select-numbers {select_numbers!r}")
    payload["strategies"] = [s.strip() for s in strategies.split(",") if s.strip()]
    payload["trials"] = trials
    body = _request(client, "POST", "/optimize/bench", json=payload)
    path = _write(pathlib.Path(out_dir), "bench.csv", body["csv"])
    click.echo(f"wrote {path} ({len(body['rows'])} rows)")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the optimization service."""
    import uvicorn

    uvicorn.run("pathopt.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
