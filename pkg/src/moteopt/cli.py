"""Thin command-line client for the experiment service.

Every verb marshals its arguments into a service request and prints what the
service returns. By default the app is dispatched in-process (no network, no
running server needed); ``--server URL`` targets a remote instance instead, in
which case artifact paths refer to the server's filesystem.

Exit codes: 0 ok, 1 run failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx

EXIT_OK = 0
EXIT_RUN_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def make_client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app, base_url="http://moteopt.local")


def _print_errors(payload) -> None:
    detail = payload.get("detail", payload) if isinstance(payload, dict) else payload
    if isinstance(detail, dict) and "errors" in detail:
        for err in detail["errors"]:
            print(f"error: {err}", file=sys.stderr)
    else:
        print(f"error: {detail}", file=sys.stderr)


def _post(client, path: str, body: dict) -> tuple[int, dict | None]:
    try:
        resp = client.post(path, json=body)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILURE, None
    if resp.status_code == 200:
        return EXIT_OK, resp.json()
    try:
        payload = resp.json()
    except ValueError:
        payload = resp.text
    _print_errors(payload)
    if resp.status_code in (400, 422):
        return EXIT_CONFIG_ERROR, None
    return EXIT_RUN_FAILURE, None


def _read_config(path: str) -> str | None:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return None


def cmd_validate(client, args) -> int:
    text = _read_config(args.config)
    if text is None:
        return EXIT_CONFIG_ERROR
    code, payload = _post(client, "/validate", {"config_text": text, "overrides": args.set})
    if code != EXIT_OK:
        return code
    if payload["ok"]:
        print("config OK")
        return EXIT_OK
    for err in payload["errors"]:
        print(f"error: {err}", file=sys.stderr)
    return EXIT_CONFIG_ERROR


def cmd_run(client, args) -> int:
    text = _read_config(args.config)
    if text is None:
        return EXIT_CONFIG_ERROR
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"master_seed={args.seed}")
    if args.repetitions is not None:
        overrides.append(f"repetitions={args.repetitions}")
    if args.workers is not None:
        overrides.append(f"workers={args.workers}")
    body = {"config_text": text, "overrides": overrides, "output_dir": args.output}
    code, payload = _post(client, "/run", body)
    if code != EXIT_OK:
        return code
    print(f"artifact: {payload['artifact_dir']}")
    print(f"config_hash: {payload['config_hash']}")
    print(f"runs: {payload['runs']}")
    for path in payload["summaries"]:
        print(f"summary: {path}")
    return EXIT_OK


def cmd_trend(client, args) -> int:
    code, payload = _post(
        client, "/analysis/trend", {"artifact_dir": args.trace_dir, "stride": args.stride}
    )
    if code != EXIT_OK:
        return code
    for path in payload["files"]:
        print(path)
    return EXIT_OK


def cmd_tables(client, args) -> int:
    code, payload = _post(client, "/analysis/tables", {"artifact_dir": args.trace_dir, "stride": 1})
    if code != EXIT_OK:
        return code
    for path in payload["files"]:
        print(path)
    return EXIT_OK


def cmd_simulate(client, args) -> int:
    body = {
        "problem": args.problem,
        "dim": args.dim,
        "nodes": args.nodes,
        "mode": args.mode,
        "communicating": not args.standalone,
        "q": args.q,
        "comm_period": args.period,
        "eval_budget": args.evals,
        "time_budget": args.time,
        "topology": args.topology,
        "seed": args.seed,
        "include_trace": args.trace,
    }
    code, payload = _post(client, "/simulate", body)
    if code != EXIT_OK:
        return code
    trace_text = payload.pop("trace", None)
    print(json.dumps(payload, indent=2))
    if trace_text:
        sys.stdout.write(trace_text)
    return EXIT_OK


def cmd_problems(client, args) -> int:
    try:
        resp = client.get("/problems")
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILURE
    for item in resp.json():
        flags = ("unimodal" if item["unimodal"] else "multimodal",
                 "separable" if item["separable"] else "non-separable")
        print(f"{item['id']:>4}  {item['name']:<20} {flags[0]}, {flags[1]}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moteopt",
        description="Island-model WSN optimization simulator (thin client)",
    )
    parser.add_argument("--server", default=None, help="remote service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate an experiment config without running")
    p.add_argument("config")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    p = sub.add_parser("run", help="run an experiment sweep from a config file")
    p.add_argument("config")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--output", default=None, help="artifact directory")
    p.add_argument("--seed", type=int, default=None, help="override master seed")
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("trend", help="emit fitness-vs-evaluations CSVs from an artifact dir")
    p.add_argument("trace_dir")
    p.add_argument("--stride", type=int, default=1)

    p = sub.add_parser("tables", help="regenerate summary tables from an artifact dir")
    p.add_argument("trace_dir")

    p = sub.add_parser("simulate", help="run a single seeded simulation")
    p.add_argument("--problem", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--nodes", type=int, default=5)
    p.add_argument("--mode", choices=["sa", "ma"], default="sa")
    p.add_argument("--standalone", action="store_true")
    p.add_argument("--q", type=float, default=0.9)
    p.add_argument("--period", type=float, default=0.25)
    p.add_argument("--evals", type=int, default=1000)
    p.add_argument("--time", type=float, default=60.0)
    p.add_argument("--topology", choices=["random_geometric", "complete", "ring"],
                   default="complete")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", action="store_true", help="include the full trace text")

    sub.add_parser("problems", help="list the benchmark problems")

    p = sub.add_parser("serve", help="serve the HTTP API with uvicorn")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8420)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    client = make_client(args.server)
    try:
        if args.command == "validate":
            return cmd_validate(client, args)
        if args.command == "run":
            return cmd_run(client, args)
        if args.command == "trend":
            return cmd_trend(client, args)
        if args.command == "tables":
            return cmd_tables(client, args)
        if args.command == "simulate":
            return cmd_simulate(client, args)
        if args.command == "problems":
            return cmd_problems(client, args)
    finally:
        client.close()
    return EXIT_RUN_FAILURE


if __name__ == "__main__":
    sys.exit(main())
