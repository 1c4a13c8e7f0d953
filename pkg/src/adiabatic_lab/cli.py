"""Command-line client for the sweep service.

``sweep`` posts a sweep request to the HTTP service and writes the returned
records to CSV locally. Without ``--server`` it talks to an in-process copy
of the app over the ASGI interface, so no running server is needed; with
``--server`` it targets a remote instance. ``serve`` starts the service.

Exit codes: 0 on success, 1 when every record of the sweep failed, 2 on
configuration or transport errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from .experiments import emit_csv

EXIT_OK = 0
EXIT_ALL_FAILED = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adiabatic-lab",
        description="Finite-time adiabatic evolution error experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a timescale sweep and write CSV")
    sweep.add_argument("--scenario", choices=("fig1", "fig2", "custom"),
                       default="fig1")
    sweep.add_argument("--config", type=Path, default=None,
                       help="schedule config JSON (required for --scenario custom)")
    sweep.add_argument("--out", type=Path, required=True, help="CSV destination")
    sweep.add_argument("--workers", type=int, default=None)
    sweep.add_argument("--tmin", type=float, default=None)
    sweep.add_argument("--tmax", type=float, default=None)
    sweep.add_argument("--points", type=int, default=None)
    sweep.add_argument("--spacing", choices=("log", "linear"), default=None)
    sweep.add_argument("--typical-mode", choices=("asymptotic", "true-error"),
                       default=None)
    sweep.add_argument("--tau0", type=float, default=None)
    sweep.add_argument("--log10", action="store_true",
                       help="write the plot-data variant with log10 columns")
    sweep.add_argument("--server", default=None,
                       help="base URL of a running service; default is in-process")

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server is not None:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload)

    # in-process: drive the same ASGI app the server would run
    import asyncio

    from .service.app import create_app

    async def _go() -> httpx.Response:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, timeout=None,
                                     base_url="http://adiabatic-lab") as client:
            return await client.post(path, json=payload)

    return asyncio.run(_go())


def _sweep_payload(args: argparse.Namespace) -> dict:
    payload: dict = {"scenario": args.scenario}
    if args.config is not None:
        try:
            payload["schedule"] = json.loads(args.config.read_text())
        except OSError as bad:
            print(f"error: cannot read {args.config}: {bad}", file=sys.stderr)
            raise SystemExit(EXIT_CONFIG)
        except json.JSONDecodeError as bad:
            print(f"error: {args.config} is not valid JSON: {bad}", file=sys.stderr)
            raise SystemExit(EXIT_CONFIG)
    elif args.scenario == "custom":
        print("error: --scenario custom requires --config", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    for key, name in (("tmin", "t_min"), ("tmax", "t_max"), ("points", "points"),
                      ("spacing", "spacing"), ("workers", "workers")):
        value = getattr(args, key)
        if value is not None:
            payload[name] = value
    typical = {}
    if args.typical_mode is not None:
        typical["mode"] = args.typical_mode
    if args.tau0 is not None:
        typical["tau0"] = args.tau0
    if typical:
        payload["typical"] = typical
    return payload


def _run_sweep(args: argparse.Namespace) -> int:
    payload = _sweep_payload(args)
    try:
        response = _post(args.server, "/sweep", payload)
    except httpx.HTTPError as bad:
        print(f"error: request failed: {bad}", file=sys.stderr)
        return EXIT_CONFIG
    if response.status_code != 200:
        try:
            detail = response.json().get("detail")
        except ValueError:
            detail = response.text
        print(f"error: service returned {response.status_code}: {detail}",
              file=sys.stderr)
        return EXIT_CONFIG

    from .service.schemas import RecordModel, SweepResponse

    body = SweepResponse.model_validate(response.json())
    records = [RecordModel.to_record(r) for r in body.records]
    rows = emit_csv(records, args.out, log10=args.log10)
    print(f"wrote {rows} records to {args.out}")
    if body.hyperadiabatic_T is not None:
        print(f"hyperadiabatic regime detected from T = {body.hyperadiabatic_T:g}")
    if body.all_failed:
        print("error: every sweep point failed", file=sys.stderr)
        return EXIT_ALL_FAILED
    return EXIT_OK


def _run_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("adiabatic_lab.service.app:app", host=args.host, port=args.port)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "sweep":
        return _run_sweep(args)
    return _run_serve(args)


if __name__ == "__main__":
    sys.exit(main())
