"""Command-line client for the squeezer simulation service.

``sqzlab <mode> [--config FILE] [--seed N] [--out DIR] [--set key=value ...]``
posts the configuration to the service and writes the returned artifacts
(summary.json, table.csv and, per mode, record.csv / wigner.csv with JSON
sidecars).  By default the service runs in-process; ``--server URL`` targets
a remote instance started with ``sqzlab serve``.

Exit codes: 0 success, 2 configuration error, 3 numerical-invariant
violation.
"""

from __future__ import annotations

import argparse
import asyncio
import sys

import httpx

from . import __version__
from .config import MODES, ConfigError, default_config, load_config_file
from .output import format_float, write_run_files

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqzlab",
        description="Measurement-and-feedforward squeezer simulations.")
    parser.add_argument("--version", action="version",
                        version=f"sqzlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for mode in MODES:
        p = sub.add_parser(mode, help=f"run the {mode} experiment")
        p.add_argument("--config", help="config file (key.path = value lines)")
        p.add_argument("--seed", type=int, help="override sampling.seed")
        p.add_argument("--out", help="override output.directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config entry (repeatable)")
        p.add_argument("--server", help="base URL of a running sqzlab service "
                                        "(default: in-process)")

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _post(server: str | None, path: str, body: dict) -> httpx.Response:
    """POST to a remote service, or drive the ASGI app in-process."""
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            return client.post(path, json=body)

    from .service import app

    async def call() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://sqzlab.local",
                                     timeout=None) as client:
            return await client.post(path, json=body)

    return asyncio.run(call())


def _print_compile_plan(summary: dict) -> None:
    print("gate plan:")
    for i, rec in enumerate(summary.get("plan", [])):
        kind = rec["type"]
        if kind == "rotation":
            print(f"  {i}: rotation    theta = {format_float(rec['theta'])}")
        elif kind == "squeezer":
            print(f"  {i}: squeezer    r = {format_float(rec['r'])}  "
                  f"T = {format_float(rec['transmittance'])}  "
                  f"gain = {format_float(rec['gain'])}")
        else:
            print(f"  {i}: displacement  dx = {format_float(rec['dx'])}  "
                  f"dp = {format_float(rec['dp'])}")
    if not summary.get("plan"):
        print("  (identity: no gates)")
    print(f"recompose error: {format_float(summary['recompose_error'])}")


def _run_mode(args) -> int:
    try:
        if args.config:
            config = load_config_file(args.config, overrides=args.set,
                                      seed=args.seed, out_dir=args.out)
        else:
            config = default_config(overrides=args.set, seed=args.seed,
                                    out_dir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    body = config.model_dump()
    body["mode"] = args.command
    response = _post(args.server, f"/run/{args.command}", body)
    if response.status_code == 409:
        print(f"invariant violation: {response.json().get('detail')}",
              file=sys.stderr)
        return EXIT_INVARIANT
    if response.status_code == 422:
        print(f"config error: {response.json().get('detail')}", file=sys.stderr)
        return EXIT_CONFIG
    response.raise_for_status()

    payload = response.json()
    out_dir = config.output.directory
    written = write_run_files(payload, out_dir)
    if args.command == "compile":
        _print_compile_plan(payload["summary"])
    print(f"wrote {', '.join(written)} to {out_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        uvicorn.run("sqzlab.service:app", host=args.host, port=args.port)
        return EXIT_OK
    return _run_mode(args)


if __name__ == "__main__":
    sys.exit(main())
