"""Operator and developer entry point.

Subcommands: ``serve`` (HTTP control service), ``plan`` (shortest path),
``simulate`` (headless scenario run with trace), ``bom`` (parts cost),
``demo`` (end-to-end demo through the HTTP API).

Exit codes: 0 success, 2 input error, 3 environment error, 4 invariant
violation during simulation.
"""

from __future__ import annotations

import argparse
import errno
import json
import os
import sys
from pathlib import Path

from .bom import estimate_bom
from .demos import DEMO_NAMES, run_demo
from .errors import CoilboardError, GridError, NotFoundError
from .geometry import CoilGrid, build_grid
from .planner import plan_path
from .scenario import builtin_scenario, load_scenario, run_scenario

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ENV = 3
EXIT_VIOLATION = 4

STORE_ENV_VAR = "COILBOARD_STORE"


def _load_grid(path: str | None) -> CoilGrid:
    if path is None:
        return build_grid(16, 16, 150.0)
    try:
        return CoilGrid.load(path)
    except FileNotFoundError as exc:
        raise GridError(f"grid file {path} does not exist") from exc


def _emit(args, payload: dict, human: str) -> None:
    if args.output == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(human)


# ---------------------------------------------------------------------------
# subcommands


def cmd_serve(args) -> int:
    grid = _load_grid(args.grid)
    store_path = args.store or os.environ.get(STORE_ENV_VAR)

    import socket

    probe = socket.socket()
    try:
        probe.bind((args.host, args.port))
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_ENV
    finally:
        probe.close()

    from .content import ContentStore
    from .service import Controller, Ticker, create_app

    controller = Controller(
        grid,
        ContentStore(store_path),
        backend=args.backend,
        dwell_ms=args.dwell_ms,
        instant=False,
    )
    app = create_app(controller, ui_dir=args.ui)
    ticker = Ticker(controller, speed=args.speed)
    ticker.start()

    import uvicorn

    config = uvicorn.Config(app, host=args.host, port=args.port, log_level="warning")
    server = uvicorn.Server(config)
    _emit(
        args,
        {"status": "serving", "port": args.port, "backend": args.backend,
         "store": store_path, "coils": grid.coil_count},
        f"serving {grid.coil_count} coils on {args.host}:{args.port} "
        f"(backend={args.backend}, store={store_path or 'in-memory'})",
    )
    code = EXIT_OK
    try:
        server.run()
    except SystemExit as exc:
        code = EXIT_ENV if exc.code else EXIT_OK
    finally:
        ticker.stop()
        controller.store.save()
    return code


def cmd_plan(args) -> int:
    from .planner import MotionPlan, PlanStatus

    grid = _load_grid(args.grid)
    path = plan_path(grid, args.start, args.goal)
    ids = [grid.coil_id(a) for a in path]
    plan = MotionPlan(
        {0: [(cid, tick) for tick, cid in enumerate(ids)]},
        len(ids) - 1,
        PlanStatus.COMPLETE,
    )
    human = "\n".join(
        f"{cid:5d}  {a.module_id} {a.layer.value:<6} row {a.row:2d} col {a.col:2d}"
        for cid, a in zip(ids, path)
    )
    # json output is the replayable plan dump (see simulate --plan)
    _emit(args, plan.to_dict(), f"{len(path) - 1} hops\n{human}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    grid = _load_grid(args.grid)
    if args.plan:
        scenario = _plan_replay_scenario(grid, args.plan)
    elif args.scenario is None:
        raise GridError("simulate needs --scenario (a path or demo:<name>) or --plan")
    elif args.scenario.startswith("demo:"):
        scenario = builtin_scenario(args.scenario.split(":", 1)[1], grid)
    else:
        scenario = load_scenario(args.scenario)
    result = run_scenario(grid, scenario, dwell_ms=args.dwell_ms)
    if args.trace:
        Path(args.trace).write_text(result.trace_csv, encoding="utf-8")
    if args.output == "csv":
        print(result.trace_csv, end="")
    else:
        _emit(
            args,
            result.summary,
            "\n".join(f"{k}: {v}" for k, v in result.summary.items()),
        )
    return EXIT_VIOLATION if result.violations else EXIT_OK


def _plan_replay_scenario(grid: CoilGrid, plan_path_arg: str) -> dict:
    """Replay a saved plan dump: markers start on the plan's first cells and
    each marker is sent to its goal."""
    from .planner import MotionPlan

    try:
        plan = MotionPlan.from_json(Path(plan_path_arg).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise GridError(f"plan file {plan_path_arg} does not exist") from exc
    markers = []
    events = []
    for order, mid in enumerate(sorted(plan.per_marker)):
        cells = plan.path_cells(mid)
        markers.append({"coil_id": cells[0]})
        events.append(
            {"at_ms": 0, "kind": "move", "marker_id": order, "target": cells[-1]}
        )
    return {"markers": markers, "events": events}


def cmd_bom(args) -> int:
    est = estimate_bom(args.rows, args.cols)
    payload = est.as_dict()
    lines = [f"{'part':<16} {'count':>8} {'unit $':>10} {'subtotal $':>11}"]
    for name, line in est.line_items.items():
        lines.append(
            f"{name:<16} {line.count:>8g} {line.unit_cost_usd:>10.4f} {line.subtotal_usd:>11.2f}"
        )
    lines.append(f"{'total':<16} {'':>8} {'':>10} {est.total_usd:>11.2f}")
    if est.extrapolated:
        lines.append("note: dimensions are not whole 16x16 modules; linear extrapolation")
    if (args.rows, args.cols) == (160, 160):
        lines.append("note: itemized total 510 USD is quoted rounded as 500 USD")
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_demo(args) -> int:
    grid = _load_grid(args.grid)
    if args.url:
        import httpx

        with httpx.Client(base_url=args.url, timeout=60.0) as client:
            summary = run_demo(args.name, client, grid)
    else:
        from fastapi.testclient import TestClient

        from .content import ContentStore
        from .service import Controller, create_app

        controller = Controller(grid, ContentStore(), dwell_ms=args.dwell_ms, instant=True)
        with TestClient(create_app(controller)) as client:
            summary = run_demo(args.name, client, grid)
    _emit(args, summary, "\n".join(f"{k}: {v}" for k, v in summary.items()))
    return EXIT_OK if summary.get("ok") else EXIT_VIOLATION


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coilboard",
        description="Coil-matrix tactile marker display tools",
    )
    parser.add_argument("--output", choices=("human", "json", "csv"), default="human")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the HTTP control service")
    p_serve.add_argument("--grid", help="grid description JSON (default: 16x16/150mm)")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8642)
    p_serve.add_argument("--dwell-ms", type=float, default=20.0)
    p_serve.add_argument("--backend", choices=("sim", "log"), default="sim")
    p_serve.add_argument("--speed", type=float, default=1.0,
                         help="simulated ms per wall ms")
    p_serve.add_argument("--store", help=f"content store path (or ${STORE_ENV_VAR})")
    p_serve.add_argument("--ui", help="directory with the built designer UI, served at /ui")
    p_serve.set_defaults(func=cmd_serve)

    p_plan = sub.add_parser("plan", help="shortest path between two coil ids")
    p_plan.add_argument("--grid")
    p_plan.add_argument("start", type=int)
    p_plan.add_argument("goal", type=int)
    p_plan.set_defaults(func=cmd_plan)

    p_sim = sub.add_parser("simulate", help="run a scenario headlessly")
    p_sim.add_argument("--grid")
    p_sim.add_argument("--scenario", help="scenario JSON path or demo:<name>")
    p_sim.add_argument("--plan", help="replay a plan dump JSON instead of a scenario")
    p_sim.add_argument("--dwell-ms", type=float, default=20.0)
    p_sim.add_argument("--trace", help="write the tick trace CSV here")
    p_sim.set_defaults(func=cmd_simulate)

    p_bom = sub.add_parser("bom", help="itemized parts cost estimate")
    p_bom.add_argument("rows", type=int)
    p_bom.add_argument("cols", type=int)
    p_bom.set_defaults(func=cmd_bom)

    p_demo = sub.add_parser("demo", help="run a bundled demo through the HTTP API")
    p_demo.add_argument("name", choices=DEMO_NAMES)
    p_demo.add_argument("--grid")
    p_demo.add_argument("--url", help="drive a running service instead of in-process")
    p_demo.add_argument("--dwell-ms", type=float, default=20.0)
    p_demo.set_defaults(func=cmd_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NotFoundError, CoilboardError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        if exc.errno in (errno.EADDRINUSE, errno.EACCES):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ENV
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
