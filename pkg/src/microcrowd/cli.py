"""Command-line entry points.

    microcrowd serve --config service.json
    microcrowd sim run <shipped-name-or-file> [--seed N] [--out DIR]
    microcrowd sim compare <logA> <logB>
    microcrowd bundle verify <file>

`sim run` exits 0 only when the run reaches Completed; `sim compare` exits 0
only when the logs are byte-identical; any operational error exits 2.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .api import make_server
from .bundle import verify_bundle
from .errors import ServiceError
from .scenarios import SHIPPED_NAMES, InvalidScenario, parse_scenario, shipped_scenario
from .service import Orchestrator, ServiceConfig
from .sim import SimError, compare_runs, run_scenario
from .values import MalformedValue, canonicalize, parse_value


def _read_doc(path: str):
    return parse_value(Path(path).read_bytes())


def _write_doc(path: Path, doc) -> None:
    path.write_bytes(canonicalize(doc) + b"\n")


def _cmd_serve(args) -> int:
    config = ServiceConfig.from_value(_read_doc(args.config))
    orch = Orchestrator(config)
    server = make_server(orch)
    host, port = server.server_address[0], server.server_address[1]
    print(f"listening on {host}:{port}", flush=True)
    print(f"event log at {config.log_path}", flush=True)
    try:
        server.serve_forever(poll_interval=0.1)
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
    return 0


def _cmd_sim_run(args) -> int:
    if args.scenario in SHIPPED_NAMES:
        doc = shipped_scenario(args.scenario)
    else:
        doc = _read_doc(args.scenario)
    scenario = parse_scenario(doc)
    seed = scenario.seed if args.seed is None else args.seed

    out = Path(args.out) if args.out else Path(f"{scenario.name}-seed{seed}")
    out.mkdir(parents=True, exist_ok=True)
    report = run_scenario(scenario, seed=seed, log_path=out / "events.log")

    _write_doc(out / "report.json", report.to_value())
    if report.bundle is not None:
        _write_doc(out / "bundle.json", report.bundle)

    print(f"scenario {scenario.name} seed {seed}")
    print(f"outcome {report.outcome}")
    print(f"microtasks {report.total_microtasks} steps {report.wall_steps}")
    print(f"wrote {out / 'report.json'}")
    if report.bundle is not None:
        print(f"wrote {out / 'bundle.json'}")
    return 0 if report.outcome == "Completed" else 1


def _cmd_sim_compare(args) -> int:
    verdict = compare_runs(args.log_a, args.log_b)
    print(canonicalize(verdict).decode("utf-8"))
    return 0 if verdict["identical"] else 1


def _cmd_bundle_verify(args) -> int:
    try:
        digest = verify_bundle(_read_doc(args.file))
    except ServiceError as exc:
        if exc.code != "HashMismatch":
            raise
        print(f"hash mismatch: {exc.message}", file=sys.stderr)
        return 1
    print(f"verified {digest}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="microcrowd")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the orchestration service")
    serve.add_argument("--config", required=True, help="path to a canonical-JSON config file")
    serve.set_defaults(run=_cmd_serve)

    sim = sub.add_parser("sim", help="simulated crowd")
    sim_sub = sim.add_subparsers(dest="sim_command", required=True)

    sim_run = sim_sub.add_parser("run", help="drive a scenario against a fresh service")
    sim_run.add_argument("scenario", help=f"shipped name ({', '.join(SHIPPED_NAMES)}) or a scenario file")
    sim_run.add_argument("--seed", type=int, default=None)
    sim_run.add_argument("--out", default=None, help="output directory (default ./<name>-seed<N>)")
    sim_run.set_defaults(run=_cmd_sim_run)

    sim_compare = sim_sub.add_parser("compare", help="bytewise event-log comparison")
    sim_compare.add_argument("log_a")
    sim_compare.add_argument("log_b")
    sim_compare.set_defaults(run=_cmd_sim_compare)

    bundle = sub.add_parser("bundle", help="bundle utilities")
    bundle_sub = bundle.add_subparsers(dest="bundle_command", required=True)
    bundle_verify = bundle_sub.add_parser("verify", help="recompute and check the content hash")
    bundle_verify.add_argument("file")
    bundle_verify.set_defaults(run=_cmd_bundle_verify)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (ServiceError, InvalidScenario, SimError, MalformedValue) as exc:
        message = getattr(exc, "message", None) or str(exc)
        print(f"error: {message}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
