"""Command line entry points.

Four subcommands cover the headless workflows: `run-mono` executes a
full simulation in one process and writes the flow and objective
tables, `serve-coordinator` and `run-federate` run the distributed
path over TCP, and `validate` checks a scenario document without
running anything.

Exit codes: 0 success, 1 runtime failure, 2 usage or input error.
The SIPG_LOG environment variable (debug/info/warning/error) controls
log verbosity; results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import signal
import socket
import sys
import threading
from pathlib import Path

from sipg import fom
from sipg.engine import NO_OVERRIDES, run_simulation
from sipg.federation.coordinator import VARIANTS, FederationCoordinator
from sipg.federation.exchange import (ExchangeError, boundary_overrides,
                                      read_flows, write_flows)
from sipg.federation.federate import FederationError, SectorFederate
from sipg.scenario import (ScenarioError, build_scenario, default_document,
                           parse_plan, validate_document)

log = logging.getLogger("sipg")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class _InputError(Exception):
    """Bad file, bad document, bad flag combination: exit code 2."""


def _setup_logging() -> None:
    name = os.environ.get("SIPG_LOG", "warning").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise _InputError(f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise _InputError(f"{path}: invalid JSON: {exc}")


def _load_document(path):
    document = _load_json(path) if path else default_document()
    findings = validate_document(document)
    if findings:
        label = path or "default scenario"
        raise _InputError("\n".join([f"{label}: {f}" for f in findings]))
    return document


def _load_plan(path, scenario):
    if not path:
        return ()
    try:
        return parse_plan(_load_json(path), scenario)
    except ScenarioError as exc:
        raise _InputError(f"{path}: {exc}")


def _out_dir(args) -> Path:
    path = Path(args.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


# --- table writers -----------------------------------------------------------

LEDGER_COLUMNS = ("year", "iteration", "objectName", "series", "value",
                  "units")

OBJECTIVE_COLUMNS = (
    "year", "foodSecurity", "aquiferSecurity", "reservoirSecurity",
    "financialSecurityAgriculture", "financialSecurityWater",
    "financialSecurityEnergy", "financialSecurityJoint",
    "politicalPowerAgriculture", "politicalPowerWater",
    "politicalPowerEnergy", "jointObjective", "budgetViolationYears",
)


def write_ledger_csv(path, ledger) -> None:
    """Every recorded series value; floats via repr so rows round-trip."""
    rows = sorted(ledger.to_rows())
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(LEDGER_COLUMNS)
        for year, iteration, node, series, value in rows:
            writer.writerow((year, iteration, node, series,
                             repr(float(value)), fom.key_units(series)))


def write_objectives_csv(path, reports) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(OBJECTIVE_COLUMNS)
        for r in reports:
            writer.writerow((
                r.year, repr(r.food_security), repr(r.aquifer_security),
                repr(r.reservoir_security),
                repr(r.financial_security["agriculture"]),
                repr(r.financial_security["water"]),
                repr(r.financial_security["energy"]),
                repr(r.financial_security["joint"]),
                repr(r.political_power["agriculture"]),
                repr(r.political_power["water"]),
                repr(r.political_power["energy"]),
                repr(r.joint_objective),
                ";".join(str(y) for y in r.budget_violations)))


# --- run-mono ----------------------------------------------------------------


def _cmd_run_mono(args) -> int:
    if args.role and args.variant != "2":
        raise _InputError("--role on run-mono requires --variant 2 "
                          "(decoupled local execution)")
    if args.role and args.role not in fom.SECTOR_ROLES:
        raise _InputError(f"unknown sector role {args.role!r}")
    document = _load_document(args.scenario)
    scenario = build_scenario(document)
    plan = _load_plan(args.plan, scenario)
    out_dir = _out_dir(args)

    overrides = NO_OVERRIDES
    if args.role:
        documents = []
        for other in fom.SECTOR_ROLES:
            exchange = out_dir / f"exchange-{other}.csv"
            if other != args.role and exchange.exists():
                try:
                    documents.append(read_flows(exchange))
                except ExchangeError as exc:
                    raise _InputError(f"{exchange}: {exc}")
                log.info("imported counterpart flows from %s", exchange)
        if documents:
            try:
                overrides = boundary_overrides(documents, scenario)
            except ExchangeError as exc:
                raise _InputError(str(exc))

    result = run_simulation(scenario, plan, overrides)
    write_ledger_csv(out_dir / "flows.csv", result.ledger)
    write_objectives_csv(out_dir / "objectives.csv", result.reports)
    if args.role:
        write_flows(out_dir / f"exchange-{args.role}.csv", result.ledger,
                    scenario, args.role)
    log.info("simulation complete; outputs in %s", out_dir)
    print(f"joint objective at {scenario.horizon.end}: "
          f"{result.final_report.joint_objective!r}")
    return EXIT_OK


# --- validate ----------------------------------------------------------------


def _cmd_validate(args) -> int:
    document = _load_json(args.scenario) if args.scenario \
        else default_document()
    findings = validate_document(document)
    for finding in findings:
        print(finding)
    if findings:
        print(f"{len(findings)} finding(s)")
        return EXIT_RUNTIME
    print("clean")
    return EXIT_OK


# --- distributed path --------------------------------------------------------


def _cmd_serve_coordinator(args) -> int:
    document = _load_document(args.scenario)
    try:
        listener = socket.create_server(("", args.port))
    except OSError as exc:
        raise _InputError(f"cannot listen on port {args.port}: {exc}")
    listener.setblocking(False)
    out_dir = _out_dir(args) if args.out_dir else None

    stop = threading.Event()

    def request_stop(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, request_stop)
    signal.signal(signal.SIGTERM, request_stop)

    def on_event(event: dict) -> None:
        log.info("coordinator: %s", event)
        if event.get("event") == "run_completed" and out_dir is not None:
            write_ledger_csv(out_dir / "coordinator.csv",
                             coordinator.completed_ledgers[-1])

    coordinator = FederationCoordinator(document, variant=args.variant,
                                        on_event=on_event)
    port = listener.getsockname()[1]
    print(f"coordinator listening on port {port}", flush=True)
    try:
        while not stop.is_set():
            try:
                conn, _ = listener.accept()
            except BlockingIOError:
                pass
            else:
                coordinator.attach(conn)
            coordinator.poll(0.05)
    finally:
        listener.close()
        coordinator.close()
    log.info("coordinator stopped after %d completed runs",
             coordinator.exchanges)
    return EXIT_OK


def _cmd_run_federate(args) -> int:
    if args.role not in fom.SECTOR_ROLES:
        raise _InputError(f"unknown sector role {args.role!r}; choose one of "
                          f"{', '.join(fom.SECTOR_ROLES)}")
    plan_doc = _load_json(args.plan) if args.plan else None
    try:
        sock = socket.create_connection((args.address, args.port), timeout=60)
    except OSError as exc:
        print(f"cannot reach coordinator at {args.address}:{args.port}: "
              f"{exc}", file=sys.stderr)
        return EXIT_RUNTIME
    sock.settimeout(None)
    federate = SectorFederate(sock, args.role, f"{args.role}-cli")
    try:
        scenario = federate.join()
        log.info("%s joined federation", federate.federate_id)
        if plan_doc is not None:
            try:
                federate.plan = list(parse_plan(plan_doc, scenario))
            except ScenarioError as exc:
                federate.resign()
                raise _InputError(f"{args.plan}: {exc}")
        ledger = federate.participate_once()
        federate.resign()
    except FederationError as exc:
        print(f"federation error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        try:
            federate.resign()
        except OSError:
            pass
        log.info("%s resigned on interrupt", args.role)
        return EXIT_OK
    if args.out_dir:
        write_ledger_csv(_out_dir(args) / f"slice-{args.role}.csv", ledger)
    print(f"{args.role} federate completed one execution")
    return EXIT_OK


# --- argument wiring ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sipg",
        description="Multi-sector infrastructure planning simulations: "
                    "monolithic runs, a TCP federation, and scenario checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    mono = sub.add_parser("run-mono",
                          help="run one full simulation in this process")
    mono.add_argument("--scenario", help="scenario JSON (default: built-in)")
    mono.add_argument("--plan", help="infrastructure plan JSON")
    mono.add_argument("--out-dir", default="sipg-out",
                      help="directory for flows.csv and objectives.csv")
    mono.add_argument("--variant", choices=VARIANTS, default="1A")
    mono.add_argument("--role", help="decoupled mode: run as this sector "
                                     "role, exchanging flow files in "
                                     "--out-dir")
    mono.add_argument("--seed", type=int, default=None,
                      help="reserved; the model is deterministic")
    mono.set_defaults(func=_cmd_run_mono)

    validate = sub.add_parser("validate",
                              help="check a scenario document and list "
                                   "every violation")
    validate.add_argument("--scenario", help="scenario JSON "
                                             "(default: built-in)")
    validate.set_defaults(func=_cmd_validate)

    serve = sub.add_parser("serve-coordinator",
                           help="run the time-management coordinator on "
                                "a TCP port")
    serve.add_argument("--scenario", help="scenario JSON (default: built-in)")
    serve.add_argument("--port", type=int, default=7440)
    serve.add_argument("--variant", choices=VARIANTS, default="1A")
    serve.add_argument("--out-dir",
                       help="write coordinator.csv after each completed run")
    serve.set_defaults(func=_cmd_serve_coordinator)

    federate = sub.add_parser("run-federate",
                              help="join a coordinator as one sector role "
                                   "and execute once")
    federate.add_argument("--role", required=True)
    federate.add_argument("--address", default="127.0.0.1")
    federate.add_argument("--port", type=int, default=7440)
    federate.add_argument("--plan", help="this role's plan JSON")
    federate.add_argument("--out-dir",
                          help="write this role's ledger slice CSV")
    federate.set_defaults(func=_cmd_run_federate)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (FederationError, ExchangeError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
