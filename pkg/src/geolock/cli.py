"""Command-line entry point: ``geolock <subcommand>``.

Exit codes: 0 success, 2 configuration error, 3 wrong key / off-region,
4 timeout / incomplete transfer, 5 I/O error. Errors are printed to stderr as
``geolock: error[<category>]: <message>``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import analysis, netdemo, simchannel
from .codec import KEY_PACKETS
from .cryptocore import CipherPayload, decrypt, derive_key, encrypt
from .errors import ConfigurationError, GeolockError
from .geometry import Point3
from .scenario import Scenario
from .timebase import DEFAULT_CADENCE, describe_constants

EXIT_OK, EXIT_CONFIG, EXIT_WRONG_KEY, EXIT_INCOMPLETE, EXIT_IO = 0, 2, 3, 4, 5

_EXIT_BY_CATEGORY = {
    "config": EXIT_CONFIG,
    "range": EXIT_CONFIG,
    "resource": EXIT_CONFIG,
    "wrong_key": EXIT_WRONG_KEY,
    "off_region": EXIT_WRONG_KEY,
    "incomplete": EXIT_INCOMPLETE,
    "framing": EXIT_IO,
}


def _vector(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three numbers, got {text!r}") from None


def _axis(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return v, v, 1
        start, stop, num = parts
        return float(start), float(stop), int(num)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:count or a single value, got {text!r}") from None


def _load(path: str) -> Scenario:
    return Scenario.load(path).with_env_seed()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_info(args) -> int:
    for name, value in describe_constants(DEFAULT_CADENCE):
        print(f"{name:<24} {value}")
    return EXIT_OK


def cmd_keyschedule(args) -> int:
    scenario = _load(args.scenario)
    schedule = scenario.schedule(DEFAULT_CADENCE, args.current_time)
    if args.json:
        rows = [
            {"seq": e.seq, "anchor": e.anchor.id, "tx_ticks": e.tx_time,
             "arrival_ticks": e.arrival_time, "slot": e.slot}
            for e in schedule.entries
        ]
        print(json.dumps({"slot_width_ticks": schedule.slot_width, "entries": rows}, indent=2))
        return EXIT_OK
    print(f"# slot width {schedule.slot_width} ticks, {KEY_PACKETS} packets")
    print(f"{'seq':>3}  {'anchor':<10} {'tx_ticks':>16} {'arrival_ticks':>16} {'slot':>5}")
    for e in schedule.entries:
        slot = "-" if e.slot is None else str(e.slot)
        print(f"{e.seq:>3}  {e.anchor.id:<10} {e.tx_time:>16} {e.arrival_time:>16} {slot:>5}")
    return EXIT_OK


def cmd_encrypt(args) -> int:
    plain = Path(args.input).read_bytes()
    Path(args.output).write_bytes(encrypt(plain, derive_key(args.password)).to_bytes())
    return EXIT_OK


def cmd_decrypt(args) -> int:
    payload = CipherPayload.from_bytes(Path(args.input).read_bytes())
    Path(args.output).write_bytes(decrypt(payload, derive_key(args.password)))
    return EXIT_OK


def cmd_simulate(args) -> int:
    report = simchannel.run_scenario(_load(args.scenario))
    sys.stdout.write(report.to_text())
    if args.report:
        Path(args.report).write_text(report.to_json())
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return EXIT_OK if report.intended_ok else EXIT_WRONG_KEY


def cmd_sweep(args) -> int:
    grid = simchannel.GridSpec(args.x, args.y, args.z)
    rows = simchannel.spatial_sweep(_load(args.scenario), grid)
    if args.out in (None, "-"):
        simchannel.write_sweep_csv(rows, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            simchannel.write_sweep_csv(rows, fh)
        ok = sum(r.key_recovered for r in rows)
        print(f"{len(rows)} points, {ok} recover the key -> {args.out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    scenario = _load(args.scenario)
    directions = {",".join(f"{c:g}" for c in d): d for d in args.direction} if args.direction else None
    report = analysis.tolerance_report(scenario, directions)
    sys.stdout.write(report.to_text())
    if args.point is not None:
        print(f"\nper-gap deltas at {args.point}:")
        sys.stdout.write(analysis.format_reference_table(analysis.reference_delta(scenario, args.point)))
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return EXIT_OK


def cmd_serve(args) -> int:
    results = netdemo.serve(_load(args.scenario), args.listen, args.max_sessions)
    return EXIT_OK if all(r.error is None for r in results) else EXIT_IO


def cmd_client(args) -> int:
    slot_width = args.slot_width
    if slot_width is None and args.scenario:
        slot_width = _load(args.scenario).slot_width()
    result = netdemo.client(args.connect, Point3.of(args.position), args.out,
                            timeout=args.timeout_ms / 1000.0,
                            slot_width=slot_width or netdemo.DEFAULT_SLOT_WIDTH)
    print(f"received {len(result.frames)} frames; key recovered; "
          f"{len(result.plaintext)} bytes written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geolock", description="Location-bound key distribution over packet timing.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("info", help="print timebase constants").set_defaults(func=cmd_info)

    s = sub.add_parser("keyschedule", help="dump the 33-packet transmit schedule")
    s.add_argument("scenario")
    s.add_argument("--current-time", type=int, default=0, help="network time in ticks (default 0)")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_keyschedule)

    for name, func in (("encrypt", cmd_encrypt), ("decrypt", cmd_decrypt)):
        s = sub.add_parser(name, help=f"{name} a file with a password-derived AES-256 key")
        s.add_argument("--password", required=True)
        s.add_argument("input")
        s.add_argument("output")
        s.set_defaults(func=func)

    s = sub.add_parser("simulate", help="run a scenario through the simulated channel")
    s.add_argument("scenario")
    s.add_argument("--report", help="write the JSON report here")
    s.add_argument("--csv", help="write the per-receiver table here")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="grid sweep of key recovery, CSV output")
    s.add_argument("scenario")
    for axis in "xyz":
        s.add_argument(f"--{axis}", type=_axis, default=(0.0, 0.0, 1), metavar="START:STOP:N")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("analyze", help="tolerance and flip-distance report")
    s.add_argument("scenario")
    s.add_argument("--direction", type=_vector, action="append", metavar="X,Y,Z",
                   help="probe direction (repeatable; default +-x, +-y, +-z)")
    s.add_argument("--point", type=_vector, metavar="X,Y,Z", help="also print per-gap deltas at this point")
    s.add_argument("--csv", help="write flip distances here")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("serve", help="TCP demo server")
    s.add_argument("scenario")
    s.add_argument("--listen", default="127.0.0.1:9933", metavar="HOST:PORT")
    s.add_argument("--max-sessions", type=int, default=None)
    s.set_defaults(func=cmd_serve)

    s = sub.add_parser("client", help="TCP demo client")
    s.add_argument("--connect", required=True, metavar="HOST:PORT")
    s.add_argument("--position", type=_vector, required=True, metavar="X,Y,Z")
    s.add_argument("--out", required=True)
    s.add_argument("--timeout-ms", type=int, default=2000)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--slot-width", type=int, help="slot width in ticks (default: 2 m region)")
    g.add_argument("--scenario", help="take the slot width from this scenario file")
    s.set_defaults(func=cmd_client)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print("geolock: error[config]: invalid configuration", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_CONFIG
    except GeolockError as exc:
        print(f"geolock: error[{exc.category}]: {exc}", file=sys.stderr)
        return _EXIT_BY_CATEGORY.get(exc.category, EXIT_IO)
    except OSError as exc:
        print(f"geolock: error[io]: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
