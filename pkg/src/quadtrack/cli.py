"""Command-line entry point: `quadtrack <subcommand> ...`.

Exit codes: 0 success (including a mission that ended on a battery or link
abort), 1 invalid input, 2 runtime failure, 3 file I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import config as cfgio
from . import env, mission, perf, sensors
from .airframe import VehicleState
from .errors import QuadtrackError, ReportIOError, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3

TABLE_AIRSPEEDS = (0, 10, 20, 30, 40, 50)


class _Parser(argparse.ArgumentParser):
    # Usage errors are input errors; keep exit code 2 for runtime failures.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# --- subcommands ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    scenario = mission.load_scenario(args.scenario)
    report = mission.run_mission(scenario)
    mission.write_report(report, args.out)
    for key, value in report.summary().items():
        print(f"{key:28s} {value}")
    return EXIT_OK


def cmd_perf(args) -> int:
    vehicle, battery = cfgio.load_vehicle_config(args.config)
    tilt = None if args.tilt_limit is None else math.radians(args.tilt_limit)
    cfg = perf.PerfConfig(vehicle, battery, payload_attached=args.payload, tilt_limit=tilt)
    rows = perf.endurance_range_table(cfg, args.airspeeds)
    hm = perf.hover_metrics(cfg)
    if args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(("airspeed_kmh", "endurance_s", "range_m"))
        for r in rows:
            w.writerow((repr(r.airspeed), repr(r.endurance), repr(r.range)))
    else:
        label = "with payload" if args.payload else "base platform"
        print(f"Endurance and range ({label})")
        print(f"{'airspeed km/h':>14} {'endurance s':>12} {'range m':>10}")
        for r in rows:
            if r.feasible:
                print(f"{r.airspeed:14.1f} {r.endurance:12.1f} {r.range:10.1f}")
            else:
                print(f"{r.airspeed:14.1f} {'infeasible':>12} {'-':>10}")
        print()
        print("Hover metrics")
        items = [("hover flight time", f"{hm.hover_time / 60:.2f} min ({hm.hover_time:.1f} s)"),
                 ("thrust-weight ratio", f"{hm.thrust_weight_ratio:.2f}"),
                 ("specific thrust", f"{hm.specific_thrust:.2f} g/W"),
                 ("per-motor current", f"{hm.per_motor_current:.2f} A"),
                 ("hover throttle", f"{hm.hover_throttle:.1%}"),
                 ("total hover power", f"{hm.total_hover_power:.1f} W"),
                 ("maximum speed", f"{hm.max_speed:.2f} m/s"),
                 ("maximum climb rate", f"{hm.max_climb_rate:.2f} m/s")]
        for name, value in items:
            print(f"  {name:22s} {value}")
    return EXIT_OK


def _load_link(name: str) -> env.LinkModel:
    links = env.default_links()
    if name in links:
        return links[name]
    path = Path(name)
    if not path.exists():
        raise ValidationError(f"unknown link {name!r}; built-ins are {sorted(links)} or give a file")
    doc = cfgio.load_toml(path)
    table = doc.get("link", doc)
    try:
        return env.LinkModel(**table)
    except TypeError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def cmd_link(args) -> int:
    link = _load_link(args.model)
    if not (args.step > 0 and args.max_distance >= 0):
        raise ValidationError("need --step > 0 and --max-distance >= 0")
    n = int(math.floor(args.max_distance / args.step + 1e-9))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("distance_m", "rssi_dbm", "state"))
    for i in range(n + 1):
        d = i * args.step
        r = env.rssi_at(link, d)
        w.writerow((f"{d:g}", f"{r:.3f}", env.link_state(link, r).value))
    return EXIT_OK


def cmd_coverage(args) -> int:
    if args.scenario:
        cameras = list(mission.load_scenario(args.scenario).cameras)
    else:
        cameras = sensors.default_camera_suite()
    result = sensors.coverage_map(VehicleState(), cameras, grid=args.grid)
    print(f"coverage_fraction {result.fraction:.6f}")
    print(f"blind_directions {len(result.blind_directions)} of {args.grid}")
    spots = result.blind_spots_deg()
    if len(spots):
        print("azimuth_deg,elevation_deg")
        for az, el in spots:
            print(f"{az:.2f},{el:.2f}")
    return EXIT_OK


def cmd_acoustics(args) -> int:
    model = env.AcousticModel(rpm=args.rpm, blades_per_rotor=args.blades,
                              harmonics=args.harmonics, source_spl=args.source_spl)
    print("frequency_hz,relative_level_db")
    for f, level in env.tone_set(model):
        print(f"{f:.3f},{level:.3f}")
    print()
    print("distance_m,spl_db")
    for d in args.distances:
        print(f"{d:g},{env.spl_at(model, d):.3f}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    rows, anchors, _ = perf.load_fixtures(args.fixtures)
    result = perf.calibrate(rows, anchors)
    try:
        cfgio.write_vehicle_config(args.out, result.vehicle, result.battery,
                                   note=f"fitted to {Path(args.fixtures).name}")
    except OSError as exc:
        raise ReportIOError(f"{args.out}: {exc.strerror or exc}") from exc
    v, b = result.vehicle, result.battery
    print(json.dumps({
        "drag_area": v.drag_area,
        "profile_power_coeff": v.profile_power_coeff,
        "figure_of_merit": v.figure_of_merit,
        "usable_fraction": b.usable_fraction,
        "internal_resistance": b.internal_resistance,
        "max_thrust_per_motor": v.max_thrust_per_motor,
        "thrust_expo": v.thrust_expo,
        "rms_relative_error": result.rms,
        "worst_row": {"payload": result.worst_row.payload_attached,
                      "airspeed_kmh": result.worst_row.airspeed,
                      "relative_error": result.worst_error},
    }, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quadtrack", description="Tracking-quadrotor simulation and performance tools.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a mission scenario and write report files")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("perf", help="endurance/range table and hover metrics")
    s.add_argument("--config", default=None, help="vehicle config (default: shipped calibration)")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--payload", dest="payload", action="store_true", default=True)
    g.add_argument("--no-payload", dest="payload", action="store_false")
    s.add_argument("--airspeeds", type=_floats, default=list(TABLE_AIRSPEEDS), help="km/h, comma separated")
    s.add_argument("--tilt-limit", type=float, default=None, help="cap the lean angle (deg) for max speed")
    s.add_argument("--format", choices=("text", "csv"), default="text")
    s.set_defaults(func=cmd_perf)

    s = sub.add_parser("link", help="RSSI sweep over distance")
    s.add_argument("--model", required=True, help="built-in link name or a TOML file")
    s.add_argument("--max-distance", type=float, required=True)
    s.add_argument("--step", type=float, required=True)
    s.set_defaults(func=cmd_link)

    s = sub.add_parser("coverage", help="camera-suite coverage fraction and blind spots")
    s.add_argument("--scenario", default=None, help="take cameras from a scenario (default suite otherwise)")
    s.add_argument("--grid", type=int, default=10000)
    s.set_defaults(func=cmd_coverage)

    s = sub.add_parser("acoustics", help="rotor tone table and SPL vs distance")
    s.add_argument("--rpm", type=float, required=True)
    s.add_argument("--blades", type=int, default=2)
    s.add_argument("--harmonics", type=int, default=3)
    s.add_argument("--source-spl", type=float, default=80.0)
    s.add_argument("--distances", type=_floats, required=True, help="metres, comma separated")
    s.set_defaults(func=cmd_acoustics)

    s = sub.add_parser("calibrate", help="fit power-model coefficients to published tables")
    s.add_argument("--fixtures", default=str(cfgio.data_path("published_performance.toml")))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_VALIDATION
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ReportIOError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (QuadtrackError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
