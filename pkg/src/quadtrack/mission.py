"""Scenario loading, the closed-loop tracking simulation, and report files."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import config as cfgio
from .airframe import (BatteryState, GimbalState, VehicleParams, VehicleState,
                       electrical_power, step_battery, step_gimbal, step_vehicle)
from .env import AcousticModel, LinkModel, LinkState, default_links, link_state, rssi_at, spl_at
from .errors import ReportIOError, ValidationError
from .geo import EnuVector, GeoPoint, enu_to_geo, geo_to_enu
from .sensors import CameraModel, VisibilityRecord, default_camera_suite, target_in_fov
from .track import TrackLog, TrackReport, gimbal_pointing, track_metrics, track_step, waypoint_enu

REPORT_SCHEMA_VERSION = 1
TRACE_HEADER = ("time_s", "lat_deg", "lon_deg")
TERMINATIONS = ("trace_end", "battery_cutoff", "link_lost")

Trace = list  # list[tuple[float, GeoPoint]]


# --- target traces ----------------------------------------------------------

def load_target_trace(source) -> Trace:
    """Parse a `time_s,lat_deg,lon_deg[,alt_m]` CSV stream into a strictly timed trace."""
    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ValidationError("trace is empty") from None
    if tuple(header[:3]) != TRACE_HEADER or header[3:] not in ([], ["alt_m"]):
        raise ValidationError(f"line 1: expected header time_s,lat_deg,lon_deg[,alt_m], got {header}")
    ncol = len(header)
    trace = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != ncol:
            raise ValidationError(f"line {lineno}: expected {ncol} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        try:
            p = GeoPoint(vals[1], vals[2], vals[3] if ncol == 4 else 0.0)
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        if not math.isfinite(vals[0]):
            raise ValidationError(f"line {lineno}: non-finite time")
        if trace and vals[0] <= trace[-1][0]:
            raise ValidationError(
                f"line {lineno}: time {vals[0]} does not increase past {trace[-1][0]}")
        trace.append((vals[0], p))
    if not trace:
        raise ValidationError("trace has no data rows")
    return trace


def write_target_trace(trace: Trace, fh):
    fh.write("time_s,lat_deg,lon_deg,alt_m\n")
    for t, p in trace:
        fh.write(f"{t!r},{p.latitude!r},{p.longitude!r},{p.altitude!r}\n")


def _line(a: np.ndarray, b: np.ndarray, spacing: float):
    n = max(int(np.linalg.norm(b - a) / spacing), 1)
    return [a + (b - a) * s for s in np.linspace(0.0, 1.0, n + 1)[1:]]


def _fillet_path(corners: np.ndarray, radius: float, spacing: float = 0.5):
    """Dense polyline through `corners` with circular fillets; returns points and curvature."""
    pts, curv = [corners[0]], [0.0]
    for i in range(1, len(corners) - 1):
        a, b, c = corners[i - 1], corners[i], corners[i + 1]
        u = (b - a) / np.linalg.norm(b - a)
        w = (c - b) / np.linalg.norm(c - b)
        turn = math.atan2(u[0] * w[1] - u[1] * w[0], float(u @ w))
        p_in = b - u * radius * math.tan(abs(turn) / 2.0)
        seg = _line(pts[-1], p_in, spacing)
        pts += seg
        curv += [0.0] * len(seg)
        if turn == 0.0:
            continue
        normal = np.array([-u[1], u[0]]) * math.copysign(1.0, turn)
        centre = p_in + normal * radius
        start = math.atan2(p_in[1] - centre[1], p_in[0] - centre[0])
        m = max(int(abs(turn) * radius / spacing), 2)
        for ang in start + np.linspace(0.0, turn, m + 1)[1:]:
            pts.append(centre + radius * np.array([math.cos(ang), math.sin(ang)]))
            curv.append(1.0 / radius)
    seg = _line(pts[-1], corners[-1], spacing)
    return np.array(pts + seg), np.array(curv + [0.0] * len(seg))


def synthesize_demo_trace(origin: GeoPoint, rate_hz: float = 1.0) -> Trace:
    """Synthetic car route used by the demo: a lot loop, a road, a second lot loop.

    Speeds are capped by a lateral-acceleration limit in turns and by
    longitudinal acceleration limits; the car starts and ends at rest.
    """
    # Loop around a lot north-east of the origin, a road west, a second loop.
    loop1 = [(30, 20), (150, 20), (150, 115), (30, 115), (30, 30)]
    road = [(30, -10), (-80, -20), (-160, -20)]
    loop2 = [(-160, -130), (-70, -130), (-70, -50), (-175, -50), (-175, -140)]
    corners = np.array([(30, 60)] + loop1 + road + loop2, dtype=float)
    pts, curv = _fillet_path(corners, radius=10.0)
    ds = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    on_road = (pts[:, 1] < 0) & (pts[:, 1] > -30) & (pts[:, 0] > -150) & (pts[:, 0] < 20)
    cruise = np.where(on_road, 6.0, 3.2)  # slow in the lots, faster on the road
    v = np.minimum(cruise, np.sqrt(2.0 / np.maximum(curv, 1e-9)))
    v[0] = v[-1] = 0.0
    accel, decel = 1.0, 1.5
    for i in range(1, len(v)):
        v[i] = min(v[i], math.sqrt(v[i - 1] ** 2 + 2 * accel * ds[i - 1]))
    for i in range(len(v) - 2, -1, -1):
        v[i] = min(v[i], math.sqrt(v[i + 1] ** 2 + 2 * decel * ds[i]))
    vm = 0.5 * (v[1:] + v[:-1])
    t = np.concatenate([[0.0], np.cumsum(ds / np.maximum(vm, 1e-3))])
    ts = np.arange(0.0, math.floor(t[-1] * rate_hz) + 1) / rate_hz
    east = np.interp(ts, t, pts[:, 0])
    north = np.interp(ts, t, pts[:, 1])
    out = []
    for ti, e, n in zip(ts, east, north):
        p = enu_to_geo(origin, EnuVector(float(e), float(n), 0.0))
        out.append((float(ti), GeoPoint(round(p.latitude, 9), round(p.longitude, 9), 0.0)))
    return out


# --- scenario ---------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    origin: GeoPoint
    target_trace: Trace
    standoff_altitude: float = 55.0
    vehicle: VehicleParams = field(default_factory=cfgio.default_vehicle)
    battery: BatteryState = field(default_factory=cfgio.default_battery)
    gimbal: GimbalState = field(default_factory=GimbalState)
    cameras: tuple = field(default_factory=lambda: tuple(default_camera_suite()))
    tracking_camera: str = "gimbal"
    links: tuple = field(default_factory=lambda: tuple(default_links().values()))
    acoustic: AcousticModel = field(default_factory=AcousticModel)
    ground_listeners: tuple = ()
    sim_dt: float = 0.1
    target_update_period: float = 1.0
    target_latency: float = 0.2
    initial_heading: float = 0.0
    abort_on_battery_cutoff: bool = True
    abort_on_link_lost: str | None = None

    def problems(self) -> list[str]:
        out = []
        if not 0.0 < self.sim_dt <= 0.5:
            out.append(f"sim_dt {self.sim_dt} outside (0, 0.5]")
        if not self.standoff_altitude > 0:
            out.append("standoff_altitude must be > 0")
        if not self.target_update_period > 0:
            out.append("target_update_period must be > 0")
        if self.target_latency < 0:
            out.append("target_latency must be >= 0")
        if len(self.target_trace) < 2:
            out.append("target trace needs at least two samples")
        else:
            times = [t for t, _ in self.target_trace]
            if any(b <= a for a, b in zip(times, times[1:])):
                out.append("target trace times must strictly increase")
            elif times[-1] - times[0] < self.sim_dt:
                out.append("target trace shorter than one sim step")
        names = [c.name for c in self.cameras]
        if len(set(names)) != len(names):
            out.append("camera names must be unique")
        if self.tracking_camera not in names:
            out.append(f"tracking camera {self.tracking_camera!r} not in camera list")
        link_names = [lk.name for lk in self.links]
        if len(set(link_names)) != len(link_names):
            out.append("link names must be unique")
        if self.abort_on_link_lost is not None and self.abort_on_link_lost not in link_names:
            out.append(f"abort link {self.abort_on_link_lost!r} not in link list")
        if abs(self.origin.latitude) > 89.9:
            out.append("origin too close to a pole")
        return out

    def validate(self):
        problems = self.problems()
        if problems:
            raise ValidationError("invalid scenario: " + "; ".join(problems))


def _listener(d: dict) -> EnuVector:
    return EnuVector(float(d.get("east", 0.0)), float(d.get("north", 0.0)), float(d.get("up", 0.0)))


def _camera(d: dict) -> CameraModel:
    d = dict(d)
    kw = {"name": d.pop("name")}
    for key in ("hfov", "vfov", "yaw", "pitch"):
        if key + "_deg" in d:
            kw[key] = math.radians(d.pop(key + "_deg"))
    if "gimbal_driven" in d:
        kw["gimbal_driven"] = bool(d.pop("gimbal_driven"))
    if "offset" in d:
        kw["offset"] = tuple(float(x) for x in d.pop("offset"))
    if d:
        raise ValidationError(f"[[cameras]] {kw['name']}: unknown keys {sorted(d)}")
    return CameraModel(**kw)


def scenario_from_dict(doc: dict, base_dir: Path | None = None, trace: Trace | None = None) -> Scenario:
    sc = doc.get("scenario", {})
    try:
        o = sc["origin"]
        origin = GeoPoint(float(o["latitude"]), float(o["longitude"]), float(o.get("altitude", 0.0)))
    except KeyError as exc:
        raise ValidationError(f"[scenario] missing {exc}") from None
    if trace is None:
        if "trace" not in sc:
            raise ValidationError("[scenario] needs a trace path")
        tpath = Path(sc["trace"])
        if not tpath.is_absolute() and base_dir is not None:
            tpath = base_dir / tpath
        try:
            with open(tpath, newline="") as fh:
                trace = load_target_trace(fh)
        except OSError as exc:
            raise ReportIOError(f"{tpath}: {exc.strerror or exc}") from exc
    vehicle, battery = cfgio.load_vehicle_config()
    vehicle = cfgio.vehicle_from_dict(doc.get("vehicle", {}), vehicle)
    battery = cfgio.battery_from_dict(doc.get("battery", {}), battery)
    gimbal = cfgio.gimbal_from_dict(doc.get("gimbal", {}), GimbalState())
    kw = {}
    if "cameras" in doc:
        kw["cameras"] = tuple(_camera(c) for c in doc["cameras"])
    if "links" in doc:
        kw["links"] = tuple(LinkModel(**lk) for lk in doc["links"])
    if "acoustic" in doc:
        kw["acoustic"] = AcousticModel(**doc["acoustic"])
    if "listeners" in doc:
        kw["ground_listeners"] = tuple(_listener(d) for d in doc["listeners"])
    for key in ("standoff_altitude", "sim_dt", "target_update_period", "target_latency"):
        if key in sc:
            kw[key] = float(sc[key])
    if "tracking_camera" in sc:
        kw["tracking_camera"] = sc["tracking_camera"]
    if "initial_heading_deg" in sc:
        kw["initial_heading"] = math.radians(sc["initial_heading_deg"])
    ab = doc.get("abort", {})
    if "on_battery_cutoff" in ab:
        kw["abort_on_battery_cutoff"] = bool(ab["on_battery_cutoff"])
    if ab.get("on_link_lost"):
        kw["abort_on_link_lost"] = ab["on_link_lost"]
    try:
        scenario = Scenario(origin=origin, target_trace=trace, vehicle=vehicle, battery=battery,
                            gimbal=gimbal, **kw)
    except TypeError as exc:
        raise ValidationError(str(exc)) from None
    scenario.validate()
    return scenario


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = cfgio.load_toml(path)
    except OSError as exc:
        raise ReportIOError(f"{path}: {exc.strerror or exc}") from exc
    return scenario_from_dict(doc, base_dir=path.parent)


def demo_scenario() -> Scenario:
    """Bundled reproduction of the rooftop car-tracking flight (synthetic trace)."""
    return load_scenario(cfgio.data_path("demo_scenario.toml"))


# --- simulation -------------------------------------------------------------

@dataclass
class MissionReport:
    time: np.ndarray
    duration: float
    termination: str
    track: TrackReport
    battery_trace: dict
    power_trace: np.ndarray
    rssi_traces: dict
    link_states: dict
    distance_trace: np.ndarray
    visibility_log: list
    spl_traces: dict
    trajectory: dict
    sim_dt: float
    energy_out: float

    def summary(self) -> dict:
        v = self.battery_trace["voltage"]
        return {
            "duration_s": self.duration,
            "termination": self.termination,
            "samples": int(self.time.size),
            "sim_dt_s": self.sim_dt,
            "max_horizontal_distance_m": self.track.max_horizontal_distance,
            "mean_horizontal_distance_m": self.track.mean_horizontal_distance,
            "in_frame_fraction": self.track.in_frame_fraction,
            "target_update_period_s": self.track.target_update_period,
            "final_state_of_charge": float(self.battery_trace["soc"][-1]),
            "final_voltage_v": float(v[-1]),
            "min_voltage_v": float(v.min()),
            "energy_used_j": self.energy_out,
            "max_rssi_distance_m": float(self.trajectory["ground_range"].max()),
        }


class _HeldTarget:
    """Zero-order hold of a trace sampled every `period` and delivered after `latency`."""

    def __init__(self, trace: Trace, period: float, latency: float):
        self.t = np.array([t for t, _ in trace])
        self.lat = np.array([p.latitude for _, p in trace])
        self.lon = np.array([p.longitude for _, p in trace])
        self.alt = np.array([p.altitude for _, p in trace])
        self.period, self.latency = period, latency

    def truth(self, t: float) -> GeoPoint:
        return GeoPoint(float(np.interp(t, self.t, self.lat)), float(np.interp(t, self.t, self.lon)),
                        float(np.interp(t, self.t, self.alt)))

    def held(self, t: float) -> GeoPoint:
        k = math.floor((t - self.t[0] - self.latency) / self.period + 1e-9)
        return self.truth(self.t[0] + max(k, 0) * self.period)


def run_mission(scenario: Scenario) -> MissionReport:
    scenario.validate()
    sc = scenario
    dt = sc.sim_dt
    target = _HeldTarget(sc.target_trace, sc.target_update_period, sc.target_latency)
    t0 = float(target.t[0])
    n_steps = int(math.floor((target.t[-1] - t0) / dt + 1e-9))
    cam = next(c for c in sc.cameras if c.name == sc.tracking_camera)
    veh_p = sc.vehicle
    ground_station = np.zeros(3)
    listeners = [lst.as_array() for lst in sc.ground_listeners]

    start = geo_to_enu(sc.origin, target.truth(t0))
    vehicle = VehicleState(EnuVector(start.east, start.north, sc.standoff_altitude - sc.origin.altitude),
                           EnuVector(0.0, 0.0, 0.0), sc.initial_heading % (2 * math.pi))
    pan0, tilt0 = gimbal_pointing(vehicle, vehicle.heading, start)
    gimbal = step_gimbal(replace(sc.gimbal, pan=0.0, tilt=sc.gimbal.tilt_range[0]), pan0, tilt0, 1e6)
    battery = sc.battery.full()

    cols = {k: [] for k in ("time", "east", "north", "up", "heading", "pan", "tilt", "target_east",
                            "target_north", "distance", "voltage", "soc", "power", "ground_range")}
    rssi = {lk.name: [] for lk in sc.links}
    states = {lk.name: [] for lk in sc.links}
    spl = {i: [] for i in range(len(listeners))}
    vis_log = []
    termination = "trace_end"

    def record(k, tgt_enu, power):
        t_rel = k * dt
        p = vehicle.position
        cols["time"].append(t_rel)
        cols["east"].append(p.east)
        cols["north"].append(p.north)
        cols["up"].append(p.up)
        cols["heading"].append(vehicle.heading)
        cols["pan"].append(gimbal.pan)
        cols["tilt"].append(gimbal.tilt)
        cols["target_east"].append(tgt_enu.east)
        cols["target_north"].append(tgt_enu.north)
        cols["distance"].append(math.hypot(p.east - tgt_enu.east, p.north - tgt_enu.north))
        cols["voltage"].append(battery.voltage)
        cols["soc"].append(battery.state_of_charge)
        cols["power"].append(power)
        pa = p.as_array()
        rng = float(np.linalg.norm(pa - ground_station))
        cols["ground_range"].append(rng)
        lost = False
        for lk in sc.links:
            r = rssi_at(lk, rng)
            st = link_state(lk, r)
            rssi[lk.name].append(r)
            states[lk.name].append(st.value)
            lost |= st is LinkState.LOST and lk.name == sc.abort_on_link_lost
        for i, lp in enumerate(listeners):
            spl[i].append(spl_at(sc.acoustic, float(np.linalg.norm(pa - lp))))
        try:
            rec = target_in_fov(cam, vehicle, gimbal, tgt_enu, time=t_rel)
        except ValueError:
            rec = VisibilityRecord(t_rel, cam.name, False, 0.0)
        vis_log.append(rec)
        return lost

    power = electrical_power(0.0, veh_p, battery.voltage)
    record(0, start, power)
    for k in range(n_steps):
        t = t0 + k * dt
        cmd = track_step(target.held(t), vehicle, vehicle.heading, sc.origin, sc.standoff_altitude)
        gimbal = step_gimbal(gimbal, cmd.gimbal_pan, cmd.gimbal_tilt, dt)
        vehicle = step_vehicle(vehicle, waypoint_enu(sc.origin, cmd), dt, veh_p)
        if not battery.depleted:
            power = electrical_power(vehicle.horizontal_speed, veh_p, battery.voltage)
            battery = step_battery(battery, power, dt)
        else:
            power = 0.0
        tgt = geo_to_enu(sc.origin, target.truth(t0 + (k + 1) * dt))
        lost = record(k + 1, tgt, power)
        if battery.depleted and sc.abort_on_battery_cutoff:
            termination = "battery_cutoff"
            break
        if lost:
            termination = "link_lost"
            break

    arr = {k: np.asarray(v, dtype=float) for k, v in cols.items()}
    visible = np.array([r.target_visible for r in vis_log])
    track = track_metrics(TrackLog(arr["time"], arr["distance"], visible, sc.target_update_period))
    return MissionReport(
        time=arr["time"],
        duration=float(arr["time"][-1]),
        termination=termination,
        track=track,
        battery_trace={"voltage": arr["voltage"], "soc": arr["soc"]},
        power_trace=arr["power"],
        rssi_traces={k: np.asarray(v) for k, v in rssi.items()},
        link_states={k: list(v) for k, v in states.items()},
        distance_trace=arr["distance"],
        visibility_log=vis_log,
        spl_traces={k: np.asarray(v) for k, v in spl.items()},
        trajectory={k: arr[k] for k in ("east", "north", "up", "heading", "pan", "tilt",
                                        "target_east", "target_north", "ground_range")},
        sim_dt=dt,
        energy_out=battery.energy_out,
    )


# --- report files -------------------------------------------------------------

def _csv_text(header: Sequence[str], columns: Sequence) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in zip(*columns):
        buf.write(",".join(x if isinstance(x, str) else repr(float(x)) for x in row) + "\n")
    return buf.getvalue()


def report_files(report: MissionReport) -> dict[str, str]:
    """File name to content for every output of `write_report`."""
    t = report.time
    files = {
        "battery.csv": _csv_text(("time_s", "voltage_v", "soc", "power_w"),
                                 (t, report.battery_trace["voltage"], report.battery_trace["soc"],
                                  report.power_trace)),
        "distance.csv": _csv_text(("time_s", "horizontal_distance_m"), (t, report.distance_trace)),
        "trajectory.csv": _csv_text(
            ("time_s", "east_m", "north_m", "up_m", "heading_rad", "pan_rad", "tilt_rad",
             "target_east_m", "target_north_m"),
            (t, *(report.trajectory[k] for k in ("east", "north", "up", "heading", "pan", "tilt",
                                                 "target_east", "target_north")))),
    }
    for name, series in report.rssi_traces.items():
        files[f"rssi_{name}.csv"] = _csv_text(
            ("time_s", "distance_m", "rssi_dbm", "state"),
            (t, report.trajectory["ground_range"], series, report.link_states[name]))
    for i, series in report.spl_traces.items():
        files[f"spl_listener{i}.csv"] = _csv_text(("time_s", "spl_db"), (t, series))
    vis = report.visibility_log
    files["visibility.csv"] = _csv_text(
        ("time_s", "camera", "visible", "offset_rad"),
        ([r.time for r in vis], [r.camera for r in vis], [str(int(r.target_visible)) for r in vis],
         [r.boresight_offset for r in vis]))
    return files


def write_report(report: MissionReport, destination) -> Path:
    dest = Path(destination)
    files = report_files(report)
    doc = {"schema_version": REPORT_SCHEMA_VERSION, "summary": report.summary(),
           "files": sorted(files)}
    try:
        dest.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (dest / name).write_text(text)
        (dest / "report.json").write_text(json.dumps(doc, indent=2, allow_nan=True) + "\n")
    except OSError as exc:
        raise ReportIOError(f"{exc.filename or dest}: {exc.strerror or exc}") from exc
    return dest / "report.json"


def read_report(source) -> dict:
    """Scalar summary from a report directory (or its report.json)."""
    path = Path(source)
    if path.is_dir():
        path = path / "report.json"
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ReportIOError(f"{path}: {exc.strerror or exc}") from exc
    if doc.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ValidationError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    return doc["summary"]
