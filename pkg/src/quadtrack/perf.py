"""Multirotor performance calculator and power-model calibration.

Endurance at a given airspeed is the time to reach the pack cutoff voltage
at the steady electrical power for that speed; range is airspeed times
endurance in still air with no reserve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .airframe import (AIR_DENSITY, BatteryState, VehicleParams, discharge_time,
                       electrical_power, nominal_pack_voltage, power_breakdown)
from .config import data_path, load_toml
from .errors import CalibrationError, NotFlyableError, UnboundedModelError, ValidationError

KMH_PER_MPS = 3.6
SPEED_BRACKET = 100.0


@dataclass(frozen=True)
class PerfConfig:
    vehicle: VehicleParams
    battery: BatteryState
    payload_attached: bool = True
    # None reproduces the calculator setting with no tilt cap: the lean angle
    # is limited only by available thrust.
    tilt_limit: float | None = None

    @property
    def effective_vehicle(self) -> VehicleParams:
        return self.vehicle if self.payload_attached else self.vehicle.without_payload()

    @property
    def voltage(self) -> float:
        return nominal_pack_voltage(self.battery.cell_count)


@dataclass(frozen=True)
class PerfRow:
    airspeed: float  # km/h
    endurance: float  # s, NaN when infeasible
    range: float  # m, NaN when infeasible
    payload_attached: bool = True
    feasible: bool = True


@dataclass(frozen=True)
class HoverMetrics:
    hover_time: float
    thrust_weight_ratio: float
    specific_thrust: float
    per_motor_current: float
    hover_throttle: float
    total_hover_power: float
    max_speed: float
    max_climb_rate: float


def _row(config: PerfConfig, airspeed_kmh: float, vmax: float) -> PerfRow:
    if airspeed_kmh < 0 or not math.isfinite(airspeed_kmh):
        raise ValidationError(f"airspeed must be finite and >= 0, got {airspeed_kmh}")
    v = airspeed_kmh / KMH_PER_MPS
    if v > vmax:
        return PerfRow(airspeed_kmh, math.nan, math.nan, config.payload_attached, feasible=False)
    p = electrical_power(v, config.effective_vehicle, config.voltage)
    t = discharge_time(config.battery.full(), p)
    return PerfRow(airspeed_kmh, t, v * t, config.payload_attached)


def endurance_range_table(config: PerfConfig, airspeeds) -> list[PerfRow]:
    vmax = max_speed_estimate(config)
    return [_row(config, float(a), vmax) for a in airspeeds]


def max_thrust(vehicle: VehicleParams) -> float:
    return vehicle.rotor_count * vehicle.max_thrust_per_motor


def lean_angle(config: PerfConfig) -> float:
    veh = config.effective_vehicle
    t_max = max_thrust(veh)
    if t_max <= veh.weight:
        raise NotFlyableError(f"max thrust {t_max:.1f} N does not exceed weight {veh.weight:.1f} N")
    theta = math.acos(veh.weight / t_max)
    if config.tilt_limit is not None:
        theta = min(theta, config.tilt_limit)
    return theta


def max_speed_estimate(config: PerfConfig) -> float:
    """Level-flight speed where the lean-limited thrust balances airframe drag."""
    veh = config.effective_vehicle
    theta = lean_angle(config)
    push = veh.weight * math.tan(theta)

    def excess(v):
        return push - 0.5 * AIR_DENSITY * veh.drag_area * v * v

    if excess(SPEED_BRACKET) > 0:
        raise UnboundedModelError(f"no drag equilibrium below {SPEED_BRACKET} m/s")
    return optimize.bisect(excess, 0.0, SPEED_BRACKET, xtol=1e-13, rtol=4 * np.finfo(float).eps,
                           maxiter=400)


def speed_equilibrium_residual(config: PerfConfig, v: float) -> float:
    veh = config.effective_vehicle
    theta = lean_angle(config)
    return veh.weight * math.tan(theta) - 0.5 * AIR_DENSITY * veh.drag_area * v * v


def hover_throttle(thrust_fraction: float, expo: float) -> float:
    """Invert the thrust curve T/Tmax = (1-e)*t + e*t**2 for throttle t."""
    if expo == 0.0:
        return thrust_fraction
    a, b = expo, 1.0 - expo
    return (-b + math.sqrt(b * b + 4.0 * a * thrust_fraction)) / (2.0 * a)


def max_climb_rate(config: PerfConfig) -> float:
    """Climb speed at which full-throttle shaft power is used up, hover attitude."""
    veh = config.effective_vehicle
    n = veh.rotor_count
    a1 = veh.disk_area / n
    fm = veh.figure_of_merit
    bd = power_breakdown(0.0, veh, 0.0)
    profile = bd.profile * bd.efficiency  # shaft watts
    t_m = veh.max_thrust_per_motor
    available = n * t_m**1.5 / (fm * math.sqrt(2.0 * AIR_DENSITY * a1)) + profile

    def required(vc):
        thrust = veh.weight + 0.5 * AIR_DENSITY * veh.drag_area * vc * vc
        vh2 = thrust / (2.0 * AIR_DENSITY * veh.disk_area)
        vi = -0.5 * vc + math.sqrt(0.25 * vc * vc + vh2)
        return thrust * vc + thrust * vi / fm + profile

    f = lambda vc: available - required(vc)
    if f(0.0) <= 0:
        return 0.0
    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
        if hi > SPEED_BRACKET:
            raise UnboundedModelError("no climb-rate equilibrium")
    return optimize.bisect(f, 0.0, hi, xtol=1e-12)


def hover_metrics(config: PerfConfig) -> HoverMetrics:
    veh = config.effective_vehicle
    t_max = max_thrust(veh)
    twr = t_max / veh.weight
    if twr <= 1.0:
        raise NotFlyableError(f"thrust-weight ratio {twr:.3f} <= 1")
    bd = power_breakdown(0.0, veh, config.voltage)
    rotor_power = bd.total - bd.avionics
    hover = _row(config, 0.0, math.inf)
    return HoverMetrics(
        hover_time=hover.endurance,
        thrust_weight_ratio=twr,
        specific_thrust=veh.mass * 1000.0 / rotor_power,
        per_motor_current=rotor_power / veh.rotor_count / config.voltage,
        hover_throttle=hover_throttle(1.0 / twr, veh.thrust_expo),
        total_hover_power=bd.total,
        max_speed=max_speed_estimate(config),
        max_climb_rate=max_climb_rate(config),
    )


# --- calibration -----------------------------------------------------------

@dataclass(frozen=True)
class CalibrationResult:
    vehicle: VehicleParams
    battery: BatteryState
    residuals: tuple = ()
    rms: float = 0.0
    worst_row: PerfRow | None = None
    worst_error: float = 0.0
    anchor_residuals: dict = field(default_factory=dict)


def load_fixtures(path=None):
    """Published table rows and hover anchors from a fixture file."""
    doc = load_toml(data_path("published_performance.toml") if path is None else path)
    rows = []
    for i, r in enumerate(doc.get("table", [])):
        if r.get("config") not in ("base", "payload"):
            raise ValidationError(f"table row {i}: config must be 'base' or 'payload'")
        rows.append(PerfRow(float(r["airspeed_kmh"]), float(r["endurance_s"]),
                            float(r["range_m"]), payload_attached=r["config"] == "payload"))
    a = doc.get("anchors", {})
    anchors = HoverMetrics(
        hover_time=float(a.get("hover_time_s", math.nan)),
        thrust_weight_ratio=float(a.get("thrust_weight_ratio", math.nan)),
        specific_thrust=float(a.get("specific_thrust_g_per_w", math.nan)),
        per_motor_current=float(a.get("per_motor_current_a", math.nan)),
        hover_throttle=float(a.get("hover_throttle", math.nan)),
        total_hover_power=float(a.get("total_hover_power_w", math.nan)),
        max_speed=float(a.get("max_speed_mps", math.nan)),
        max_climb_rate=float(a.get("max_climb_rate_mps", math.nan)),
    )
    return rows, anchors, doc


def anomalous_range_rows(doc) -> set:
    return {(r["config"] == "payload", float(r["airspeed_kmh"]))
            for r in doc.get("table", []) if r.get("range_anomalous")}


# Fitted coefficients: drag area, hover profile power, figure of merit,
# usable fraction, pack resistance. Profile power is fitted in watts and
# converted to the per-(rad/s)^3 coefficient afterwards for conditioning.
_LOWER = np.array([1e-3, 0.0, 0.2, 0.05, 0.0])
_UPPER = np.array([2.0, 500.0, 1.0, 1.0, 0.1])
_SCALE = np.array([0.1, 10.0, 0.1, 0.1, 0.01])


def _profile_watts(v: VehicleParams) -> float:
    return v.rotor_count * v.profile_power_coeff * v.rotor_speed**3


def _unpack(x, vehicle: VehicleParams, battery: BatteryState):
    cda, prof_w, fm, uf, ri = (float(c) for c in x)
    kp = prof_w / (vehicle.rotor_count * vehicle.rotor_speed**3)
    veh = replace(vehicle, drag_area=cda, profile_power_coeff=kp, figure_of_merit=fm)
    bat = replace(battery, usable_fraction=uf, internal_resistance=ri).full()
    return veh, bat


def calibrate(table, anchors: HoverMetrics, vehicle: VehicleParams | None = None,
              battery: BatteryState | None = None, anchor_weight: float = 3.0,
              tol: float = 1e-10, max_rms: float = 0.15) -> CalibrationResult:
    """Fit the power-model coefficients to published endurance rows.

    Minimises the relative endurance error over every feasible row, plus the
    hover-power and hover-time anchors (weighted by `anchor_weight`). The
    thrust ceiling and throttle curve are then solved in closed form from the
    thrust-weight and hover-throttle anchors. The starting point is the
    dataclass defaults, so the fit is deterministic.
    """
    vehicle = VehicleParams() if vehicle is None else vehicle
    battery = BatteryState() if battery is None else battery
    rows = [r for r in table if r.feasible and math.isfinite(r.endurance)]
    if len(rows) < 4:
        raise ValidationError("calibration needs at least 4 table rows")

    def residuals(x):
        veh, bat = _unpack(x, vehicle, battery)
        out = []
        for r in rows:
            cfg = PerfConfig(veh, bat, r.payload_attached)
            p = electrical_power(r.airspeed / KMH_PER_MPS, cfg.effective_vehicle, cfg.voltage)
            out.append(discharge_time(bat, p) / r.endurance - 1.0)
        cfg = PerfConfig(veh, bat, True)
        p0 = electrical_power(0.0, cfg.effective_vehicle, cfg.voltage)
        if math.isfinite(anchors.total_hover_power):
            out.append(anchor_weight * (p0 / anchors.total_hover_power - 1.0))
        if math.isfinite(anchors.hover_time):
            out.append(anchor_weight * (discharge_time(bat, p0) / anchors.hover_time - 1.0))
        return np.array(out)

    x0 = np.array([vehicle.drag_area, _profile_watts(vehicle), vehicle.figure_of_merit,
                   battery.usable_fraction, battery.internal_resistance])
    x0 = np.clip(x0, _LOWER, _UPPER)
    sol = optimize.least_squares(residuals, x0, bounds=(_LOWER, _UPPER), x_scale=_SCALE,
                                 ftol=tol, xtol=tol, gtol=tol, method="trf")
    veh, bat = _unpack(sol.x, vehicle, battery)

    res = sol.fun[:len(rows)]
    rms = float(np.sqrt(np.mean(res**2)))
    worst = int(np.argmax(np.abs(res)))
    if rms > max_rms:
        raise CalibrationError(
            f"calibration RMS {rms:.1%} exceeds {max_rms:.0%}; worst row "
            f"{rows[worst]} off by {res[worst]:+.1%}", worst_row=rows[worst], rms=rms)

    if math.isfinite(anchors.thrust_weight_ratio):
        w = PerfConfig(veh, bat, True).effective_vehicle.weight
        veh = replace(veh, max_thrust_per_motor=anchors.thrust_weight_ratio * w / veh.rotor_count)
    if math.isfinite(anchors.hover_throttle) and math.isfinite(anchors.thrust_weight_ratio):
        t = anchors.hover_throttle
        frac = 1.0 / anchors.thrust_weight_ratio
        if t != frac:
            expo = (frac - t) / (t * t - t)
            if not 0.0 <= expo <= 1.0:
                raise CalibrationError(f"throttle anchor implies thrust expo {expo:.3f} outside [0, 1]")
            veh = replace(veh, thrust_expo=expo)
        else:
            veh = replace(veh, thrust_expo=0.0)

    return CalibrationResult(
        vehicle=veh, battery=bat, residuals=tuple(float(r) for r in res), rms=rms,
        worst_row=rows[worst], worst_error=float(res[worst]),
        anchor_residuals={"fun": tuple(float(r) for r in sol.fun[len(rows):])},
    )
