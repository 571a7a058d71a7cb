"""Point-mass vehicle, two-axis gimbal, electrical power and battery models.

All step functions are pure: they take a state and return a new one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .errors import BatteryDepletedError, ValidationError
from .geo import EnuVector

G = 9.80665
AIR_DENSITY = 1.225
TWO_PI = 2.0 * math.pi

# Profile-power growth with advance ratio (classic blade-element result).
PROFILE_MU_FACTOR = 4.65

# Per-cell open-circuit voltage vs state of charge.
OCV_SOC = (0.0, 0.1, 0.9, 1.0)
OCV_CELL = (3.5, 3.7, 4.1, 4.2)
NOMINAL_CELL_VOLTAGE = 3.7

# Below this ground speed the velocity-aligned heading is left alone.
HEADING_SPEED_FLOOR = 0.5

# Longest internal integration step of the vehicle model, seconds.
SUBSTEP = 0.01


def wrap_pi(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    w = math.remainder(a, TWO_PI)
    return math.pi if w == -math.pi else w


def _finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise ValidationError(f"non-finite input {v!r}")


@dataclass(frozen=True)
class VehicleParams:
    base_mass: float = 2.8
    payload_mass: float = 1.35
    payload_current: float = 3.0
    max_speed: float = 8.0
    max_accel: float = 4.0
    max_tilt: float = math.radians(45.0)
    max_vertical_speed: float = 2.5
    max_yaw_rate: float = math.radians(90.0)
    pursuit_gain: float = 0.4
    heading_mode: str = "velocity"
    rotor_count: int = 4
    prop_diameter: float = 0.2794
    rotor_speed: float = 701.6
    avionics_current: float = 1.0
    drag_area: float = 0.30
    profile_power_coeff: float = 5.0e-8
    figure_of_merit: float = 0.78
    max_thrust_per_motor: float = 17.3
    thrust_expo: float = 0.32
    # Drivetrain efficiency is interpolated between two per-motor shaft loads.
    efficiency_hover: float = 0.837
    efficiency_max: float = 0.80
    shaft_power_hover_ref: float = 196.0 * 0.837
    shaft_power_max_ref: float = 429.9 * 0.80

    def __post_init__(self):
        if self.base_mass <= 0:
            raise ValidationError("base_mass must be > 0")
        if self.payload_mass < 0 or self.payload_current < 0:
            raise ValidationError("payload deltas must be >= 0")
        if self.max_speed <= 0 or self.max_accel <= 0 or self.max_vertical_speed <= 0:
            raise ValidationError("speed and acceleration limits must be > 0")
        if not 0.0 < self.max_tilt < math.pi / 2:
            raise ValidationError("max_tilt must lie in (0, pi/2)")
        if int(self.rotor_count) != self.rotor_count or self.rotor_count < 3:
            raise ValidationError("rotor_count must be an integer >= 3")
        if self.heading_mode not in ("velocity", "hold"):
            raise ValidationError(f"unknown heading_mode {self.heading_mode!r}")
        for name in ("prop_diameter", "rotor_speed", "figure_of_merit", "pursuit_gain",
                     "max_thrust_per_motor", "max_yaw_rate"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0")
        if self.drag_area < 0 or self.profile_power_coeff < 0 or self.avionics_current < 0:
            raise ValidationError("drag_area, profile_power_coeff, avionics_current must be >= 0")
        if not 0.0 <= self.thrust_expo <= 1.0:
            raise ValidationError("thrust_expo must lie in [0, 1]")

    @property
    def mass(self) -> float:
        return self.base_mass + self.payload_mass

    @property
    def weight(self) -> float:
        return self.mass * G

    @property
    def current_draw(self) -> float:
        """Non-propulsive current (flight electronics plus payload)."""
        return self.avionics_current + self.payload_current

    @property
    def disk_area(self) -> float:
        return self.rotor_count * math.pi * (0.5 * self.prop_diameter) ** 2

    @property
    def accel_limit(self) -> float:
        return min(self.max_accel, G * math.tan(self.max_tilt))

    def without_payload(self) -> VehicleParams:
        return replace(self, payload_mass=0.0, payload_current=0.0)


@dataclass(frozen=True)
class VehicleState:
    position: EnuVector = field(default_factory=lambda: EnuVector(0.0, 0.0, 0.0))
    velocity: EnuVector = field(default_factory=lambda: EnuVector(0.0, 0.0, 0.0))
    heading: float = 0.0

    @property
    def horizontal_speed(self) -> float:
        return self.velocity.horizontal_norm()


def _clamp_norm(x: float, y: float, limit: float) -> tuple[float, float]:
    n = math.hypot(x, y)
    if n > limit:
        s = limit / n
        return x * s, y * s
    return x, y


def step_vehicle(state: VehicleState, waypoint: EnuVector, dt: float,
                 params: VehicleParams) -> VehicleState:
    """Advance the pursuit model by `dt` toward a waypoint held over the step.

    The commanded velocity is proportional to the waypoint error and
    saturated at the speed limits; the actual velocity slews toward it at no
    more than the acceleration limit. The step is split into substeps of at
    most SUBSTEP seconds, and position uses the trapezoidal rule.
    """
    if not 0.0 < dt <= 0.5:
        raise ValidationError(f"dt must lie in (0, 0.5], got {dt}")
    _finite(dt, state.heading, waypoint.east, waypoint.north, waypoint.up)
    k = params.pursuit_gain
    vmax, vzmax = params.max_speed, params.max_vertical_speed
    n = max(1, math.ceil(dt / SUBSTEP - 1e-9))
    h = dt / n
    dv_max = params.accel_limit * h
    wx, wy, wz = waypoint.east, waypoint.north, waypoint.up
    x, y, z = state.position.east, state.position.north, state.position.up
    vx, vy, vz = state.velocity.east, state.velocity.north, state.velocity.up
    for _ in range(n):
        cx, cy = _clamp_norm(k * (wx - x), k * (wy - y), vmax)
        cz = min(max(k * (wz - z), -vzmax), vzmax)
        dvx, dvy = _clamp_norm(cx - vx, cy - vy, dv_max)
        dvz = min(max(cz - vz, -dv_max), dv_max)
        # Convex step toward an in-limit command; the clamp only guards round-off.
        nx, ny = _clamp_norm(vx + dvx, vy + dvy, vmax)
        nz = vz + dvz
        x += 0.5 * (vx + nx) * h
        y += 0.5 * (vy + ny) * h
        z += 0.5 * (vz + nz) * h
        vx, vy, vz = nx, ny, nz

    heading = state.heading
    if params.heading_mode == "velocity" and math.hypot(vx, vy) > HEADING_SPEED_FLOOR:
        err = wrap_pi(math.atan2(vx, vy) - heading)
        turn = params.max_yaw_rate * dt
        heading = (heading + min(max(err, -turn), turn)) % TWO_PI
    return VehicleState(EnuVector(x, y, z), EnuVector(vx, vy, vz), heading)


@dataclass(frozen=True)
class GimbalState:
    pan: float = 0.0
    tilt: float = -math.pi / 2
    pan_rate_limit: float = math.radians(90.0)
    tilt_rate_limit: float = math.radians(90.0)
    pan_range: tuple[float, float] = (math.radians(-170.0), math.radians(170.0))
    tilt_range: tuple[float, float] = (math.radians(-90.0), math.radians(25.0))

    def __post_init__(self):
        lo, hi = self.pan_range
        tlo, thi = self.tilt_range
        if not (lo < hi and tlo < thi):
            raise ValidationError("gimbal ranges must be increasing intervals")
        if not -math.pi / 2 <= tlo and thi <= math.pi / 2:
            raise ValidationError("tilt range must lie within [-pi/2, pi/2]")
        if self.pan_rate_limit <= 0 or self.tilt_rate_limit <= 0:
            raise ValidationError("gimbal rate limits must be > 0")

    @property
    def pan_continuous(self) -> bool:
        return self.pan_range[1] - self.pan_range[0] >= TWO_PI


def _pan_target(desired: float, lo: float, hi: float) -> float:
    """Representative of `desired` inside [lo, hi], else the angularly nearer end."""
    base = lo + (desired - lo) % TWO_PI
    if base <= hi:
        return base
    d_hi = base - hi
    d_lo = lo + TWO_PI - base
    return hi if d_hi <= d_lo else lo


def step_gimbal(state: GimbalState, desired_pan: float, desired_tilt: float,
                dt: float) -> GimbalState:
    if dt <= 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    _finite(desired_pan, desired_tilt, dt)
    max_pan = state.pan_rate_limit * dt
    if state.pan_continuous:
        err = wrap_pi(desired_pan - state.pan)
        pan = wrap_pi(state.pan + min(max(err, -max_pan), max_pan))
    else:
        lo, hi = state.pan_range
        target = _pan_target(desired_pan, lo, hi)
        err = target - state.pan
        pan = min(max(state.pan + min(max(err, -max_pan), max_pan), lo), hi)
    tlo, thi = state.tilt_range
    t_target = min(max(desired_tilt, tlo), thi)
    max_tilt = state.tilt_rate_limit * dt
    terr = t_target - state.tilt
    tilt = min(max(state.tilt + min(max(terr, -max_tilt), max_tilt), tlo), thi)
    return replace(state, pan=pan, tilt=tilt)


class PowerBreakdown(NamedTuple):
    """Electrical power split by source; rotor terms include drivetrain loss."""
    induced: float
    parasitic: float
    profile: float
    avionics: float
    efficiency: float
    thrust: float

    @property
    def total(self) -> float:
        return self.induced + self.parasitic + self.profile + self.avionics


def drivetrain_efficiency(shaft_power_per_motor: float, params: VehicleParams) -> float:
    x0, x1 = params.shaft_power_hover_ref, params.shaft_power_max_ref
    e0, e1 = params.efficiency_hover, params.efficiency_max
    eta = e0 + (e1 - e0) * (shaft_power_per_motor - x0) / (x1 - x0)
    return min(max(eta, 0.5), 0.95)


def power_breakdown(airspeed: float, params: VehicleParams,
                    battery_voltage: float) -> PowerBreakdown:
    if airspeed < 0 or not math.isfinite(airspeed):
        raise ValidationError(f"airspeed must be finite and >= 0, got {airspeed}")
    v = airspeed
    drag = 0.5 * AIR_DENSITY * params.drag_area * v * v
    thrust = math.hypot(params.weight, drag)
    # Hover momentum theory at the tilted-thrust magnitude; no translational-lift credit.
    induced = thrust**1.5 / (params.figure_of_merit * math.sqrt(2.0 * AIR_DENSITY * params.disk_area))
    parasitic = drag * v
    tip_speed = params.rotor_speed * 0.5 * params.prop_diameter
    mu = v / tip_speed
    profile = (params.rotor_count * params.profile_power_coeff * params.rotor_speed**3
               * (1.0 + PROFILE_MU_FACTOR * mu * mu))
    shaft = induced + parasitic + profile
    eta = drivetrain_efficiency(shaft / params.rotor_count, params)
    return PowerBreakdown(induced / eta, parasitic / eta, profile / eta,
                          params.current_draw * battery_voltage, eta, thrust)


def electrical_power(airspeed: float, params: VehicleParams, battery_voltage: float) -> float:
    """Battery-side power in watts for steady level flight at `airspeed`."""
    return power_breakdown(airspeed, params, battery_voltage).total


def nominal_pack_voltage(cell_count: int) -> float:
    return cell_count * NOMINAL_CELL_VOLTAGE


@dataclass(frozen=True)
class BatteryState:
    cell_count: int = 6
    capacity: float = 8000.0
    usable_fraction: float = 0.66
    state_of_charge: float = 1.0
    internal_resistance: float = 0.012
    cutoff_voltage_per_cell: float = 3.6
    voltage: float = float("nan")
    current: float = 0.0
    energy_out: float = 0.0
    depleted: bool = False

    def __post_init__(self):
        if int(self.cell_count) != self.cell_count or self.cell_count < 1:
            raise ValidationError("cell_count must be a positive integer")
        if self.capacity <= 0:
            raise ValidationError("capacity must be > 0")
        if not 0.0 < self.usable_fraction <= 1.0:
            raise ValidationError("usable_fraction must lie in (0, 1]")
        if not 0.0 <= self.state_of_charge <= 1.0:
            raise ValidationError("state_of_charge must lie in [0, 1]")
        if self.internal_resistance < 0:
            raise ValidationError("internal_resistance must be >= 0")
        if not OCV_CELL[0] < self.cutoff_voltage_per_cell < OCV_CELL[-1]:
            raise ValidationError("cutoff voltage must fall inside the open-circuit curve")
        if math.isnan(self.voltage):
            object.__setattr__(self, "voltage", float(open_circuit_voltage(
                self.state_of_charge, self.cell_count)))

    @property
    def charge(self) -> float:
        """Dispensable charge at full state of charge, coulombs."""
        return self.capacity / 1000.0 * 3600.0 * self.usable_fraction

    @property
    def cell_voltage(self) -> float:
        return self.voltage / self.cell_count

    @property
    def cutoff_voltage(self) -> float:
        return self.cutoff_voltage_per_cell * self.cell_count

    def full(self) -> BatteryState:
        return replace(self, state_of_charge=1.0, voltage=float("nan"), current=0.0,
                       energy_out=0.0, depleted=False)


def open_circuit_voltage(soc, cell_count: int = 1):
    return np.interp(soc, OCV_SOC, OCV_CELL) * cell_count


def _soc_at_cell_ocv(v_cell: float) -> float:
    return float(np.interp(v_cell, OCV_CELL, OCV_SOC))


def loaded_voltage(batt: BatteryState, power: float, soc: float | None = None) -> float:
    """Terminal voltage while delivering `power`; NaN if the pack cannot supply it."""
    soc = batt.state_of_charge if soc is None else soc
    ocv = float(open_circuit_voltage(soc, batt.cell_count))
    disc = ocv * ocv - 4.0 * power * batt.internal_resistance
    if disc < 0:
        return float("nan")
    return 0.5 * (ocv + math.sqrt(disc))


def step_battery(batt: BatteryState, power: float, dt: float) -> BatteryState:
    if batt.depleted:
        raise BatteryDepletedError("battery already at cutoff")
    if power < 0 or dt <= 0 or not (math.isfinite(power) and math.isfinite(dt)):
        raise ValidationError(f"need power >= 0 and dt > 0, got power={power}, dt={dt}")
    v_now = loaded_voltage(batt, power)
    if math.isnan(v_now):
        return replace(batt, voltage=0.0, current=0.0, depleted=True)
    current = power / v_now
    soc = max(0.0, batt.state_of_charge - current * dt / batt.charge)
    v_next = loaded_voltage(batt, power, soc)
    depleted = (soc <= 0.0 or math.isnan(v_next)
                or v_next <= batt.cutoff_voltage)
    return replace(batt, state_of_charge=soc,
                   voltage=0.0 if math.isnan(v_next) else v_next,
                   current=current, energy_out=batt.energy_out + power * dt,
                   depleted=depleted)


def cutoff_soc(batt: BatteryState, power: float) -> float:
    """State of charge at which the loaded voltage reaches cutoff under `power`."""
    vc = batt.cutoff_voltage
    ocv_cut = vc + power * batt.internal_resistance / vc
    return _soc_at_cell_ocv(ocv_cut / batt.cell_count)


def discharge_time(batt: BatteryState, power: float) -> float:
    """Seconds of constant-power draw from the current state to cutoff.

    Integrates dt = Q * V_loaded(soc) / P over state of charge, the
    continuous limit of `step_battery`.
    """
    if power <= 0:
        return math.inf
    s_cut = cutoff_soc(batt, power)
    s0 = batt.state_of_charge
    if s_cut >= s0:
        return 0.0
    breaks = [s for s in OCV_SOC if s_cut < s < s0]

    def v_over_p(s):
        v = loaded_voltage(batt, power, s)
        return v / power

    val, _ = integrate.quad(v_over_p, s_cut, s0, points=breaks or None,
                            limit=200, epsabs=0.0, epsrel=1e-12)
    return batt.charge * val


def usable_energy(batt: BatteryState, power: float) -> float:
    """Joules deliverable at the terminals before cutoff under constant `power`."""
    return discharge_time(batt, power) * power
