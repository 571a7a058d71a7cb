"""Overhead-hold tracking policy and tracking-quality metrics.

The vehicle is commanded to the target's latitude/longitude at a fixed
standoff altitude, and the gimbal is aimed at the target coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .airframe import VehicleState, wrap_pi
from .errors import UndefinedDirectionError, ValidationError
from .geo import EnuVector, GeoPoint, geo_to_enu


@dataclass(frozen=True)
class TrackCommand:
    waypoint: GeoPoint
    gimbal_pan: float
    gimbal_tilt: float


@dataclass(frozen=True)
class TrackReport:
    duration: float
    max_horizontal_distance: float
    mean_horizontal_distance: float
    in_frame_fraction: float
    target_update_period: float


def follow_waypoint(target: GeoPoint, standoff_altitude: float) -> GeoPoint:
    if not standoff_altitude > 0:
        raise ValidationError(f"standoff altitude must be > 0, got {standoff_altitude}")
    return GeoPoint(target.latitude, target.longitude, standoff_altitude)


def gimbal_pointing(vehicle: VehicleState, vehicle_heading: float,
                    target: EnuVector) -> tuple[float, float]:
    """Body-relative pan and absolute tilt that put `target` on the boresight."""
    d = target - vehicle.position
    horiz = d.horizontal_norm()
    if horiz == 0.0:
        if d.up == 0.0:
            raise UndefinedDirectionError("target coincides with vehicle")
        # Straight down (or up): pan is arbitrary, pinned to 0.
        return 0.0, math.copysign(math.pi / 2, d.up)
    tilt = math.atan2(d.up, horiz)
    pan = wrap_pi(math.atan2(d.east, d.north) - vehicle_heading)
    return pan, tilt


def track_step(target: GeoPoint, vehicle: VehicleState, heading: float, origin: GeoPoint,
               standoff: float) -> TrackCommand:
    wp = follow_waypoint(target, standoff)
    pan, tilt = gimbal_pointing(vehicle, heading, geo_to_enu(origin, target))
    return TrackCommand(wp, pan, tilt)


@dataclass(frozen=True)
class TrackLog:
    """Per-sample mission data the tracking metrics are computed from."""
    time: np.ndarray
    horizontal_distance: np.ndarray
    visible: np.ndarray
    target_update_period: float = 1.0


def track_metrics(log: TrackLog) -> TrackReport:
    t = np.asarray(log.time, dtype=float)
    dist = np.asarray(log.horizontal_distance, dtype=float)
    vis = np.asarray(log.visible, dtype=bool)
    if t.size == 0:
        raise ValidationError("empty mission log")
    if not (t.size == dist.size == vis.size):
        raise ValidationError("log columns differ in length")
    if t.size > 2:
        steps = np.diff(t)
        if np.ptp(steps) > 1e-9 * max(1.0, abs(steps[0])) * t.size:
            raise ValidationError("log timestep is not uniform")
    return TrackReport(
        duration=float(t[-1] - t[0]),
        max_horizontal_distance=float(dist.max()),
        mean_horizontal_distance=float(dist.mean()),
        in_frame_fraction=float(vis.mean()),
        target_update_period=float(log.target_update_period),
    )


def waypoint_enu(origin: GeoPoint, cmd: TrackCommand) -> EnuVector:
    return geo_to_enu(origin, cmd.waypoint)

