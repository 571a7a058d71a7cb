"""Geodetic points and a local east-north-up frame.

The local frame is an equirectangular tangent plane on a sphere of radius
6378137 m. Over the sub-kilometre areas a tracking flight covers this is
accurate to well under a decimetre, so no ellipsoid is modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedDirectionError, ValidationError

EARTH_RADIUS = 6378137.0
POLE_MARGIN_DEG = 0.1


def _wrap_lon(lon: float) -> float:
    """Wrap a longitude difference or value into [-180, 180)."""
    return (lon + 180.0) % 360.0 - 180.0


@dataclass(frozen=True)
class GeoPoint:
    latitude: float
    longitude: float
    altitude: float = 0.0

    def __post_init__(self):
        for name in ("latitude", "longitude", "altitude"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite, got {getattr(self, name)!r}")
        if not -90.0 <= self.latitude <= 90.0:
            raise ValidationError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValidationError(f"longitude {self.longitude} outside [-180, 180]")
        if self.longitude == 180.0:
            object.__setattr__(self, "longitude", -180.0)


@dataclass(frozen=True)
class EnuVector:
    east: float
    north: float
    up: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.east, self.north, self.up)):
            raise ValidationError(f"ENU components must be finite: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.east, self.north, self.up], dtype=float)

    @classmethod
    def from_array(cls, a) -> EnuVector:
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def __add__(self, other: EnuVector) -> EnuVector:
        return EnuVector(self.east + other.east, self.north + other.north, self.up + other.up)

    def __sub__(self, other: EnuVector) -> EnuVector:
        return EnuVector(self.east - other.east, self.north - other.north, self.up - other.up)

    def norm(self) -> float:
        return math.sqrt(self.east**2 + self.north**2 + self.up**2)

    def horizontal_norm(self) -> float:
        return math.hypot(self.east, self.north)


def _check_origin(origin: GeoPoint):
    if abs(origin.latitude) > 90.0 - POLE_MARGIN_DEG:
        raise ValidationError(
            f"origin latitude {origin.latitude} is within {POLE_MARGIN_DEG} deg of a pole"
        )


def geo_to_enu(origin: GeoPoint, p: GeoPoint) -> EnuVector:
    _check_origin(origin)
    k = math.pi / 180.0 * EARTH_RADIUS
    north = (p.latitude - origin.latitude) * k
    east = _wrap_lon(p.longitude - origin.longitude) * k * math.cos(math.radians(origin.latitude))
    return EnuVector(east, north, p.altitude - origin.altitude)


def enu_to_geo(origin: GeoPoint, v: EnuVector) -> GeoPoint:
    _check_origin(origin)
    k = math.pi / 180.0 * EARTH_RADIUS
    lat = origin.latitude + v.north / k
    lon = origin.longitude + v.east / (k * math.cos(math.radians(origin.latitude)))
    if not -90.0 <= lat <= 90.0:
        raise ValidationError(f"offset {v} leaves the valid latitude band")
    return GeoPoint(lat, _wrap_lon(lon), origin.altitude + v.up)


def _pair_offset(a: GeoPoint, b: GeoPoint) -> tuple[float, float]:
    # Mean-latitude scaling keeps distance and bearing exactly antisymmetric.
    _check_origin(a)
    _check_origin(b)
    k = math.pi / 180.0 * EARTH_RADIUS
    mid = math.radians(0.5 * (a.latitude + b.latitude))
    # Float wrapping is not exactly odd, so always wrap in one canonical order.
    if (a.longitude, a.latitude) <= (b.longitude, b.latitude):
        dlon = _wrap_lon(b.longitude - a.longitude)
    else:
        dlon = -_wrap_lon(a.longitude - b.longitude)
    east = dlon * k * math.cos(mid)
    north = (b.latitude - a.latitude) * k
    return east, north


def horizontal_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Ground-plane distance in metres between two points."""
    east, north = _pair_offset(a, b)
    return math.hypot(east, north)


def bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Azimuth of `b` seen from `a`, clockwise from north, in [0, 2*pi)."""
    east, north = _pair_offset(a, b)
    if east == 0.0 and north == 0.0:
        raise UndefinedDirectionError("bearing undefined for horizontally coincident points")
    return math.atan2(east, north) % (2.0 * math.pi)
