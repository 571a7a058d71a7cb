"""Reading and writing the TOML configuration files.

Angles are stored in degrees on disk (keys ending in ``_deg``) and in radians
in memory.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from importlib import resources
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .airframe import BatteryState, GimbalState, VehicleParams
from .errors import ValidationError

SCHEMA_VERSION = 1

_VEHICLE_ANGLES = ("max_tilt", "max_yaw_rate")
_GIMBAL_ANGLES = ("pan", "tilt", "pan_rate_limit", "tilt_rate_limit")
_GIMBAL_RANGES = ("pan_range", "tilt_range")


def data_path(name: str) -> Path:
    return Path(str(resources.files("quadtrack") / "data" / name))


def load_toml(path) -> dict:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValidationError(f"{path}: {exc}") from exc


def _build(cls, table: dict, angles=(), ranges=(), where=""):
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in table.items():
        if key.endswith("_deg"):
            name = key[:-4]
            if name in ranges:
                value = tuple(math.radians(x) for x in value)
            elif name in angles:
                value = math.radians(value)
            else:
                raise ValidationError(f"{where}: {key} is not an angle field")
            key = name
        elif key in angles or key in ranges:
            raise ValidationError(f"{where}: give {key} in degrees as {key}_deg")
        if key not in names:
            raise ValidationError(f"{where}: unknown key {key!r}")
        kwargs[key] = value
    return cls(**kwargs)


def vehicle_from_dict(table: dict, base: VehicleParams | None = None) -> VehicleParams:
    v = _build(VehicleParams, table, _VEHICLE_ANGLES, where="[vehicle]")
    if base is None:
        return v
    given = {k[:-4] if k.endswith("_deg") else k for k in table}
    return dataclasses.replace(base, **{k: getattr(v, k) for k in given})


def battery_from_dict(table: dict, base: BatteryState | None = None) -> BatteryState:
    b = _build(BatteryState, table, where="[battery]")
    if base is None:
        return b
    return dataclasses.replace(base, **{k: getattr(b, k) for k in table}).full()


def gimbal_from_dict(table: dict, base: GimbalState | None = None) -> GimbalState:
    g = _build(GimbalState, table, _GIMBAL_ANGLES, _GIMBAL_RANGES, where="[gimbal]")
    if base is None:
        return g
    given = {k[:-4] if k.endswith("_deg") else k for k in table}
    return dataclasses.replace(base, **{k: getattr(g, k) for k in given})


def vehicle_to_dict(v: VehicleParams) -> dict:
    out = {}
    for f in dataclasses.fields(v):
        value = getattr(v, f.name)
        if f.name in _VEHICLE_ANGLES:
            out[f.name + "_deg"] = math.degrees(value)
        else:
            out[f.name] = value
    return out


_BATTERY_CONFIG_FIELDS = ("cell_count", "capacity", "usable_fraction",
                          "internal_resistance", "cutoff_voltage_per_cell")


def battery_to_dict(b: BatteryState) -> dict:
    return {k: getattr(b, k) for k in _BATTERY_CONFIG_FIELDS}


def write_vehicle_config(path, vehicle: VehicleParams, battery: BatteryState, note=None):
    doc = {"schema_version": SCHEMA_VERSION}
    if note:
        doc["note"] = note
    doc["vehicle"] = vehicle_to_dict(vehicle)
    doc["battery"] = battery_to_dict(battery)
    with open(path, "wb") as fh:
        tomli_w.dump(doc, fh)


def load_vehicle_config(path=None) -> tuple[VehicleParams, BatteryState]:
    """Vehicle and battery from a config file; the shipped calibration by default."""
    doc = load_toml(data_path("defaults.toml") if path is None else path)
    if path is None:
        return vehicle_from_dict(doc.get("vehicle", {})), battery_from_dict(doc.get("battery", {}))
    base_v, base_b = load_vehicle_config()
    return (vehicle_from_dict(doc.get("vehicle", {}), base_v),
            battery_from_dict(doc.get("battery", {}), base_b))


def default_vehicle() -> VehicleParams:
    return load_vehicle_config()[0]


def default_battery() -> BatteryState:
    return load_vehicle_config()[1]
