"""Camera field-of-view geometry and visibility bookkeeping.

Each camera's field of view is an azimuth/elevation box around its
boresight, measured in the camera's own frame (x forward along the
boresight, y left, z up, no roll). Mount and gimbal angles use the compass
convention: yaw and pan are clockwise seen from above, pitch and tilt are
positive up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .airframe import GimbalState, VehicleState
from .errors import UndefinedDirectionError, ValidationError
from .geo import EnuVector

FISHEYE_HFOV = math.radians(200.0)
FISHEYE_VFOV = math.radians(150.0)
FISHEYE_PITCH = math.radians(-15.0)
STEREO_BASELINE = 0.12
GIMBAL_HFOV = math.radians(40.0)
GIMBAL_VFOV = math.radians(25.0)

# Slack on the closed FOV boundary so a ray placed exactly on an edge survives round-off.
EDGE_EPS = 1e-12


@dataclass(frozen=True)
class CameraModel:
    name: str
    hfov: float
    vfov: float
    gimbal_driven: bool = False
    yaw: float = 0.0
    pitch: float = 0.0
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)  # body frame: forward, left, up

    def __post_init__(self):
        if not 0.0 < self.hfov <= 2.0 * math.pi:
            raise ValidationError(f"{self.name}: hfov must lie in (0, 2*pi]")
        if not 0.0 < self.vfov <= math.pi:
            raise ValidationError(f"{self.name}: vfov must lie in (0, pi]")


@dataclass(frozen=True)
class FisheyePair:
    left: CameraModel
    right: CameraModel
    baseline: float = STEREO_BASELINE

    def __post_init__(self):
        for cam in (self.left, self.right):
            if cam.hfov > FISHEYE_HFOV + EDGE_EPS:
                raise ValidationError(f"{cam.name}: fisheye hfov exceeds 200 deg")
        if (self.left.yaw, self.left.pitch) != (self.right.yaw, self.right.pitch):
            raise ValidationError("stereo eyes must share one pointing direction")
        if self.baseline <= 0:
            raise ValidationError("baseline must be > 0")

    @property
    def cameras(self) -> tuple[CameraModel, CameraModel]:
        return self.left, self.right


@dataclass(frozen=True)
class VisibilityRecord:
    time: float
    camera: str
    target_visible: bool
    boresight_offset: float
    landmark: int | None = None


def fisheye_pair(name: str, yaw: float, forward_offset: float, pitch: float = FISHEYE_PITCH,
                 baseline: float = STEREO_BASELINE, hfov: float = FISHEYE_HFOV,
                 vfov: float = FISHEYE_VFOV) -> FisheyePair:
    """Two parallel eyes separated sideways (relative to their boresight) by `baseline`."""
    fx, fy = math.cos(yaw), -math.sin(yaw)  # boresight in body (forward, left)
    lx, ly = -fy, fx  # eye-left direction
    half = 0.5 * baseline
    mk = lambda side, s: CameraModel(f"{name}_{side}", hfov, vfov, yaw=yaw, pitch=pitch,
                                     offset=(forward_offset * fx + s * half * lx,
                                             forward_offset * fy + s * half * ly, 0.0))
    return FisheyePair(mk("left", 1.0), mk("right", -1.0), baseline)


def default_fisheye_pairs(forward_offset: float = 0.0) -> tuple[FisheyePair, FisheyePair]:
    # Mount positions are not modelled by default; only the 12 cm eye separation is.
    return (fisheye_pair("front", 0.0, forward_offset),
            fisheye_pair("rear", math.pi, forward_offset))


def gimbal_camera() -> CameraModel:
    return CameraModel("gimbal", GIMBAL_HFOV, GIMBAL_VFOV, gimbal_driven=True)


def default_camera_suite() -> list[CameraModel]:
    front, rear = default_fisheye_pairs()
    return [*front.cameras, *rear.cameras, gimbal_camera()]


def _compass_frame(azimuth: float, elevation: float) -> np.ndarray:
    """Rows: forward, left, up unit vectors in ENU for a boresight at (azimuth, elevation)."""
    sa, ca = math.sin(azimuth), math.cos(azimuth)
    se, ce = math.sin(elevation), math.cos(elevation)
    return np.array([[sa * ce, ca * ce, se],
                     [-ca, sa, 0.0],
                     [-sa * se, -ca * se, ce]])


def camera_pose(camera: CameraModel, vehicle: VehicleState,
                gimbal: GimbalState | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Camera position in ENU and its frame rows (forward, left, up)."""
    h = vehicle.heading
    if camera.gimbal_driven:
        if gimbal is None:
            raise ValidationError(f"{camera.name} is gimbal-driven but no gimbal state given")
        az, el = h + gimbal.pan, gimbal.tilt
    else:
        az, el = h + camera.yaw, camera.pitch
    body = _compass_frame(h, 0.0)
    pos = vehicle.position.as_array() + np.asarray(camera.offset) @ body
    return pos, _compass_frame(az, el)


def _box_test(local: np.ndarray, camera: CameraModel):
    x, y, z = local[..., 0], local[..., 1], local[..., 2]
    az = np.arctan2(y, x)
    el = np.arctan2(z, np.hypot(x, y))
    visible = ((np.abs(az) <= 0.5 * camera.hfov + EDGE_EPS)
               & (np.abs(el) <= 0.5 * camera.vfov + EDGE_EPS))
    offset = np.arctan2(np.hypot(y, z), x)  # well conditioned near the boresight
    return visible, offset


def target_in_fov(camera: CameraModel, vehicle: VehicleState, gimbal: GimbalState | None,
                  target: EnuVector, time: float = 0.0) -> VisibilityRecord:
    pos, frame = camera_pose(camera, vehicle, gimbal)
    d = target.as_array() - pos
    if not np.any(d):
        raise UndefinedDirectionError(f"target coincides with camera {camera.name}")
    visible, offset = _box_test(frame @ d, camera)
    return VisibilityRecord(time, camera.name, bool(visible), float(offset))


def fibonacci_sphere(n: int) -> np.ndarray:
    """Quasi-uniform unit directions (ENU) on a golden-angle spiral."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


@dataclass(frozen=True)
class CoverageResult:
    fraction: float
    directions: np.ndarray
    covered: np.ndarray

    @property
    def blind_directions(self) -> np.ndarray:
        return self.directions[~self.covered]

    def blind_spots_deg(self, vehicle: VehicleState | None = None) -> np.ndarray:
        """Blind directions as (body azimuth, elevation) pairs in degrees."""
        d = self.blind_directions
        heading = 0.0 if vehicle is None else vehicle.heading
        az = np.degrees((np.arctan2(d[:, 0], d[:, 1]) - heading) % (2 * math.pi))
        el = np.degrees(np.arcsin(np.clip(d[:, 2], -1.0, 1.0)))
        return np.column_stack([az, el])


def coverage_map(vehicle: VehicleState, cameras: Sequence[CameraModel], grid: int = 10000,
                 gimbal: GimbalState | None = None) -> CoverageResult:
    """Fraction of far-field directions seen by at least one camera.

    Directions are taken at infinity, so camera position offsets drop out.
    Gimbal-driven cameras are skipped unless a gimbal state is supplied.
    """
    if grid < 1000:
        raise ValidationError("coverage grid needs at least 1000 directions")
    dirs = fibonacci_sphere(int(grid))
    covered = np.zeros(len(dirs), dtype=bool)
    for cam in cameras:
        if cam.gimbal_driven and gimbal is None:
            continue
        _, frame = camera_pose(cam, vehicle, gimbal)
        visible, _ = _box_test(dirs @ frame.T, cam)
        covered |= visible
    return CoverageResult(float(covered.mean()), dirs, covered)


def landmark_visibility(trajectory, landmarks: Sequence[EnuVector], cameras: Sequence[CameraModel],
                        times: Sequence[float] | None = None) -> list[VisibilityRecord]:
    """Visibility of every landmark from every camera at every pose.

    `trajectory` holds (VehicleState, GimbalState) pairs. Records are ordered
    by (time, camera, landmark index).
    """
    trajectory = list(trajectory)
    if not trajectory:
        raise ValidationError("trajectory is empty")
    if times is None:
        times = range(len(trajectory))
    pts = np.array([lm.as_array() for lm in landmarks]).reshape(-1, 3)
    out = []
    for t, (veh, gim) in zip(times, trajectory):
        for cam in cameras:
            pos, frame = camera_pose(cam, veh, gim)
            d = pts - pos
            visible, offset = _box_test(d @ frame.T, cam)
            degenerate = ~np.any(d, axis=1)
            for j in range(len(pts)):
                if degenerate[j]:
                    out.append(VisibilityRecord(float(t), cam.name, False, 0.0, j))
                else:
                    out.append(VisibilityRecord(float(t), cam.name, bool(visible[j]),
                                                float(offset[j]), j))
    return out


def in_frame_fraction(records: Sequence[VisibilityRecord], camera: str) -> float:
    mine = [r for r in records if r.camera == camera]
    if not mine:
        raise ValidationError(f"no visibility records for camera {camera!r}")
    return sum(r.target_visible for r in mine) / len(mine)


def write_visibility_csv(records: Sequence[VisibilityRecord], fh):
    fh.write("time_s,camera,visible,offset_rad\n")
    for r in records:
        fh.write(f"{r.time!r},{r.camera},{int(r.target_visible)},{r.boresight_offset!r}\n")
