# How much of the sphere the two fisheye stereo pairs see, and where the
# blind spots are.
import math

import numpy as np

from quadtrack import sensors
from quadtrack.airframe import GimbalState, VehicleState

veh = VehicleState()
front, rear = sensors.default_fisheye_pairs()

both = sensors.coverage_map(veh, [*front.cameras, *rear.cameras], grid=200_000)
only_front = sensors.coverage_map(veh, list(front.cameras), grid=200_000)
print("front pair only  %.1f%%" % (100 * only_front.fraction))
print("both pairs       %.1f%%" % (100 * both.fraction))

spots = both.blind_spots_deg()
print("blind directions: elevation %.0f..%.0f deg" % (spots[:, 1].min(), spots[:, 1].max()))
hist, edges = np.histogram(spots[:, 0], bins=12, range=(0, 360))
for n, lo in zip(hist, edges):
    print("  az %3.0f-%3.0f  %s" % (lo, lo + 30, "#" * int(60 * n / hist.max())))

# vertical field of view sweep for the fisheyes
for vfov in (90, 120, 150, 180):
    cams = [c for pair in sensors.default_fisheye_pairs() for c in pair.cameras]
    cams = [sensors.CameraModel(c.name, c.hfov, math.radians(vfov), yaw=c.yaw, pitch=c.pitch) for c in cams]
    print("vfov %3d -> %.1f%%" % (vfov, 100 * sensors.coverage_map(veh, cams, grid=50_000).fraction))

# the gimbal camera pointing straight down adds a small patch
g = GimbalState()
full = sensors.coverage_map(veh, sensors.default_camera_suite(), grid=200_000, gimbal=g)
print("with gimbal camera %.2f%%" % (100 * full.fraction))
