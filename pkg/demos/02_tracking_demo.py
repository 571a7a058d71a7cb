# Replay the rooftop car-tracking flight on the bundled synthetic trace and
# write the report files next to this script.
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from quadtrack import mission

scenario = mission.demo_scenario()
print("trace: %d samples, %.0f s" % (len(scenario.target_trace), scenario.target_trace[-1][0]))

report = mission.run_mission(scenario)
for k, v in report.summary().items():
    print("%-28s %s" % (k, v))

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).with_name("demo_report")
mission.write_report(report, out)
print("wrote", out)

# how often each link would have been lost over the flight
for name, states in report.link_states.items():
    lost = np.mean([s == "lost" for s in states])
    print("%-12s lost %.0f%% of the time" % (name, 100 * lost))

# relay rate matters: slower GPS updates mean a longer lag behind the car
for period in (0.2, 1.0, 2.0, 4.0):
    r = mission.run_mission(replace(scenario, target_update_period=period))
    print("update every %.1f s -> max distance %.1f m" % (period, r.track.max_horizontal_distance))
