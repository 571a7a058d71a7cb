# Fit the power model to the published endurance tables, then regenerate
# both tables and the hover figures from the fitted coefficients.
import numpy as np

from quadtrack import perf

rows, anchors, doc = perf.load_fixtures()
fit = perf.calibrate(rows, anchors)
print("fitted drag area      %.4f m^2" % fit.vehicle.drag_area)
print("fitted figure of merit %.3f" % fit.vehicle.figure_of_merit)
print("usable fraction        %.3f" % fit.battery.usable_fraction)
print("rms endurance error    %.1f%%" % (100 * fit.rms))

for payload in (True, False):
    cfg = perf.PerfConfig(fit.vehicle, fit.battery, payload_attached=payload)
    published = {r.airspeed: r for r in rows if r.payload_attached == payload}
    print("\npayload" if payload else "\nbase platform")
    print(" km/h   model s  published s   model m  published m")
    for r in perf.endurance_range_table(cfg, sorted(published)):
        p = published[r.airspeed]
        print("%5.0f %9.0f %12.0f %9.0f %12.0f" % (r.airspeed, r.endurance, p.endurance, r.range, p.range))

cfg = perf.PerfConfig(fit.vehicle, fit.battery)
hm = perf.hover_metrics(cfg)
print("\nhover %.1f min, TWR %.2f, throttle %.0f%%, %.0f W, vmax %.1f m/s"
      % (hm.hover_time / 60, hm.thrust_weight_ratio, 100 * hm.hover_throttle,
         hm.total_hover_power, hm.max_speed))

# best-range speed sits between hover and the top speed
speeds = np.linspace(0, hm.max_speed * 3.6, 120)
table = perf.endurance_range_table(cfg, speeds)
best = max(table, key=lambda r: r.range)
print("best range %.0f m at %.0f km/h" % (best.range, best.airspeed))
