"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines inline, or
`python tests/test_acceptance.py` for the summary alone.
"""

import math
import sys
import time

import numpy as np
import pytest

from quadtrack import env, mission, perf, sensors, track
from quadtrack.airframe import G, VehicleState, electrical_power, step_battery, step_vehicle
from quadtrack.config import load_vehicle_config
from quadtrack.geo import EnuVector, GeoPoint, enu_to_geo, geo_to_enu

RESULTS = {}


def report(number, title, checks):
    """Print one line for the criterion and fail the test if any check failed."""
    ok = all(passed for passed, _ in checks)
    detail = "; ".join(msg for _, msg in checks)
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number} {title}: {detail}"
    RESULTS[number] = line
    print(line)
    failed = [msg for passed, msg in checks if not passed]
    assert ok, "failed: " + "; ".join(failed)


def within(value, target, rel):
    return abs(value / target - 1.0) <= rel


# --- 1 ----------------------------------------------------------------------

def criterion_1():
    t0 = time.perf_counter()
    rows, anchors, doc = perf.load_fixtures()
    res = perf.calibrate(rows, anchors)
    cfgs = {flag: perf.PerfConfig(res.vehicle, res.battery, payload_attached=flag)
            for flag in (True, False)}
    model = {}
    for flag, cfg in cfgs.items():
        speeds = [r.airspeed for r in rows if r.payload_attached == flag]
        for r in perf.endurance_range_table(cfg, speeds):
            model[(flag, r.airspeed)] = r
    elapsed = time.perf_counter() - t0

    anomalous = perf.anomalous_range_rows(doc)
    worst_e, worst_r, exact = 0.0, 0.0, True
    for pub in rows:
        m = model[(pub.payload_attached, pub.airspeed)]
        worst_e = max(worst_e, abs(m.endurance / pub.endurance - 1))
        exact &= m.feasible and m.range == m.airspeed / perf.KMH_PER_MPS * m.endurance
        if (pub.payload_attached, pub.airspeed) not in anomalous and pub.range > 0:
            worst_r = max(worst_r, abs(m.range / pub.range - 1))
    return [
        (worst_e <= 0.10, f"worst endurance error {worst_e:.1%} (<=10%, {len(rows)} rows)"),
        (exact, "range == v*endurance exactly"),
        (worst_r <= 0.10, f"worst range error {worst_r:.1%} excl. anomalous row (<=10%)"),
        (elapsed < 1.0, f"calibrate+tables {elapsed:.2f} s (<1 s)"),
    ]


def test_criterion_1_perf_table():
    report(1, "perf table reproduction", criterion_1())


# --- 2 ----------------------------------------------------------------------

def criterion_2():
    v, b = load_vehicle_config()
    hm = perf.hover_metrics(perf.PerfConfig(v, b, payload_attached=True))
    return [
        (within(hm.hover_time, 618.0, 0.05), f"hover time {hm.hover_time:.1f} s (618 +-5%)"),
        (within(hm.total_hover_power, 676.7, 0.02), f"hover power {hm.total_hover_power:.1f} W (676.7 +-2%)"),
        (within(hm.thrust_weight_ratio, 1.7, 0.05), f"TWR {hm.thrust_weight_ratio:.3f} (1.7 +-5%)"),
        (abs(hm.hover_throttle - 0.66) <= 0.03, f"throttle {hm.hover_throttle:.1%} (66 +-3 pts)"),
    ]


def test_criterion_2_hover_anchors():
    report(2, "hover anchors", criterion_2())


# --- 3 ----------------------------------------------------------------------

def criterion_3():
    v, batt = load_vehicle_config()
    batt = batt.full()
    t, dt = 0.0, 0.1
    while not batt.depleted:
        batt = step_battery(batt, electrical_power(0.0, v, batt.voltage), dt)
        t += dt
        if t > 3600:
            break
    return [
        (batt.depleted and batt.cutoff_voltage == pytest.approx(21.6),
         f"cutoff at {batt.cutoff_voltage:.1f} V pack"),
        (600.0 <= t <= 800.0, f"constant-hover discharge reaches cutoff at {t:.1f} s ([600, 800] s)"),
    ]


def test_criterion_3_battery_envelope():
    report(3, "battery test envelope", criterion_3())


# --- 4 ----------------------------------------------------------------------

def criterion_4():
    v, b = load_vehicle_config()
    vmax = perf.max_speed_estimate(perf.PerfConfig(v, b, payload_attached=True))
    return [(17.0 <= vmax <= 21.0, f"max speed {vmax:.2f} m/s ([17, 21])")]


def test_criterion_4_max_speed():
    report(4, "max speed", criterion_4())


# --- 5 ----------------------------------------------------------------------

def criterion_5():
    links = env.default_links()
    tx, wifi, tel = links["transmitter"], links["wifi"], links["telemetry"]
    d = np.arange(0.0, 1001.0, 1.0)
    mono = all(np.all(np.diff(env.rssi_at(lk, d)) <= 0) for lk in links.values())
    tel_state = env.link_state(tel, env.rssi_at(tel, 500.0))
    return [
        (200 <= tx.loss_distance <= 300, f"transmitter loss at {tx.loss_distance:.0f} m"),
        (200 <= wifi.loss_distance <= 300, f"wifi loss at {wifi.loss_distance:.0f} m"),
        (tel_state is env.LinkState.CONNECTED, f"900 MHz at 500 m: {tel_state.value}"),
        (mono, "RSSI monotone over 0-1000 m at 1 m steps"),
    ]


def test_criterion_5_link_ranges():
    report(5, "link ranges", criterion_5())


# --- 6 ----------------------------------------------------------------------

def criterion_6():
    rng = np.random.default_rng(2024)
    exact = True
    for rpm in rng.uniform(1000.0, 12000.0, 100):
        m = env.AcousticModel(rpm=float(rpm))
        freqs = [f for f, _ in env.tone_set(m)]
        exact &= m.blade_pass_frequency == m.blades_per_rotor * rpm / 60 and m.blade_pass_frequency in freqs
    m = env.AcousticModel()
    drops = [env.spl_at(m, r) - env.spl_at(m, 2 * r) for r in (1.0, 2.5, 10.0, 80.0)]
    spreading = all(abs(x - 6.02) <= 0.01 for x in drops)

    fs, dur = 8000.0, 6.0
    _, x = env.synthesize(m, dur, fs)
    mag = np.abs(np.fft.rfft(x * np.hanning(len(x))))
    freqs = np.fft.rfftfreq(len(x), 1.0 / fs)
    floor = np.median(mag)
    tones = [f for f, _ in env.tone_set(m) if f <= 1000.0]
    dominant = 0
    for f in tones:
        i = int(np.argmin(np.abs(freqs - f)))
        dominant += mag[i] == mag[max(i - 15, 0):i + 16].max() and mag[i] > 100 * floor
    return [
        (exact, "blade-pass == blades*rpm/60 for 100 random rpm"),
        (spreading, f"doubling drop {min(drops):.4f}..{max(drops):.4f} dB (6.02 +-0.01)"),
        (dominant == len(tones), f"{dominant}/{len(tones)} tones <=1 kHz are dominant FFT bins"),
    ]


def test_criterion_6_acoustics():
    report(6, "acoustics", criterion_6())


# --- 7 ----------------------------------------------------------------------

def criterion_7():
    t0 = time.perf_counter()
    scenario = mission.demo_scenario()
    a = mission.run_mission(scenario)
    b = mission.run_mission(scenario)
    elapsed = time.perf_counter() - t0
    same = mission.report_files(a) == mission.report_files(b)
    tr = a.track
    return [
        (a.termination == "trace_end", f"termination {a.termination}"),
        (tr.max_horizontal_distance <= 60.0, f"max distance {tr.max_horizontal_distance:.1f} m (<=60)"),
        (tr.in_frame_fraction >= 0.70, f"in-frame {tr.in_frame_fraction:.1%} (>=70%)"),
        (same, "bitwise-identical repeat"),
        (elapsed < 10.0, f"two runs in {elapsed:.2f} s (<10 s)"),
    ]


def test_criterion_7_tracking_demo():
    report(7, "tracking demo reproduction", criterion_7())


# --- 8 ----------------------------------------------------------------------

def _boresight(azimuth, elevation):
    return np.array([math.sin(azimuth) * math.cos(elevation),
                     math.cos(azimuth) * math.cos(elevation), math.sin(elevation)])


def _fine_vehicle(x, v, waypoint, params, T, h=1e-3):
    x, v = np.array(x, float), np.array(v, float)
    a = min(params.max_accel, G * math.tan(params.max_tilt))
    for _ in range(int(round(T / h))):
        c = params.pursuit_gain * (np.asarray(waypoint) - x)
        n = np.linalg.norm(c[:2])
        if n > params.max_speed:
            c[:2] *= params.max_speed / n
        c[2] = np.clip(c[2], -params.max_vertical_speed, params.max_vertical_speed)
        dv = c - v
        n = np.linalg.norm(dv[:2])
        if n > a * h:
            dv[:2] *= a * h / n
        dv[2] = np.clip(dv[2], -a * h, a * h)
        x = x + (v + 0.5 * dv) * h
        v = v + dv
    return x


def criterion_8():
    rng = np.random.default_rng(8)
    worst_ptg = 0.0
    for _ in range(10_000):
        veh = VehicleState(EnuVector(*rng.uniform(-500, 500, 2), rng.uniform(5, 150)),
                           heading=rng.uniform(0, 2 * math.pi))
        tgt = EnuVector(*rng.uniform(-500, 500, 2), rng.uniform(-10, 10))
        pan, tilt = track.gimbal_pointing(veh, veh.heading, tgt)
        d = (tgt - veh.position).as_array()
        bs = _boresight(veh.heading + pan, tilt)
        worst_ptg = max(worst_ptg, math.atan2(np.linalg.norm(np.cross(bs, d)), bs @ d))

    worst_geo = 0.0
    for _ in range(10_000):
        o = GeoPoint(rng.uniform(-80, 80), rng.uniform(-180, 180), rng.uniform(0, 500))
        r, th = rng.uniform(0, 10_000), rng.uniform(0, 2 * math.pi)
        v = EnuVector(r * math.cos(th), r * math.sin(th), rng.uniform(-100, 100))
        worst_geo = max(worst_geo, (geo_to_enu(o, enu_to_geo(o, v)) - v).norm())

    params, _ = load_vehicle_config()
    worst_step = 0.0
    for _ in range(4):
        start = np.array([*rng.uniform(-200, 200, 2), 50.0])
        wp = np.array([*rng.uniform(-200, 200, 2), 55.0])
        s = VehicleState(EnuVector(*start))
        for _ in range(300):
            s = step_vehicle(s, EnuVector(*wp), 0.1, params)
        ref = _fine_vehicle(start, np.zeros(3), wp, params, 30.0)
        worst_step = max(worst_step, float(np.linalg.norm(s.position.as_array() - ref)))

    mono = True
    for _ in range(100):
        cams = [sensors.CameraModel(f"c{i}", rng.uniform(0.2, 2 * math.pi), rng.uniform(0.2, math.pi),
                                    yaw=rng.uniform(-math.pi, math.pi), pitch=rng.uniform(-1.3, 1.3))
                for i in range(int(rng.integers(2, 6)))]
        full = sensors.coverage_map(VehicleState(), cams, grid=2000).fraction
        k = int(rng.integers(len(cams)))
        mono &= sensors.coverage_map(VehicleState(), cams[:k] + cams[k + 1:], grid=2000).fraction <= full
    return [
        (worst_ptg < 1e-9, f"pointing vs frame oracle {worst_ptg:.1e} rad (<1e-9, 10k cases)"),
        (worst_geo < 1e-6, f"geo round-trip {worst_geo:.1e} m (<1e-6, 10k cases)"),
        (worst_step < 0.1, f"step_vehicle vs fine-step {worst_step:.1e} m (<0.1 over 30 s)"),
        (mono, "coverage monotone under camera removal (100 suites)"),
    ]


def test_criterion_8_oracle_suites():
    report(8, "oracle suites", criterion_8())


if __name__ == "__main__":
    titles = {1: "perf table reproduction", 2: "hover anchors", 3: "battery test envelope",
              4: "max speed", 5: "link ranges", 6: "acoustics", 7: "tracking demo reproduction",
              8: "oracle suites"}
    failed = 0
    for n, title in titles.items():
        try:
            report(n, title, globals()[f"criterion_{n}"]())
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
