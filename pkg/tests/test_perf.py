import math
from dataclasses import replace

import numpy as np
import pytest

from quadtrack import perf
from quadtrack.airframe import AIR_DENSITY, BatteryState, VehicleParams, electrical_power
from quadtrack.config import default_battery, default_vehicle, load_vehicle_config
from quadtrack.errors import CalibrationError, NotFlyableError, UnboundedModelError, ValidationError

SPEEDS = (0, 10, 20, 30, 40, 50)


@pytest.fixture(scope="module")
def cfg():
    return perf.PerfConfig(default_vehicle(), default_battery(), payload_attached=True)


def test_payload_toggle_is_exactly_the_documented_delta(cfg):
    base = replace(cfg, payload_attached=False).effective_vehicle
    full = cfg.effective_vehicle
    assert full.mass - base.mass == pytest.approx(1.35)
    assert full.current_draw - base.current_draw == pytest.approx(3.0)


def test_range_is_speed_times_endurance(cfg):
    for r in perf.endurance_range_table(cfg, np.arange(0, 61, 2.5)):
        if r.feasible:
            assert r.range == r.airspeed / 3.6 * r.endurance
            assert r.endurance > 0


def test_rows_above_max_speed_are_marked_infeasible(cfg):
    vmax = perf.max_speed_estimate(cfg) * 3.6
    rows = perf.endurance_range_table(cfg, [vmax - 1, vmax + 1])
    assert rows[0].feasible and not rows[1].feasible
    assert math.isnan(rows[1].endurance)


def test_negative_airspeed_rejected(cfg):
    with pytest.raises(ValidationError):
        perf.endurance_range_table(cfg, [-5])


def test_endurance_shape_and_best_range_interior(cfg):
    vmax = perf.max_speed_estimate(cfg) * 3.6
    speeds = np.linspace(0, vmax, 200)
    rows = perf.endurance_range_table(cfg, speeds)
    e = np.array([r.endurance for r in rows])
    rng = np.array([r.range for r in rows])
    i_min_power = int(np.argmax(e))
    assert np.all(np.diff(e[i_min_power:]) <= 1e-9)
    i_best = int(np.argmax(rng))
    assert 0 < i_best < len(speeds) - 1


def test_removing_payload_increases_endurance_everywhere(cfg):
    base = replace(cfg, payload_attached=False)
    for s in np.linspace(0, 60, 25):
        a = perf.endurance_range_table(cfg, [s])[0]
        b = perf.endurance_range_table(base, [s])[0]
        if a.feasible:
            assert b.endurance > a.endurance


def test_published_examples(cfg):
    hover, _, twenty = perf.endurance_range_table(cfg, [0, 10, 20])
    assert hover.endurance == pytest.approx(618, rel=0.05)
    assert twenty.endurance == pytest.approx(530, rel=0.10)
    assert twenty.range == pytest.approx(2944, rel=0.10)
    base10 = perf.endurance_range_table(replace(cfg, payload_attached=False), [10])[0]
    assert base10.endurance == pytest.approx(1080, rel=0.10)
    assert base10.range == pytest.approx(3000, rel=0.10)


def test_max_speed_residual_and_drag_monotonicity(cfg):
    v = perf.max_speed_estimate(cfg)
    assert abs(perf.speed_equilibrium_residual(cfg, v)) < 1e-6
    veh = cfg.vehicle
    theta = perf.lean_angle(cfg)
    w = veh.weight
    assert 0.5 * AIR_DENSITY * veh.drag_area * v * v == pytest.approx(w * math.tan(theta))
    draggy = replace(cfg, vehicle=replace(veh, drag_area=2 * veh.drag_area))
    assert perf.max_speed_estimate(draggy) < v


def test_tilt_limit_caps_speed(cfg):
    free = perf.max_speed_estimate(cfg)
    capped = perf.max_speed_estimate(replace(cfg, tilt_limit=math.radians(30)))
    assert capped < free


def test_unbounded_and_not_flyable(cfg):
    slick = replace(cfg, vehicle=replace(cfg.vehicle, drag_area=1e-6))
    with pytest.raises(UnboundedModelError):
        perf.max_speed_estimate(slick)
    weak = replace(cfg, vehicle=replace(cfg.vehicle, max_thrust_per_motor=5.0))
    with pytest.raises(NotFlyableError):
        perf.hover_metrics(weak)


def test_hover_throttle_inverts_thrust_curve():
    for e in (0.0, 0.3, 0.65, 1.0):
        for t in (0.1, 0.5, 0.9):
            frac = (1 - e) * t + e * t * t
            assert perf.hover_throttle(frac, e) == pytest.approx(t)


def test_hover_metrics_consistency(cfg):
    hm = perf.hover_metrics(cfg)
    assert hm.thrust_weight_ratio > 1
    assert 0 < hm.hover_throttle < 1
    assert hm.hover_time == perf.endurance_range_table(cfg, [0])[0].endurance
    assert hm.total_hover_power == pytest.approx(electrical_power(0.0, cfg.vehicle, cfg.voltage))
    assert hm.max_climb_rate > 0


def _synthetic(vehicle, battery):
    rows = []
    for pl in (True, False):
        rows += perf.endurance_range_table(perf.PerfConfig(vehicle, battery, pl), SPEEDS)
    return rows, perf.hover_metrics(perf.PerfConfig(vehicle, battery, True))


def test_calibrate_recovers_generating_coefficients():
    v = replace(VehicleParams(), drag_area=0.25, profile_power_coeff=4.5e-8, figure_of_merit=0.72)
    b = BatteryState(usable_fraction=0.7, internal_resistance=0.015)
    rows, anchors = _synthetic(v, b)
    res = perf.calibrate(rows, anchors)
    assert res.rms < 1e-9
    got = (res.vehicle.drag_area, res.vehicle.profile_power_coeff, res.vehicle.figure_of_merit,
           res.battery.usable_fraction, res.battery.internal_resistance)
    for g, t in zip(got, (0.25, 4.5e-8, 0.72, 0.7, 0.015)):
        assert g == pytest.approx(t, rel=1e-6)
    assert res.vehicle.max_thrust_per_motor == pytest.approx(v.max_thrust_per_motor, rel=1e-9)
    assert res.vehicle.thrust_expo == pytest.approx(v.thrust_expo, rel=1e-9)


def test_calibrate_is_idempotent_on_model_data():
    v, b = load_vehicle_config()
    rows, anchors = _synthetic(v, b)
    res = perf.calibrate(rows, anchors, vehicle=v, battery=b)
    assert res.vehicle.drag_area == pytest.approx(v.drag_area, rel=1e-9)
    assert res.battery.usable_fraction == pytest.approx(b.usable_fraction, rel=1e-9)


def test_calibrate_is_deterministic(calibration):
    res, rows, anchors, _ = calibration
    again = perf.calibrate(rows, anchors)
    assert again.vehicle == res.vehicle and again.battery == res.battery


def test_calibrate_reports_failure_with_worst_row(calibration):
    _, rows, anchors, _ = calibration
    broken = list(rows)
    broken[3] = replace(broken[3], endurance=broken[3].endurance * 5)
    with pytest.raises(CalibrationError) as info:
        perf.calibrate(broken, anchors)
    assert info.value.worst_row == broken[3]
    assert info.value.rms > 0.15


def test_calibrate_needs_four_rows(calibration):
    _, rows, anchors, _ = calibration
    with pytest.raises(ValidationError):
        perf.calibrate(rows[:3], anchors)


def test_shipped_defaults_match_a_fresh_calibration(calibration):
    res = calibration[0]
    v, b = load_vehicle_config()
    assert v == res.vehicle
    assert b == res.battery


def test_anomalous_row_flagged(calibration):
    doc = calibration[3]
    assert perf.anomalous_range_rows(doc) == {(False, 30.0)}
