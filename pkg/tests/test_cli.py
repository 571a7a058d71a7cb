import csv
import io
import json
import subprocess
import sys

import pytest

from quadtrack import cli, config


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_perf_text_and_csv(capsys):
    code, out, _ = run(capsys, "perf")
    assert code == 0 and "Hover metrics" in out and "thrust-weight ratio" in out
    code, out, _ = run(capsys, "perf", "--no-payload", "--format", "csv", "--airspeeds", "0,10,30")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["airspeed_kmh"] for r in rows] == ["0.0", "10.0", "30.0"]
    assert float(rows[1]["range_m"]) == pytest.approx(10 / 3.6 * float(rows[1]["endurance_s"]))


def test_link_sweep(capsys):
    code, out, _ = run(capsys, "link", "--model", "transmitter", "--max-distance", "400", "--step", "50")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 9
    assert rows[0]["state"] == "connected" and rows[-1]["state"] == "lost"


def test_link_from_file(tmp_path, capsys):
    p = tmp_path / "l.toml"
    p.write_text('[link]\nname = "x"\nreference_rssi = -30.0\npath_loss_exponent = 2.0\n'
                 'loss_threshold = -90.0\ndegraded_threshold = -85.0\n')
    code, out, _ = run(capsys, "link", "--model", str(p), "--max-distance", "10", "--step", "10")
    assert code == 0 and out.splitlines()[-1] == "10,-50.000,connected"


def test_coverage(capsys):
    code, out, _ = run(capsys, "coverage", "--grid", "2000")
    assert code == 0 and out.startswith("coverage_fraction 0.9")
    demo = str(config.data_path("demo_scenario.toml"))
    code, out, _ = run(capsys, "coverage", "--scenario", demo, "--grid", "2000")
    assert code == 0


def test_acoustics(capsys):
    code, out, _ = run(capsys, "acoustics", "--rpm", "6000", "--blades", "2", "--harmonics", "1",
                       "--distances", "1,2")
    assert code == 0
    assert out.split("\n\n")[0].splitlines()[1:] == ["100.000,-10.000", "200.000,0.000"]
    assert "2,73.979" in out


def test_calibrate_writes_loadable_config(tmp_path, capsys):
    out_path = tmp_path / "fit.toml"
    code, out, _ = run(capsys, "calibrate", "--out", str(out_path))
    assert code == 0 and json.loads(out)["rms_relative_error"] <= 0.10
    assert config.load_vehicle_config(out_path) == config.load_vehicle_config()


def test_simulate(tmp_path, capsys):
    demo = str(config.data_path("demo_scenario.toml"))
    code, out, _ = run(capsys, "simulate", "--scenario", demo, "--out", str(tmp_path / "r"))
    assert code == 0 and "trace_end" in out
    assert (tmp_path / "r" / "report.json").exists()


def test_exit_codes(tmp_path, capsys):
    assert run(capsys, "perf", "--airspeeds", "a,b")[0] == 1
    assert run(capsys, "perf", "--airspeeds=-10")[0] == 1
    assert run(capsys, "link", "--model", "carrier-pigeon", "--max-distance", "1", "--step", "1")[0] == 1
    assert run(capsys, "perf", "--config", str(tmp_path / "absent.toml"))[0] == 3
    weak = tmp_path / "weak.toml"
    weak.write_text("[vehicle]\nmax_thrust_per_motor = 5.0\n")
    assert run(capsys, "perf", "--config", str(weak))[0] == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    demo = str(config.data_path("demo_scenario.toml"))
    assert run(capsys, "simulate", "--scenario", demo, "--out", str(blocker / "x"))[0] == 3
    assert run(capsys)[0] == 1
    assert run(capsys, "--help")[0] == 0


def test_console_script_module_entry():
    res = subprocess.run([sys.executable, "-m", "quadtrack.cli", "acoustics", "--rpm", "6700",
                          "--distances", "1"], capture_output=True, text=True)
    assert res.returncode == 0 and "distance_m,spl_db" in res.stdout
