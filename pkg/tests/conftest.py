import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def calibration():
    from quadtrack import perf
    rows, anchors, doc = perf.load_fixtures()
    return perf.calibrate(rows, anchors), rows, anchors, doc


@pytest.fixture(scope="session")
def demo_report():
    from quadtrack import mission
    return mission.run_mission(mission.demo_scenario())


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
