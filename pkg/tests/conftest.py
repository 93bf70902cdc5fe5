import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(id): marks a test as one numbered acceptance criterion"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    cid = marker.args[0] if marker.args else item.name
    status = "PASS" if report.passed else "FAIL"
    capman = item.config.pluginmanager.getplugin("capturemanager")
    line = f"ACCEPTANCE {cid}: {status}"
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print(f"\n{line}")
    else:
        print(f"\n{line}")
