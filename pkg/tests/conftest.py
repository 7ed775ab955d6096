import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(num, label): acceptance checklist item; one PASS/FAIL "
        "line is printed per marked test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    tr = item.config.pluginmanager.get_plugin("terminalreporter")
    if tr is None:
        return
    num, label = marker.args
    status = "PASS" if rep.passed else "FAIL"
    tr.write_line(f"criterion {num:2d}: {status}  {label}  [{rep.duration:.2f}s]")
