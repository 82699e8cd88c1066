import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wcstab import parse_problem

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def problem(text: str):
    return parse_problem(text)


@pytest.fixture
def lasota():
    def make(c=-0.5, p=2.0, **extra):
        doc = f"family = lasota\nh_const = {c!r}\np = {p!r}\n"
        doc += "".join(f"{k} = {v}\n" for k, v in extra.items())
        return parse_problem(doc)
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- acceptance summary --------------------------------------------------------

_AC_TITLES = {
    "AC1": "Lasota L^p threshold h(0) <= -1/p",
    "AC2": "generalized threshold c <= -r/p",
    "AC3": "Sobolev thresholds",
    "AC4": "operator norm and witness oracle",
    "AC5": "change-of-variables identity",
    "AC6": "stability / hypercyclicity trichotomy",
    "AC7": "two-dimensional product flow",
    "AC8": "semiflow fidelity",
    "AC9": "witness decay slopes",
    "AC10": "worked example regressions",
}
_AC_RESULTS: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(id): test belongs to an acceptance criterion")


def pytest_runtest_logreport(report):
    ids = getattr(report, "acceptance_ids", None)
    if ids and (report.when == "call" or report.failed or report.skipped):
        for ac in ids:
            _AC_RESULTS.setdefault(ac, []).append(report.passed if report.when == "call" else False)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marks = [m.args[0] for m in item.iter_markers("acceptance")]
    outcome.get_result().acceptance_ids = marks


def pytest_terminal_summary(terminalreporter):
    if not _AC_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for ac in sorted(_AC_RESULTS, key=lambda k: int(k[2:])):
        res = _AC_RESULTS[ac]
        status = "PASS" if all(res) else "FAIL"
        terminalreporter.write_line(f"{ac:<5} {status}  {_AC_TITLES.get(ac, '')} ({sum(res)}/{len(res)} checks)")
