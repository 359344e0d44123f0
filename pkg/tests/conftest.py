import pytest

from symwave.builtins import haar_spec, sec5_rescaled_spec
from symwave.cascade import scaling_function
from symwave.transfer import analyze
from symwave.waveletgen import build_family, polyphase


def _pipeline(spec, grid):
    an = analyze(spec)
    res = scaling_function(spec, an.m_used, spectral_ok=an.passes)
    poly = polyphase(an.m_used, spec.A, grid)
    return an, res, poly


@pytest.fixture(scope="session")
def haar():
    an, res, poly = _pipeline(haar_spec(), 64)
    return {"spec": an.spec, "analysis": an, "cascade": res, "poly": poly}


@pytest.fixture(scope="session")
def rescaled():
    spec = sec5_rescaled_spec()
    an, res, poly = _pipeline(spec, 64)
    fam = build_family(res, poly, spec.H)
    return {"spec": spec, "analysis": an, "cascade": res, "poly": poly, "family": fam}


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
