import functools

import pytest

from wavelab.wave_family import WaveParams, bbm, mbbm

# reference waves used across the suite
W0 = WaveParams(0.0, -0.05, 2.0, 1.0)          # mBBM dnoidal
W1 = WaveParams(0.0, 0.10, 2.0, 0.0)           # mBBM cnoidal, symmetric
WB = WaveParams(0.05, -0.10, 2.0, 1.05)        # BBM (f = u^2)
DN = WaveParams(0.0, -0.01, 2.0, 1.0)          # mBBM dnoidal near the separatrix
CN = WaveParams(0.0, 0.02, 2.0, 0.0)           # mBBM long cnoidal
W0_C15 = WaveParams(0.0, -0.05, 1.5, 0.7)      # dnoidal off the reference speed

MBBM = mbbm()
BBM = bbm()

REFERENCE = {"W0": (W0, MBBM), "W1": (W1, MBBM), "WB": (WB, BBM)}
ORACLE_WAVES = {"W0": (W0, MBBM), "W1": (W1, MBBM), "WB": (WB, BBM), "DN": (DN, MBBM),
                "CN": (CN, MBBM), "W0_C15": (W0_C15, MBBM)}


@functools.lru_cache(maxsize=None)
def cached_table(params, nl):
    from wavelab.wave_family import gradient_table
    return gradient_table(params, nl)


@functools.lru_cache(maxsize=None)
def cached_origin(params, nl):
    from wavelab.evans import origin_derivatives
    return origin_derivatives(params, nl)


@functools.lru_cache(maxsize=None)
def cached_report(params, nl):
    from wavelab.indices import classify
    return classify(params, nl, table=cached_table(params, nl))


@pytest.fixture(scope="session")
def w0():
    return W0, MBBM


@pytest.fixture(scope="session")
def w1():
    return W1, MBBM


ACCEPTANCE_LINES = []


def report(number: int, ok: bool, detail: str):
    """Record and print one acceptance line."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
