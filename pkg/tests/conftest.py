import numpy as np
import pytest

from covcalc import kernels as kr

# one representative per family, all with a covariance measure
FAMILIES = {
    "fbm": kr.fbm(0.7),
    "bifbm": kr.bifbm(0.75, 2 / 3),
    "bifbm_smooth": kr.bifbm(0.9, 0.6),
    "martingale": kr.martingale("identity"),
    "martingale_sq": kr.martingale("square"),
    "mixedfbm": kr.mixed_fbm(0.8),
    "statinc": kr.stationary("paper_piecewise", 0.8),
    "bm": kr.bm(),
}


@pytest.fixture(params=sorted(FAMILIES))
def family(request):
    return FAMILIES[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def within(est, ref, sigmas=4.0):
    return abs(est.mean - ref) <= sigmas * est.std_error


# one line per acceptance criterion, echoed in the terminal summary
CRITERIA_LINES = {}


def record_criterion(number, title, ok, detail):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    CRITERIA_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA_LINES):
            terminalreporter.write_line(CRITERIA_LINES[k])
