import numpy as np
import pytest

from qdscatter.pipeline import default_bundle, purcell_rate, tables_for


@pytest.fixture(scope="session")
def bundle():
    return default_bundle()


@pytest.fixture(scope="session")
def tables(bundle):
    return tables_for(bundle)


@pytest.fixture(scope="session")
def gamma_p(bundle, tables):
    return purcell_rate(bundle, tables)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def point_025(bundle, tables, gamma_p):
    """Resonant default-parameter point at saturation 0.25."""
    from dataclasses import replace

    from qdscatter.pipeline import omega_for_saturation, run_point
    from qdscatter.units import DriveParams

    om = omega_for_saturation(0.25, gamma_p, tables.b_factor)
    return run_point(replace(bundle, drive=DriveParams(om, 0.0)), tables)


ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def _report(n, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
