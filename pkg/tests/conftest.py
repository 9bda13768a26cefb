"""Shared fixtures and the acceptance-criterion terminal report."""

import numpy as np
import pytest

import spinmix as sm

# registry of (criterion id, passed, detail) filled by tests/test_acceptance.py
CRITERION_RESULTS = []


def record_criterion(cid: str, ok: bool, detail: str):
    CRITERION_RESULTS.append((cid, bool(ok), detail))
    line = f"[{'PASS' if ok else 'FAIL'}] {cid}: {detail}"
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if not CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, ok, detail in sorted(CRITERION_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {cid}: {detail}")


def wishart_chain(n_sites, rank=4, d=2, beta=1):
    return sm.ChainSpec(n_sites=n_sites, site_dim=d,
                        ensemble=sm.LocalEnsemble.wishart(rank), beta=beta)


@pytest.fixture(scope="session")
def spec_n3():
    return wishart_chain(3)


@pytest.fixture(scope="session")
def spec_n5():
    return wishart_chain(5)


def three_sigma_gap(x, y, se_x, se_y):
    """|x − y| measured in units of the (conservative) combined 3 s.e."""
    return abs(x - y) <= 3.0 * np.hypot(se_x, se_y) + 1e-12
