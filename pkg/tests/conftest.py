"""Shared fixtures.

The two Monte-Carlo sweeps below back several acceptance criteria and take a
couple of minutes combined at 10^4 trials, so they are session-scoped and run
only when an acceptance test requests them.
"""

import pytest

from qceprec import SweepConfig, run_sweep

SWEEP_SEED = 2024


@pytest.fixture(scope="session")
def snr_sweep():
    """K=4, N=16, M=8, L=8 sweep over SNR for the proposed and MSM solvers."""
    cfg = SweepConfig(k=4, n=16, m_order=8, l_values=(8,),
                      snr_db_values=(0.0, 5.0, 10.0, 15.0), trials=10000,
                      seed=SWEEP_SEED, algorithms=("proposed", "msm"))
    return run_sweep(cfg)


@pytest.fixture(scope="session")
def l_sweep():
    """Same system at SNR 15 dB swept over L, proposed against zero forcing."""
    cfg = SweepConfig(k=4, n=16, m_order=8, l_values=(4, 8, 16, 32),
                      snr_db_values=(15.0,), trials=10000,
                      seed=SWEEP_SEED, algorithms=("proposed", "zf"))
    return run_sweep(cfg)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdict lines past pytest's output capture."""
    try:
        from tests.test_acceptance import REPORT_LINES
    except ImportError:
        return
    if REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in REPORT_LINES:
            terminalreporter.write_line(line)
