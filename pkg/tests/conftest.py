import sys

import numpy as np
import pytest

from dsa_marl.topology import NetworkRealization


def make_realization(gain, active_aps, n_crs, ap_cr_tx_gain=None, seed=None):
    """Realization with hand-set gains; positions are placeholders."""
    gain = np.asarray(gain, dtype=float)
    active_aps = np.asarray(active_aps, dtype=np.int64)
    n_tx = gain.shape[0]
    n_aps = n_tx - n_crs
    if ap_cr_tx_gain is None:
        ap_cr_tx_gain = np.full((n_aps, n_crs), 1e-12)
    return NetworkRealization(
        ap_positions=np.zeros((n_aps, 2)),
        active_aps=active_aps,
        pn_rx_positions=np.zeros((len(active_aps), 2)),
        cr_tx_positions=np.zeros((n_crs, 2)),
        cr_rx_positions=np.zeros((n_crs, 2)),
        gain=gain,
        shadowing_db=np.zeros_like(gain),
        ap_cr_tx_gain=np.asarray(ap_cr_tx_gain, dtype=float),
        seed=seed,
    )


@pytest.fixture
def hand_realization():
    return make_realization


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
