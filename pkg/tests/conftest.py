import numpy as np
import pytest

from shpol.jones import composite_channel
from shpol.waveform import apply_jones, launch_with_carrier, qpsk_modulate

SYMBOL_RATE = 15e9


def make_launch(n_symbols=4096, power_diff_db=15.0, seed=1, spp=8):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, 2 * n_symbols)
    tx = qpsk_modulate(bits, SYMBOL_RATE, spp)
    return launch_with_carrier(tx, power_diff_db), bits


def make_received(theta, phi, n_symbols=4096, power_diff_db=15.0, seed=1):
    launched, bits = make_launch(n_symbols, power_diff_db, seed)
    a = composite_channel(theta, phi)
    return apply_jones(launched, a), a, bits


def make_balanced_launch(n_symbols=1024, power_diff_db=15.0, spp=8):
    """Launch frame whose symbol mean is exactly zero (all four symbols cycled),
    so the signal-carrier cross-coherency vanishes and closed-form powers are
    exact."""
    assert n_symbols % 4 == 0
    bits = np.tile([0, 0, 0, 1, 1, 1, 1, 0], n_symbols // 4)
    tx = qpsk_modulate(bits, SYMBOL_RATE, spp)
    return launch_with_carrier(tx, power_diff_db), bits


@pytest.fixture(scope="session")
def launch_frame():
    return make_launch()
