"""Dual-polarization sampled waveforms, QPSK modulation and power measurement."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMeasurementError
from .jones import PolPower

__all__ = [
    "GRAY_MAP",
    "DualPolWaveform",
    "qpsk_symbols",
    "qpsk_modulate",
    "qpsk_demodulate",
    "launch_with_carrier",
    "mean_power",
    "power_difference_db",
    "apply_jones",
    "waveform_to_csv",
]

_SQRT2 = np.sqrt(2.0)

# Frozen Gray mapping (bit pair -> unit-magnitude symbol); adjacent symbols
# differ in one bit.
GRAY_MAP = {
    (0, 0): (1 + 1j) / _SQRT2,
    (0, 1): (-1 + 1j) / _SQRT2,
    (1, 1): (-1 - 1j) / _SQRT2,
    (1, 0): (1 - 1j) / _SQRT2,
}

_CONSTELLATION = np.array([GRAY_MAP[(0, 0)], GRAY_MAP[(0, 1)], GRAY_MAP[(1, 1)], GRAY_MAP[(1, 0)]])
_BITS_BY_POINT = [(0, 0), (0, 1), (1, 1), (1, 0)]


@dataclass(frozen=True)
class DualPolWaveform:
    """Time-sampled dual-polarization field: samples[n, 2] complex, plus rates."""

    samples: np.ndarray
    sample_rate: float
    symbol_rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 2 or samples.shape[1] != 2:
            raise ValueError(f"samples must have shape (n, 2), got {samples.shape}")
        if self.sample_rate <= 0 or self.symbol_rate <= 0:
            raise ValueError("sample_rate and symbol_rate must be positive")
        ratio = self.sample_rate / self.symbol_rate
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 2:
            raise ValueError(
                f"sample_rate must be an integer multiple (>=2) of symbol_rate, got ratio {ratio}"
            )
        if samples.shape[0] < round(ratio):
            raise ValueError("waveform must contain at least one symbol")

    @property
    def samples_per_symbol(self) -> int:
        return round(self.sample_rate / self.symbol_rate)

    @property
    def n_symbols(self) -> int:
        return self.samples.shape[0] // self.samples_per_symbol

    def with_samples(self, samples: np.ndarray) -> "DualPolWaveform":
        return DualPolWaveform(samples, self.sample_rate, self.symbol_rate)


def qpsk_symbols(bits) -> np.ndarray:
    """Map a flat bit sequence (even length) to Gray-coded QPSK symbols."""
    bits = np.asarray(bits, dtype=int)
    if bits.ndim != 1 or bits.size % 2 != 0:
        raise ValueError(f"bit count must be even, got {bits.size}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    pairs = bits.reshape(-1, 2)
    # Gray index: 00->0, 01->1, 11->2, 10->3
    idx = pairs[:, 0] * 3 + pairs[:, 1] * 1 - 2 * (pairs[:, 0] & pairs[:, 1])
    return _CONSTELLATION[idx]


def qpsk_modulate(bits, symbol_rate: float, samples_per_symbol: int = 8) -> DualPolWaveform:
    """NRZ rectangular-pulse QPSK on the x polarization, zero on y.

    Mean optical power of the modulated polarization is exactly 1
    (constant-modulus symbols, rectangular pulses).
    """
    if samples_per_symbol < 2:
        raise ValueError(f"samples_per_symbol must be >= 2, got {samples_per_symbol}")
    syms = qpsk_symbols(bits)
    if syms.size == 0:
        raise ValueError("need at least one symbol")
    ex = np.repeat(syms, samples_per_symbol)
    samples = np.zeros((ex.size, 2), dtype=complex)
    samples[:, 0] = ex
    return DualPolWaveform(samples, sample_rate=symbol_rate * samples_per_symbol, symbol_rate=symbol_rate)


def qpsk_demodulate(iq) -> np.ndarray:
    """Hard-decision Gray demapping of one-sample-per-symbol complex points."""
    iq = np.asarray(iq, dtype=complex)
    d = np.abs(iq[:, None] - _CONSTELLATION[None, :])
    idx = np.argmin(d, axis=1)
    bits = np.array([_BITS_BY_POINT[i] for i in idx], dtype=int)
    return bits.reshape(-1)


def launch_with_carrier(signal: DualPolWaveform, power_diff_db: float = 15.0) -> DualPolWaveform:
    """Add the continuous-wave carrier on y, power_diff_db above the x signal.

    The carrier shares the transmit laser with the signal (self-homodyne), so
    its phase at launch is 0 and no frequency offset is modeled.
    """
    if np.any(signal.samples[:, 1] != 0):
        raise ValueError("signal must be confined to the x polarization before carrier launch")
    p_sig = float(np.mean(np.abs(signal.samples[:, 0]) ** 2))
    amp = np.sqrt(p_sig * 10.0 ** (power_diff_db / 10.0))
    samples = signal.samples.copy()
    samples[:, 1] = amp
    return signal.with_samples(samples)


def mean_power(w: DualPolWaveform, window_symbols: int | None = None) -> PolPower:
    """Time-averaged |E|^2 per polarization over the leading window."""
    if w.samples.shape[0] == 0:
        raise ValueError("empty waveform")
    if window_symbols is None:
        window_symbols = w.n_symbols
    if window_symbols < 1 or window_symbols > w.n_symbols:
        raise ValueError(f"window_symbols must be in [1, {w.n_symbols}], got {window_symbols}")
    n = window_symbols * w.samples_per_symbol
    seg = w.samples[:n]
    return PolPower(px=float(np.mean(np.abs(seg[:, 0]) ** 2)), py=float(np.mean(np.abs(seg[:, 1]) ** 2)))


def power_difference_db(p: PolPower) -> float:
    """10*log10 of the larger-to-smaller power ratio; always >= 0."""
    if p.px <= 0 or p.py <= 0:
        raise UndefinedMeasurementError(
            f"power difference undefined for zero power (px={p.px}, py={p.py})"
        )
    hi, lo = max(p.px, p.py), min(p.px, p.py)
    return 10.0 * np.log10(hi / lo)


def apply_jones(w: DualPolWaveform, m: np.ndarray) -> DualPolWaveform:
    """Apply a 2x2 Jones matrix to every sample."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    return w.with_samples(w.samples @ m.T)


def waveform_to_csv(w: DualPolWaveform, path) -> None:
    """Dump samples as CSV columns t, re_ex, im_ex, re_ey, im_ey."""
    t = np.arange(w.samples.shape[0]) / w.sample_rate
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "re_ex", "im_ex", "re_ey", "im_ey"])
        for k in range(w.samples.shape[0]):
            ex, ey = w.samples[k]
            writer.writerow([f"{t[k]:.12e}", f"{ex.real:.12e}", f"{ex.imag:.12e}",
                             f"{ey.real:.12e}", f"{ey.imag:.12e}"])
