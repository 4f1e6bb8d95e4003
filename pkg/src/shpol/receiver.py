"""Self-homodyne reception: carrier mixing, phase recovery, EVM/BER metrics."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMeasurementError
from .waveform import DualPolWaveform, qpsk_demodulate

__all__ = [
    "RxResult",
    "arm_scalar",
    "homodyne_detect",
    "phase_recover",
    "evm",
    "constellation_export",
    "best_rotation_ber",
    "demodulate_frame",
]

_IDEAL = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2.0)


@dataclass(frozen=True)
class RxResult:
    iq_samples: np.ndarray
    evm_percent: float
    ber: float
    recovered_phase: float


def arm_scalar(arm: DualPolWaveform) -> np.ndarray:
    """Collapse a splitter-arm waveform (one zero component) to a scalar field."""
    return arm.samples[:, 0] + arm.samples[:, 1]


def homodyne_detect(signal_arm: DualPolWaveform, carrier_arm: DualPolWaveform) -> np.ndarray:
    """Ideal 90-degree-hybrid mixing of the signal arm with the carrier arm.

    Per sample: E_sig * conj(E_carrier) / |E_carrier|, then mid-symbol
    decimation to one complex point per symbol.
    """
    if signal_arm.samples.shape != carrier_arm.samples.shape:
        raise ValueError("signal and carrier arms must have the same length")
    if (signal_arm.sample_rate != carrier_arm.sample_rate
            or signal_arm.symbol_rate != carrier_arm.symbol_rate):
        raise ValueError("signal and carrier arms must share sample and symbol rates")
    sig = arm_scalar(signal_arm)
    car = arm_scalar(carrier_arm)
    if float(np.mean(np.abs(car) ** 2)) <= 0:
        raise UndefinedMeasurementError("carrier arm has zero power")
    mag = np.abs(car)
    mag[mag == 0] = 1.0  # isolated zero-crossing samples carry no beat signal
    mixed = sig * np.conj(car) / mag
    spp = signal_arm.samples_per_symbol
    n_sym = signal_arm.n_symbols
    return mixed[: n_sym * spp].reshape(n_sym, spp)[:, spp // 2]


def phase_recover(iq) -> tuple[np.ndarray, float]:
    """Estimate and remove one constant phase via the fourth-power method.

    phi_hat = (arg(mean(iq^4)) - pi) / 4, wrapped to [-pi/4, pi/4); the
    inherent pi/2 quadrant ambiguity of QPSK remains for the caller.
    """
    iq = np.asarray(iq, dtype=complex)
    if iq.size < 64:
        raise ValueError(f"need at least 64 symbols for phase recovery, got {iq.size}")
    m4 = np.mean(iq ** 4)
    if np.abs(m4) == 0:
        raise UndefinedMeasurementError("degenerate input: fourth-power moment is zero")
    phase = (np.angle(m4) - np.pi) / 4.0
    phase = (phase + np.pi / 4.0) % (np.pi / 2.0) - np.pi / 4.0
    return iq * np.exp(-1j * phase), float(phase)


def evm(iq) -> float:
    """RMS error vs the nearest ideal QPSK point, percent of constellation RMS."""
    iq = np.asarray(iq, dtype=complex)
    if iq.size == 0:
        raise ValueError("empty input")
    d = np.abs(iq[:, None] - _IDEAL[None, :])
    err = d.min(axis=1)
    return float(100.0 * np.sqrt(np.mean(err ** 2)))  # ideal points have unit magnitude


def constellation_export(iq, path) -> None:
    """Write one CSV row (re, im) per symbol."""
    iq = np.asarray(iq, dtype=complex)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re", "im"])
        for z in iq:
            writer.writerow([f"{z.real:.12e}", f"{z.imag:.12e}"])


def best_rotation_ber(iq, bits) -> float:
    """Bit error ratio after trying the four pi/2 rotations against known bits.

    Resolves the quadrant ambiguity left by fourth-power phase recovery;
    a harness/test concern, not a link feature.
    """
    iq = np.asarray(iq, dtype=complex)
    bits = np.asarray(bits, dtype=int)
    best = 1.0
    for k in range(4):
        rec = qpsk_demodulate(iq * np.exp(1j * k * np.pi / 2.0))
        n = min(rec.size, bits.size)
        best = min(best, float(np.mean(rec[:n] != bits[:n])))
    return best


def demodulate_frame(signal_arm: DualPolWaveform, carrier_arm: DualPolWaveform,
                     bits=None) -> RxResult:
    """Full receive chain: mix, normalize to unit RMS, phase-recover, score."""
    iq = homodyne_detect(signal_arm, carrier_arm)
    rms = np.sqrt(np.mean(np.abs(iq) ** 2))
    if rms == 0:
        raise UndefinedMeasurementError("received frame has zero power")
    iq = iq / rms
    corrected, phase = phase_recover(iq)
    ber = best_rotation_ber(corrected, bits) if bits is not None else float("nan")
    return RxResult(iq_samples=corrected, evm_percent=evm(corrected), ber=ber,
                    recovered_phase=phase)
