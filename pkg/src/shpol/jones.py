"""Jones-calculus building blocks: rotators, waveplates, beam splitters/combiners.

Conventions: engineering phasors exp(j*phi), all angles in radians, positive
rotation angle is counter-clockwise. Jones vectors are complex arrays whose
last axis has length 2 (x, y field amplitudes); Jones matrices are 2x2
complex arrays. All element constructors here return unitary matrices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PolPower",
    "rotator",
    "phase_plate",
    "waveplate",
    "quarter_wave",
    "half_wave",
    "composite_channel",
    "pbs_split",
    "pbc_combine",
    "power_of",
    "total_power",
    "is_unitary",
]


@dataclass(frozen=True)
class PolPower:
    """Mean optical power per polarization, linear units."""

    px: float
    py: float

    def __post_init__(self):
        if self.px < 0 or self.py < 0:
            raise ValueError(f"powers must be non-negative, got px={self.px}, py={self.py}")

    @property
    def total(self) -> float:
        return self.px + self.py


def _check_finite_angle(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def rotator(theta: float) -> np.ndarray:
    """Real rotation matrix [[cos, -sin], [sin, cos]] (determinant 1)."""
    theta = _check_finite_angle("theta", theta)
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def phase_plate(phi: float) -> np.ndarray:
    """Differential phase between polarizations: diag(exp(j*phi), exp(-j*phi))."""
    phi = _check_finite_angle("phi", phi)
    return np.array([[np.exp(1j * phi), 0.0], [0.0, np.exp(-1j * phi)]], dtype=complex)


def waveplate(retardance: float, azimuth: float) -> np.ndarray:
    """Linear retarder: R(azimuth) @ diag(e^{-j*G/2}, e^{j*G/2}) @ R(-azimuth)."""
    retardance = _check_finite_angle("retardance", retardance)
    azimuth = _check_finite_angle("azimuth", azimuth)
    half = retardance / 2.0
    core = np.array([[np.exp(-1j * half), 0.0], [0.0, np.exp(1j * half)]], dtype=complex)
    return rotator(azimuth) @ core @ rotator(-azimuth)


def quarter_wave(azimuth: float) -> np.ndarray:
    return waveplate(np.pi / 2.0, azimuth)


def half_wave(azimuth: float) -> np.ndarray:
    return waveplate(np.pi, azimuth)


def composite_channel(theta: float, phi: float) -> np.ndarray:
    """Lumped channel matrix R(theta) @ diag(e^{j*phi}, e^{-j*phi}) @ R(-theta).

    Models matched splitter/combiner misalignment (theta) sandwiching the
    fiber's differential phase (phi). Reduces to phase_plate(phi) at theta=0
    and to identity at phi=0.
    """
    return rotator(theta) @ phase_plate(phi) @ rotator(-theta)


def _as_jones(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.shape[-1] != 2:
        raise ValueError(f"Jones vector last axis must have length 2, got shape {v.shape}")
    if not np.all(np.isfinite(v.view(float))):
        raise ValueError("Jones vector entries must be finite")
    return v


def pbs_split(v, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Polarization beam splitter with axis misalignment theta.

    Returns (x_arm, y_arm) Jones vectors: the x arm carries
    Ex*cos(theta) - Ey*sin(theta) with zero y component; the y arm carries
    Ex*sin(theta) + Ey*cos(theta) with zero x component. Arm powers sum to
    the input power (the underlying rotation is unitary).
    """
    v = _as_jones(v)
    theta = _check_finite_angle("theta", theta)
    c, s = np.cos(theta), np.sin(theta)
    ex, ey = v[..., 0], v[..., 1]
    x_arm = np.zeros_like(v)
    y_arm = np.zeros_like(v)
    x_arm[..., 0] = ex * c - ey * s
    y_arm[..., 1] = ex * s + ey * c
    return x_arm, y_arm


def pbc_combine(x_arm, y_arm, theta: float) -> np.ndarray:
    """Polarization beam combiner, inverse convention of pbs_split.

    Projects the arms onto their nominal axes (x component of the x arm,
    y component of the y arm) and applies R(-theta), so that combining the
    two outputs of pbs_split at the same theta restores the input.
    """
    x_arm = _as_jones(x_arm)
    y_arm = _as_jones(y_arm)
    theta = _check_finite_angle("theta", theta)
    c, s = np.cos(theta), np.sin(theta)
    a = x_arm[..., 0]
    b = y_arm[..., 1]
    out = np.zeros(np.broadcast(a, b).shape + (2,), dtype=complex)
    out[..., 0] = a * c + b * s
    out[..., 1] = -a * s + b * c
    return out


def power_of(v) -> PolPower:
    """Instantaneous |E|^2 per polarization of a single Jones vector."""
    v = _as_jones(v)
    if v.ndim != 1:
        raise ValueError("power_of expects a single Jones vector; use waveform.mean_power for frames")
    return PolPower(px=float(np.abs(v[0]) ** 2), py=float(np.abs(v[1]) ** 2))


def total_power(v) -> float:
    v = _as_jones(v)
    return float(np.sum(np.abs(v) ** 2, axis=-1).mean()) if v.ndim > 1 else float(np.sum(np.abs(v) ** 2))


def is_unitary(m: np.ndarray, tol: float = 1e-12) -> bool:
    m = np.asarray(m, dtype=complex)
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(2))) < tol)
