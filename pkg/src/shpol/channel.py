"""Fiber and device impairments: polarization mixing, chromatic dispersion, noise."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .jones import composite_channel
from .waveform import DualPolWaveform, apply_jones

__all__ = [
    "SPEED_OF_LIGHT",
    "REF_BANDWIDTH_HZ",
    "ChannelConfig",
    "ChannelReport",
    "beta2_s2_per_m",
    "apply_polarization_impairment",
    "apply_chromatic_dispersion",
    "add_noise",
    "channel_report",
    "FiberChannel",
]

SPEED_OF_LIGHT = 299792458.0  # m/s
REF_BANDWIDTH_HZ = 12.5e9  # 0.1 nm at 1550 nm, the usual OSNR reference


@dataclass
class ChannelConfig:
    """Static channel: lumped polarization matrix + scalar dispersion + noise.

    osnr_db=None means noiseless. Dispersion D in ps/(nm km); standard SSMF
    defaults D=17, lambda=1550 nm.
    """

    theta: float = 0.0
    phi: float = 0.0
    fiber_length_km: float = 0.0
    dispersion_ps_nm_km: float = 17.0
    center_wavelength_nm: float = 1550.0
    osnr_db: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("theta", "phi", "fiber_length_km", "dispersion_ps_nm_km", "center_wavelength_nm"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.fiber_length_km < 0:
            raise ValueError(f"fiber_length_km must be >= 0, got {self.fiber_length_km}")
        if self.center_wavelength_nm <= 0:
            raise ValueError("center_wavelength_nm must be positive")


@dataclass(frozen=True)
class ChannelReport:
    """Diagnostics of what the channel applied (not observable to the controller)."""

    applied_matrix: np.ndarray
    beta2_s2_per_m: float
    fiber_length_m: float
    noise_sigma_per_pol: float


def beta2_s2_per_m(cfg: ChannelConfig) -> float:
    """Group-velocity dispersion beta2 = -D lambda^2 / (2 pi c), SI units."""
    d_si = cfg.dispersion_ps_nm_km * 1e-6  # ps/(nm km) -> s/m^2
    lam = cfg.center_wavelength_nm * 1e-9
    return -d_si * lam ** 2 / (2.0 * np.pi * SPEED_OF_LIGHT)


def apply_polarization_impairment(w: DualPolWaveform, cfg: ChannelConfig) -> DualPolWaveform:
    """Multiply every sample by the lumped matrix R(theta) D(phi) R(-theta)."""
    return apply_jones(w, composite_channel(cfg.theta, cfg.phi))


def apply_chromatic_dispersion(w: DualPolWaveform, cfg: ChannelConfig) -> DualPolWaveform:
    """All-pass dispersion filter H(w) = exp(-j beta2/2 w^2 L), per polarization.

    Each polarization is filtered independently, so cross-polarization
    leakage is exactly zero. Circular FFT filtering; frames whose length is
    not a power of two are zero-padded to the next power of two and cropped
    back (power preservation is then only approximate at the frame edges).
    """
    if cfg.fiber_length_km == 0 or cfg.dispersion_ps_nm_km == 0:
        return w
    n = w.samples.shape[0]
    n_fft = 1 << (n - 1).bit_length()
    x = w.samples
    if n_fft != n:
        x = np.vstack([x, np.zeros((n_fft - n, 2), dtype=complex)])
    omega = 2.0 * np.pi * np.fft.fftfreq(n_fft, d=1.0 / w.sample_rate)
    h = np.exp(-1j * (beta2_s2_per_m(cfg) / 2.0) * omega ** 2 * cfg.fiber_length_km * 1e3)
    out = np.fft.ifft(np.fft.fft(x, axis=0) * h[:, None], axis=0)
    return w.with_samples(out[:n])


def add_noise(w: DualPolWaveform, cfg: ChannelConfig) -> DualPolWaveform:
    """Add circular complex Gaussian noise per polarization, sized from OSNR.

    OSNR is referenced to REF_BANDWIDTH_HZ; the in-band noise power scales
    with the simulation bandwidth (sample rate) and is split evenly between
    the two polarizations. Deterministic under cfg.rng_seed.
    """
    if cfg.osnr_db is None:
        return w
    rng = np.random.default_rng(cfg.rng_seed)
    p_tot = float(np.mean(np.sum(np.abs(w.samples) ** 2, axis=1)))
    osnr_lin = 10.0 ** (cfg.osnr_db / 10.0)
    var_pol = p_tot / osnr_lin * (w.sample_rate / REF_BANDWIDTH_HZ) / 2.0
    n = w.samples.shape[0]
    noise = np.sqrt(var_pol / 2.0) * (rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2)))
    return w.with_samples(w.samples + noise)


def channel_report(w: DualPolWaveform, cfg: ChannelConfig) -> ChannelReport:
    sigma = 0.0
    if cfg.osnr_db is not None:
        p_tot = float(np.mean(np.sum(np.abs(w.samples) ** 2, axis=1)))
        sigma = float(
            np.sqrt(p_tot / 10.0 ** (cfg.osnr_db / 10.0) * (w.sample_rate / REF_BANDWIDTH_HZ) / 2.0)
        )
    return ChannelReport(
        applied_matrix=composite_channel(cfg.theta, cfg.phi),
        beta2_s2_per_m=beta2_s2_per_m(cfg),
        fiber_length_m=cfg.fiber_length_km * 1e3,
        noise_sigma_per_pol=sigma,
    )


class FiberChannel(BaseEstimator, TransformerMixin):
    """sklearn-style transformer wrapping the full channel.

    transform order: polarization impairment, dispersion (the two commute),
    then additive noise just before the receiver splitter.
    """

    def __init__(self, theta=0.0, phi=0.0, fiber_length_km=0.0, dispersion_ps_nm_km=17.0,
                 center_wavelength_nm=1550.0, osnr_db=None, rng_seed=0):
        self.theta = theta
        self.phi = phi
        self.fiber_length_km = fiber_length_km
        self.dispersion_ps_nm_km = dispersion_ps_nm_km
        self.center_wavelength_nm = center_wavelength_nm
        self.osnr_db = osnr_db
        self.rng_seed = rng_seed

    def _config(self) -> ChannelConfig:
        return ChannelConfig(
            theta=self.theta,
            phi=self.phi,
            fiber_length_km=self.fiber_length_km,
            dispersion_ps_nm_km=self.dispersion_ps_nm_km,
            center_wavelength_nm=self.center_wavelength_nm,
            osnr_db=self.osnr_db,
            rng_seed=self.rng_seed,
        )

    def fit(self, X: DualPolWaveform, y=None):
        self.config_ = self._config()
        return self

    def transform(self, X: DualPolWaveform) -> DualPolWaveform:
        cfg = self._config()
        out = apply_polarization_impairment(X, cfg)
        out = apply_chromatic_dispersion(out, cfg)
        return add_noise(out, cfg)
