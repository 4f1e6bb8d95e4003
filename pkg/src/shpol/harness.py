"""Experiment orchestration: configuration, link runs, CSV/report emission."""
from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelConfig, FiberChannel
from .controller import AdaptivePolarizationController, Plant, power_profile
from .errors import ConfigError
from .jones import composite_channel, pbs_split
from .receiver import constellation_export, demodulate_frame
from .waveform import (DualPolWaveform, launch_with_carrier, mean_power,
                       power_difference_db, qpsk_modulate)

__all__ = [
    "ControllerSettings",
    "LinkConfig",
    "load_config",
    "default_config",
    "run_simulate",
    "run_profile",
    "run_dispersion_check",
    "run_converge_trace",
    "format_summary",
]

# Plant angles that leave the carrier and signal mixed to roughly a 6 dB
# receive power difference at a 15 dB launch (theta = pi/4, sin^2(2*theta)
# sin^2(phi) ~= 0.18). Used as the default demonstration channel.
DEFAULT_THETA = float(np.pi / 4.0)
DEFAULT_PHI = 0.4376886047790343


@dataclass
class ControllerSettings:
    mu: float = 0.5
    delta: float = 0.01
    tol_power_diff_db: float | None = None  # None -> launch power diff - 1 dB
    max_iter: int = 500
    grad_tol: float = 1e-6
    mu_min: float = 1e-4
    restarts: int = 3
    theta_rx: float = 0.0


@dataclass
class LinkConfig:
    bit_rate: float = 30e9
    samples_per_symbol: int = 8
    frame_symbols: int = 4096
    power_diff_db: float = 15.0
    rng_seed: int = 1
    channel: ChannelConfig = field(default_factory=lambda: ChannelConfig(
        theta=DEFAULT_THETA, phi=DEFAULT_PHI, fiber_length_km=20.0))
    controller: ControllerSettings = field(default_factory=ControllerSettings)

    def __post_init__(self):
        if self.bit_rate <= 0:
            raise ConfigError("link.bit_rate", "must be positive")
        if self.samples_per_symbol < 2:
            raise ConfigError("link.samples_per_symbol", "must be >= 2")
        if self.frame_symbols < 1:
            raise ConfigError("link.frame_symbols", "must be >= 1")

    @property
    def symbol_rate(self) -> float:
        return self.bit_rate / 2.0  # QPSK: two bits per symbol

    @property
    def tol_power_diff_db(self) -> float:
        if self.controller.tol_power_diff_db is not None:
            return self.controller.tol_power_diff_db
        return self.power_diff_db - 1.0


def default_config() -> LinkConfig:
    return LinkConfig()


_SCHEMA = {
    "link": {
        "bit_rate": float, "samples_per_symbol": int, "frame_symbols": int,
        "power_diff_db": float, "rng_seed": int,
    },
    "channel": {
        "theta": float, "phi": float, "fiber_length_km": float,
        "dispersion_ps_nm_km": float, "center_wavelength_nm": float,
        "osnr_db": "osnr", "rng_seed": int,
    },
    "controller": {
        "mu": float, "delta": float, "tol_power_diff_db": float,
        "max_iter": int, "grad_tol": float, "mu_min": float,
        "restarts": int, "theta_rx": float,
    },
}


def load_config(path) -> LinkConfig:
    """Parse a key = value sectioned config file into a LinkConfig."""
    parser = configparser.ConfigParser()
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc)) from exc
    if not read:
        raise ConfigError("config", f"cannot read {path}")
    values: dict[str, dict] = {"link": {}, "channel": {}, "controller": {}}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            kind = _SCHEMA[section][key]
            try:
                if kind == "osnr":
                    values[section][key] = None if raw.strip().lower() == "noiseless" else float(raw)
                else:
                    values[section][key] = kind(float(raw)) if kind is int else kind(raw)
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}", f"invalid value {raw!r}") from exc
    try:
        channel = ChannelConfig(**{**{"theta": DEFAULT_THETA, "phi": DEFAULT_PHI,
                                      "fiber_length_km": 20.0}, **values["channel"]})
    except ValueError as exc:
        raise ConfigError("channel", str(exc)) from exc
    controller = ControllerSettings(**values["controller"])
    if controller.mu <= 0:
        raise ConfigError("controller.mu", "must be positive")
    if controller.max_iter < 1:
        raise ConfigError("controller.max_iter", "must be >= 1")
    return LinkConfig(channel=channel, controller=controller, **values["link"])


def _transmit(cfg: LinkConfig) -> tuple[DualPolWaveform, np.ndarray]:
    rng = np.random.default_rng(cfg.rng_seed)
    bits = rng.integers(0, 2, size=2 * cfg.frame_symbols)
    tx = qpsk_modulate(bits, cfg.symbol_rate, cfg.samples_per_symbol)
    return launch_with_carrier(tx, cfg.power_diff_db), bits


def _receive(cfg: LinkConfig) -> tuple[DualPolWaveform, np.ndarray]:
    launched, bits = _transmit(cfg)
    ch = FiberChannel(**vars(cfg.channel))
    return ch.fit(launched).transform(launched), bits


def _fit_controller(cfg: LinkConfig, received: DualPolWaveform) -> AdaptivePolarizationController:
    s = cfg.controller
    pc = AdaptivePolarizationController(
        mu=s.mu, delta=s.delta, tol_power_diff_db=cfg.tol_power_diff_db,
        max_iter=s.max_iter, grad_tol=s.grad_tol, mu_min=s.mu_min,
        restarts=s.restarts, theta_rx=s.theta_rx, restart_seed=cfg.rng_seed,
    )
    a = composite_channel(cfg.channel.theta, cfg.channel.phi)
    return pc.fit(received, channel_matrix=a)


def _split_and_demod(w: DualPolWaveform, theta_rx: float, bits, signal_is_lower: bool):
    x_arm, y_arm = pbs_split(w.samples, theta_rx)
    wx = w.with_samples(x_arm)
    wy = w.with_samples(y_arm)
    p = mean_power(w)
    if signal_is_lower and p.py < p.px:
        wx, wy = wy, wx  # signal port takes the lower-power branch
    return demodulate_frame(wx, wy, bits=bits)


def run_simulate(cfg: LinkConfig, controller_on: bool = True, out_dir=None) -> dict:
    """Transmit, impair, optionally converge the controller, then receive.

    Returns an ordered flat summary; when out_dir is given, writes
    constellation_before.csv / constellation_after.csv and trace.csv.
    """
    received, bits = _receive(cfg)
    theta_rx = cfg.controller.theta_rx
    p_before = mean_power(received)
    diff_before = power_difference_db(p_before)
    rx_before = _split_and_demod(received, theta_rx, bits, signal_is_lower=True)

    summary = {
        "controller": "on" if controller_on else "off",
        "rng_seed": cfg.rng_seed,
        "frame_symbols": cfg.frame_symbols,
        "bit_rate": cfg.bit_rate,
        "power_diff_before_db": diff_before,
        "evm_before_pct": rx_before.evm_percent,
        "ber_before": rx_before.ber,
    }

    trace = None
    if controller_on:
        pc = _fit_controller(cfg, received)
        separated = pc.transform(received)
        p_after = mean_power(separated)
        rx_after = _split_and_demod(separated, theta_rx, bits, signal_is_lower=False)
        report = pc.report_
        summary.update({
            "power_diff_after_db": power_difference_db(p_after),
            "converged": int(report.converged),
            "iterations": report.iterations,
            "c1": pc.c1_,
            "c2": pc.c2_,
            "residual_offdiag": report.residual_offdiag,
            "residual_phase": report.residual_phase,
            "evm_after_pct": rx_after.evm_percent,
            "ber_after": rx_after.ber,
        })
        trace = pc.state_.history
    else:
        summary.update({
            "power_diff_after_db": diff_before,
            "converged": 0,
            "iterations": 0,
            "evm_after_pct": rx_before.evm_percent,
            "ber_after": rx_before.ber,
        })
        rx_after = rx_before

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        constellation_export(rx_before.iq_samples, out / "constellation_before.csv")
        constellation_export(rx_after.iq_samples, out / "constellation_after.csv")
        if trace is not None:
            write_trace_csv(trace, out / "trace.csv")
    return summary


def write_trace_csv(history, path) -> None:
    """Convergence trace: iteration, angles, normalized arm powers, diff."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "c1", "c2", "p_signal_arm", "p_carrier_arm", "power_diff_db"])
        for i, (c1, c2, p) in enumerate(history):
            q = 1.0 - p
            diff = 10.0 * np.log10(max(p, q) / min(p, q)) if min(p, q) > 0 else float("inf")
            writer.writerow([i, f"{c1:.12e}", f"{c2:.12e}", f"{p:.12e}", f"{q:.12e}", f"{diff:.6f}"])


def run_profile(cfg: LinkConfig, grid_n: int, out_dir=None) -> dict:
    """Power-profile sweep over the controller angles; optionally CSV export."""
    received, _ = _receive(cfg)
    plant = Plant(received, theta_rx=cfg.controller.theta_rx,
                  channel_matrix=composite_channel(cfg.channel.theta, cfg.channel.phi))
    c1s, c2s, p = power_profile(plant, grid_n)
    summary = {
        "grid_n": grid_n,
        "p_min": float(p.min()),
        "p_max": float(p.max()),
        "n_global_minima": int(np.sum(np.abs(p - p.min()) < 1e-9)),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "profile.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["c1", "c2", "P"])
            for i, c1 in enumerate(c1s):
                for k, c2 in enumerate(c2s):
                    writer.writerow([f"{c1:.12e}", f"{c2:.12e}", f"{p[i, k]:.12e}"])
    return summary


def run_dispersion_check(cfg: LinkConfig, out_dir=None) -> dict:
    """Compare convergence and EVM with dispersion on vs off.

    Dispersion spreads the received symbols but never couples the
    polarizations, so the converged power separation should be unaffected.
    """
    import dataclasses

    on = run_simulate(cfg, controller_on=True, out_dir=out_dir)
    cfg_off = dataclasses.replace(cfg, channel=dataclasses.replace(cfg.channel, dispersion_ps_nm_km=0.0))
    off = run_simulate(cfg_off, controller_on=True)
    return {
        "power_diff_dispersed_db": on["power_diff_after_db"],
        "power_diff_no_dispersion_db": off["power_diff_after_db"],
        "power_diff_delta_db": abs(on["power_diff_after_db"] - off["power_diff_after_db"]),
        "evm_dispersed_pct": on["evm_after_pct"],
        "evm_no_dispersion_pct": off["evm_after_pct"],
        "converged": int(bool(on["converged"]) and bool(off["converged"])),
    }


def run_converge_trace(cfg: LinkConfig, out_dir=None) -> dict:
    """Fit the controller and emit its iteration trace."""
    received, _ = _receive(cfg)
    pc = _fit_controller(cfg, received)
    report = pc.report_
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trace_csv(pc.state_.history, out / "trace.csv")
    return {
        "converged": int(report.converged),
        "iterations": report.iterations,
        "final_power_diff_db": report.final_power_diff_db,
        "c1": pc.c1_,
        "c2": pc.c2_,
        "residual_offdiag": report.residual_offdiag,
        "residual_phase": report.residual_phase,
    }


def format_summary(summary: dict) -> str:
    """Flat key=value lines, stable order and formatting (determinism matters)."""
    lines = []
    for key, value in summary.items():
        if isinstance(value, float):
            lines.append(f"{key}={value:.10g}")
        else:
            lines.append(f"{key}={value}")
    return "\n".join(lines)
