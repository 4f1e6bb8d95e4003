"""Self-homodyne coherent link simulation with adaptive polarization control.

The transmitter multiplexes an unmodulated carrier on the polarization
orthogonal to a QPSK signal; channel birefringence mixes the two; an
electronically driven waveplate controller re-separates them by minimizing
the optical power measured in one receiver-splitter arm.
"""
from .channel import ChannelConfig, FiberChannel
from .controller import (AdaptivePolarizationController, ControllerState,
                         ConvergenceReport, Plant, converge, pc_matrix, power_profile)
from .errors import ConfigError, UndefinedMeasurementError
from .harness import LinkConfig, default_config, load_config, run_simulate
from .jones import (PolPower, composite_channel, half_wave, pbc_combine, pbs_split,
                    phase_plate, power_of, quarter_wave, rotator, waveplate)
from .receiver import RxResult, demodulate_frame, evm, homodyne_detect, phase_recover
from .waveform import (DualPolWaveform, apply_jones, launch_with_carrier, mean_power,
                       power_difference_db, qpsk_demodulate, qpsk_modulate)

__all__ = [
    "AdaptivePolarizationController", "ChannelConfig", "ConfigError", "ControllerState",
    "ConvergenceReport", "DualPolWaveform", "FiberChannel", "LinkConfig", "Plant",
    "PolPower", "RxResult", "UndefinedMeasurementError", "apply_jones",
    "composite_channel", "converge", "default_config", "demodulate_frame", "evm",
    "half_wave", "homodyne_detect", "launch_with_carrier", "load_config", "mean_power",
    "pbc_combine", "pbs_split", "pc_matrix", "phase_plate", "phase_recover", "power_of",
    "power_difference_db", "power_profile", "qpsk_demodulate", "qpsk_modulate",
    "quarter_wave", "rotator", "run_simulate", "waveplate",
]

__version__ = "0.1.0"
