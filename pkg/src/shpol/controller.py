"""Adaptive polarization controller: waveplate model + power-minimizing descent.

The physical device is a three-waveplate controller with two drive angles.
It is modeled as QWP(c1) @ HWP(c2) @ QWP(0); the fixed rear quarter-wave
plate plus the two driven plates reach every state of polarization, so a
suitable (c1, c2) always exists that routes the carrier entirely into one
splitter arm. The feedback loop only observes the normalized optical power
in the monitored (signal) arm and walks (c1, c2) downhill by discrete-time
gradient descent with central finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import UndefinedMeasurementError
from .jones import half_wave, quarter_wave, rotator
from .waveform import DualPolWaveform, apply_jones

__all__ = [
    "ControllerState",
    "ConvergenceReport",
    "pc_matrix",
    "Plant",
    "measure_objective",
    "estimate_gradient",
    "gradient_step",
    "converge",
    "power_profile",
    "AdaptivePolarizationController",
]

TWO_PI = 2.0 * np.pi

_QWP0 = quarter_wave(0.0)


@dataclass
class ControllerState:
    """Drive angles, step size and the measured-power history of the loop."""

    c1: float = 0.0
    c2: float = 0.0
    mu: float = 0.5
    iteration: int = 0
    history: list = field(default_factory=list)

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        self.c1 = float(self.c1) % TWO_PI
        self.c2 = float(self.c2) % TWO_PI


@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    final_power_diff_db: float
    iterations: int
    effective_matrix: np.ndarray
    residual_offdiag: float
    residual_phase: float


def pc_matrix(c1: float, c2: float) -> np.ndarray:
    """Controller Jones matrix QWP(c1) @ HWP(c2) @ QWP(0); unitary, det 1."""
    return quarter_wave(c1) @ half_wave(c2) @ _QWP0


class Plant:
    """Static feedback plant: a recorded received frame behind the controller.

    The objective for drive angles (c1, c2) is the fraction of total power
    that lands in the monitored x arm of the receiver splitter (at angle
    theta_rx) after the controller matrix. It is evaluated through the 2x2
    second-moment (coherency) matrix of the frame, which equals the
    per-sample application followed by time averaging, exactly.
    """

    def __init__(self, received: DualPolWaveform, theta_rx: float = 0.0,
                 channel_matrix: np.ndarray | None = None):
        self.received = received
        self.theta_rx = float(theta_rx)
        self.channel_matrix = (
            np.eye(2, dtype=complex) if channel_matrix is None else np.asarray(channel_matrix, dtype=complex)
        )
        s = received.samples
        # coherency[j, k] = mean(e_j * conj(e_k)); then the monitored-arm
        # power is (M @ coherency @ M^H)[0, 0].
        self.coherency = (s.T @ s.conj()) / s.shape[0]
        self.total_power = float(np.real(np.trace(self.coherency)))
        if self.total_power <= 0:
            raise UndefinedMeasurementError("plant produces zero total power")
        self._rx_rot = rotator(self.theta_rx)

    def monitored_matrix(self, c1: float, c2: float) -> np.ndarray:
        return self._rx_rot @ pc_matrix(c1, c2)

    def arm_powers(self, c1: float, c2: float) -> tuple[float, float]:
        m = self.monitored_matrix(c1, c2)
        sig = m @ self.coherency @ m.conj().T
        return float(np.real(sig[0, 0])), float(np.real(sig[1, 1]))

    def measure(self, c1: float, c2: float) -> float:
        px, _ = self.arm_powers(c1, c2)
        return px / self.total_power

    def effective_matrix(self, c1: float, c2: float) -> np.ndarray:
        return pc_matrix(c1, c2) @ self.channel_matrix


def measure_objective(state: ControllerState, plant: Plant) -> float:
    """Normalized power in the monitored arm, P in [0, 1]."""
    return plant.measure(state.c1, state.c2)


def estimate_gradient(state: ControllerState, plant: Plant, delta: float = 0.01) -> tuple[float, float]:
    """Central finite differences of the measured power w.r.t. (c1, c2)."""
    g1 = (plant.measure(state.c1 + delta, state.c2) - plant.measure(state.c1 - delta, state.c2)) / (2 * delta)
    g2 = (plant.measure(state.c1, state.c2 + delta) - plant.measure(state.c1, state.c2 - delta)) / (2 * delta)
    return g1, g2


def gradient_step(state: ControllerState, plant: Plant, delta: float = 0.01) -> ControllerState:
    """One descent update c_i <- c_i - mu * dP/dc_i, with angle wrapping."""
    g1, g2 = estimate_gradient(state, plant, delta)
    c1 = (state.c1 - state.mu * g1) % TWO_PI
    c2 = (state.c2 - state.mu * g2) % TWO_PI
    new = ControllerState(c1=c1, c2=c2, mu=state.mu, iteration=state.iteration + 1,
                          history=list(state.history))
    new.history.append((new.c1, new.c2, plant.measure(new.c1, new.c2)))
    return new


def _power_diff_db(p_signal: float, p_carrier: float) -> float:
    if p_signal <= 0 or p_carrier <= 0:
        return float("inf") if max(p_signal, p_carrier) > 0 else 0.0
    return 10.0 * np.log10(max(p_signal, p_carrier) / min(p_signal, p_carrier))


def _descend(c1, c2, mu, plant, delta, grad_tol, mu_min, max_iter, history, start_iter):
    """Backtracking gradient descent; returns (c1, c2, mu, iteration, P)."""
    p_cur = plant.measure(c1, c2)
    it = start_iter
    while it < max_iter:
        state = ControllerState(c1=c1, c2=c2, mu=mu)
        g1, g2 = estimate_gradient(state, plant, delta)
        if np.hypot(g1, g2) < grad_tol:
            break
        n1 = (c1 - mu * g1) % TWO_PI
        n2 = (c2 - mu * g2) % TWO_PI
        p_new = plant.measure(n1, n2)
        it += 1
        if p_new > p_cur:
            # Rejected step: halve the step size, keep the current point so
            # the recorded power trace stays non-increasing.
            history.append((c1, c2, p_cur))
            if mu <= mu_min:
                break
            mu = max(mu / 2.0, mu_min)
            continue
        c1, c2, p_cur = n1, n2, p_new
        history.append((c1, c2, p_cur))
    return c1, c2, mu, it, p_cur


def converge(initial: ControllerState, plant: Plant,
             tol_power_diff_db: float = 14.0, max_iter: int = 500,
             delta: float = 0.01, grad_tol: float = 1e-6, mu_min: float = 1e-4,
             restarts: int = 3, restart_seed: int = 0) -> tuple[ControllerState, ConvergenceReport]:
    """Run the feedback loop to a power minimum; never raises on non-convergence.

    Descends until the finite-difference gradient is below grad_tol, the step
    size bottoms out, or max_iter is reached; the run counts as converged
    when the carrier arm exceeds the signal arm by tol_power_diff_db. Up to
    `restarts` random re-initializations are tried if the first descent falls
    short (the objective has several equally deep minima, so restarts are
    cheap and safe).
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    rng = np.random.default_rng(restart_seed)

    def attempt(c1, c2):
        history: list = []
        f1, f2, mu, it, _ = _descend(c1, c2, initial.mu, plant, delta, grad_tol,
                                     mu_min, max_iter, history, 0)
        px, py = plant.arm_powers(f1, f2)
        diff = _power_diff_db(px, py)
        ok = py > px and diff >= tol_power_diff_db
        return ok, diff, ControllerState(c1=f1, c2=f2, mu=mu, iteration=it, history=history)

    ok, diff, state = attempt(initial.c1, initial.c2)
    tries = 0
    while not ok and tries < restarts:
        tries += 1
        ok, diff, state = attempt(rng.uniform(0, TWO_PI), rng.uniform(0, TWO_PI))

    eff = plant.effective_matrix(state.c1, state.c2)
    offdiag = float(max(np.abs(eff[0, 1]), np.abs(eff[1, 0])))
    report = ConvergenceReport(
        converged=bool(ok),
        final_power_diff_db=float(diff),
        iterations=state.iteration,
        effective_matrix=eff,
        residual_offdiag=offdiag,
        residual_phase=float(np.angle(eff[0, 0])),
    )
    return state, report


def _waveplate_stack(retardance: float, azimuths: np.ndarray) -> np.ndarray:
    """Waveplate matrices for an array of azimuths, shape (n, 2, 2)."""
    c, s = np.cos(azimuths), np.sin(azimuths)
    em = np.exp(-1j * retardance / 2.0)
    ep = np.exp(1j * retardance / 2.0)
    m = np.empty(azimuths.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = c * c * em + s * s * ep
    m[..., 0, 1] = c * s * (em - ep)
    m[..., 1, 0] = c * s * (em - ep)
    m[..., 1, 1] = s * s * em + c * c * ep
    return m


def power_profile(plant: Plant, grid_n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Objective P over a grid_n x grid_n grid of (c1, c2) in [0, 2pi)^2.

    Grid points are independent pure evaluations; the sweep is vectorized
    over the whole grid at once.
    """
    if grid_n < 16:
        raise ValueError(f"grid_n must be >= 16, got {grid_n}")
    c1s = np.arange(grid_n) * TWO_PI / grid_n
    c2s = np.arange(grid_n) * TWO_PI / grid_n
    left = plant._rx_rot[None, :, :] @ _waveplate_stack(np.pi / 2.0, c1s)  # (n,2,2)
    right = _waveplate_stack(np.pi, c2s) @ _QWP0[None, :, :]  # (n,2,2)
    m = np.einsum("aij,bjk->abik", left, right)
    row0 = m[..., 0, :]
    px = np.real(np.einsum("abj,jk,abk->ab", row0, plant.coherency, row0.conj()))
    return c1s, c2s, px / plant.total_power


class AdaptivePolarizationController(BaseEstimator, TransformerMixin):
    """sklearn-style estimator: fit the drive angles on a received frame,
    then transform frames by the converged controller matrix."""

    def __init__(self, c1_init=0.0, c2_init=0.0, mu=0.5, delta=0.01,
                 tol_power_diff_db=14.0, max_iter=500, grad_tol=1e-6,
                 mu_min=1e-4, restarts=3, theta_rx=0.0, restart_seed=0):
        self.c1_init = c1_init
        self.c2_init = c2_init
        self.mu = mu
        self.delta = delta
        self.tol_power_diff_db = tol_power_diff_db
        self.max_iter = max_iter
        self.grad_tol = grad_tol
        self.mu_min = mu_min
        self.restarts = restarts
        self.theta_rx = theta_rx
        self.restart_seed = restart_seed

    def fit(self, X: DualPolWaveform, y=None, channel_matrix: np.ndarray | None = None):
        plant = Plant(X, theta_rx=self.theta_rx, channel_matrix=channel_matrix)
        initial = ControllerState(c1=self.c1_init, c2=self.c2_init, mu=self.mu)
        state, report = converge(
            initial, plant,
            tol_power_diff_db=self.tol_power_diff_db, max_iter=self.max_iter,
            delta=self.delta, grad_tol=self.grad_tol, mu_min=self.mu_min,
            restarts=self.restarts, restart_seed=self.restart_seed,
        )
        self.c1_ = state.c1
        self.c2_ = state.c2
        self.state_ = state
        self.report_ = report
        self.matrix_ = pc_matrix(state.c1, state.c2)
        return self

    def transform(self, X: DualPolWaveform) -> DualPolWaveform:
        if not hasattr(self, "matrix_"):
            raise RuntimeError("controller is not fitted")
        return apply_jones(X, self.matrix_)
