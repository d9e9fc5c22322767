"""Propagation of single complex trajectories under the truncated derivative hierarchy.

The coupled ODE system for a trajectory launched at complex x0 is

    dx/dt   = v0
    dv_n/dt = -V^(n+1)(x)/m + (i hbar / 2m) v_{n+2} - g_n,   n = 0..N
    dS/dt   = m v0^2 / 2 - V(x) + (i hbar / 2) v1

with g_0 = 0, g_n = sum_{j=1..n} C(n, j) v_j v_{n-j+1}, closed by
v_{N+1} = v_{N+2} = 0 at the truncation order N. All quantities are
analytic continuations; the integrator is an adaptive Dormand-Prince 5(4)
pair running on the complex state vector [x, v0..vN, S].
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import Blowup, PoleProximity, StepLimitExceeded, StepUnderflow
from .model import initial_action, initial_velocity_jet

MAX_TRUNCATION_ORDER = kernels.MAX_ORDER


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and guards for the adaptive stepper.

    max_step = 0 means "final time / 100"; initial_step = 0 means automatic.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    initial_step: float = 0.0
    max_step: float = 0.0
    max_steps: int = 1_000_000
    blowup_threshold: float = 1e6

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.blowup_threshold <= 0:
            raise ValueError("blowup_threshold must be positive")


@dataclass(frozen=True)
class TrajectoryState:
    """Snapshot of one trajectory: time, position, velocity stack v0..vN, action."""

    t: float
    x: complex
    v: tuple
    S: complex

    @property
    def order(self):
        return len(self.v) - 1


@dataclass(frozen=True)
class TrajectoryPath:
    """Dense trajectory samples at caller-requested times (arrays over time)."""

    times: np.ndarray
    x: np.ndarray
    v: np.ndarray  # shape (n_times, order + 1)
    S: np.ndarray

    @property
    def order(self):
        return self.v.shape[1] - 1

    def state_at(self, i):
        return TrajectoryState(t=float(self.times[i]), x=complex(self.x[i]),
                               v=tuple(self.v[i]), S=complex(self.S[i]))


def _check_order(order):
    if not 1 <= order <= MAX_TRUNCATION_ORDER:
        raise ValueError(f"truncation order must be in 1..{MAX_TRUNCATION_ORDER}, got {order}")


def initial_state(x0, wavepacket, system, order):
    """Exact initial data of the Gaussian wavepacket at complex launch point x0."""
    _check_order(order)
    jet = initial_velocity_jet(wavepacket, system, x0, order)
    return TrajectoryState(t=0.0, x=complex(x0), v=jet.values,
                           S=initial_action(wavepacket, system, x0))


def hierarchy_rhs(state, system):
    """Time derivatives (dx, dv array, dS) at a state; thin view onto the kernel."""
    order = state.order
    _check_order(order)
    y = _pack(state)
    dy = np.zeros_like(y)
    kind, a, b = system.potential.kernel_params()
    status = kernels.backend.hierarchy_rhs(y, dy, order, kind, a, b,
                                           float(system.mass), float(system.hbar))
    if status == kernels.POLE:
        raise PoleProximity(f"right-hand side evaluated within pole guard at x = {state.x}")
    return complex(dy[0]), dy[1:order + 2].copy(), complex(dy[order + 2])


def _pack(state):
    y = np.zeros(state.order + 3, np.complex128)
    y[0] = state.x
    for i, vn in enumerate(state.v):
        y[1 + i] = vn
    y[-1] = state.S
    return y


_STATUS_ERRORS = {
    kernels.STEP_LIMIT: (StepLimitExceeded, "step budget exhausted"),
    kernels.BLOWUP: (Blowup, "velocity hierarchy exceeded blowup threshold"),
    kernels.POLE: (PoleProximity, "trajectory entered the potential's pole guard"),
    kernels.STEP_UNDERFLOW: (StepUnderflow, "step size collapsed"),
}


def _run_kernel(y0, out_times, order, system, config, t_f, rhs_kind):
    kind, a, b = system.potential.kernel_params()
    max_step = config.max_step if config.max_step > 0 else max(t_f, 1e-30) / 100.0
    y_out = np.zeros((len(out_times), len(y0)), np.complex128)
    status, t_reached, n_steps, filled = kernels.backend.propagate(
        y0, 0.0, out_times, order, kind, a, b,
        float(system.mass), float(system.hbar), rhs_kind,
        config.rel_tol, config.abs_tol, config.initial_step, max_step,
        config.max_steps, config.blowup_threshold, y_out)
    if status != kernels.OK:
        exc, msg = _STATUS_ERRORS[status]
        raise exc(f"{msg} at t = {t_reached:.6g} (launch x0 = {y0[0]:.6g})")
    return y_out, n_steps


def _prepare_times(t_f, t_eval):
    if t_f < 0:
        raise ValueError("final time must be nonnegative")
    if t_eval is None:
        return np.array([t_f], dtype=float)
    times = np.asarray(t_eval, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("t_eval must be a nonempty 1D sequence")
    if np.any(np.diff(times) <= 0):
        raise ValueError("t_eval must be strictly increasing")
    if times[0] < 0:
        raise ValueError("t_eval must start at or after t = 0")
    if abs(times[-1] - t_f) > 1e-12 * max(1.0, t_f):
        raise ValueError("t_eval must end exactly at the final time")
    return times


def propagate_trajectory(x0, wavepacket, system, order, t_f, config=None, t_eval=None):
    """Propagate one trajectory from its exact Gaussian initial data to t_f.

    Returns the final TrajectoryState, or (final_state, TrajectoryPath) when
    t_eval is given (strictly increasing times ending at t_f). Failures
    raise typed exceptions: PoleProximity, Blowup, StepLimitExceeded,
    StepUnderflow.
    """
    _check_order(order)
    config = config or IntegratorConfig()
    times = _prepare_times(t_f, t_eval)
    state0 = initial_state(x0, wavepacket, system, order)
    if t_f == 0 and t_eval is None:
        return state0
    y0 = _pack(state0)
    y_out, _ = _run_kernel(y0, times, order, system, config, t_f, kernels.RHS_HIERARCHY)
    final = TrajectoryState(t=float(times[-1]), x=complex(y_out[-1, 0]),
                            v=tuple(y_out[-1, 1:order + 2]), S=complex(y_out[-1, -1]))
    if t_eval is None:
        return final
    path = TrajectoryPath(times=times, x=y_out[:, 0].copy(),
                          v=y_out[:, 1:order + 2].copy(), S=y_out[:, -1].copy())
    return final, path


def propagate_classical_n1(x0, wavepacket, system, t_f, config=None, t_eval=None):
    """Independent N = 1 specialization with closed-form potential derivatives.

    Shares the stepper with the generic hierarchy but evaluates a
    hand-written classical right-hand side, so agreement between the two is
    a real check of the hierarchy assembly rather than a tautology.
    """
    config = config or IntegratorConfig()
    times = _prepare_times(t_f, t_eval)
    state0 = initial_state(x0, wavepacket, system, 1)
    if t_f == 0 and t_eval is None:
        return state0
    y0 = _pack(state0)
    y_out, _ = _run_kernel(y0, times, 1, system, config, t_f, kernels.RHS_CLASSICAL_N1)
    final = TrajectoryState(t=float(times[-1]), x=complex(y_out[-1, 0]),
                            v=tuple(y_out[-1, 1:3]), S=complex(y_out[-1, -1]))
    if t_eval is None:
        return final
    path = TrajectoryPath(times=times, x=y_out[:, 0].copy(),
                          v=y_out[:, 1:3].copy(), S=y_out[:, -1].copy())
    return final, path
