"""Fixed-step RK4 shared by the full-space and reduced integrators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class IntegrationError(RuntimeError):
    """Raised when a trajectory drifts outside its invariant tolerance."""


@dataclass
class Trajectory:
    """Sampled solution of a master equation.

    ``solution_population`` holds rho_ww (or sigma at (q,0,0,0)) at every
    sample time; ``states`` is only filled when the caller asked to keep them.
    """

    times: np.ndarray
    solution_population: np.ndarray
    final: np.ndarray
    states: Optional[np.ndarray] = None
    dt: float = 0.0


def rk4_step(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_grid(t_max: float, dt: float) -> tuple[int, float]:
    """Number of steps and the adjusted step that lands exactly on t_max."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_max < 0:
        raise ValueError("t_max must be non-negative")
    n = max(1, math.ceil(t_max / dt - 1e-9)) if t_max > 0 else 0
    return n, (t_max / n if n else dt)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_max: float,
    dt: float,
    observe: Callable[[np.ndarray], float],
    check: Optional[Callable[[np.ndarray, float], None]] = None,
    sample_every: int = 1,
    keep_states: bool = False,
) -> Trajectory:
    n_steps, h = step_grid(t_max, dt)
    y = np.array(y0, dtype=complex)
    times, obs, states = [0.0], [observe(y)], [y.copy()] if keep_states else None
    for k in range(1, n_steps + 1):
        y = rk4_step(f, y, h)
        if check is not None:
            check(y, k * h)
        if k % sample_every == 0 or k == n_steps:
            times.append(k * h)
            obs.append(observe(y))
            if keep_states:
                states.append(y.copy())
    return Trajectory(
        times=np.array(times),
        solution_population=np.array(obs),
        final=y,
        states=np.array(states) if keep_states else None,
        dt=h,
    )
