"""Effective-particle (variational) dynamics of the soliton center of mass.

The center x0 obeys a driven Newton equation; each lattice contributes a
sinusoidal force whose amplitude is exponentially suppressed when the
soliton is wide compared to that lattice period:

    x0'' = -A1 sin(2 pi x0/d1) - A2 sin(2 pi x0/d2 - 2 v t + 2 phase0)
    A_j  = 2 pi^3 p_j / (N d_j^2 sinh(2 pi^2 / (N d_j)))
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, NonFiniteError


def _force_amp(p: float, d: float, N: float) -> float:
    return 2.0 * math.pi**3 * p / (N * d * d * math.sinh(2.0 * math.pi**2 / (N * d)))


def acceleration(spec, N: float, x0, t: float):
    d1, d2 = float(spec.d1), float(spec.d2)
    a1 = _force_amp(spec.p1, d1, N)
    a2 = _force_amp(spec.p2, d2, N)
    return -a1 * np.sin(2.0 * np.pi * np.asarray(x0) / d1) - a2 * np.sin(
        2.0 * np.pi * np.asarray(x0) / d2 - 2.0 * spec.v * t + 2.0 * spec.phase0
    )


def static_effective_potential(spec, N: float, x0):
    """Potential of the static-lattice force alone (p2 ignored).

    Consistent with `acceleration`: its negative gradient reproduces the
    p1 term exactly.
    """
    d1 = float(spec.d1)
    c = math.pi**2 * spec.p1 / (N * d1 * math.sinh(2.0 * math.pi**2 / (N * d1)))
    return -c * np.cos(2.0 * np.pi * np.asarray(x0) / d1)


def energy(spec, N: float, x0: float, xdot: float, t: float = 0.0) -> float:
    """Kinetic plus both potential terms with the drive frozen at time t.

    Conserved only when v = 0.
    """
    d1, d2 = float(spec.d1), float(spec.d2)
    c1 = math.pi**2 * spec.p1 / (N * d1 * math.sinh(2.0 * math.pi**2 / (N * d1)))
    c2 = math.pi**2 * spec.p2 / (N * d2 * math.sinh(2.0 * math.pi**2 / (N * d2)))
    u = -c1 * math.cos(2.0 * math.pi * x0 / d1) - c2 * math.cos(
        2.0 * math.pi * x0 / d2 - 2.0 * spec.v * t + 2.0 * spec.phase0
    )
    return 0.5 * xdot * xdot + u


@dataclass
class EffectiveTrajectory:
    times: np.ndarray
    x0: np.ndarray
    xdot: np.ndarray
    N: float


def default_dt(spec) -> float:
    if spec.v > 0:
        return spec.T / 20000.0
    return 1e-3


def integrate(spec, N: float, x0: float = 0.0, v0: float = 0.0,
              t_final: float = 0.0, dt: float | None = None,
              record_stride: int | None = None) -> EffectiveTrajectory:
    """Classic RK4 from (x0, v0) at t=0 to t_final."""
    if N <= 0:
        raise ConfigError("norm N must be positive")
    if t_final <= 0:
        raise ConfigError("t_final must be positive")
    if dt is None:
        dt = default_dt(spec)
    nsteps = max(1, int(round(t_final / dt)))
    dt = t_final / nsteps
    if record_stride is None:
        record_stride = max(1, nsteps // 2000)

    d1, d2 = float(spec.d1), float(spec.d2)
    a1 = _force_amp(spec.p1, d1, N)
    a2 = _force_amp(spec.p2, d2, N)
    w1 = 2.0 * math.pi / d1
    w2 = 2.0 * math.pi / d2

    state = np.array([[x0, v0]], dtype=float)
    times = [0.0]
    xs = [x0]
    us = [v0]
    done = 0
    while done < nsteps:
        chunk = min(record_stride, nsteps - done)
        _kernels.ee_advance(state, done * dt, dt, chunk, a1, w1, a2, w2,
                            2.0 * spec.v, 2.0 * spec.phase0)
        done += chunk
        if not np.all(np.isfinite(state)):
            raise NonFiniteError(f"effective dynamics diverged near t = {done * dt:.6g}")
        times.append(done * dt)
        xs.append(state[0, 0])
        us.append(state[0, 1])
    return EffectiveTrajectory(
        times=np.asarray(times), x0=np.asarray(xs), xdot=np.asarray(us), N=N
    )


@dataclass
class EnsembleResult:
    N_values: np.ndarray
    trajectories: list
    seed: int


def ensemble_phase_portrait(spec, N_center: float, jitter: float = 0.001,
                            count: int = 20, seed: int = 0,
                            t_final: float | None = None,
                            dt: float | None = None) -> EnsembleResult:
    """Integrate `count` members with N drawn uniformly from the jitter window.

    All members start from rest at the origin; jitter = 0 reproduces the
    same trajectory bit for bit in every member.
    """
    if count < 1:
        raise ConfigError("count must be at least 1")
    if jitter < 0:
        raise ConfigError("jitter must be nonnegative")
    if t_final is None:
        t_final = 3.0 * spec.T
    rng = np.random.default_rng(seed)
    Ns = N_center + rng.uniform(-jitter, jitter, count)
    trajs = [integrate(spec, float(n), 0.0, 0.0, t_final, dt=dt) for n in Ns]
    return EnsembleResult(N_values=Ns, trajectories=trajs, seed=seed)
