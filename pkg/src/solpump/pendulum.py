"""Pendulum reduction of the single sliding shallow lattice (p1 = 0).

In the co-sliding angle theta = 2 pi x0/d2 - 2 v t + 2 phase0 the effective
equation collapses to a pendulum with frequency

    omega0 = sqrt(4 pi^4 p2 / (N d2^3 sinh(2 pi^2 / (N d2))))

solved in closed form by Jacobi elliptic functions. The modulus

    k = sqrt(sin^2(theta0/2) + thetadot0^2 / (4 omega0^2))

separates libration (k < 1, soliton dragged along, adiabatic pumping) from
rotation (k > 1, soliton left behind).
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.special import ellipj, ellipk, ellipkinc

from .errors import ConfigError, DomainError, SeparatrixWarning


def omega0(N: float, p2: float, d2) -> float:
    d2 = float(d2)
    if N <= 0 or p2 < 0 or d2 <= 0:
        raise ConfigError("need N > 0, p2 >= 0, d2 > 0")
    return math.sqrt(
        4.0 * math.pi**4 * p2 / (N * d2**3 * math.sinh(2.0 * math.pi**2 / (N * d2)))
    )


def modulus(theta0: float, thetadot0: float, om0: float) -> float:
    if om0 <= 0:
        raise ConfigError("omega0 must be positive")
    return math.sqrt(
        math.sin(0.5 * theta0) ** 2 + thetadot0**2 / (4.0 * om0 * om0)
    )


def elliptic_F(y, k: float):
    """Incomplete elliptic integral of the first kind in the form

    F(y, k) = int_0^y ds / sqrt((1 - s^2)(1 - k^2 s^2)),   y = sin(phi).
    """
    y = np.asarray(y, dtype=float)
    if k < 0:
        raise DomainError("modulus k must be nonnegative")
    if np.any(np.abs(y) > 1.0) or np.any((k * np.abs(y)) >= 1.0 + 1e-15):
        raise DomainError("need |y| <= 1 and k|y| < 1")
    out = ellipkinc(np.arcsin(y), k * k)
    return float(out) if np.ndim(out) == 0 else out


def jacobi_sn(u, k: float):
    """sn(u, k); moduli above 1 are handled by the reciprocal transformation."""
    u = np.asarray(u, dtype=float)
    if k < 0:
        raise DomainError("modulus k must be nonnegative")
    if k <= 1.0:
        sn = ellipj(u, k * k)[0]
    else:
        sn = ellipj(k * u, 1.0 / (k * k))[0] / k
    return float(sn) if np.ndim(sn) == 0 else sn


def jacobi_am(u, k: float):
    """Continuous Jacobi amplitude for k < 1 (am grows by pi per 2K)."""
    if not 0.0 <= k < 1.0:
        raise DomainError("amplitude unwrap needs 0 <= k < 1")
    m = k * k
    K = float(ellipk(m))
    u = np.asarray(u, dtype=float)
    n = np.floor((u + K) / (2.0 * K))
    sn = ellipj(u - 2.0 * K * n, m)[0]
    out = n * np.pi + np.arcsin(np.clip(sn, -1.0, 1.0))
    return float(out) if np.ndim(out) == 0 else out


def theta_exact(theta0: float, thetadot0: float, om0: float, t):
    """Closed-form pendulum angle theta(t) for theta'' = -omega0^2 sin(theta).

    Libration branch (k < 1): theta = 2 arcsin(k sn(F(sin(theta0/2)/k, k)
    +- omega0 t, k)). Rotation branch (k > 1): theta = 2 am(F(sin(theta0/2),
    1/k) +- omega0 k t, 1/k), continuously unwrapped. The sign follows
    thetadot0. Within 1e-6 of the separatrix a warning is issued and the
    k = 1 (tanh) limit is used.
    """
    t = np.asarray(t, dtype=float)
    k = modulus(theta0, thetadot0, om0)
    sgn = 1.0 if thetadot0 >= 0 else -1.0
    s0 = math.sin(0.5 * theta0)
    if abs(k - 1.0) < 1e-6:
        warnings.warn(
            f"modulus {k:.9f} within 1e-6 of the separatrix", SeparatrixWarning
        )
        f0 = math.atanh(min(max(s0, -1.0 + 1e-16), 1.0 - 1e-16))
        th = 2.0 * np.arcsin(np.tanh(f0 + sgn * om0 * t))
    elif k < 1.0:
        f0 = elliptic_F(s0 / k, k)
        th = 2.0 * np.arcsin(k * ellipj(f0 + sgn * om0 * t, k * k)[0])
    else:
        kk = 1.0 / k
        f0 = elliptic_F(s0, kk)
        th = 2.0 * jacobi_am(f0 + sgn * om0 * k * t, kk)
    return float(th) if np.ndim(th) == 0 else th


def theta_max(om0: float, T: float):
    """Libration amplitude for the standard start theta(0)=0, thetadot(0)=-2pi/T.

    Returns (exact, leading_order) = (2 arcsin(pi/(om0 T)), 2 pi/(om0 T)).
    """
    arg = math.pi / (om0 * T)
    if arg >= 1.0:
        raise DomainError("rotating branch: pi/(omega0 T) >= 1, no libration amplitude")
    return 2.0 * math.asin(arg), 2.0 * math.pi / (om0 * T)


def lab_position(theta, t, d2, T: float):
    """Laboratory-frame soliton center: linear drift plus the angle wiggle."""
    d2 = float(d2)
    return d2 * np.asarray(t) / T + d2 * np.asarray(theta) / (2.0 * math.pi)


def from_spec(spec, N: float, x0: float = 0.0, v0: float = 0.0):
    """Pendulum initial data (om0, theta0, thetadot0) for a soliton at x0, v0.

    Only the sliding lattice enters; any p1 in the spec is ignored here.
    """
    d2 = float(spec.d2)
    om0 = omega0(N, spec.p2, d2)
    theta0 = 2.0 * math.pi * x0 / d2 + 2.0 * spec.phase0
    thetadot0 = 2.0 * math.pi * v0 / d2 - 2.0 * spec.v
    return om0, theta0, thetadot0


def classify_drive(om0: float, v: float) -> str:
    """Adiabatic (soliton follows the lattice) below omega0, fast above."""
    return "adiabatic" if v < om0 else "fast"


def pendulum_energy(om0: float, theta, thetadot):
    return 0.5 * np.asarray(thetadot) ** 2 - om0 * om0 * np.cos(np.asarray(theta))


def integrate_rk4(theta0: float, thetadot0: float, om0: float, t_final: float,
                  dt: float):
    """Direct RK4 on the pendulum, the oracle for theta_exact."""
    nsteps = max(1, int(round(t_final / dt)))
    dt = t_final / nsteps
    th = np.empty(nsteps + 1)
    om = np.empty(nsteps + 1)
    th[0], om[0] = theta0, thetadot0
    x, u = theta0, thetadot0
    w2 = om0 * om0
    for i in range(nsteps):
        k1x = u
        k1u = -w2 * math.sin(x)
        k2x = u + 0.5 * dt * k1u
        k2u = -w2 * math.sin(x + 0.5 * dt * k1x)
        k3x = u + 0.5 * dt * k2u
        k3u = -w2 * math.sin(x + 0.5 * dt * k2x)
        k4x = u + dt * k3u
        k4u = -w2 * math.sin(x + dt * k3x)
        x += dt * (k1x + 2 * k2x + 2 * k3x + k4x) / 6.0
        u += dt * (k1u + 2 * k2u + 2 * k3u + k4u) / 6.0
        th[i + 1], om[i + 1] = x, u
    times = dt * np.arange(nsteps + 1)
    return times, th, om
