"""NumPy reference implementations of the hot kernels.

Same call signatures as the compiled module; used when the extension is
unavailable or SOLPUMP_FORCE_PURE is set.
"""

import numpy as np


def phase_rotate(psi, a, b0, b1, b2, b3, cos1, c2, s2):
    # psi <- psi * exp(i*a*(|psi|^2 - V)), V = b0 + b1*cos1 + b2*c2 + b3*s2
    V = b0 + b1 * cos1 + b2 * c2 + b3 * s2
    psi *= np.exp(1j * a * (psi.real**2 + psi.imag**2 - V))


def ee_advance(state, t0, dt, nsteps, A1, w1, A2, w2, twov, ph):
    """Advance effective-particle states in place by nsteps of classic RK4.

    state has shape (m, 2) with columns (x0, xdot); acceleration is
    -A1*sin(w1*x) - A2*sin(w2*x - twov*t + ph).
    """
    x = state[:, 0].copy()
    u = state[:, 1].copy()
    h2 = 0.5 * dt

    def acc(xv, t):
        return -A1 * np.sin(w1 * xv) - A2 * np.sin(w2 * xv - twov * t + ph)

    for k in range(nsteps):
        t = t0 + k * dt
        k1x = u
        k1u = acc(x, t)
        k2x = u + h2 * k1u
        k2u = acc(x + h2 * k1x, t + h2)
        k3x = u + h2 * k2u
        k3u = acc(x + h2 * k2x, t + h2)
        k4x = u + dt * k3u
        k4u = acc(x + dt * k3x, t + dt)
        x = x + dt * (k1x + 2 * k2x + 2 * k3x + k4x) / 6.0
        u = u + dt * (k1u + 2 * k2u + 2 * k3u + k4u) / 6.0
    state[:, 0] = x
    state[:, 1] = u
