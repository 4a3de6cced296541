# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: split-step phase substep and effective-particle RK4."""

from libc.math cimport cos, sin

import numpy as np

cimport numpy as cnp

cnp.import_array()


def phase_rotate(cnp.complex128_t[:, ::1] psi, double a,
                 double b0, double b1, double b2, double b3,
                 double[::1] cos1, double[::1] c2, double[::1] s2):
    cdef Py_ssize_t m = psi.shape[0]
    cdef Py_ssize_t n = psi.shape[1]
    cdef Py_ssize_t i, j
    cdef double vj, th, c, s, re, im
    for i in range(m):
        for j in range(n):
            re = psi[i, j].real
            im = psi[i, j].imag
            vj = b0 + b1 * cos1[j] + b2 * c2[j] + b3 * s2[j]
            th = a * (re * re + im * im - vj)
            c = cos(th)
            s = sin(th)
            psi[i, j] = (re * c - im * s) + 1j * (re * s + im * c)


def ee_advance(double[:, ::1] state, double t0, double dt, Py_ssize_t nsteps,
               double A1, double w1, double A2, double w2, double twov, double ph):
    cdef Py_ssize_t m = state.shape[0]
    cdef Py_ssize_t i, k
    cdef double x, u, t, h2
    cdef double k1x, k1u, k2x, k2u, k3x, k3u, k4x, k4u
    h2 = 0.5 * dt
    for i in range(m):
        x = state[i, 0]
        u = state[i, 1]
        for k in range(nsteps):
            t = t0 + k * dt
            k1x = u
            k1u = -A1 * sin(w1 * x) - A2 * sin(w2 * x - twov * t + ph)
            k2x = u + h2 * k1u
            k2u = -A1 * sin(w1 * (x + h2 * k1x)) - A2 * sin(w2 * (x + h2 * k1x) - twov * (t + h2) + ph)
            k3x = u + h2 * k2u
            k3u = -A1 * sin(w1 * (x + h2 * k2x)) - A2 * sin(w2 * (x + h2 * k2x) - twov * (t + h2) + ph)
            k4x = u + dt * k3u
            k4u = -A1 * sin(w1 * (x + dt * k3x)) - A2 * sin(w2 * (x + dt * k3x) - twov * (t + dt) + ph)
            x += dt * (k1x + 2 * k2x + 2 * k3x + k4x) / 6.0
            u += dt * (k1u + 2 * k2u + 2 * k3u + k4u) / 6.0
        state[i, 0] = x
        state[i, 1] = u
