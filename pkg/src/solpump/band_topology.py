"""Linear Bloch problem of the frozen superlattice and its topology.

Plane-wave basis on the common cell L: reciprocal vectors G_m = 2 pi m / L,
|m| <= cutoff. The static lattice (period d1 = L/n2) couples m -> m +- n2
with amplitude -p1/4; the sliding lattice (period d2 = L/n1) couples
m -> m + n1 with amplitude -(p2/4) exp(-2i(v t - phase0)) plus the
conjugate, so the Hamiltonian is exactly T-periodic. Chern numbers come
from plaquette link variables on the discretized (k, t) torus, Wannier
centers from the Wilson loop over k.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    ConfigError,
    ConvergenceError,
    GridMismatchError,
    IsolationError,
)

_cutoff_checked: set = set()


def _hamiltonian(spec, k: float, t: float, M: int) -> np.ndarray:
    dim = 2 * M + 1
    G = 2.0 * math.pi / float(spec.L_exact) * np.arange(-M, M + 1)
    H = np.zeros((dim, dim), dtype=complex)
    np.fill_diagonal(H, 0.5 * (k + G) ** 2 - 0.5 * (spec.p1 + spec.p2))
    n1, n2 = spec.n1, spec.n2
    amp2 = -0.25 * spec.p2 * cmath.exp(-2j * (spec.v * t - spec.phase0))
    for i in range(dim - n2):
        H[i + n2, i] += -0.25 * spec.p1
        H[i, i + n2] += -0.25 * spec.p1
    for i in range(dim - n1):
        H[i + n1, i] += amp2
        H[i, i + n1] += amp2.conjugate()
    return H


def _eig_bands(spec, k, t, M, nb):
    H = _hamiltonian(spec, k, t, M)
    w, v = np.linalg.eigh(H)
    return w[:nb], v[:, :nb]


@dataclass
class BlochSpectrum:
    spec: object
    t: float
    ks: np.ndarray
    energies: np.ndarray  # (n_k, n_bands)
    vectors: np.ndarray  # (n_k, 2M+1, n_bands)
    cutoff: int

    @property
    def n_bands(self) -> int:
        return self.energies.shape[1]


def _check_cutoff(spec, t, cutoff, n_bands, ks):
    key = (spec, round(t, 12), cutoff, n_bands)
    if key in _cutoff_checked:
        return
    for k in (ks[0], ks[len(ks) // 3], ks[(2 * len(ks)) // 3]):
        e1, _ = _eig_bands(spec, k, t, cutoff, n_bands)
        e2, _ = _eig_bands(spec, k, t, 2 * cutoff, n_bands)
        if np.max(np.abs(e1 - e2)) > 1e-8:
            raise ConvergenceError(
                f"cutoff {cutoff} too small: doubling moves a band by "
                f"{np.max(np.abs(e1 - e2)):.2e}"
            )
    _cutoff_checked.add(key)


def bloch_bands(spec, t: float = 0.0, n_k: int = 48, cutoff: int = 64,
                n_bands: int = 8, check: bool = True) -> BlochSpectrum:
    """Lowest n_bands of the frozen Hamiltonian on an n_k grid over the BZ.

    The cutoff is validated by doubling at a few sample momenta (cached per
    parameter set); failure raises ConvergenceError.
    """
    if n_k < 8:
        raise ConfigError("n_k must be at least 8")
    if cutoff < 16:
        raise ConfigError("cutoff must be at least 16")
    if n_bands > 2 * cutoff:
        raise ConfigError("n_bands exceeds the basis size")
    L = float(spec.L_exact)
    ks = -math.pi / L + (2.0 * math.pi / L) * np.arange(n_k) / n_k
    if check:
        _check_cutoff(spec, t, cutoff, n_bands, ks)
    dim = 2 * cutoff + 1
    energies = np.empty((n_k, n_bands))
    vectors = np.empty((n_k, dim, n_bands), dtype=complex)
    for i, k in enumerate(ks):
        w, v = _eig_bands(spec, k, t, cutoff, n_bands)
        energies[i] = w
        vectors[i] = v
    return BlochSpectrum(spec=spec, t=t, ks=ks, energies=energies,
                         vectors=vectors, cutoff=cutoff)


def _k_shift(vec: np.ndarray) -> np.ndarray:
    # same state at k + 2 pi / L expressed in the shifted basis: c'_m = c_{m+1}
    out = np.roll(vec, -1)
    out[-1] = 0.0
    return out


def zak_center(spectrum: BlochSpectrum, band: int = 1) -> float:
    """Wannier center of one band from the Wilson loop over the BZ, mod L."""
    vecs = spectrum.vectors[:, :, band - 1]
    n_k = len(spectrum.ks)
    W = 1.0 + 0.0j
    for j in range(n_k):
        a = vecs[j]
        b = vecs[j + 1] if j < n_k - 1 else _k_shift(vecs[0])
        W *= np.vdot(a, b)
    L = float(spectrum.spec.L_exact)
    return -cmath.phase(W) * L / (2.0 * math.pi)


def wannier_center_track(spec, band: int = 1, n_t: int = 201, n_k: int = 48,
                         cutoff: int = 64, period: float | None = None):
    """Band Wannier center over one pump cycle, unwrapped continuously.

    Returns (times, centers); centers[-1] - centers[0] is the winding,
    equal to C_band * L for an isolated band.
    """
    if period is None:
        period = spec.T
    L = float(spec.L_exact)
    ts = np.linspace(0.0, period, n_t)
    centers = np.empty(n_t)
    prev = None
    for i, t in enumerate(ts):
        sp = bloch_bands(spec, t, n_k=n_k, cutoff=cutoff, n_bands=band,
                         check=(i == 0))
        c = zak_center(sp, band)
        if prev is not None:
            c += L * round((prev - c) / L)
        centers[i] = c
        prev = c
    return ts, centers


@dataclass
class ChernResult:
    band: int
    chern: int
    raw: float
    n_k: int
    n_t: int
    min_gap: float
    # largest single-plaquette phase; values near pi mean the grid is too
    # coarse to resolve the curvature and the rounded integer is suspect
    plaquette_max: float = 0.0


def _torus_sweep(spec, bands, n_k, n_t, cutoff, period, check=True):
    """Eigen-decompositions over the (k, t) torus for the requested bands.

    Returns (vectors dict band -> (n_t, n_k, dim) array, gaps dict
    band -> (below, above) minimum gaps over the torus).
    """
    L = float(spec.L_exact)
    ks = -math.pi / L + (2.0 * math.pi / L) * np.arange(n_k) / n_k
    nb_need = max(bands) + 1
    if check:
        _check_cutoff(spec, 0.0, cutoff, nb_need, ks)
    dim = 2 * cutoff + 1
    vecs = {b: np.empty((n_t, n_k, dim), dtype=complex) for b in bands}
    emin_above = {b: math.inf for b in bands}
    emin_below = {b: math.inf for b in bands}
    for it in range(n_t):
        t = period * it / n_t
        for ik, k in enumerate(ks):
            w, v = _eig_bands(spec, k, t, cutoff, nb_need)
            for b in bands:
                vecs[b][it, ik] = v[:, b - 1]
                emin_above[b] = min(emin_above[b], w[b] - w[b - 1])
                if b >= 2:
                    emin_below[b] = min(emin_below[b], w[b - 1] - w[b - 2])
    return vecs, emin_below, emin_above


def chern_multi(spec, bands, n_k: int = 48, n_t: int = 48, cutoff: int = 64,
                period: float | None = None,
                gauge_seed: int | None = None) -> list:
    """Chern numbers of several bands from one torus sweep.

    Plaquette field strengths are gauge invariant; the integer is the
    accumulated phase over the torus divided by 2 pi. A band gap anywhere
    below 1e-6 raises IsolationError. gauge_seed, when set, scrambles every
    eigenvector by a random U(1) phase first; the result must not move (a
    cheap self-check that the plaquette products really are gauge-free).
    """
    bands = sorted(set(int(b) for b in bands))
    if min(bands) < 1:
        raise ConfigError("bands are 1-indexed")
    if period is None:
        period = spec.T
    vecs, gaps_below, gaps_above = _torus_sweep(
        spec, bands, n_k, n_t, cutoff, period
    )
    if gauge_seed is not None:
        rng = np.random.default_rng(gauge_seed)
        for b in bands:
            ph = rng.uniform(0.0, 2.0 * math.pi, size=vecs[b].shape[:2])
            vecs[b] = vecs[b] * np.exp(1j * ph)[:, :, None]
    out = []
    for b in bands:
        gap = gaps_above[b] if b == 1 else min(gaps_above[b], gaps_below[b])
        if gap < 1e-6:
            raise IsolationError(
                f"band {b} gap closes to {gap:.2e} on the torus; "
                "Chern number undefined"
            )
        vb = vecs[b]
        total = 0.0
        plaq_max = 0.0
        for it in range(n_t):
            it1 = (it + 1) % n_t
            for ik in range(n_k):
                a = vb[it, ik]
                if ik < n_k - 1:
                    bb = vb[it, ik + 1]
                    cc = vb[it1, ik + 1]
                else:
                    bb = _k_shift(vb[it, 0])
                    cc = _k_shift(vb[it1, 0])
                dd = vb[it1, ik]
                u = (
                    np.vdot(a, bb)
                    * np.vdot(bb, cc)
                    * np.vdot(cc, dd)
                    * np.vdot(dd, a)
                )
                ph = cmath.phase(u)
                total += ph
                plaq_max = max(plaq_max, abs(ph))
        raw = total / (2.0 * math.pi)
        rounded = int(round(raw))
        if abs(raw - rounded) > 1e-3:
            raise ConvergenceError(
                f"band {b} plaquette sum {raw:.6f} is not close to an integer; "
                "refine n_k / n_t"
            )
        out.append(ChernResult(band=b, chern=rounded, raw=raw, n_k=n_k,
                               n_t=n_t, min_gap=gap, plaquette_max=plaq_max))
    return out


def chern(spec, band: int, n_k: int = 48, n_t: int = 48, cutoff: int = 64,
          period: float | None = None) -> ChernResult:
    return chern_multi(spec, [band], n_k=n_k, n_t=n_t, cutoff=cutoff,
                       period=period)[0]


def band_gap_min(spec, band: int, n_k: int = 48, n_t: int = 48,
                 cutoff: int = 64, period: float | None = None) -> float:
    """Minimum gap between `band` and `band`+1 over the (k, t) torus."""
    if period is None:
        period = spec.T
    L = float(spec.L_exact)
    ks = -math.pi / L + (2.0 * math.pi / L) * np.arange(n_k) / n_k
    gap = math.inf
    for it in range(n_t):
        t = period * it / n_t
        for k in ks:
            w, _ = _eig_bands(spec, k, t, cutoff, band + 1)
            gap = min(gap, w[band] - w[band - 1])
    return gap


@dataclass
class WannierState:
    band: int
    cell: int
    field: object
    center: float


def wannier(spec, band: int = 1, cell: int = 0, t: float = 0.0,
            n_k: int = 64, cutoff: int = 64, ppc: int = 64) -> WannierState:
    """Maximally localized Wannier function of one band at frozen time t.

    In 1D the Wilson-loop (parallel transport) gauge is exactly maximally
    localizing. The function is sampled on a superbox of n_k cells with ppc
    points per cell; n_k * ppc must be a power of two.
    """
    from .gpe_solver import ComplexField, Grid1D

    sp = bloch_bands(spec, t, n_k=n_k, cutoff=cutoff, n_bands=band)
    L = float(spec.L_exact)
    n_pts = n_k * ppc
    vecs = [sp.vectors[j, :, band - 1].copy() for j in range(n_k)]
    # parallel transport, then spread the residual holonomy phase evenly
    for j in range(1, n_k):
        ov = np.vdot(vecs[j - 1], vecs[j])
        vecs[j] *= cmath.exp(-1j * cmath.phase(ov))
    wloop = np.vdot(vecs[-1], _k_shift(vecs[0]))
    chi = cmath.phase(wloop)
    for j in range(n_k):
        vecs[j] *= cmath.exp(1j * chi * j / n_k)

    width = n_k * L
    grid = Grid1D(x_min=-0.5 * width, x_max=0.5 * width, n_points=n_pts)
    x = grid.x
    M = sp.cutoff
    G = 2.0 * math.pi / L * np.arange(-M, M + 1)
    wvals = np.zeros(n_pts, dtype=complex)
    for j, k in enumerate(sp.ks):
        u = np.exp(1j * np.outer(x, G)) @ vecs[j]
        wvals += np.exp(1j * k * x) * u
    f = ComplexField(grid=grid, values=wvals, time=t)
    f.values /= math.sqrt(f.norm())

    # center the orbital in the home cell, then shift to the requested cell;
    # rolls are whole cells only so the lattice registration is preserved
    peak = int(np.argmax(np.abs(f.values)))
    f.values = np.roll(f.values, -round(x[peak] / L) * ppc)
    dens = f.density()
    com = float(np.sum(x * dens) / np.sum(dens))
    f.values = np.roll(f.values, (-round(com / L) + cell) * ppc)
    dens = f.density()
    center = float(np.sum(x * dens) * grid.dx)
    peak_idx = int(np.argmax(np.abs(f.values)))
    phase = cmath.phase(complex(f.values[peak_idx]))
    f.values *= cmath.exp(-1j * phase)
    return WannierState(band=band, cell=cell, field=f, center=center)


def band_populations(field, spec, n_bands: int = 8, cutoff: int = 64,
                     t: float | None = None) -> np.ndarray:
    """Fraction of the particle number in each of the lowest bands.

    The box must span a whole number of cells L. Momentum components of the
    field are matched to plane-wave orders of the Bloch problem at each
    box momentum k_j, then projected on the band eigenvectors.
    """
    import scipy.fft as sfft

    if t is None:
        t = field.time
    L = float(spec.L_exact)
    W = field.grid.width
    nc = W / L
    if abs(nc - round(nc)) > 1e-9:
        raise GridMismatchError("box width must be an integer number of cells")
    nc = int(round(nc))
    if nc < 8 or nc % 2:
        raise GridMismatchError("need an even number of cells, at least 8")
    n = field.grid.n_points
    if n % nc:
        raise GridMismatchError("grid points must divide evenly into cells")

    ft = sfft.fft(field.values) * (field.grid.dx / math.sqrt(W))
    M = cutoff
    dim = 2 * M + 1
    N = field.norm()
    pops = np.zeros(n_bands)
    for j in range(nc):
        k = 2.0 * math.pi * j / W
        w, v = _eig_bands(spec, k, t, M, n_bands)
        # plane-wave amplitudes of the field at momenta k + G_m
        idx = (j + np.arange(-M, M + 1) * nc) % n
        a = ft[idx]
        amp = v.conj().T @ a
        pops += np.abs(amp) ** 2
    return pops / N


def mean_band_populations(fields, spec, n_bands: int = 8, cutoff: int = 64):
    """Average of instantaneous band populations over a list of snapshots."""
    acc = np.zeros(n_bands)
    for f in fields:
        acc += band_populations(f, spec, n_bands=n_bands, cutoff=cutoff)
    return acc / len(fields)


def com_estimate(populations, cherns, L: float) -> float:
    """Per-cycle displacement predicted by band populations times C_a * L."""
    populations = np.asarray(populations, dtype=float)
    cs = [c.chern if isinstance(c, ChernResult) else int(c) for c in cherns]
    if len(cs) > len(populations):
        raise ConfigError("more Chern numbers than populations")
    return float(sum(populations[i] * cs[i] * L for i in range(len(cs))))


def fractional_displacement(cherns) -> Fraction:
    """Mean Chern number of a band group as an exact fraction (units of L)."""
    cs = [c.chern if isinstance(c, ChernResult) else int(c) for c in cherns]
    if not cs:
        raise ConfigError("need at least one band")
    return Fraction(sum(cs), len(cs))
