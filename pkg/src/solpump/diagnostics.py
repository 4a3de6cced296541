"""Transport regime classification and stability diagnostics.

The regimes follow the displacement-per-cycle and minimum-fidelity
thresholds: pumped means the soliton moves at least half a sliding-lattice
period per cycle while staying faithful to its perturbed twin; trapped means
it barely moves; everything else is the chaotic crossover. Very light
solitons that feel no force at all are promoted to quasi-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace as dc_replace
from enum import Enum

import numpy as np

from . import effective_particle, gap_soliton
from .errors import SolpumpError, SpanError
from .gpe_solver import (
    ComplexField,
    PropagationConfig,
    Trajectory,
    center_of_mass,
    co_propagate,
    default_dt,
    evolve,
    fidelity,
    for_spec,
    overlap_modulus,
    perturb,
    propagate,
    translate,
)
from .model import SolitonAnsatz, bright_soliton, soliton_cells


class RegimeLabel(str, Enum):
    QUASI_FREE = "quasi_free"
    PUMPED = "pumped"
    CROSSOVER = "crossover"
    TRAPPED = "trapped"


@dataclass
class PairRun:
    times: np.ndarray
    com: np.ndarray
    norm: np.ndarray
    fidelity: np.ndarray
    min_fidelity: float


def min_fidelity_run(spec, psi0: ComplexField, t_final: float,
                     eps: float = 1e-3, seed: int = 0,
                     cfg: PropagationConfig | None = None,
                     obs_dt: float = 0.1, workers: int = 1) -> PairRun:
    """Co-propagate psi0 and its noise-perturbed twin, tracking fidelity.

    Fidelity is sampled roughly every obs_dt time units; the minimum over
    the run is the chaos diagnostic.
    """
    if cfg is None:
        dt = default_dt(spec)
        cfg = PropagationConfig(dt=dt, observable_stride=max(1, round(obs_dt / dt)))
    twin = perturb(psi0, eps, seed)
    times, coms, norms, fids = [], [], [], []

    def sample(t, a, b):
        times.append(t)
        coms.append(center_of_mass(a, strict=False))
        norms.append(a.norm())
        fids.append(fidelity(a, b))

    co_propagate((psi0.copy(), twin), spec, t_final, cfg, sample, workers)
    fids = np.asarray(fids)
    return PairRun(
        times=np.asarray(times), com=np.asarray(coms), norm=np.asarray(norms),
        fidelity=fids, min_fidelity=float(fids.min()),
    )


def displacement_per_cycle(traj: Trajectory, T: float,
                           n_cycles: int | None = None) -> float:
    """Center-of-mass displacement per pump period, from interpolated marks."""
    t0, t1 = traj.times[0], traj.times[-1]
    if n_cycles is None:
        n_cycles = int(math.floor((t1 - t0) / T + 1e-9))
    if n_cycles < 1 or t0 + n_cycles * T > t1 + 1e-9:
        raise SpanError(
            f"trajectory spans {t1 - t0:.4g}, shorter than {n_cycles} cycles"
        )
    c0 = float(np.interp(t0, traj.times, traj.com))
    c1 = float(np.interp(t0 + n_cycles * T, traj.times, traj.com))
    return (c1 - c0) / n_cycles


def classify_point(min_f: float, disp: float, d2: float) -> RegimeLabel:
    if min_f >= 0.9 and abs(disp) >= 0.5 * d2:
        return RegimeLabel.PUMPED
    if abs(disp) < 0.25 * d2:
        return RegimeLabel.TRAPPED
    return RegimeLabel.CROSSOVER


@dataclass
class ScanResult:
    N: np.ndarray
    min_fidelity: np.ndarray
    disp_per_cycle: np.ndarray
    labels: list
    errors: dict


def _initial_state(spec, N, excitation):
    if excitation == "bright":
        grid = for_spec(spec, cells=soliton_cells(spec, N))
        return bright_soliton(SolitonAnsatz(N=N), grid)
    if excitation == "gap_soliton":
        return gap_soliton.solve_for_norm(spec, N).field
    raise SolpumpError(f"unknown excitation {excitation!r}")


def scan_regimes(spec, Ns, excitation: str = "bright",
                 t_final: float | None = None, eps: float = 1e-3,
                 seed: int = 0, workers: int = 1) -> ScanResult:
    """Min-fidelity and displacement scan over particle numbers.

    Failures at individual points are recorded and the scan continues.
    After the pointwise pass, points lighter than the first instability dip
    that show no displacement are relabeled quasi-free.
    """
    if t_final is None:
        t_final = 3.0 * spec.T
    n_cycles = max(1, int(round(t_final / spec.T)))
    d2 = float(spec.d2)
    Ns = np.asarray(list(Ns), dtype=float)
    minf = np.full(len(Ns), np.nan)
    disp = np.full(len(Ns), np.nan)
    labels: list = [None] * len(Ns)
    errors: dict = {}
    for i, N in enumerate(Ns):
        try:
            psi0 = _initial_state(spec, float(N), excitation)
            run = min_fidelity_run(spec, psi0, t_final, eps=eps, seed=seed,
                                   workers=workers)
            traj = Trajectory(times=run.times, com=run.com, norm=run.norm)
            minf[i] = run.min_fidelity
            disp[i] = displacement_per_cycle(traj, spec.T, n_cycles)
            labels[i] = classify_point(minf[i], disp[i], d2)
        except SolpumpError as exc:
            errors[i] = f"{type(exc).__name__}: {exc}"
    _promote_quasi_free(Ns, labels, minf, disp, d2)
    return ScanResult(N=Ns, min_fidelity=minf, disp_per_cycle=disp,
                      labels=labels, errors=errors)


def _promote_quasi_free(Ns, labels, minf, disp, d2):
    pumped = [i for i, l in enumerate(labels) if l is RegimeLabel.PUMPED]
    if not pumped:
        return
    prefix = [i for i in range(pumped[0]) if labels[i] is not None]
    if not prefix:
        return
    dip = min(prefix, key=lambda i: minf[i])
    for i in prefix:
        if Ns[i] < Ns[dip] and abs(disp[i]) < 0.05 * d2:
            labels[i] = RegimeLabel.QUASI_FREE


def ee_gpe_report(spec, N: float, excitation: str = "bright",
                  x0: float = 0.0, v0: float = 0.0,
                  t_final: float | None = None,
                  cfg: PropagationConfig | None = None,
                  workers: int = 1) -> dict:
    """Side-by-side center-of-mass: GPE versus the effective particle.

    Returns max_dev plus the sampled series; the effective trajectory is
    interpolated onto the GPE sample times.
    """
    if t_final is None:
        t_final = 3.0 * spec.T
    if excitation == "bright":
        grid = for_spec(spec, cells=soliton_cells(spec, N))
        psi0 = bright_soliton(SolitonAnsatz(N=N, x0=x0, v0=v0), grid)
        ee_x0, ee_v0 = x0, v0
    elif excitation == "gap_soliton":
        psi0 = gap_soliton.solve_for_norm(spec, N).field
        ee_x0 = center_of_mass(psi0, strict=False)
        ee_v0 = 0.0
    else:
        raise SolpumpError(f"unknown excitation {excitation!r}")
    traj = propagate(psi0, spec, t_final, cfg, workers)
    ee = effective_particle.integrate(spec, N, ee_x0, ee_v0, t_final)
    x_ee = np.interp(traj.times, ee.times, ee.x0)
    dev = np.abs(traj.com - x_ee)
    return {
        "max_dev": float(dev.max()),
        "times": traj.times,
        "com_gpe": traj.com,
        "x0_ee": x_ee,
    }


@dataclass
class OverlapScan:
    v: np.ndarray
    T: np.ndarray
    overlap: np.ndarray
    target: str


def scan_overlap(spec, N_target: float, v_list, target: str = "translate",
                 shift: float | None = None, grid=None,
                 dt: float | None = None, workers: int = 1) -> OverlapScan:
    """Overlap of the one-period propagated gap soliton with its expected image.

    target="translate": against the initial profile translated by `shift`
    (defaults to C_1 * L from the band-1 Chern number).
    target="fresh": against a freshly solved instantaneous soliton seeded
    from the propagated profile.
    """
    if target not in ("translate", "fresh"):
        raise SolpumpError(f"unknown overlap target {target!r}")
    if grid is None:
        grid = gap_soliton.default_grid(spec)
    base = gap_soliton.solve_for_norm(spec, N_target, t=0.0, grid=grid)
    if target == "translate" and shift is None:
        from .band_topology import chern

        shift = chern(spec, 1).chern * float(spec.L_exact)
    if dt is None:
        dt = default_dt(spec)
    vs = np.asarray(list(v_list), dtype=float)
    Ts = np.empty_like(vs)
    ovs = np.empty_like(vs)
    for i, v in enumerate(vs):
        spec_v = dc_replace(spec, v=float(v))
        Ts[i] = spec_v.T
        out = evolve(base.field, spec_v, Ts[i],
                     PropagationConfig(dt=dt), workers)
        if target == "translate":
            ref = translate(base.field, shift)
        else:
            fresh = gap_soliton.solve_for_norm(
                spec, N_target, t=0.0, grid=grid, guess=out,
                mu_hint=base.mu,
            )
            ref = fresh.field
        ref.time = out.time
        ovs[i] = overlap_modulus(out, ref)
    return OverlapScan(v=vs, T=Ts, overlap=ovs, target=target)
