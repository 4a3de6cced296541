"""Named scenario runners, run-config parsing, and manifest plumbing.

Each scenario is a pure function of its RunConfig: rerunning with the same
config rewrites byte-identical data files. All randomness is split off the
single config seed with numpy's SeedSequence, so ensembles and perturbed
twins are reproducible member by member.

Two numerics presets are built in. "paper" carries the validated settings
behind the headline numbers; "fast" coarsens grids, steps, and scan lists
so that every scenario finishes in under a minute for smoke testing.
"""
from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import band_topology, diagnostics, effective_particle, gap_soliton, pendulum
from .errors import ConfigError, SolpumpError
from .gpe_solver import (
    ComplexField,
    PropagationConfig,
    center_of_mass,
    default_dt,
    for_spec,
    propagate,
)
from .io_formats import (
    atomic_write_text,
    density_csv,
    save_snapshot,
    sha256_file,
    trajectory_csv,
    write_csv,
    write_json,
)
from .model import (
    SolitonAnsatz,
    SuperlatticeSpec,
    bright_soliton,
    potential,
    soliton_cells,
    spec_from_dict,
    spec_to_dict,
)

try:
    from importlib.metadata import version as _pkg_version

    VERSION = _pkg_version("solpump")
except Exception:  # pragma: no cover
    VERSION = "0+unknown"

PRESETS = ("fast", "paper")

_SCENARIOS: dict = {}


def _register(name):
    def deco(fn):
        _SCENARIOS[name] = fn
        return fn

    return deco


def scenario_names():
    return sorted(_SCENARIOS)


# ---------------------------------------------------------------- config

_EXCITATION_KEYS = {"kind", "N", "x0", "v0", "N_target"}
_NUMERICS_KEYS = {
    "dt", "cells", "dx_factor", "n_k", "n_t", "cutoff", "cycles",
    "members", "N_list", "v_list",
}
_OUTPUT_KEYS = {
    "directory", "snapshot_stride", "observable_stride",
    "max_x_points", "max_t_points",
}
_TOP_KEYS = {"scenario", "preset", "seed", "spec", "excitation", "numerics", "outputs"}


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    preset: str = "paper"
    seed: int = 0
    spec: SuperlatticeSpec | None = None
    excitation: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)


def _check_number(val, path, integer=False, positive=False):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {val!r}")
    if integer and int(val) != val:
        raise ConfigError(f"{path}: expected an integer, got {val!r}")
    if positive and val <= 0:
        raise ConfigError(f"{path}: must be positive, got {val!r}")
    if not math.isfinite(val):
        raise ConfigError(f"{path}: must be finite")
    return int(val) if integer else float(val)


def _check_excitation(exc: dict) -> dict:
    """Validate provided keys only; scenario runners supply their own defaults,
    so an absent key must stay absent here."""
    extra = set(exc) - _EXCITATION_KEYS
    if extra:
        raise ConfigError(f"unknown key: excitation.{sorted(extra)[0]}")
    kind = exc.get("kind", "bright")
    if kind not in ("bright", "gap_soliton"):
        raise ConfigError(f"excitation.kind: unknown kind {kind!r}")
    out = dict(exc)
    if kind == "bright":
        if "N_target" in exc:
            raise ConfigError("excitation.N_target: only valid for gap_soliton")
        if "N" in exc:
            out["N"] = _check_number(exc["N"], "excitation.N", positive=True)
        for key in ("x0", "v0"):
            if key in exc:
                out[key] = _check_number(exc[key], f"excitation.{key}")
    else:
        for bad in ("N", "x0", "v0"):
            if bad in exc:
                raise ConfigError(f"excitation.{bad}: only valid for bright")
        if "N_target" in exc:
            out["N_target"] = _check_number(
                exc["N_target"], "excitation.N_target", positive=True
            )
    return out


def _check_numerics(num: dict) -> dict:
    extra = set(num) - _NUMERICS_KEYS
    if extra:
        raise ConfigError(f"unknown key: numerics.{sorted(extra)[0]}")
    out = {}
    for key in ("dt",):
        if key in num:
            out[key] = _check_number(num[key], f"numerics.{key}", positive=True)
    for key in ("cells", "dx_factor", "n_k", "n_t", "cutoff", "cycles", "members"):
        if key in num:
            out[key] = _check_number(
                num[key], f"numerics.{key}", integer=True, positive=True
            )
    for key in ("N_list", "v_list"):
        if key in num:
            if not isinstance(num[key], (list, tuple)) or not num[key]:
                raise ConfigError(f"numerics.{key}: expected a nonempty list")
            out[key] = [
                _check_number(x, f"numerics.{key}[{i}]", positive=True)
                for i, x in enumerate(num[key])
            ]
    return out


def _check_outputs(outs: dict) -> dict:
    extra = set(outs) - _OUTPUT_KEYS
    if extra:
        raise ConfigError(f"unknown key: outputs.{sorted(extra)[0]}")
    out = {"directory": outs.get("directory", "runs")}
    if not isinstance(out["directory"], str) or not out["directory"]:
        raise ConfigError("outputs.directory: expected a nonempty string")
    for key in ("snapshot_stride", "observable_stride", "max_x_points", "max_t_points"):
        if key in outs:
            out[key] = _check_number(outs[key], f"outputs.{key}", integer=True)
            if out[key] < 0:
                raise ConfigError(f"outputs.{key}: must be nonnegative")
    return out


def validate_config(source) -> RunConfig:
    """Parse, default, and invariant-check a run config.

    `source` is a path to a JSON file or an already-loaded dict. Unknown
    keys anywhere are errors, reported with their dotted path.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from None
    elif isinstance(source, dict):
        raw = source
    else:
        raise ConfigError(f"expected a path or dict, got {type(source).__name__}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    extra = set(raw) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown key: {sorted(extra)[0]}")
    name = raw.get("scenario")
    if name not in _SCENARIOS:
        raise ConfigError(
            f"scenario: expected one of {scenario_names()}, got {name!r}"
        )
    preset = raw.get("preset", "paper")
    if preset not in PRESETS:
        raise ConfigError(f"preset: expected one of {list(PRESETS)}, got {preset!r}")
    seed = _check_number(raw.get("seed", 0), "seed", integer=True)
    spec = None
    if "spec" in raw:
        if not isinstance(raw["spec"], dict):
            raise ConfigError("spec: expected an object")
        try:
            spec = spec_from_dict(raw["spec"])
        except ConfigError as exc:
            raise ConfigError(f"spec: {exc}") from None
    return RunConfig(
        scenario=name,
        preset=preset,
        seed=seed,
        spec=spec,
        excitation=_check_excitation(raw.get("excitation", {}) or {}),
        numerics=_check_numerics(raw.get("numerics", {}) or {}),
        outputs=_check_outputs(raw.get("outputs", {}) or {}),
    )


def config_to_dict(cfg: RunConfig) -> dict:
    out = {
        "scenario": cfg.scenario,
        "preset": cfg.preset,
        "seed": cfg.seed,
        "excitation": dict(cfg.excitation),
        "numerics": dict(cfg.numerics),
        "outputs": dict(cfg.outputs),
    }
    if cfg.spec is not None:
        out["spec"] = spec_to_dict(cfg.spec)
    return out


def config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------- manifest

@dataclass
class RunManifest:
    scenario: str
    config: dict
    config_hash: str
    version: str
    started: str
    finished: str
    walltime_s: float
    files: dict
    metrics: dict
    status: str = "ok"
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "config": self.config,
            "config_hash": self.config_hash,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "walltime_s": self.walltime_s,
            "files": self.files,
            "metrics": self.metrics,
            "status": self.status,
            "error": self.error,
        }


class _Emitter:
    """Writes scenario outputs under one root and keeps their digests."""

    def __init__(self, root: str):
        self.root = root
        self.files: dict = {}

    def path(self, rel: str) -> str:
        p = os.path.join(self.root, rel)
        parent = os.path.dirname(p)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return p

    def _record(self, rel: str):
        self.files[rel] = sha256_file(os.path.join(self.root, rel))

    def csv(self, rel: str, header, rows):
        write_csv(self.path(rel), header, rows)
        self._record(rel)

    def json(self, rel: str, obj):
        write_json(self.path(rel), obj)
        self._record(rel)

    def trajectory(self, rel: str, traj):
        trajectory_csv(traj, self.path(rel))
        self._record(rel)

    def density(self, rel: str, fields, max_x=256, max_t=200):
        density_csv(fields, self.path(rel), max_x_points=max_x, max_t_points=max_t)
        self._record(rel)

    def snapshot(self, rel_base: str, fld: ComplexField):
        save_snapshot(fld, self.path(rel_base))
        self._record(rel_base + ".json")
        self._record(rel_base + ".bin")


def run_scenario(config: RunConfig, workers: int = 1) -> RunManifest:
    """Dispatch to the named runner and write its manifest.

    Component failures (any package error) are recorded in the manifest,
    which is written either way; the status field distinguishes them.
    """
    if config.scenario not in _SCENARIOS:
        raise ConfigError(f"unknown scenario {config.scenario!r}")
    outdir = os.path.join(config.outputs.get("directory", "runs"), config.scenario)
    em = _Emitter(outdir)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    t0 = time.time()
    status, err, metrics = "ok", None, {}
    try:
        metrics = _SCENARIOS[config.scenario](config, em, workers)
    except SolpumpError as exc:
        status = "failed"
        err = f"{type(exc).__name__}: {exc}"
    finished = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    manifest = RunManifest(
        scenario=config.scenario,
        config=config_to_dict(config),
        config_hash=config_hash(config),
        version=VERSION,
        started=started,
        finished=finished,
        walltime_s=round(time.time() - t0, 3),
        files=dict(sorted(em.files.items())),
        metrics=metrics,
        status=status,
        error=err,
    )
    emit_plotdata(manifest, root=outdir)
    write_json(em.path("manifest.json"), manifest.to_dict())
    return manifest


def emit_plotdata(manifest: RunManifest, root: str | None = None):
    """Write a plot-ready index grouping the run's series by panel."""
    if root is None:
        root = os.path.join(
            manifest.config.get("outputs", {}).get("directory", "runs"),
            manifest.scenario,
        )
    panels: dict = {}
    for rel in sorted(manifest.files):
        panel = os.path.dirname(rel) or "."
        panels.setdefault(panel, []).append(rel)
    index = {
        "scenario": manifest.scenario,
        "panels": panels,
        "metrics": manifest.metrics,
    }
    path = os.path.join(root, "plotdata.json")
    os.makedirs(root, exist_ok=True)
    atomic_write_text(
        path, json.dumps(index, indent=1, sort_keys=True, default=str) + "\n"
    )
    return [path]


# ---------------------------------------------------------------- knobs

@dataclass(frozen=True)
class _Knobs:
    fast: bool
    dt: float | None
    cells: int | None
    dx_factor: int
    n_k: int
    n_t: int
    cutoff: int
    cycles: int
    members: int
    N_list: list | None
    v_list: list | None


def _knobs(cfg: RunConfig) -> _Knobs:
    fast = cfg.preset == "fast"
    num = cfg.numerics
    return _Knobs(
        fast=fast,
        dt=num.get("dt"),
        cells=num.get("cells"),
        dx_factor=num.get("dx_factor", 16 if fast else 32),
        n_k=num.get("n_k", 12 if fast else 48),
        n_t=num.get("n_t", 12 if fast else 48),
        cutoff=num.get("cutoff", 32 if fast else 64),
        cycles=num.get("cycles", 1 if fast else 3),
        members=num.get("members", 6 if fast else 20),
        N_list=num.get("N_list"),
        v_list=num.get("v_list"),
    )


def _dt_for(kb: _Knobs, spec) -> float:
    if kb.dt is not None:
        return kb.dt
    base = default_dt(spec)
    return 4.0 * base if kb.fast else base


def _child_seeds(seed: int, n: int):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _bright(spec, N, x0=0.0, v0=0.0, kb: _Knobs | None = None) -> ComplexField:
    cells_min = 16 if (kb and kb.fast) else 24
    cells = kb.cells if (kb and kb.cells) else soliton_cells(spec, N, cells_min)
    grid = for_spec(spec, cells=cells, dx_factor=kb.dx_factor if kb else 32)
    return bright_soliton(SolitonAnsatz(N=N, x0=x0, v0=v0), grid)


def _prop_cfg(kb: _Knobs, spec, t_final: float, snapshots: int = 0) -> PropagationConfig:
    dt = _dt_for(kb, spec)
    nsteps = max(1, int(round(t_final / dt)))
    obs = max(1, nsteps // (80 * max(1, kb.cycles)))
    snap = max(1, nsteps // snapshots) if snapshots else 0
    return PropagationConfig(dt=dt, snapshot_stride=snap, observable_stride=obs)


def _ee_series(spec, N, x0, v0, t_final, times):
    ee = effective_particle.integrate(spec, N, x0, v0, t_final)
    return np.interp(times, ee.times, ee.x0)


def _effective_csv(em, rel, traj_times, x_ee):
    em.csv(rel, ["t", "x0_ee"], zip(traj_times, x_ee))


# ---------------------------------------------------------------- scenarios

_SHALLOW = dict(p1=0.1, p2=0.1, d1=Fraction(1, 2), d2=Fraction(1), v=0.1)
_DEEP15 = dict(p1=15.0, p2=15.0, d1=Fraction(1, 2), d2=Fraction(1), v=0.1)
_GAP25 = dict(p1=25.0, p2=25.0, d1=Fraction(1, 2), d2=Fraction(2, 3), v=0.1)


@_register("fig1")
def _fig1(cfg: RunConfig, em: _Emitter, workers: int) -> dict:
    """Shallow lattice quadrant: pumping vs trapping, integer vs fractional."""
    kb = _knobs(cfg)
    base = cfg.spec or SuperlatticeSpec(**_SHALLOW)
    panels = {
        "a": (4.0, base.d2),
        "b": (30.0, base.d2),
        "c": (4.0, base.d2 / 3),
        "d": (30.0, base.d2 / 3),
    }
    metrics: dict = {}
    for name, (N, d2) in panels.items():
        spec = replace(base, d2=d2)
        t_final = kb.cycles * spec.T
        psi0 = _bright(spec, N, kb=kb)
        traj = propagate(psi0, spec, t_final, _prop_cfg(kb, spec, t_final, 60), workers)
        em.trajectory(f"panel_{name}/trajectory.csv", traj)
        em.density(f"panel_{name}/density.csv", traj.snapshots)
        x_ee = _ee_series(spec, N, 0.0, 0.0, t_final, traj.times)
        _effective_csv(em, f"panel_{name}/effective.csv", traj.times, x_ee)
        disp = float(traj.com[-1] - traj.com[0])
        metrics[f"disp_{name}"] = disp
        metrics[f"disp_per_cycle_{name}"] = disp / kb.cycles
        metrics[f"ee_max_dev_{name}"] = float(np.abs(traj.com - x_ee).max())
    return metrics


@_register("fig2")
def _fig2(cfg: RunConfig, em: _Emitter, workers: int) -> dict:
    """Fidelity scan over N plus phase portraits of the crossover cases."""
    kb = _knobs(cfg)
    spec = cfg.spec or SuperlatticeSpec(**_SHALLOW)
    if kb.N_list is not None:
        Ns = np.asarray(kb.N_list, dtype=float)
    elif kb.fast:
        Ns = np.array([2.0, 4.0, 8.0, 12.0, 16.0])
    else:
        Ns = np.arange(1.0, 17.0 + 1e-9, 0.25)
    t_final = kb.cycles * spec.T
    scan = diagnostics.scan_regimes(spec, Ns, "bright", t_final=t_final,
                                    seed=cfg.seed, workers=workers)
    em.csv(
        "scan.csv",
        ["N", "min_fidelity", "disp_per_cycle", "label"],
        [
            (n, f, d, lab.value if lab else "error")
            for n, f, d, lab in zip(scan.N, scan.min_fidelity,
                                    scan.disp_per_cycle, scan.labels)
        ],
    )
    if scan.errors:
        em.json("scan_errors.json", {f"{k:g}": v for k, v in scan.errors.items()})
    ok = np.isfinite(scan.min_fidelity)
    metrics: dict = {
        "N_dip": float(scan.N[ok][np.argmin(scan.min_fidelity[ok])]),
        "labels": {f"{n:g}": (lab.value if lab else "error")
                   for n, lab in zip(scan.N, scan.labels)},
    }
    portrait_Ns = [11.3, 13.1, 14.56, 15.29]
    if kb.fast:
        portrait_Ns = portrait_Ns[:2]
    seeds = _child_seeds(cfg.seed, len(portrait_Ns))
    spreads = {}
    for Nc, sd in zip(portrait_Ns, seeds):
        ens = effective_particle.ensemble_phase_portrait(
            spec, Nc, jitter=0.001, count=kb.members, seed=sd, t_final=t_final
        )
        rows = []
        finals = []
        for m, tr in enumerate(ens.trajectories):
            stride = max(1, len(tr.times) // 200)
            rows.extend(zip([m] * len(tr.times[::stride]), tr.times[::stride],
                            tr.x0[::stride], tr.xdot[::stride]))
            finals.append((m, ens.N_values[m], tr.x0[-1], tr.xdot[-1]))
        tag = f"{Nc:g}".replace(".", "p")
        em.csv(f"portrait_N{tag}/members.csv", ["member", "t", "x0", "xdot"], rows)
        em.csv(f"portrait_N{tag}/endpoints.csv",
               ["member", "N", "x0_final", "xdot_final"], finals)
        xs = [f[2] for f in finals]
        spreads[f"{Nc:g}"] = float(max(xs) - min(xs))
    metrics["portrait_seeds"] = {f"{n:g}": s for n, s in zip(portrait_Ns, seeds)}
    metrics["portrait_spreads"] = spreads
    return metrics


@_register("fig3")
def _fig3(cfg: RunConfig, em: _Emitter, workers: int) -> dict:
    """Deep lattice quadrant with effective-particle overlays."""
    kb = _knobs(cfg)
    base = cfg.spec or SuperlatticeSpec(**_DEEP15)
    panels = {
        "a": (7.0, base.d2),
        "b": (20.0, base.d2),
        "c": (7.0, base.d2 / 3),
        "d": (30.0, base.d2 / 3),
    }
    metrics: dict = {}
    for name, (N, d2) in panels.items():
        spec = replace(base, d2=d2)
        t_final = kb.cycles * spec.T
        psi0 = _bright(spec, N, kb=kb)
        traj = propagate(psi0, spec, t_final, _prop_cfg(kb, spec, t_final, 60), workers)
        em.trajectory(f"panel_{name}/trajectory.csv", traj)
        em.density(f"panel_{name}/density.csv", traj.snapshots)
        x_ee = _ee_series(spec, N, 0.0, 0.0, t_final, traj.times)
        _effective_csv(em, f"panel_{name}/effective.csv", traj.times, x_ee)
        metrics[f"disp_per_cycle_{name}"] = float(
            (traj.com[-1] - traj.com[0]) / kb.cycles
        )
        metrics[f"ee_max_dev_{name}"] = float(np.abs(traj.com - x_ee).max())
    return metrics


@_register("fig4")
def _fig4(cfg: RunConfig, em: _Emitter, workers: int) -> dict:
    """Gap solitons on the four-band superlattice: bands, Chern numbers,
    Wannier track, and the three transport regimes."""
    kb = _knobs(cfg)
    spec = cfg.spec or SuperlatticeSpec(**_GAP25)
    metrics: dict = {}

    sp = band_topology.bloch_bands(spec, 0.0, n_k=max(kb.n_k, 24),
                                   cutoff=kb.cutoff, n_bands=6)
    em.csv(
        "bands.csv",
        ["k"] + [f"E{b}" for b in range(1, 7)],
        [(k, *row) for k, row in zip(sp.ks, sp.energies)],
    )

    cherns = band_topology.chern_multi(spec, [1, 2, 3, 4], n_k=kb.n_k,
                                       n_t=kb.n_t, cutoff=kb.cutoff)
    em.json("chern.json", [
        {"band": c.band, "chern": c.chern, "raw": c.raw, "min_gap": c.min_gap}
        for c in cherns
    ])
    metrics["chern"] = [c.chern for c in cherns]
    frac = band_topology.fractional_displacement([c.chern for c in cherns[:3]])
    metrics["fractional_step"] = float(frac * spec.L_exact)

    n_track = 21 if kb.fast else 201
    ts, centers = band_topology.wannier_center_track(
        spec, 1, n_t=n_track, n_k=kb.n_k, cutoff=kb.cutoff
    )
    em.csv("wannier_track.csv", ["t", "center"], zip(ts, centers))
    metrics["wannier_winding"] = float(centers[-1] - centers[0])

    grid = gap_soliton.default_grid(spec)
    norms = [7.0] if kb.fast else [0.3, 7.0, 20.0]
    pop_rows = []
    for N in norms:
        st = gap_soliton.solve_for_norm(spec, N, grid=grid)
        tag = f"{N:g}".replace(".", "p")
        em.snapshot(f"soliton_N{tag}/initial", st.field)
        t_final = kb.cycles * spec.T
        traj = propagate(st.field, spec, t_final,
                         _prop_cfg(kb, spec, t_final, 60), workers)
        em.trajectory(f"soliton_N{tag}/trajectory.csv", traj)
        em.density(f"soliton_N{tag}/density.csv", traj.snapshots)
        pops = band_topology.band_populations(st.field, spec, 8, kb.cutoff, t=0.0)
        pop_rows.append((N, *pops))
        metrics[f"mu_N{tag}"] = st.mu
        metrics[f"disp_per_cycle_N{tag}"] = float(
            (traj.com[-1] - traj.com[0]) / kb.cycles
        )
    em.csv("populations.csv",
           ["N"] + [f"rho{b}" for b in range(1, 9)], pop_rows)
    return metrics


@_register("s1")
def _s1(cfg: RunConfig, em: _Emitter, workers: int) -> dict:
    """Pendulum reduction: exact curves, velocity scan, inverse-T law."""
    kb = _knobs(cfg)
    spec = cfg.spec or SuperlatticeSpec(**_SHALLOW)
    N = cfg.excitation.get("N", 4.0)
    om0 = pendulum.omega0(N, spec.p2, spec.d2)
    d2 = float(spec.d2)
    metrics: dict = {"omega0": om0}

    curve_vs = [0.05, 0.2, om0 * 0.95, om0 * 1.05, 0.6, 1.0]
    if kb.fast:
        curve_vs = [0.1, 1.0]
    rows = []
    for v in curve_vs:
        T = math.pi / v
        t = np.linspace(0.0, 3 * T, 241 if kb.fast else 961)
        th0, thd0 = 0.0, -2.0 * v
        th = pendulum.theta_exact(th0, thd0, om0, t)
        _, th_rk, _ = pendulum.integrate_rk4(th0, thd0, om0, 3 * T,
                                             (3 * T) / (len(t) - 1))
        xlab = pendulum.lab_position(th, t, d2, T)
        rows.extend(zip([v] * len(t), t, th, th_rk, xlab))
    em.csv("curves.csv", ["v", "t", "theta", "theta_rk4", "x_lab"], rows)

    vs = np.geomspace(0.05, 1.5, 13 if kb.fast else 61)
    step_rows = []
    x3 = []
    for v in vs:
        T = math.pi / v
        th0, thd0 = 0.0, -2.0 * v
        k = pendulum.modulus(th0, thd0, om0)
        th_end = float(pendulum.theta_exact(th0, thd0, om0, np.array([3 * T]))[0])
        x_end = float(pendulum.lab_position(th_end, 3 * T, d2, T))
        step_rows.append((v, k, x_end))
        x3.append(x_end)
    em.csv("step.csv", ["v", "k_modulus", "x_lab_3T"], step_rows)
    x3 = np.asarray(x3)
    jump = np.argmax(np.abs(np.diff(x3)))
    metrics["v_step"] = float(0.5 * (vs[jump] + vs[jump + 1]))

    # deviation from exact quantization = swing amplitude, so take the
    # envelope over the last cycle rather than one aliasing-prone endpoint
    quant_rows = []
    devs = []
    for v in (0.1, 0.05):
        T = math.pi / v
        t = np.linspace(2 * T, 3 * T, 801)
        th = pendulum.theta_exact(0.0, -2.0 * v, om0, t)
        dev = float(np.max(np.abs(th))) * d2 / (2.0 * math.pi)
        quant_rows.append((T, dev))
        devs.append(dev)
    em.csv("quantization.csv", ["T", "deviation"], quant_rows)
    metrics["inverse_T_ratio"] = float(devs[0] / devs[1]) if devs[1] else math.inf
    return metrics


@_register("s2")
def _s2(cfg: RunConfig, em: _Emitter, workers: int) -> dict:
    """Static lattice: a kicked soliton stays trapped; dynamics follow the
    effective potential."""
    kb = _knobs(cfg)
    # the d=1 lattice bounds a 0.1 kick (escape velocity 0.119); at d=1/2
    # the sinh factor thins the effective well a hundredfold and it cannot
    spec = cfg.spec or SuperlatticeSpec(p1=0.1, p2=0.0, d1=Fraction(1),
                                        d2=Fraction(1), v=0.1)
    N = cfg.excitation.get("N", 4.0)
    v0 = cfg.excitation.get("v0", 0.1)
    t_final = 20.0 if kb.fast else 60.0
    psi0 = _bright(spec, N, 0.0, v0, kb)
    traj = propagate(psi0, spec, t_final, _prop_cfg(kb, spec, t_final), workers)
    ee = effective_particle.integrate(spec, N, 0.0, v0, t_final)
    x_ee = np.interp(traj.times, ee.times, ee.x0)
    em.csv("compare.csv", ["t", "com_gpe", "x0_ee"],
           zip(traj.times, traj.com, x_ee))
    d1 = float(spec.d1)
    xs = np.linspace(-2 * d1, 2 * d1, 401)
    em.csv("potential.csv", ["x", "V", "V_eff"],
           zip(xs, potential(spec, xs, 0.0),
               effective_particle.static_effective_potential(spec, N, xs)))
    return {
        "max_abs_x0": float(np.abs(ee.x0).max()),
        "ee_max_dev": float(np.abs(traj.com - x_ee).max()),
    }


@_register("s3")
def _s3(cfg: RunConfig, em: _Emitter, workers: int) -> dict:
    """Effective-particle ensembles: chaos shows up as endpoint spread."""
    kb = _knobs(cfg)
    spec = cfg.spec or SuperlatticeSpec(**_SHALLOW)
    N_list = kb.N_list or ([4.0, 11.3] if kb.fast else
                           [4.0, 11.3, 13.1, 14.56, 15.29])
    t_final = kb.cycles * spec.T if kb.fast else 3.0 * spec.T
    seeds = _child_seeds(cfg.seed, len(N_list))
    metrics: dict = {"seeds": {}, "spreads": {}}
    for Nc, sd in zip(N_list, seeds):
        ens = effective_particle.ensemble_phase_portrait(
            spec, Nc, jitter=0.001, count=kb.members, seed=sd, t_final=t_final
        )
        tag = f"{Nc:g}".replace(".", "p")
        rows = []
        finals = []
        for m, tr in enumerate(ens.trajectories):
            stride = max(1, len(tr.times) // 300)
            rows.extend(zip([m] * len(tr.times[::stride]), tr.times[::stride],
                            tr.x0[::stride], tr.xdot[::stride]))
            finals.append((m, ens.N_values[m], tr.x0[-1], tr.xdot[-1]))
        em.csv(f"ens_N{tag}/members.csv", ["member", "t", "x0", "xdot"], rows)
        em.csv(f"ens_N{tag}/endpoints.csv",
               ["member", "N", "x0_final", "xdot_final"], finals)
        xs = [f[2] for f in finals]
        metrics["seeds"][f"{Nc:g}"] = sd
        metrics["spreads"][f"{Nc:g}"] = float(max(xs) - min(xs))
    return metrics


@_register("s4")
def _s4(cfg: RunConfig, em: _Emitter, workers: int) -> dict:
    """Regime anatomy of the deep lattice: fidelity scan over N."""
    kb = _knobs(cfg)
    spec = cfg.spec or SuperlatticeSpec(**_DEEP15)
    Ns = kb.N_list or ([7.0, 20.0] if kb.fast else
                       [2.0, 4.0, 6.0, 7.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0])
    t_final = kb.cycles * spec.T
    scan = diagnostics.scan_regimes(spec, Ns, "bright", t_final=t_final,
                                    seed=cfg.seed, workers=workers)
    em.csv(
        "scan.csv",
        ["N", "min_fidelity", "disp_per_cycle", "label"],
        [
            (n, f, d, lab.value if lab else "error")
            for n, f, d, lab in zip(scan.N, scan.min_fidelity,
                                    scan.disp_per_cycle, scan.labels)
        ],
    )
    if scan.errors:
        em.json("scan_errors.json", {f"{k:g}": v for k, v in scan.errors.items()})
    return {
        "labels": {f"{n:g}": (lab.value if lab else "error")
                   for n, lab in zip(scan.N, scan.labels)},
        "min_fidelity": {f"{n:g}": float(f)
                         for n, f in zip(scan.N, scan.min_fidelity)},
    }


@_register("s5")
def _s5(cfg: RunConfig, em: _Emitter, workers: int) -> dict:
    """Band populations of propagating gap solitons over one cycle, and the
    transport estimate they imply."""
    kb = _knobs(cfg)
    spec = cfg.spec or SuperlatticeSpec(**_GAP25)
    norms = [7.0] if kb.fast else [0.3, 7.0]
    cherns = band_topology.chern_multi(spec, [1, 2, 3, 4], n_k=kb.n_k,
                                       n_t=kb.n_t, cutoff=kb.cutoff)
    cvals = [c.chern for c in cherns]
    grid = gap_soliton.default_grid(spec)
    metrics: dict = {"chern": cvals}
    for N in norms:
        st = gap_soliton.solve_for_norm(spec, N, grid=grid)
        n_snap = 5 if kb.fast else 10
        traj = propagate(st.field, spec, spec.T,
                         _prop_cfg(kb, spec, spec.T, n_snap), workers)
        rows = []
        for f in traj.snapshots:
            pops = band_topology.band_populations(f, spec, 8, kb.cutoff, t=f.time)
            rows.append((f.time, *pops, float(np.sum(pops))))
        tag = f"{N:g}".replace(".", "p")
        em.csv(f"populations_N{tag}.csv",
               ["t"] + [f"rho{b}" for b in range(1, 9)] + ["total"], rows)
        mean_pops = band_topology.mean_band_populations(
            traj.snapshots, spec, 8, kb.cutoff
        )
        est = band_topology.com_estimate(mean_pops[:4], cvals, spec.L)
        meas = float(traj.com[-1] - traj.com[0])
        metrics[f"rho1_t0_N{tag}"] = float(rows[0][1])
        metrics[f"com_estimate_N{tag}"] = est
        metrics[f"com_measured_N{tag}"] = meas
    return metrics


@_register("s6")
def _s6(cfg: RunConfig, em: _Emitter, workers: int) -> dict:
    """Norm-versus-chemical-potential branch of the gap soliton family."""
    kb = _knobs(cfg)
    spec = cfg.spec or SuperlatticeSpec(**_GAP25)
    edge = gap_soliton.band_edge(spec)
    mu_start = edge - 0.4
    mu_end = edge - (30.0 if kb.fast else 82.0)
    steps = 10 if kb.fast else 60
    branch = gap_soliton.continue_branch(spec, mu_start, mu_end, steps)
    em.csv("branch.csv", ["mu", "N", "residual", "overlap_prev"],
           zip(branch.mus, branch.norms, branch.residuals,
               np.concatenate([[1.0], branch.overlaps])))
    for N_want in ([7.0] if kb.fast else [0.3, 7.0, 20.0]):
        i = int(np.argmin(np.abs(branch.norms - N_want)))
        tag = f"{N_want:g}".replace(".", "p")
        em.snapshot(f"profile_N{tag}", branch.states[i].field)
    dN = np.diff(branch.norms)
    return {
        "edge": edge,
        "N_range": [float(branch.norms.min()), float(branch.norms.max())],
        "monotone": bool(np.all(dN > 0)),
    }


@_register("s7")
def _s7(cfg: RunConfig, em: _Emitter, workers: int) -> dict:
    """Propagated soliton shapes over several cycles, and the overlap with
    the expected image as the drive slows."""
    kb = _knobs(cfg)
    spec = cfg.spec or SuperlatticeSpec(**_GAP25)
    grid = gap_soliton.default_grid(spec)
    metrics: dict = {}

    norms = [7.0] if kb.fast else [0.3, 7.0]
    dt = _dt_for(kb, spec)
    per_cycle = max(1, int(round(spec.T / dt)))
    for N in norms:
        st = gap_soliton.solve_for_norm(spec, N, grid=grid)
        pcfg = PropagationConfig(dt=spec.T / per_cycle,
                                 snapshot_stride=per_cycle,
                                 observable_stride=max(1, per_cycle // 60))
        traj = propagate(st.field, spec, kb.cycles * spec.T, pcfg, workers)
        tag = f"{N:g}".replace(".", "p")
        em.trajectory(f"gallery_N{tag}/trajectory.csv", traj)
        cycle_snaps = [f for f in traj.snapshots
                       if abs(f.time / spec.T - round(f.time / spec.T)) < 1e-9]
        em.density(f"gallery_N{tag}/profiles.csv", cycle_snaps, max_x=1024)
        for f in cycle_snaps:
            ncyc = int(round(f.time / spec.T))
            em.snapshot(f"gallery_N{tag}/cycle{ncyc}", f)
        metrics[f"disp_per_cycle_N{tag}"] = float(
            (traj.com[-1] - traj.com[0]) / kb.cycles
        )

    v_grid = kb.v_list or ([0.4, 0.2] if kb.fast else [0.4, 0.2, 0.1, 0.05, 0.025])
    if not kb.fast:
        sc = diagnostics.scan_overlap(spec, 0.3, v_grid, target="translate",
                                      grid=grid, dt=kb.dt, workers=workers)
        em.csv("overlap_translate.csv", ["v", "T", "overlap"],
               zip(sc.v, sc.T, sc.overlap))
        metrics["overlap_translate"] = [float(o) for o in sc.overlap]
    sc = diagnostics.scan_overlap(spec, 7.0, v_grid, target="fresh",
                                  grid=grid, dt=kb.dt, workers=workers)
    em.csv("overlap_fresh.csv", ["v", "T", "overlap"],
           zip(sc.v, sc.T, sc.overlap))
    metrics["overlap_fresh"] = [float(o) for o in sc.overlap]
    metrics["v_grid"] = list(v_grid)
    return metrics


@_register("s8")
def _s8(cfg: RunConfig, em: _Emitter, workers: int) -> dict:
    """Gap-soliton stability scan, Wannier-center tracking, and the
    effective-particle comparison for the trapped branch."""
    kb = _knobs(cfg)
    spec = cfg.spec or SuperlatticeSpec(**_GAP25)
    metrics: dict = {}

    Ns = kb.N_list or ([7.0, 20.0] if kb.fast else
                       [0.3, 2.0, 4.0, 7.0, 12.0, 16.0, 20.0])
    t_final = kb.cycles * spec.T
    scan = diagnostics.scan_regimes(spec, Ns, "gap_soliton", t_final=t_final,
                                    seed=cfg.seed, workers=workers)
    em.csv(
        "scan.csv",
        ["N", "min_fidelity", "disp_per_cycle", "label"],
        [
            (n, f, d, lab.value if lab else "error")
            for n, f, d, lab in zip(scan.N, scan.min_fidelity,
                                    scan.disp_per_cycle, scan.labels)
        ],
    )
    if scan.errors:
        em.json("scan_errors.json", {f"{k:g}": v for k, v in scan.errors.items()})
    metrics["labels"] = {f"{n:g}": (lab.value if lab else "error")
                         for n, lab in zip(scan.N, scan.labels)}

    if not kb.fast:
        grid = gap_soliton.default_grid(spec)
        st = gap_soliton.solve_for_norm(spec, 0.3, grid=grid)
        traj = propagate(st.field, spec, spec.T,
                         _prop_cfg(kb, spec, spec.T), workers)
        ts, centers = band_topology.wannier_center_track(
            spec, 1, n_t=51, n_k=kb.n_k, cutoff=kb.cutoff
        )
        offset = traj.com[0] - centers[0]
        wf = np.interp(traj.times, ts, centers) + offset
        em.csv("tracking.csv", ["t", "com", "wf_center"],
               zip(traj.times, traj.com, wf))
        metrics["track_max_dev"] = float(np.abs(traj.com - wf).max())

    ee_Ns = [20.0] if kb.fast else [7.0, 20.0]
    for N in ee_Ns:
        rep = diagnostics.ee_gpe_report(spec, N, "gap_soliton",
                                        t_final=t_final, workers=workers)
        tag = f"{N:g}".replace(".", "p")
        em.csv(f"ee_compare_N{tag}.csv", ["t", "com_gpe", "x0_ee"],
               zip(rep["times"], rep["com_gpe"], rep["x0_ee"]))
        metrics[f"ee_max_dev_N{tag}"] = rep["max_dev"]
    return metrics


@_register("s9")
def _s9(cfg: RunConfig, em: _Emitter, workers: int) -> dict:
    """Gap-closing lattice: the band-1/2 gap collapses somewhere on the
    torus, yet pumped-vs-trapped transport survives."""
    kb = _knobs(cfg)
    spec = cfg.spec or SuperlatticeSpec(p1=25.0, p2=25.0, d1=Fraction(1, 2),
                                        d2=Fraction(4, 3), v=0.1)
    metrics: dict = {}

    gap = band_topology.band_gap_min(spec, 1, n_k=kb.n_k, n_t=kb.n_t,
                                     cutoff=kb.cutoff)
    metrics["min_gap_12"] = gap
    rows = []
    for it in range(kb.n_t):
        t = spec.T * it / kb.n_t
        sp = band_topology.bloch_bands(spec, t, n_k=kb.n_k, cutoff=kb.cutoff,
                                       n_bands=2, check=False)
        rows.append((t, float(np.min(sp.energies[:, 1] - sp.energies[:, 0]))))
    em.csv("gap_vs_t.csv", ["t", "gap_12"], rows)

    try:
        cherns = band_topology.chern_multi(spec, [1, 2], n_k=kb.n_k,
                                           n_t=kb.n_t, cutoff=kb.cutoff)
        metrics["chern_status"] = "ok"
        metrics["chern"] = [c.chern for c in cherns]
        em.json("chern.json", [
            {"band": c.band, "chern": c.chern, "raw": c.raw, "min_gap": c.min_gap}
            for c in cherns
        ])
    except SolpumpError as exc:
        metrics["chern_status"] = f"{type(exc).__name__}: {exc}"

    for N in ([4.0] if kb.fast else [4.0, 20.0]):
        psi0 = _bright(spec, N, kb=kb)
        traj = propagate(psi0, spec, spec.T, _prop_cfg(kb, spec, spec.T, 30),
                         workers)
        tag = f"{N:g}"
        em.trajectory(f"transport_N{tag}/trajectory.csv", traj)
        em.density(f"transport_N{tag}/density.csv", traj.snapshots)
        x_ee = _ee_series(spec, N, 0.0, 0.0, spec.T, traj.times)
        _effective_csv(em, f"transport_N{tag}/effective.csv", traj.times, x_ee)
        metrics[f"disp_per_cycle_N{tag}"] = float(traj.com[-1] - traj.com[0])
        metrics[f"ee_max_dev_N{tag}"] = float(np.abs(traj.com - x_ee).max())
    return metrics
