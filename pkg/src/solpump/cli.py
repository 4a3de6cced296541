"""Command-line front end.

One verb per analysis; `scenario` runs the named figure-class pipelines.
Parameters come from an optional JSON config (same schema as scenario
configs; each verb reads only the sections it needs) plus a few flags.
Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
failures (a scenario manifest is still written in that case).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import band_topology, diagnostics, effective_particle, gap_soliton, pendulum
from .errors import ConfigError, SolpumpError
from .experiments import (
    PRESETS,
    RunConfig,
    _check_excitation,
    _check_numerics,
    _check_outputs,
    _SHALLOW,
    run_scenario,
    scenario_names,
    validate_config,
)
from .gpe_solver import PropagationConfig, default_dt, for_spec, propagate
from .io_formats import save_snapshot, trajectory_csv, write_csv, write_json
from .model import (
    SolitonAnsatz,
    SuperlatticeSpec,
    bright_soliton,
    soliton_cells,
    spec_from_dict,
)


def _load_sections(path: str | None) -> dict:
    """Verb-mode config: the scenario schema with every section optional."""
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    allowed = {"scenario", "preset", "seed", "spec", "excitation", "numerics",
               "outputs"}
    extra = set(raw) - allowed
    if extra:
        raise ConfigError(f"unknown key: {sorted(extra)[0]}")
    out = dict(raw)
    if "spec" in raw:
        out["spec"] = spec_from_dict(raw["spec"])
    if "excitation" in raw:
        out["excitation"] = _check_excitation(raw["excitation"])
    if "numerics" in raw:
        out["numerics"] = _check_numerics(raw["numerics"])
    if "outputs" in raw:
        out["outputs"] = _check_outputs(raw["outputs"])
    return out


def _spec_of(sections: dict) -> SuperlatticeSpec:
    return sections.get("spec") or SuperlatticeSpec(**_SHALLOW)


def _outdir(args, sections: dict, verb: str) -> str:
    base = (args.out or os.environ.get("SOLPUMP_OUTDIR")
            or sections.get("outputs", {}).get("directory") or "runs")
    path = os.path.join(base, verb)
    os.makedirs(path, exist_ok=True)
    return path


def _initial_state(spec, sections, args):
    exc = dict(sections.get("excitation", {}))
    kind = exc.get("kind", "bright")
    if kind == "gap_soliton":
        N = exc.get("N_target", getattr(args, "norm", None) or 4.0)
        return gap_soliton.solve_for_norm(spec, float(N)).field
    N = exc.get("N", 4.0)
    grid = for_spec(spec, cells=soliton_cells(spec, N))
    return bright_soliton(
        SolitonAnsatz(N=N, x0=exc.get("x0", 0.0), v0=exc.get("v0", 0.0)), grid
    )


def _t_final(args, spec) -> float:
    if getattr(args, "t_final", None) is not None:
        return args.t_final
    cycles = getattr(args, "cycles", None) or 3
    return cycles * spec.T


def _floats(text: str, flag: str):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{flag}: expected comma-separated numbers") from None
    if not vals:
        raise ConfigError(f"{flag}: empty list")
    return vals


# ---------------------------------------------------------------- verbs

def _cmd_propagate(args, sections):
    spec = _spec_of(sections)
    out = _outdir(args, sections, "propagate")
    psi0 = _initial_state(spec, sections, args)
    t_final = _t_final(args, spec)
    dt = sections.get("numerics", {}).get("dt") or default_dt(spec)
    nsteps = max(1, round(t_final / dt))
    snap = max(1, nsteps // args.snapshots) if args.snapshots else 0
    cfg = PropagationConfig(dt=dt, snapshot_stride=snap,
                            observable_stride=max(1, nsteps // 300))
    traj = propagate(psi0, spec, t_final, cfg, workers=args.threads)
    trajectory_csv(traj, os.path.join(out, "trajectory.csv"))
    for i, f in enumerate(traj.snapshots):
        save_snapshot(f, os.path.join(out, f"snapshot_{i:03d}"))
    disp = traj.com[-1] - traj.com[0]
    print(f"displacement {disp:+.6f} over t={t_final:g} -> {out}/trajectory.csv")
    return 0


def _cmd_effective(args, sections):
    spec = _spec_of(sections)
    out = _outdir(args, sections, "effective")
    exc = dict(sections.get("excitation", {}))
    N = exc.get("N", 4.0)
    t_final = _t_final(args, spec)
    tr = effective_particle.integrate(spec, N, exc.get("x0", 0.0),
                                      exc.get("v0", 0.0), t_final)
    write_csv(os.path.join(out, "effective.csv"), ["t", "x0", "xdot"],
              zip(tr.times, tr.x0, tr.xdot))
    print(f"x0({t_final:g}) = {tr.x0[-1]:+.6f} -> {out}/effective.csv")
    return 0


def _cmd_pendulum(args, sections):
    spec = _spec_of(sections)
    out = _outdir(args, sections, "pendulum")
    exc = dict(sections.get("excitation", {}))
    N = exc.get("N", 4.0)
    om0, th0, thd0 = pendulum.from_spec(spec, N, exc.get("x0", 0.0),
                                        exc.get("v0", 0.0))
    t_final = _t_final(args, spec)
    t = np.linspace(0.0, t_final, 1201)
    th = pendulum.theta_exact(th0, thd0, om0, t)
    xlab = pendulum.lab_position(th, t, float(spec.d2), spec.T)
    write_csv(os.path.join(out, "pendulum.csv"), ["t", "theta", "x_lab"],
              zip(t, th, xlab))
    k = pendulum.modulus(th0, thd0, om0)
    print(f"omega0 = {om0:.6f}, modulus k = {k:.6f}, "
          f"{pendulum.classify_drive(om0, spec.v)} drive -> {out}/pendulum.csv")
    return 0


def _cmd_bands(args, sections):
    spec = _spec_of(sections)
    out = _outdir(args, sections, "bands")
    num = sections.get("numerics", {})
    sp = band_topology.bloch_bands(spec, args.time, n_k=num.get("n_k", 48),
                                   cutoff=num.get("cutoff", 64),
                                   n_bands=args.n_bands)
    write_csv(os.path.join(out, "bands.csv"),
              ["k"] + [f"E{b}" for b in range(1, args.n_bands + 1)],
              [(k, *row) for k, row in zip(sp.ks, sp.energies)])
    gaps = [float(sp.energies[:, b + 1].min() - sp.energies[:, b].max())
            for b in range(args.n_bands - 1)]
    print(f"{args.n_bands} bands at t={args.time:g}; direct gaps {gaps}"
          f" -> {out}/bands.csv")
    return 0


def _cmd_chern(args, sections):
    spec = _spec_of(sections)
    out = _outdir(args, sections, "chern")
    num = sections.get("numerics", {})
    bands = [int(b) for b in args.bands.split(",")]
    res = band_topology.chern_multi(spec, bands, n_k=num.get("n_k", 48),
                                    n_t=num.get("n_t", 48),
                                    cutoff=num.get("cutoff", 64))
    write_json(os.path.join(out, "chern.json"), [
        {"band": c.band, "chern": c.chern, "raw": c.raw, "min_gap": c.min_gap}
        for c in res
    ])
    print("chern " + ", ".join(f"C{c.band}={c.chern}" for c in res)
          + f" -> {out}/chern.json")
    return 0


def _cmd_wannier(args, sections):
    spec = _spec_of(sections)
    out = _outdir(args, sections, "wannier")
    num = sections.get("numerics", {})
    w = band_topology.wannier(spec, band=args.band, cell=args.cell, t=args.time,
                              n_k=num.get("n_k", 64),
                              cutoff=num.get("cutoff", 64))
    save_snapshot(w.field, os.path.join(out, f"wannier_b{args.band}_c{args.cell}"))
    print(f"band {args.band} cell {args.cell}: center = {w.center:+.6f}"
          f" -> {out}/wannier_b{args.band}_c{args.cell}.json")
    return 0


def _cmd_populations(args, sections):
    spec = _spec_of(sections)
    out = _outdir(args, sections, "populations")
    num = sections.get("numerics", {})
    psi = _initial_state(spec, sections, args)
    pops = band_topology.band_populations(psi, spec, args.n_bands,
                                          num.get("cutoff", 64), t=args.time)
    write_csv(os.path.join(out, "populations.csv"),
              ["band", "rho"], list(enumerate(pops, start=1)))
    print("rho = [" + ", ".join(f"{p:.4f}" for p in pops)
          + f"], sum {float(np.sum(pops)):.4f} -> {out}/populations.csv")
    return 0


def _cmd_gapsoliton(args, sections):
    spec = _spec_of(sections)
    out = _outdir(args, sections, "gapsoliton")
    if (args.mu is None) == (args.norm is None):
        raise ConfigError("give exactly one of --mu or --norm")
    if args.mu is not None:
        st = gap_soliton.solve(spec, args.mu, t=args.time)
    else:
        st = gap_soliton.solve_for_norm(spec, args.norm, t=args.time)
    save_snapshot(st.field, os.path.join(out, "profile"))
    print(f"mu = {st.mu:.6f}, N = {st.norm:.6f}, residual = {st.residual:.2e},"
          f" {st.iterations} iterations -> {out}/profile.json")
    return 0


def _cmd_scan_fidelity(args, sections):
    spec = _spec_of(sections)
    out = _outdir(args, sections, "scan-fidelity")
    num = sections.get("numerics", {})
    Ns = (_floats(args.N_list, "--N-list") if args.N_list
          else num.get("N_list") or [2.0, 4.0, 8.0, 12.0, 16.0, 20.0])
    kind = sections.get("excitation", {}).get("kind", "bright")
    cycles = num.get("cycles") or args.cycles or 3
    scan = diagnostics.scan_regimes(spec, Ns, kind, t_final=cycles * spec.T,
                                    seed=args.seed, workers=args.threads)
    write_csv(os.path.join(out, "scan.csv"),
              ["N", "min_fidelity", "disp_per_cycle", "label"],
              [(n, f, d, lab.value if lab else "error")
               for n, f, d, lab in zip(scan.N, scan.min_fidelity,
                                       scan.disp_per_cycle, scan.labels)])
    for n, lab, f in zip(scan.N, scan.labels, scan.min_fidelity):
        print(f"  N={n:g}: {lab.value if lab else 'error'} (min F {f:.4f})")
    print(f"-> {out}/scan.csv")
    return 0


def _cmd_scan_overlap(args, sections):
    spec = _spec_of(sections)
    out = _outdir(args, sections, "scan-overlap")
    num = sections.get("numerics", {})
    vs = (_floats(args.v_list, "--v-list") if args.v_list
          else num.get("v_list") or [0.4, 0.2, 0.1, 0.05, 0.025])
    sc = diagnostics.scan_overlap(spec, args.norm, vs, target=args.target,
                                  dt=num.get("dt"), workers=args.threads)
    write_csv(os.path.join(out, "overlap.csv"), ["v", "T", "overlap"],
              zip(sc.v, sc.T, sc.overlap))
    for v, o in zip(sc.v, sc.overlap):
        print(f"  v={v:g}: overlap {o:.5f}")
    print(f"-> {out}/overlap.csv")
    return 0


def _cmd_scenario(args, sections):
    raw = {"scenario": args.name}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config root must be an object")
        raw.setdefault("scenario", args.name)
        if raw["scenario"] != args.name:
            raise ConfigError(
                f"config names scenario {raw['scenario']!r}, asked for {args.name!r}"
            )
    if args.preset:
        raw["preset"] = args.preset
    if args.seed is not None:
        raw["seed"] = args.seed
    outdir = args.out or os.environ.get("SOLPUMP_OUTDIR")
    if outdir:
        raw.setdefault("outputs", {})["directory"] = outdir
    cfg = validate_config(raw)
    manifest = run_scenario(cfg, workers=args.threads)
    where = os.path.join(cfg.outputs.get("directory", "runs"), cfg.scenario)
    if manifest.status != "ok":
        print(f"{cfg.scenario}: FAILED ({manifest.error}); manifest in {where}",
              file=sys.stderr)
        return 3
    summary = ", ".join(
        f"{k}={v}" for k, v in list(manifest.metrics.items())[:4]
        if not isinstance(v, (dict, list))
    )
    print(f"{cfg.scenario}: ok in {manifest.walltime_s:.1f}s"
          + (f" ({summary})" if summary else "") + f" -> {where}")
    return 0


# ---------------------------------------------------------------- parser

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="solpump",
        description="Soliton transport in sliding optical superlattices.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output directory root")
    common.add_argument("--preset", choices=PRESETS, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int,
                        default=int(os.environ.get("SOLPUMP_THREADS", "1")))
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("propagate", parents=[common],
                       help="evolve an initial state and record observables")
    p.add_argument("--t-final", type=float, default=None)
    p.add_argument("--cycles", type=int, default=None)
    p.add_argument("--snapshots", type=int, default=0)
    p.set_defaults(fn=_cmd_propagate)

    p = sub.add_parser("effective", parents=[common],
                       help="integrate the effective-particle equation")
    p.add_argument("--t-final", type=float, default=None)
    p.add_argument("--cycles", type=int, default=None)
    p.set_defaults(fn=_cmd_effective)

    p = sub.add_parser("pendulum", parents=[common],
                       help="closed-form pendulum solution and lab track")
    p.add_argument("--t-final", type=float, default=None)
    p.add_argument("--cycles", type=int, default=None)
    p.set_defaults(fn=_cmd_pendulum)

    p = sub.add_parser("bands", parents=[common], help="Bloch band structure")
    p.add_argument("--time", type=float, default=0.0)
    p.add_argument("--n-bands", type=int, default=6)
    p.set_defaults(fn=_cmd_bands)

    p = sub.add_parser("chern", parents=[common], help="band Chern numbers")
    p.add_argument("--bands", default="1,2,3,4")
    p.set_defaults(fn=_cmd_chern)

    p = sub.add_parser("wannier", parents=[common],
                       help="localized band orbital and its center")
    p.add_argument("--band", type=int, default=1)
    p.add_argument("--cell", type=int, default=0)
    p.add_argument("--time", type=float, default=0.0)
    p.set_defaults(fn=_cmd_wannier)

    p = sub.add_parser("populations", parents=[common],
                       help="band occupations of an initial state")
    p.add_argument("--time", type=float, default=0.0)
    p.add_argument("--n-bands", type=int, default=8)
    p.set_defaults(fn=_cmd_populations)

    p = sub.add_parser("gapsoliton", parents=[common],
                       help="stationary state in the frozen lattice")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--norm", type=float, default=None)
    p.add_argument("--time", type=float, default=0.0)
    p.set_defaults(fn=_cmd_gapsoliton)

    p = sub.add_parser("scan-fidelity", parents=[common],
                       help="regime scan over particle number")
    p.add_argument("--N-list", default=None)
    p.add_argument("--cycles", type=int, default=None)
    p.set_defaults(fn=_cmd_scan_fidelity)

    p = sub.add_parser("scan-overlap", parents=[common],
                       help="one-period overlap versus drive velocity")
    p.add_argument("--norm", type=float, default=0.3)
    p.add_argument("--v-list", default=None)
    p.add_argument("--target", choices=("translate", "fresh"),
                   default="translate")
    p.set_defaults(fn=_cmd_scan_overlap)

    p = sub.add_parser("scenario", parents=[common],
                       help="run a named figure-class pipeline")
    p.add_argument("name", choices=scenario_names())
    p.set_defaults(fn=_cmd_scenario)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.fn is _cmd_scenario:
            return args.fn(args, {})
        sections = _load_sections(args.config)
        if args.seed is None:
            args.seed = sections.get("seed", 0)
        return args.fn(args, sections)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolpumpError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
