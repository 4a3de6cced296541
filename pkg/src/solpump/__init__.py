"""Matter-wave soliton transport in slowly sliding optical superlattices.

Simulation (split-step GPE), reduced models (effective particle, pendulum),
band topology (Chern numbers, Wannier centers, populations), gap-soliton
continuation, and regime diagnostics, plus scenario runners behind a CLI.
"""
from ._kernels import BACKEND
from .errors import (
    BracketError,
    ConfigError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    ExactnessWarning,
    GridMismatchError,
    IsolationError,
    NoConvergenceError,
    NonFiniteError,
    NormDriftError,
    SeamError,
    SeparatrixWarning,
    SolpumpError,
    SpanError,
    TruncationError,
)
from .model import (
    RescaledSpec,
    SolitonAnsatz,
    SuperlatticeSpec,
    as_rational,
    bright_soliton,
    from_rescaled,
    potential,
    rescale,
    soliton_cells,
    spec_from_dict,
    spec_to_dict,
    unit_cell,
)
from .gpe_solver import (
    ComplexField,
    Grid1D,
    PropagationConfig,
    Trajectory,
    center_of_mass,
    co_propagate,
    density_extent,
    evolve,
    fidelity,
    for_spec,
    mean_momentum,
    overlap_modulus,
    perturb,
    propagate,
    translate,
)
from .effective_particle import (
    EffectiveTrajectory,
    EnsembleResult,
    acceleration,
    ensemble_phase_portrait,
    integrate,
    static_effective_potential,
)
from .pendulum import (
    classify_drive,
    from_spec,
    lab_position,
    modulus,
    omega0,
    theta_exact,
    theta_max,
)
from .band_topology import (
    BlochSpectrum,
    ChernResult,
    WannierState,
    band_gap_min,
    band_populations,
    bloch_bands,
    chern,
    chern_multi,
    com_estimate,
    fractional_displacement,
    mean_band_populations,
    wannier,
    wannier_center_track,
    zak_center,
)
from .gap_soliton import (
    Branch,
    StationaryState,
    band_edge,
    continue_branch,
    residual_check,
    solve,
    solve_for_norm,
)
from .diagnostics import (
    OverlapScan,
    PairRun,
    RegimeLabel,
    ScanResult,
    classify_point,
    displacement_per_cycle,
    ee_gpe_report,
    min_fidelity_run,
    scan_overlap,
    scan_regimes,
)
from .experiments import (
    RunConfig,
    RunManifest,
    config_hash,
    config_to_dict,
    emit_plotdata,
    run_scenario,
    scenario_names,
    validate_config,
)

try:
    from importlib.metadata import version as _version

    __version__ = _version("solpump")
except Exception:  # pragma: no cover
    __version__ = "0+unknown"

__all__ = [name for name in dir() if not name.startswith("_")]
