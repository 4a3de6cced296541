"""Problem definition: the sliding superlattice, soliton ansatz, rescalings.

Units: hbar = m = 1, attractive nonlinearity of unit strength. The potential is

    V(x, t) = -p1 cos^2(pi x / d1) - p2 cos^2(pi x / d2 - v t + phase0)

so the second lattice slides rigidly at speed v*d2/pi and the Hamiltonian is
time periodic with period T = pi / v. Commensurate lattice constants are kept
as exact rationals so the common cell L = n1*d2 = n2*d1 is exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigError, ExactnessWarning, TruncationError

Rational = Fraction


def as_rational(value) -> Fraction:
    """Coerce to an exact Fraction.

    Strings may be "num/den" or decimal ("0.5"). Floats are snapped to the
    nearest small-denominator rational, warning when the snap actually moves
    the value (1/3 as a double snaps silently; 0.1 + 0.2 does not).
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"cannot parse rational from {value!r}") from exc
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError(f"cannot parse rational from {value!r}")
        snapped = Fraction(value).limit_denominator(10**9)
        if float(snapped) != value:
            warnings.warn(
                f"float {value!r} snapped to rational {snapped}", ExactnessWarning
            )
        return snapped
    raise ConfigError(f"cannot parse rational from {value!r}")


@dataclass(frozen=True)
class SuperlatticeSpec:
    """Two commensurate lattices, the second sliding at rate v."""

    p1: float
    p2: float
    d1: Rational
    d2: Rational
    v: float
    phase0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "d1", as_rational(self.d1))
        object.__setattr__(self, "d2", as_rational(self.d2))
        object.__setattr__(self, "p1", float(self.p1))
        object.__setattr__(self, "p2", float(self.p2))
        object.__setattr__(self, "v", float(self.v))
        object.__setattr__(self, "phase0", float(self.phase0))
        if self.p1 < 0 or self.p2 < 0:
            raise ConfigError("lattice depths p1, p2 must be nonnegative")
        if self.d1 <= 0 or self.d2 <= 0:
            raise ConfigError("lattice constants d1, d2 must be positive")

    @property
    def L_exact(self) -> Fraction:
        ratio = self.d1 / self.d2  # n1/n2 in lowest terms
        return ratio.numerator * self.d2

    @property
    def L(self) -> float:
        return float(self.L_exact)

    @property
    def n1(self) -> int:
        return (self.d1 / self.d2).numerator

    @property
    def n2(self) -> int:
        return (self.d1 / self.d2).denominator

    @property
    def T(self) -> float:
        """Pump period pi/v. Only defined for a forward-sliding lattice."""
        if self.v <= 0:
            raise ConfigError("pump period requires v > 0")
        return math.pi / self.v


def unit_cell(spec: SuperlatticeSpec):
    """Common spatial period and the coprime cell counts (L, n1, n2).

    L = n1*d2 = n2*d1 with n1/n2 = d1/d2 in lowest terms.
    """
    return float(spec.L_exact), spec.n1, spec.n2


def potential(spec: SuperlatticeSpec, x, t: float):
    x = np.asarray(x, dtype=float)
    a1 = np.cos(np.pi * x / float(spec.d1))
    a2 = np.cos(np.pi * x / float(spec.d2) - spec.v * t + spec.phase0)
    return -spec.p1 * a1**2 - spec.p2 * a2**2


@dataclass(frozen=True)
class SolitonAnsatz:
    """Bright-soliton initial data: norm N, center x0, velocity v0.

    mu records the free-soliton chemical potential -N^2/8 unless overridden;
    it is bookkeeping only and does not affect the sampled field.
    """

    N: float
    x0: float = 0.0
    v0: float = 0.0
    mu: float | None = None

    def __post_init__(self):
        if self.N <= 0:
            raise ConfigError("soliton norm N must be positive")
        if self.mu is None:
            object.__setattr__(self, "mu", -self.N**2 / 8.0)


def bright_soliton(ansatz: SolitonAnsatz, grid, t: float = 0.0):
    """Sample (N/2) sech((N/2)(x-x0)) e^{i v0 (x-x0)} on the grid.

    The box must hold the tails: amplitude at the boundary below 1e-12 of
    the peak, else TruncationError.
    """
    from .gpe_solver import ComplexField

    x = grid.x
    arg = 0.5 * ansatz.N * (x - ansatz.x0)
    vals = (0.5 * ansatz.N / np.cosh(arg)) * np.exp(
        1j * ansatz.v0 * (x - ansatz.x0)
    )
    peak = np.max(np.abs(vals))
    edge = max(abs(vals[0]), abs(vals[-1]))
    if edge >= 1e-12 * peak:
        raise TruncationError(
            f"soliton tail {edge / peak:.2e} of peak at box edge; widen the box"
        )
    return ComplexField(grid=grid, values=vals.astype(np.complex128), time=t)


def soliton_cells(spec: SuperlatticeSpec, N: float, cells_min: int = 24) -> int:
    """Box size (in cells of L) that passes the bright-soliton tail gate.

    sech tail: edge/peak ~ 2 exp(-(N/2) w/2) < 1e-12 needs width w > 113.3/N.
    Always even, so the box stays valid for band-population analysis.
    """
    need = 113.3 / (N * float(spec.L_exact))
    cells = max(cells_min, int(math.ceil(need)) + 2)
    return cells + cells % 2


@dataclass(frozen=True)
class RescaledSpec:
    """Deep-lattice renormalization of the drive.

    With tau = N^2 t and X = N x the potential for the unit-norm order
    parameter reads -amplitude*[cos(k1 X) + ratio*cos(k2 X - omega tau + phase)],
    perturbative when every depth satisfies p_j/(2 N^2) < 0.1.
    """

    amplitude: float
    ratio: float
    omega: float
    k1: float
    k2: float
    phase: float
    perturbative: bool
    tau_scale: float
    x_scale: float


def rescale(spec: SuperlatticeSpec, N: float) -> RescaledSpec:
    if N <= 0:
        raise ConfigError("norm N must be positive")
    n2 = N * N
    if spec.p1 > 0:
        ratio = spec.p2 / spec.p1
    else:
        ratio = math.inf if spec.p2 > 0 else 0.0
    return RescaledSpec(
        amplitude=spec.p1 / (2.0 * n2),
        ratio=ratio,
        omega=2.0 * spec.v / n2,
        k1=2.0 * math.pi / (N * float(spec.d1)),
        k2=2.0 * math.pi / (N * float(spec.d2)),
        phase=2.0 * spec.phase0,
        perturbative=max(spec.p1, spec.p2) / (2.0 * n2) < 0.1,
        tau_scale=n2,
        x_scale=N,
    )


def from_rescaled(rs: RescaledSpec, N: float) -> SuperlatticeSpec:
    """Invert rescale. Undefined when the static lattice was absent."""
    if not math.isfinite(rs.ratio):
        raise ConfigError("cannot invert rescaling with p1 = 0 and p2 > 0")
    p1 = 2.0 * N * N * rs.amplitude
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExactnessWarning)
        return SuperlatticeSpec(
            p1=p1,
            p2=rs.ratio * p1,
            d1=as_rational(2.0 * math.pi / (N * rs.k1)),
            d2=as_rational(2.0 * math.pi / (N * rs.k2)),
            v=0.5 * rs.omega * N * N,
            phase0=0.5 * rs.phase,
        )


def spec_to_dict(spec: SuperlatticeSpec) -> dict:
    return {
        "p1": spec.p1,
        "p2": spec.p2,
        "d1": str(spec.d1),
        "d2": str(spec.d2),
        "v": spec.v,
        "phase0": spec.phase0,
    }


def spec_from_dict(d: dict) -> SuperlatticeSpec:
    known = {"p1", "p2", "d1", "d2", "v", "phase0"}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown spec keys: {sorted(extra)}")
    missing = {"p1", "p2", "d1", "d2", "v"} - set(d)
    if missing:
        raise ConfigError(f"missing spec keys: {sorted(missing)}")
    return SuperlatticeSpec(
        p1=d["p1"],
        p2=d["p2"],
        d1=as_rational(d["d1"]),
        d2=as_rational(d["d2"]),
        v=d["v"],
        phase0=d.get("phase0", 0.0),
    )
