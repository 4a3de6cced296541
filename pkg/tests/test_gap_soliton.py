"""Stationary states below the first band: solver, branch, norm targeting."""

import numpy as np
import pytest
from fractions import Fraction

from solpump import gap_soliton as gs
from solpump.errors import ConfigError, NoConvergenceError
from solpump.gpe_solver import Grid1D
from solpump.model import SuperlatticeSpec

FREE = SuperlatticeSpec(p1=0.0, p2=0.0, d1=Fraction(1, 2), d2=1, v=0.1)
MODERATE = SuperlatticeSpec(p1=5.0, p2=5.0, d1=Fraction(1, 2), d2=1, v=0.1)
WIDE = Grid1D(-40.0, 40.0, 2048)


class TestFreeBranch:
    def test_profile_is_plain_sech(self):
        st = gs.solve(FREE, -0.5, grid=WIDE)
        want = 1.0 / np.cosh(WIDE.x)
        np.testing.assert_allclose(st.field.values.real, want, atol=1e-10)
        assert np.all(st.field.values.imag == 0.0)
        assert st.norm == pytest.approx(2.0, abs=1e-8)

    def test_norm_target_recovers_chemical_potential(self):
        # seed away from the analytic branch point; the bracketing walk
        # must come back to mu = -N^2/8
        st = gs.solve_for_norm(FREE, 1.2, grid=WIDE, mu_hint=-0.3)
        assert st.mu == pytest.approx(-1.2**2 / 8.0, abs=1e-6)
        assert st.norm == pytest.approx(1.2, abs=1e-8)

    def test_band_edge_of_free_space_is_zero(self):
        assert gs.band_edge(FREE) == pytest.approx(0.0, abs=1e-12)


class TestSolve:
    def test_defect_below_tolerance(self):
        st = gs.solve(MODERATE, gs.band_edge(MODERATE) - 0.5)
        assert st.residual < 1e-8
        # independent full-complex substitution, not the solver's loop
        assert gs.residual_check(st, MODERATE) < 1e-8

    def test_gauge_real_positive_peak(self):
        st = gs.solve(MODERATE, gs.band_edge(MODERATE) - 0.5)
        assert np.all(st.field.values.imag == 0.0)
        assert st.field.values.real.max() > 0

    def test_frozen_time_is_recorded(self):
        st = gs.solve(MODERATE, gs.band_edge(MODERATE, 2.0) - 0.5, t=2.0)
        assert st.frozen_time == 2.0
        assert st.field.time == 2.0

    def test_zero_attractor_is_rejected(self):
        g = gs.default_grid(MODERATE)
        with pytest.raises(NoConvergenceError):
            gs.solve(MODERATE, gs.band_edge(MODERATE) - 0.2, grid=g,
                     guess=np.full(g.n_points, 1e-4))

    def test_default_box_is_32_cells(self):
        g = gs.default_grid(MODERATE)
        assert g.width == pytest.approx(32.0 * float(MODERATE.L_exact))


class TestBranch:
    @pytest.fixture(scope="class")
    def branch(self):
        edge = gs.band_edge(MODERATE)
        return gs.continue_branch(MODERATE, edge - 0.3, edge - 1.2, steps=6)

    def test_norm_grows_away_from_the_edge(self, branch):
        assert np.all(np.diff(branch.norms) > 0)

    def test_neighbors_overlap_strongly(self, branch):
        assert branch.overlaps.min() > 0.95

    def test_every_member_converged(self, branch):
        assert branch.residuals.max() < 1e-8
        assert len(branch.states) == 7

    def test_rejects_zero_steps(self):
        with pytest.raises(ConfigError):
            gs.continue_branch(MODERATE, -6.0, -7.0, steps=0)


class TestSolveForNorm:
    def test_walks_down_to_the_target(self):
        st = gs.solve_for_norm(MODERATE, 1.0)
        assert st.norm == pytest.approx(1.0, abs=1e-8)
        assert st.mu < gs.band_edge(MODERATE)
        assert gs.residual_check(st, MODERATE) < 1e-8

    def test_warm_start_from_neighbor(self):
        base = gs.solve_for_norm(MODERATE, 1.0)
        st = gs.solve_for_norm(MODERATE, 1.1, guess=base.field,
                               mu_hint=base.mu - 0.05)
        assert st.norm == pytest.approx(1.1, abs=1e-8)

    def test_rejects_nonpositive_target(self):
        with pytest.raises(ConfigError):
            gs.solve_for_norm(MODERATE, 0.0)
