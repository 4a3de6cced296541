"""Bloch bands, pump topology, Wannier functions, band populations."""

from fractions import Fraction

import numpy as np
import pytest

from solpump import band_topology as bt
from solpump.errors import (
    ConfigError,
    ConvergenceError,
    GridMismatchError,
    IsolationError,
)
from solpump.gpe_solver import ComplexField, Grid1D, for_spec, overlap_modulus
from solpump.model import SuperlatticeSpec

EMPTY = SuperlatticeSpec(p1=0.0, p2=0.0, d1=Fraction(1, 2), d2=1, v=0.1)
MODERATE = SuperlatticeSpec(p1=5.0, p2=5.0, d1=Fraction(1, 2), d2=1, v=0.1)
DEEP = SuperlatticeSpec(p1=25.0, p2=25.0, d1=Fraction(1, 2), d2=Fraction(2, 3),
                        v=0.1)
# the 4/3 sublattice ratio nearly closes the first gap on the torus
NEAR_CLOSED = SuperlatticeSpec(p1=25.0, p2=25.0, d1=Fraction(1, 2),
                               d2=Fraction(4, 3), v=0.1)


class TestBlochBands:
    def test_empty_lattice_is_folded_parabola(self):
        sp = bt.bloch_bands(EMPTY, n_k=16, cutoff=16, n_bands=6)
        ms = np.arange(-16, 17)
        for i, k in enumerate(sp.ks):
            want = np.sort(0.5 * (k + 2 * np.pi * ms) ** 2)[:6]
            np.testing.assert_allclose(sp.energies[i], want, atol=1e-10)

    def test_grid_and_cutoff_gates(self):
        with pytest.raises(ConfigError):
            bt.bloch_bands(MODERATE, n_k=4)
        with pytest.raises(ConfigError):
            bt.bloch_bands(MODERATE, cutoff=8)
        with pytest.raises(ConfigError):
            bt.bloch_bands(MODERATE, cutoff=16, n_bands=64)

    def test_unresolved_top_bands_fail_doubling_check(self):
        # bands at the edge of the basis move when the cutoff doubles
        with pytest.raises(ConvergenceError):
            bt.bloch_bands(DEEP, n_k=8, cutoff=16, n_bands=32)

    def test_inversion_symmetric_zak_centers(self):
        sp = bt.bloch_bands(MODERATE, 0.0, n_k=32, cutoff=32, n_bands=2)
        assert bt.zak_center(sp, 1) == pytest.approx(0.0, abs=1e-9)
        assert abs(bt.zak_center(sp, 2)) == pytest.approx(0.5, abs=1e-9)


class TestChern:
    def test_moderate_superlattice_first_two_bands(self):
        rs = bt.chern_multi(MODERATE, [1, 2], n_k=12, n_t=12, cutoff=24)
        assert [r.chern for r in rs] == [1, -1]
        for r in rs:
            assert abs(r.raw - r.chern) < 1e-6
            assert r.min_gap > 1.0
            assert r.plaquette_max < 1.0

    def test_gauge_scramble_leaves_integers_alone(self):
        a = bt.chern_multi(MODERATE, [1, 2], n_k=12, n_t=12, cutoff=24)
        b = bt.chern_multi(MODERATE, [1, 2], n_k=12, n_t=12, cutoff=24,
                           gauge_seed=7)
        assert [r.chern for r in a] == [r.chern for r in b]
        assert a[0].raw == pytest.approx(b[0].raw, abs=1e-9)

    def test_grid_doubling_keeps_integers(self):
        a = bt.chern(MODERATE, 1, n_k=12, n_t=12, cutoff=24)
        b = bt.chern(MODERATE, 1, n_k=24, n_t=24, cutoff=24)
        assert a.chern == b.chern == 1

    def test_single_band_matches_multi(self):
        one = bt.chern(MODERATE, 2, n_k=12, n_t=12, cutoff=24)
        both = bt.chern_multi(MODERATE, [1, 2], n_k=12, n_t=12, cutoff=24)
        assert one.chern == both[1].chern
        assert one.raw == pytest.approx(both[1].raw, abs=1e-12)

    def test_frozen_drive_carries_no_winding(self):
        static = SuperlatticeSpec(p1=0.3, p2=0.3, d1=Fraction(1, 2), d2=1,
                                  v=0.0)
        r = bt.chern(static, 1, n_k=12, n_t=6, cutoff=24, period=1.0)
        assert r.chern == 0
        assert abs(r.raw) < 1e-12

    def test_degenerate_bands_refuse_a_number(self):
        with pytest.raises(IsolationError):
            bt.chern(EMPTY, 1, n_k=8, n_t=4, cutoff=16)

    def test_bands_are_one_indexed(self):
        with pytest.raises(ConfigError):
            bt.chern_multi(MODERATE, [0, 1], n_k=12, n_t=6, cutoff=24)


class TestWannierTrack:
    def test_center_winds_by_chern_times_cell(self):
        ts, cs = bt.wannier_center_track(MODERATE, band=1, n_t=21, n_k=16,
                                         cutoff=24)
        assert cs[-1] - cs[0] == pytest.approx(1.0, abs=1e-6)
        steps = np.abs(np.diff(cs))
        assert steps.max() < 0.3  # continuity of the unwrapped track


class TestGapMin:
    def test_deep_superlattice_gap_is_open(self):
        g = bt.band_gap_min(DEEP, 1, n_k=16, n_t=16, cutoff=24)
        assert g > 1.5

    def test_four_thirds_ratio_nearly_closes_it(self):
        g = bt.band_gap_min(NEAR_CLOSED, 1, n_k=16, n_t=16, cutoff=24)
        assert g == pytest.approx(0.0783, abs=2e-3)
        assert g > 1e-3  # small but genuinely open


class TestWannier:
    @pytest.fixture(scope="class")
    def pair(self):
        w0 = bt.wannier(MODERATE, band=1, cell=0, n_k=16, cutoff=32, ppc=32)
        w1 = bt.wannier(MODERATE, band=1, cell=1, n_k=16, cutoff=32, ppc=32)
        return w0, w1

    def test_unit_norm_and_home_cell(self, pair):
        w0, _ = pair
        assert w0.field.norm() == pytest.approx(1.0, abs=1e-12)
        assert abs(w0.center) < 0.5

    def test_orthogonality_between_cells(self, pair):
        w0, w1 = pair
        assert overlap_modulus(w0.field, w1.field) < 1e-10

    def test_translation_covariance(self, pair):
        w0, w1 = pair
        assert w1.center - w0.center == pytest.approx(1.0, abs=1e-4)
        np.testing.assert_allclose(np.roll(w0.field.values, 32),
                                   w1.field.values, atol=1e-12)

    def test_localized_in_a_few_cells(self, pair):
        w0, _ = pair
        x = w0.field.grid.x
        dens = w0.field.density()
        tail = dens[np.abs(x - w0.center) > 2.0].sum() / dens.sum()
        assert tail < 0.01

    def test_superbox_must_be_power_of_two(self):
        with pytest.raises(ConfigError):
            bt.wannier(MODERATE, band=1, n_k=24, cutoff=32, ppc=10)


class TestBandPopulations:
    def test_wannier_lives_in_its_band(self):
        w = bt.wannier(MODERATE, band=1, cell=0, n_k=16, cutoff=32, ppc=32)
        pops = bt.band_populations(w.field, MODERATE, n_bands=4, cutoff=32)
        assert pops[0] > 0.999
        assert pops[1:].max() < 1e-9
        assert pops.sum() == pytest.approx(1.0, abs=1e-9)

    def test_mean_over_snapshots(self):
        w = bt.wannier(MODERATE, band=1, cell=0, n_k=16, cutoff=32, ppc=32)
        single = bt.band_populations(w.field, MODERATE, n_bands=4, cutoff=32)
        mean = bt.mean_band_populations([w.field, w.field], MODERATE,
                                        n_bands=4, cutoff=32)
        np.testing.assert_allclose(mean, single, atol=1e-15)

    def test_box_must_hold_even_whole_cells(self):
        g_odd = for_spec(MODERATE, cells=9)
        odd = ComplexField(grid=g_odd,
                           values=np.exp(-g_odd.x ** 2).astype(complex),
                           time=0.0)
        with pytest.raises(GridMismatchError):
            bt.band_populations(odd, MODERATE, n_bands=2, cutoff=24)
        g_rag = Grid1D(-10.3, 10.3, 512)
        ragged = ComplexField(grid=g_rag,
                              values=np.exp(-g_rag.x ** 2).astype(complex),
                              time=0.0)
        with pytest.raises(GridMismatchError):
            bt.band_populations(ragged, MODERATE, n_bands=2, cutoff=24)


class TestTransportBookkeeping:
    def test_com_estimate_weights_cherns(self):
        val = bt.com_estimate([0.9, 0.05, 0.03, 0.02], [-1, 3, -1, -1], 2.0)
        assert val == pytest.approx(-1.6, abs=1e-12)

    def test_com_estimate_accepts_results(self):
        r = bt.chern(MODERATE, 1, n_k=12, n_t=12, cutoff=24)
        assert bt.com_estimate([1.0], [r], 1.0) == pytest.approx(1.0)

    def test_com_estimate_rejects_surplus_cherns(self):
        with pytest.raises(ConfigError):
            bt.com_estimate([1.0], [1, -1], 1.0)

    def test_fractional_displacement_is_exact(self):
        assert bt.fractional_displacement([-1, 3, -1]) == Fraction(1, 3)
        assert bt.fractional_displacement([2]) == Fraction(2)
        with pytest.raises(ConfigError):
            bt.fractional_displacement([])
