"""Tests for wave-packet evolution, cage measurement, and reconciliation.

Closed-form references: the single-component pi-flux chain reduces to a
two-level problem with Rabi angle 2Jt; the two-component reference chain
confines a mode-1 walker to two cells with a deterministic mode flip on the
neighboring spinal site.  Frozen numbers were derived before the assertions.
"""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nacage import gauge, lattice
from nacage.dynamics import (
    CagePrediction,
    DynamicsError,
    basis_state,
    cage_extent,
    cage_region_mask,
    evolve,
    predicted_cage,
    reconcile,
)
from nacage.gauge import LinkSet
from nacage.lattice import LatticeSpec, ModeIndex, build_real_space


def _pi_flux_links():
    one = np.ones((1, 1))
    return LinkSet(one, one, one, -one)


def _u2_links():
    return gauge.u2_family(1.0, 0.0, 0.0)


class TestEvolveBasics:
    def test_time_zero_returns_initial_state(self):
        spec = LatticeSpec(n_components=2, n_cells=5)
        model = build_real_space(spec, _u2_links())
        initial = basis_state(spec, ModeIndex(2, "A", 1))
        result = evolve(model, initial, [0.0, 1.0])
        assert_allclose(result.amplitudes[0], initial, atol=1e-12)

    def test_scalar_time_accepted(self):
        spec = LatticeSpec(n_components=2, n_cells=5)
        model = build_real_space(spec, _u2_links())
        result = evolve(model, basis_state(spec, ModeIndex(2, "A", 1)), 3.0)
        assert result.amplitudes.shape == (1, spec.dim)

    def test_norm_conserved(self):
        spec = LatticeSpec(n_components=2, n_cells=8, boundary="periodic")
        model = build_real_space(spec, _u2_links())
        rng = np.random.default_rng(5)
        initial = rng.normal(size=spec.dim) + 1j * rng.normal(size=spec.dim)
        initial /= np.linalg.norm(initial)
        result = evolve(model, initial, np.linspace(0.0, 20.0, 81))
        assert result.norm_drift() <= 1e-10

    def test_matches_fixed_step_integration(self):
        # Cross-check the eigendecomposition propagator against brute-force
        # fourth-order Runge-Kutta with a small step.
        spec = LatticeSpec(n_components=2, n_cells=5)
        model = build_real_space(spec, _u2_links())
        initial = basis_state(spec, ModeIndex(2, "A", 1))
        t_end = 10.0
        result = evolve(model, initial, [t_end])

        h = model.h_real
        psi = initial.astype(np.complex128)
        dt = 1e-3
        steps = int(round(t_end / dt))

        def deriv(v):
            return -1j * (h @ v)

        for _ in range(steps):
            k1 = deriv(psi)
            k2 = deriv(psi + 0.5 * dt * k1)
            k3 = deriv(psi + 0.5 * dt * k2)
            k4 = deriv(psi + dt * k3)
            psi = psi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        assert np.max(np.abs(result.amplitudes[0] - psi)) <= 1e-6

    def test_rejects_bad_initial_states(self):
        spec = LatticeSpec(n_components=2, n_cells=5)
        model = build_real_space(spec, _u2_links())
        with pytest.raises(DynamicsError):
            evolve(model, np.zeros(spec.dim), [1.0])
        with pytest.raises(DynamicsError):
            evolve(model, np.zeros(spec.dim - 1), [1.0])

    def test_mode_populations_rejects_unknown_site(self):
        spec = LatticeSpec(n_components=2, n_cells=5)
        model = build_real_space(spec, _u2_links())
        result = evolve(model, basis_state(spec, ModeIndex(2, "A", 1)), [0.0])
        with pytest.raises(DynamicsError):
            result.mode_populations("Z")


class TestPiFluxBreathing:
    """Single-component pi-flux: the walker breathes between its spinal site
    and the four adjacent apical sites with |psi_A(t)|^2 = cos^2(2Jt)."""

    @pytest.mark.parametrize("orientation", ["standard", "reversed"])
    def test_breathing_oracle(self, orientation):
        spec = LatticeSpec(n_components=1, n_cells=7)
        model = build_real_space(spec, _pi_flux_links(), orientation)
        start = 3
        times = np.linspace(0.0, 5.0, 101)
        result = evolve(model, basis_state(spec, ModeIndex(start, "A", 1)), times)

        a_pop = result.site_populations("A")
        assert_allclose(a_pop[:, start], np.cos(2.0 * times) ** 2, atol=1e-10)
        other_a = np.delete(a_pop, start, axis=1)
        assert np.max(other_a) <= 1e-12

        quarter = np.sin(2.0 * times) ** 2 / 4.0
        b_pop = result.site_populations("B")
        c_pop = result.site_populations("C")
        for pops, cells in ((b_pop, (start - 1, start)), (c_pop, (start - 1, start))):
            for cell in cells:
                assert_allclose(pops[:, cell], quarter, atol=1e-10)
        assert result.norm_drift() <= 1e-10


class TestTwoComponentWalker:
    """Mode-resolved confinement of the two-component reference chain."""

    def _walk(self, mode, orientation="standard", t_max=12.0):
        spec = LatticeSpec(n_components=2, n_cells=11)
        model = build_real_space(spec, _u2_links(), orientation)
        times = np.linspace(0.0, t_max, 61)
        result = evolve(model, basis_state(spec, ModeIndex(5, "A", mode)), times)
        return result, cage_extent(result, start_cell=5)

    def test_mode_one_spreads_right_under_standard(self):
        result, report = self._walk(1)
        assert (report.left_edge, report.right_edge) == (5, 6)
        assert report.size == 2
        assert report.leakage <= 1e-8
        # The population reaching the next spinal site arrives entirely in
        # the second internal mode.
        modes = result.mode_populations("A")
        assert np.max(modes[:, 6, 0]) <= 1e-10
        assert np.max(modes[:, 6, 1]) > 0.01

    def test_mode_two_spreads_left_under_standard(self):
        result, report = self._walk(2)
        assert (report.left_edge, report.right_edge) == (4, 5)
        assert report.leakage <= 1e-8
        modes = result.mode_populations("A")
        assert np.max(modes[:, 4, 1]) <= 1e-10
        assert np.max(modes[:, 4, 0]) > 0.01

    def test_mode_one_spreads_left_under_reversed(self):
        _, report = self._walk(1, orientation="reversed")
        assert (report.left_edge, report.right_edge) == (4, 5)
        assert report.leakage <= 1e-8

    def test_cage_saturates_in_time(self):
        _, early = self._walk(1, t_max=10.0)
        _, late = self._walk(1, t_max=50.0)
        assert (early.left_edge, early.right_edge) == (late.left_edge, late.right_edge)
        assert late.leakage <= 1e-8


class TestCageExtentMechanics:
    def test_region_mask_layout(self):
        spec = LatticeSpec(n_components=1, n_cells=6)
        mask = cage_region_mask(spec, 2, 3)
        # A sites of cells 2..3 plus B/C sites of cells 1..3 (flat layout
        # A,B,C per cell with one mode each).
        expected = {6, 9, 4, 5, 7, 8, 10, 11}
        assert set(np.nonzero(mask)[0].tolist()) == expected

    def test_region_mask_validation(self):
        spec = LatticeSpec(n_components=1, n_cells=6)
        with pytest.raises(DynamicsError):
            cage_region_mask(spec, 3, 2)
        with pytest.raises(DynamicsError):
            cage_region_mask(spec, 0, 2)  # open chain: no apical cell -1
        with pytest.raises(DynamicsError):
            cage_region_mask(spec, 2, 6)

    def test_region_mask_wraps_on_rings(self):
        spec = LatticeSpec(n_components=1, n_cells=6, boundary="periodic")
        mask = cage_region_mask(spec, 0, 1)
        # Apical block of cell -1 wraps to cell 5.
        assert mask[(5 * 3 + 1)] and mask[(5 * 3 + 2)]

    def test_threshold_validation(self):
        spec = LatticeSpec(n_components=2, n_cells=11)
        model = build_real_space(spec, _u2_links())
        result = evolve(model, basis_state(spec, ModeIndex(5, "A", 1)), [0.0, 1.0])
        for bad in (0.0, 1.0, -0.5):
            with pytest.raises(DynamicsError):
                cage_extent(result, 5, threshold=bad)
        with pytest.raises(DynamicsError):
            cage_extent(result, 11)

    def test_boundary_proximity_rejected(self):
        spec = LatticeSpec(n_components=2, n_cells=5)
        model = build_real_space(spec, _u2_links())
        result = evolve(model, basis_state(spec, ModeIndex(2, "A", 1)), [0.0, 2.0])
        with pytest.raises(DynamicsError):
            cage_extent(result, 2)  # cage reaches cell 3 of a 5-cell chain

    def test_report_serializes(self):
        _, report = TestTwoComponentWalker()._walk(1)
        payload = json.dumps(report.to_dict())
        assert json.loads(payload)["size"] == 2


class TestCagePredictor:
    def test_low_power_regime_rows(self):
        n, m, start = 7, 2, 10
        cases = {
            1: (1, 10, 10),
            2: (2, 11, 10),
            3: (1, 10, 10),
            5: (1, 10, 10),
            6: (2, 10, 9),
            7: (1, 10, 10),
        }
        for mode, (size, right, left) in cases.items():
            assert predicted_cage(n, m, mode, start) == CagePrediction(size, right, left)

    def test_high_power_regime_rows(self):
        n, m, start = 7, 4, 10
        cases = {
            1: (1, 10, 10),
            3: (3, 12, 10),
            4: (7, 13, 7),
            5: (3, 10, 8),
            7: (1, 10, 10),
        }
        for mode, (size, right, left) in cases.items():
            assert predicted_cage(n, m, mode, start) == CagePrediction(size, right, left)

    def test_boundary_power_uses_high_regime(self):
        # N=6, m=3 sits exactly at the regime boundary floor((N+1)/2).
        n, m, start = 6, 3, 10
        cases = {
            1: (1, 10, 10),
            3: (3, 12, 10),
            4: (3, 10, 8),
            5: (2, 10, 9),
            6: (1, 10, 10),
        }
        for mode, (size, right, left) in cases.items():
            assert predicted_cage(n, m, mode, start) == CagePrediction(size, right, left)

    def test_full_power_row(self):
        for mode in range(1, 5):
            assert predicted_cage(4, 4, mode, 10) == CagePrediction(
                4, 10 + mode - 1, 10 + mode - 4
            )

    def test_power_one_is_frozen_walker(self):
        for mode in (1, 2, 3):
            assert predicted_cage(3, 1, mode, 10) == CagePrediction(1, 10, 10)

    def test_size_always_equals_edge_span(self):
        for n in range(1, 9):
            for m in range(1, n + 1):
                for mode in range(1, n + 1):
                    p = predicted_cage(n, m, mode, 0)
                    assert p.size == p.right_edge - p.left_edge + 1
                    assert p.size <= n

    @pytest.mark.parametrize("n,m,mode", [(4, 2, 0), (4, 2, 5), (4, 0, 1), (4, 5, 1)])
    def test_rejects_out_of_range(self, n, m, mode):
        with pytest.raises(DynamicsError):
            predicted_cage(n, m, mode)


class TestReconcile:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_cyclic_shift_families_match_exactly(self, n):
        report = reconcile(gauge.shift_family(n))
        assert report.nilpotent_power == n
        assert report.all_strict and report.all_reflected
        for row in report.rows:
            assert max(row.leakage_reversed, row.leakage_standard) <= 1e-8

    @pytest.mark.parametrize("gamma", [1.0, 0.5])
    def test_two_component_families_match_exactly(self, gamma):
        report = reconcile(gauge.u2_family(gamma, 0.0, 0.0))
        assert report.nilpotent_power == 2
        assert report.all_strict and report.all_reflected

    def test_orientations_are_spatial_mirrors(self):
        report = reconcile(gauge.stride_family(5, 3))
        start = report.start_cell
        for row in report.rows:
            std = row.measured_standard
            mirrored = CagePrediction(
                size=std.size,
                right_edge=2 * start - std.left_edge,
                left_edge=2 * start - std.right_edge,
            )
            assert row.measured_reversed == mirrored

    def test_partial_permutation_family_documented_mismatches(self):
        # The closed-form table assumes the interference matrix couples
        # mode-adjacent chains; the strided construction does not, so most
        # modes measure a different (still finite) cage.  These rows are
        # frozen as documentation of that behavior.
        report = reconcile(gauge.stride_family(5, 3))
        assert report.nilpotent_power == 2  # derived, not the nominal parameter
        observed = {
            row.mode: (
                row.predicted.size,
                row.predicted.right_edge - report.start_cell,
                row.predicted.left_edge - report.start_cell,
                row.measured_reversed.size,
                row.measured_reversed.right_edge - report.start_cell,
                row.measured_reversed.left_edge - report.start_cell,
                row.match_strict,
            )
            for row in report.rows
        }
        assert observed == {
            1: (1, 0, 0, 2, 0, -1, False),
            2: (2, 1, 0, 2, 0, -1, False),
            3: (1, 0, 0, 1, 0, 0, True),
            4: (2, 0, -1, 2, 1, 0, False),
            5: (1, 0, 0, 2, 1, 0, False),
        }
        bound = 2 * report.nilpotent_power - 1
        for row in report.rows:
            assert row.measured_reversed.size <= bound
            assert max(row.leakage_reversed, row.leakage_standard) <= 1e-8

    def test_non_nilpotent_links_rejected(self):
        eye = np.eye(2)
        with pytest.raises(DynamicsError):
            reconcile(LinkSet(eye, eye, eye, eye))

    def test_report_serializes(self):
        report = reconcile(gauge.u2_family(1.0, 0.0, 0.0))
        payload = json.loads(json.dumps(report.to_dict()))
        assert payload["all_strict"] is True
        assert payload["rows"][0]["predicted"]["size"] == 2
