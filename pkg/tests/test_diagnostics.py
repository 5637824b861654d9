import dataclasses
import json
import math

import numpy as np
import pytest

from creditmig import (
    DEFAULT_BOUNDARY_TOL,
    INVARIANT_NAMES,
    BoundaryExtractionError,
    Grid,
    SolverConfig,
    TridiagonalSystem,
    check_invariants,
    check_m_matrix,
    extract_default_boundary,
    extract_transit_boundary,
    initial_condition,
    run_solver,
    sup_error_vs_tw,
    tw_value,
)

GAMMA = 0.6


@pytest.fixture
def fine_grid():
    return Grid(xi_min=-5.0, xi_max=5.0, n_space=2000, dt=0.01, n_steps=1)


@pytest.fixture
def small_field(paper_params):
    grid = Grid.from_spacing(-5.0, 5.0, 0.05, 0.05, 1.0)
    return run_solver(paper_params, grid, SolverConfig(),
                      snapshot_times=[0.5])


class TestDefaultBoundary:
    def test_initial_condition_starts_at_origin(self, fine_grid):
        u0 = initial_condition(fine_grid)
        kappa = extract_default_boundary(u0, fine_grid)
        assert abs(kappa - 0.0) <= fine_grid.dxi

    def test_wave_row_recovers_kappa_star(self, fine_grid, paper_wave):
        xi = fine_grid.points()
        row = np.exp(xi) * tw_value(paper_wave, xi)
        kappa = extract_default_boundary(row, fine_grid)
        assert abs(kappa - paper_wave.kappa_star) <= fine_grid.dxi

    def test_all_default_row_returns_left_edge(self, fine_grid):
        u = np.exp(fine_grid.points())  # v = 1 everywhere
        assert extract_default_boundary(u, fine_grid) == fine_grid.xi_min

    def test_rejects_nonpositive_tolerance(self, fine_grid):
        with pytest.raises(ValueError):
            extract_default_boundary(initial_condition(fine_grid), fine_grid,
                                     tol_b=0.0)


class TestTransitBoundary:
    def test_initial_condition_crosses_at_log_inv_gamma(self, fine_grid):
        u0 = initial_condition(fine_grid)
        eta = extract_transit_boundary(u0, fine_grid, GAMMA)
        assert abs(eta - math.log(1.0 / GAMMA)) <= fine_grid.dxi

    def test_wave_row_recovers_eta_star(self, fine_grid, paper_wave):
        xi = fine_grid.points()
        row = np.exp(xi) * tw_value(paper_wave, xi)
        eta = extract_transit_boundary(row, fine_grid, GAMMA)
        assert abs(eta - paper_wave.eta_star) <= fine_grid.dxi

    def test_plateau_at_gamma_is_an_error(self, fine_grid):
        u = GAMMA * np.exp(fine_grid.points())  # v = gamma everywhere
        with pytest.raises(BoundaryExtractionError):
            extract_transit_boundary(u, fine_grid, GAMMA)

    def test_no_crossing_is_an_error(self, fine_grid):
        u = (GAMMA + 0.2) * np.exp(fine_grid.points())
        with pytest.raises(BoundaryExtractionError):
            extract_transit_boundary(u, fine_grid, GAMMA)

    def test_multiple_crossings_are_an_error(self, fine_grid):
        xi = fine_grid.points()
        v = GAMMA + 0.05 * np.cos(3.0 * xi)
        with pytest.raises(BoundaryExtractionError):
            extract_transit_boundary(v * np.exp(xi), fine_grid, GAMMA)


class TestPiecewiseLinearExactness:
    # slope chosen so both threshold crossings land strictly between nodes
    SLOPE = -0.31
    INTERCEPT = 1.47

    def _row(self, grid):
        xi = grid.points()
        v = self.INTERCEPT + self.SLOPE * (xi - grid.xi_min)
        return v * np.exp(xi)

    def test_default_crossing_exact(self):
        grid = Grid(xi_min=-5.0, xi_max=5.0, n_space=100, dt=0.1, n_steps=1)
        row = self._row(grid)
        expected = grid.xi_min \
            + (self.INTERCEPT - (1.0 - DEFAULT_BOUNDARY_TOL)) / (-self.SLOPE)
        got = extract_default_boundary(row, grid)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_transit_crossing_exact(self):
        grid = Grid(xi_min=-5.0, xi_max=5.0, n_space=100, dt=0.1, n_steps=1)
        row = self._row(grid)
        expected = grid.xi_min + (self.INTERCEPT - GAMMA) / (-self.SLOPE)
        got = extract_transit_boundary(row, grid, GAMMA)
        assert got == pytest.approx(expected, abs=1e-12)


class TestSupError:
    def test_zero_on_wave_row(self, fine_grid, paper_wave):
        xi = fine_grid.points()
        row = np.exp(xi) * tw_value(paper_wave, xi)
        assert sup_error_vs_tw(row, paper_wave, fine_grid) == 0.0

    def test_initial_condition_matches_direct_evaluation(self, fine_grid,
                                                         paper_wave):
        xi = fine_grid.points()
        u0 = initial_condition(fine_grid)
        expected = np.max(np.abs(np.minimum(1.0, np.exp(xi))
                                 - np.exp(xi) * tw_value(paper_wave, xi)))
        got = sup_error_vs_tw(u0, paper_wave, fine_grid)
        assert got == pytest.approx(expected, rel=0.0, abs=0.0)
        assert got > 0.4  # the gap at xi = 0 equals |coef_b|


class TestMMatrixCheck:
    def test_heat_stencil_passes(self):
        n = 6
        sys = TridiagonalSystem(
            lower=np.full(n, -1.0), diag=np.full(n, 2.5),
            upper=np.full(n, -1.0), rhs=np.zeros(n))
        sys.lower[0] = 0.0
        sys.upper[-1] = 0.0
        assert check_m_matrix(sys)

    def test_positive_offdiagonal_fails(self):
        n = 4
        sys = TridiagonalSystem(
            lower=np.full(n, -1.0), diag=np.full(n, 3.0),
            upper=np.full(n, -1.0), rhs=np.zeros(n))
        sys.upper[1] = 0.5
        assert not check_m_matrix(sys)

    def test_lost_dominance_fails(self):
        n = 4
        sys = TridiagonalSystem(
            lower=np.full(n, -1.0), diag=np.full(n, 2.0),
            upper=np.full(n, -1.0), rhs=np.zeros(n))
        assert not check_m_matrix(sys)  # equality is not strict dominance

    def test_nonpositive_diagonal_fails(self):
        n = 4
        sys = TridiagonalSystem(
            lower=np.zeros(n), diag=np.array([1.0, -2.0, 1.0, 1.0]),
            upper=np.zeros(n), rhs=np.zeros(n))
        assert not check_m_matrix(sys)


class TestInvariantSuite:
    def test_correct_run_passes_everything(self, small_field):
        report = check_invariants(small_field)
        assert report.all_passed
        assert [r.name for r in report.results] == list(INVARIANT_NAMES)

    def test_clamped_values_fail_bounds(self, small_field):
        grid = small_field.grid
        cap = np.minimum(1.0, np.exp(grid.points()))
        bad = dataclasses.replace(
            small_field,
            values=np.tile(cap + 0.1, (len(small_field.times), 1)))
        report = check_invariants(bad)
        bounds = report.result("value_bounds")
        assert not bounds.passed
        assert bounds.worst_violation == pytest.approx(0.1, rel=1e-6)
        assert not report.all_passed

    def test_time_increasing_values_fail_monotonicity(self, small_field):
        bad = dataclasses.replace(small_field,
                                  values=small_field.values[::-1].copy())
        report = check_invariants(bad)
        assert not report.result("monotone_in_time").passed

    def test_recorded_m_matrix_failure_surfaces(self, small_field):
        bad = dataclasses.replace(small_field, m_matrix_all_ok=False,
                                  m_matrix_min_margin=-0.25,
                                  m_matrix_max_offdiag=0.0)
        report = check_invariants(bad)
        m = report.result("m_matrix")
        assert not m.passed
        assert m.worst_violation == pytest.approx(0.25)

    def test_boundary_regression_detected(self, small_field):
        trace = small_field.trace
        kappa = trace.kappa_hat.copy()
        kappa[-1] = kappa[0] + 1.0  # jumps back up by far more than one cell
        bad = dataclasses.replace(
            small_field,
            trace=dataclasses.replace(trace, kappa_hat=kappa))
        report = check_invariants(bad)
        assert not report.result("boundary_monotone").passed

    def test_report_is_json_ready(self, small_field):
        report = check_invariants(small_field)
        payload = json.dumps(report.to_dict(), sort_keys=True)
        parsed = json.loads(payload)
        assert parsed["all_passed"] is True
        assert {e["name"] for e in parsed["invariants"]} == \
            set(INVARIANT_NAMES)

    def test_newton_statistics_reported(self, small_field):
        report = check_invariants(small_field)
        assert report.newton_max >= 1
        assert 1.0 <= report.newton_mean <= report.newton_max
        table = report.table()
        assert "newton iterations" in table
        for name in INVARIANT_NAMES:
            assert name in table
