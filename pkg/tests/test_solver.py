"""Solver tests: closed forms, discretization order, references, assembly."""

import math

import numpy as np
import pytest
from scipy.linalg import solve_banded

from pmlrate.scaling import PmlProfile, make_scaling
from pmlrate.solver import (
    ClosedForm1D,
    GridSolution,
    ModeSolution,
    RadialModeProblem,
    ScatteringConfig,
    SingularSystemError,
    SingularTruncationError,
    _finish_report,
    _iter_mode_solutions,
    _solve_1d_interval,
    _solve_tridiag,
    default_n_grid,
    error_norms,
    incident_coefficient,
    mode_cutoff,
    pml_scattering_solve,
    predicted_sup_error,
    radial_mode_solve,
    reference_mode,
    scatter_error_report,
    solve_1d_closed_form,
    solve_1d_fd,
    sup_error_1d,
)
from pmlrate.rate import predicted_exponent
from pmlrate.special import bessel_jy


CUBIC3 = make_scaling("cubic", 3.0, 6.0)
CUBIC2 = make_scaling("cubic", 2.0, 4.0)
QUARTER = math.pi / 4


class TestClosedForm1D:
    def test_reflection_factor_arithmetic(self):
        # f(3.5) = 0.125 at theta = pi/4, so |e^{2ikz_tr}| = e^{-10} at k=40
        prof = PmlProfile(CUBIC3, QUARTER)
        sol = solve_1d_closed_form(40.0, prof, 3.5)
        assert sol.reflection == pytest.approx(math.exp(-10.0), rel=1e-12)
        assert abs(sol.B / sol.A) == pytest.approx(sol.reflection, rel=1e-12)

    def test_boundary_values(self):
        prof = PmlProfile(CUBIC3, QUARTER)
        sol = solve_1d_closed_form(17.0, prof, 3.6, bc_value=2.0 - 1.0j)
        assert sol.evaluate(0.0) == pytest.approx(2.0 - 1.0j, abs=1e-12)
        assert abs(sol.evaluate(3.6)) <= 1e-12 * abs(sol.A)

    def test_theta_near_zero_reflects(self):
        # tan(theta) ~ 1e-3 after the profile clamp: |B/A| stays near 1
        prof = PmlProfile(CUBIC3, math.atan(1e-8))
        sol = solve_1d_closed_form(10.0, prof, 3.5)
        assert abs(sol.B / sol.A) > 0.99

    def test_sharpness_oracle(self):
        # measured sup error over the unscaled region against the
        # outgoing reference, normalized by the predicted envelope
        prof = PmlProfile(CUBIC3, QUARTER)
        for k in (20.0, 30.0, 40.0, 60.0, 80.0):
            sol = solve_1d_closed_form(k, prof, 3.5)
            ratio = sup_error_1d(sol, 3.0) / predicted_sup_error(k, prof, 3.5)
            assert 0.9 <= ratio <= 1.12, (k, ratio)

    def test_envelope_identity(self):
        prof = PmlProfile(CUBIC3, QUARTER)
        for k in (20.0, 35.0, 50.0):
            sol = solve_1d_closed_form(k, prof, 3.5)
            q = sol.reflection
            scale = 2.0 * q / abs(1.0 - (-sol.B / sol.A))
            sup = sup_error_1d(sol, 3.0)
            assert (1.0 - q) * scale <= sup <= (1.0 + q) * scale

    def test_resonant_truncation_raises(self):
        # scaling never active on [0, pi], so z stays real and the
        # denominator 1 - e^{2ik R_tr} vanishes at k = 1
        prof = PmlProfile(make_scaling("cubic", 4.0, 8.0), QUARTER)
        with pytest.raises(SingularTruncationError):
            solve_1d_closed_form(1.0, prof, math.pi)

    def test_validation(self):
        prof = PmlProfile(CUBIC3, QUARTER)
        with pytest.raises(ValueError):
            solve_1d_closed_form(0.0, prof, 3.5)
        with pytest.raises(ValueError):
            solve_1d_closed_form(10.0, prof, -1.0)


class TestSolve1dFd:
    def test_inactive_window_matches_standing_wave(self):
        # R_tr below R1: plain v'' + k^2 v = 0 with closed sine form
        prof = PmlProfile(CUBIC3, QUARTER)
        k, R_tr, bc = 5.0, 2.0, 1.5 + 0.5j
        sol = solve_1d_fd(k, prof, R_tr, 2000, bc)
        exact = bc * np.sin(k * (R_tr - sol.radii)) / math.sin(k * R_tr)
        rel = np.max(np.abs(sol.values - exact)) / np.max(np.abs(exact))
        assert rel < 1e-4

    def test_grid_doubling_ratio(self):
        prof = PmlProfile(CUBIC3, QUARTER)
        k = 40.0
        cf = solve_1d_closed_form(k, prof, 3.5)
        errs = []
        for n in (2000, 4000, 8000):
            sol = solve_1d_fd(k, prof, 3.5, n)
            ref = cf.evaluate(sol.radii)
            errs.append(np.max(np.abs(sol.values - ref)))
        for e0, e1 in zip(errs, errs[1:]):
            assert 3.2 <= e0 / e1 <= 4.8

    def test_converges_to_closed_form(self):
        # second-order budget: the k=40 run needs ~3e5 intervals for 1e-6
        prof = PmlProfile(CUBIC3, QUARTER)
        k = 40.0
        cf = solve_1d_closed_form(k, prof, 3.5)
        sol = solve_1d_fd(k, prof, 3.5, 320000)
        ref = cf.evaluate(sol.radii)
        rel = np.max(np.abs(sol.values - ref)) / np.max(np.abs(ref))
        assert rel <= 1e-6
        coarse = solve_1d_fd(k, prof, 3.5, 8000)
        ref_c = cf.evaluate(coarse.radii)
        rel_c = np.max(np.abs(coarse.values - ref_c)) / np.max(np.abs(ref_c))
        assert rel_c == pytest.approx(rel * (320000 / 8000) ** 2, rel=0.05)

    def test_endpoints_exact(self):
        prof = PmlProfile(CUBIC3, QUARTER)
        sol = solve_1d_fd(12.0, prof, 3.5, 300, bc_value=0.3 + 0.7j)
        assert sol.values[0] == 0.3 + 0.7j
        assert sol.values[-1] == 0.0

    def test_validation(self):
        prof = PmlProfile(CUBIC3, QUARTER)
        with pytest.raises(ValueError):
            solve_1d_fd(10.0, prof, 3.5, 8)
        with pytest.raises(ValueError):
            solve_1d_fd(-1.0, prof, 3.5, 100)

    def test_singular_pivot_raises(self):
        n = 8
        sub = np.zeros(n, dtype=complex)
        diag = np.zeros(n, dtype=complex)
        sup = np.zeros(n, dtype=complex)
        rhs = np.ones(n, dtype=complex)
        with pytest.raises(SingularSystemError):
            _solve_tridiag(sub, diag, sup, rhs)

    def test_thomas_matches_banded_solver(self):
        rng = np.random.default_rng(7)
        n = 500
        sub = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        diag = rng.standard_normal(n) + 1j * rng.standard_normal(n) + 6.0
        sup = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        rhs = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        ab = np.zeros((3, n), dtype=complex)
        ab[0, 1:] = sup[:-1]
        ab[1] = diag
        ab[2, :-1] = sub[1:]
        expected = solve_banded((1, 1), ab, rhs)
        got = _solve_tridiag(sub, diag.copy(), sup, rhs.copy())
        assert np.max(np.abs(got - expected)) < 1e-10 * np.max(np.abs(expected))


class TestRadialModeSolve:
    def test_theta_inactive_bessel_oracle(self):
        # R_tr <= R1 keeps the scaling off; the two-point problem then has
        # the cross-combination closed form vanishing at R_tr
        prof = PmlProfile(CUBIC3, QUARTER)
        nu, k, a, R_tr = 5, 9.3, 1.0, 2.5
        edge = bessel_jy(nu, k * R_tr)

        def exact(r):
            p = bessel_jy(nu, k * r)
            return p.J * edge.Y - p.Y * edge.J

        errs = []
        for n in (200, 400, 800, 1600):
            p = RadialModeProblem(2, nu, k, a, R_tr, prof, n)
            sol = radial_mode_solve(p, exact(a))
            ref = np.array([exact(r) for r in sol.radii])
            errs.append(np.max(np.abs(sol.values - ref)) / np.max(np.abs(ref)))
        assert errs[-1] < 1e-4
        for e0, e1 in zip(errs, errs[1:]):
            assert 3.2 <= e0 / e1 <= 4.8

    def test_d3_nu0_reduces_to_1d(self):
        # w = z v solves the 1D equation on [a, R_tr] with data a*bc
        prof = PmlProfile(CUBIC2, QUARTER)
        k, a, R_tr, n, bc = 10.0, 1.0, 2.8, 4000, 1.0 + 0.5j
        p = RadialModeProblem(3, 0, k, a, R_tr, prof, n)
        v = radial_mode_solve(p, bc)
        w = _solve_1d_interval(k, prof, a, R_tr, n, a * bc)
        z = w.radii + 1j * prof.f_theta(w.radii)
        expect = w.values / z
        diff = np.max(np.abs(v.values - expect)) / np.max(np.abs(v.values))
        assert diff < 5e-5

    def test_zero_bc_zero_solution(self):
        prof = PmlProfile(CUBIC2, QUARTER)
        p = RadialModeProblem(2, 3, 8.0, 1.0, 2.8, prof, 500)
        sol = radial_mode_solve(p, 0.0)
        assert np.all(sol.values == 0.0)

    def test_validation(self):
        prof = PmlProfile(CUBIC2, QUARTER)
        with pytest.raises(ValueError):
            RadialModeProblem(4, 0, 8.0, 1.0, 2.8, prof, 500)
        with pytest.raises(ValueError):
            RadialModeProblem(2, -1, 8.0, 1.0, 2.8, prof, 500)
        with pytest.raises(ValueError):
            RadialModeProblem(2, 0, 8.0, 3.0, 2.8, prof, 500)
        with pytest.raises(ValueError):
            RadialModeProblem(2, 0, 8.0, 2.5, 2.8, prof, 500)
        with pytest.raises(ValueError):
            RadialModeProblem(2, 0, 8.0, 1.0, 2.8, prof, 8)


class TestReferenceMode:
    def test_nu0_at_boundary_cancels(self):
        val = reference_mode(2, 0, 10.0, 1.0, 1.0)
        assert val == pytest.approx(-bessel_jy(0, 10.0).J, rel=1e-12)

    @pytest.mark.parametrize("d", [2, 3])
    def test_boundary_dirichlet_residual(self, d):
        k, a = 10.0, 1.0
        N = mode_cutoff(k, a, 1e-12, d=d)
        total = sum(
            incident_coefficient(d, nu, k, a) + reference_mode(d, nu, k, a, a)
            for nu in range(N + 1)
        )
        assert abs(total) <= 1e-10

    def test_tail_negligible_beyond_cutoff(self):
        k, a = 10.0, 1.0
        N = mode_cutoff(k, a, 1e-12)
        for nu in range(N + 1, N + 6):
            assert abs(reference_mode(2, nu, k, a, 1.4)) < 1e-12

    @pytest.mark.parametrize("d", [2, 3])
    def test_array_matches_scalar(self, d):
        # two independent evaluation routes (scalar recurrences vs the
        # vectorized tables); each is good to ~1e-11 near the Y split
        k, a = 9.0, 1.0
        r = np.linspace(1.0, 2.3, 7)
        for nu in (0, 1, 4, 11):
            arr = reference_mode(d, nu, k, a, r)
            pt = np.array([reference_mode(d, nu, k, a, float(x)) for x in r])
            scale = np.max(np.abs(pt))
            assert np.max(np.abs(arr - pt)) <= 1e-10 * max(scale, 1e-300)

    def test_negligible_mode_evaluates_to_zero(self):
        # Y_180(0.5) overflows the double range; the mode is physically nil
        assert reference_mode(2, 180, 0.5, 1.0, 1.2) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            reference_mode(4, 0, 10.0, 1.0, 1.5)
        with pytest.raises(ValueError):
            reference_mode(2, 0, 10.0, 1.0, 0.5)


class TestModeCutoff:
    def test_small_ka(self):
        N = mode_cutoff(1.0, 1.0, 1e-12)
        assert 1 <= N <= 25

    @pytest.mark.parametrize("ka", [1.0, 7.5, 40.0])
    def test_tol_one_immediate(self, ka):
        assert mode_cutoff(ka, 1.0, 1.0) == math.ceil(ka)

    def test_monotone_in_tol(self):
        n1 = mode_cutoff(10.0, 1.0, 1e-2)
        n2 = mode_cutoff(10.0, 1.0, 1e-6)
        n3 = mode_cutoff(10.0, 1.0, 1e-12)
        assert n1 <= n2 <= n3

    def test_cap_error(self):
        with pytest.raises(ValueError, match="order window"):
            mode_cutoff(300.0, 1.0, 1e-300)

    def test_validation(self):
        with pytest.raises(ValueError):
            mode_cutoff(0.0, 1.0, 1e-12)


class TestScatteringConfig:
    def test_validation(self):
        prof = PmlProfile(CUBIC2, QUARTER)
        with pytest.raises(ValueError):
            ScatteringConfig(2, 10.0, 2.5, prof, 2.0, 2.8)
        with pytest.raises(ValueError):
            ScatteringConfig(2, 10.0, 1.0, prof, 3.0, 2.8)
        with pytest.raises(ValueError):
            ScatteringConfig(2, 10.0, 1.0, prof, 2.5, 2.8)  # beyond scaling R1
        with pytest.raises(ValueError):
            ScatteringConfig(4, 10.0, 1.0, prof, 2.0, 2.8)
        with pytest.raises(ValueError):
            ScatteringConfig(2, 10.0, 1.0, prof, 2.0, 2.8,
                             incidence_dir=(0.0, 1.0))
        cfg = ScatteringConfig(2, 10.0, 1.0, prof, 2.0, 2.8)
        assert cfg.incidence_dir == (1.0, 0.0)

    def test_auto_rules(self):
        prof = PmlProfile(CUBIC2, QUARTER)
        cfg = ScatteringConfig(2, 10.0, 1.0, prof, 2.0, 2.8)
        assert cfg.resolved_n_grid() == default_n_grid(10.0, 1.0, 2.8)
        ka = 10.0
        assert cfg.resolved_n_modes() == math.ceil(ka + 6 * ka ** (1 / 3) + 20)

    @pytest.mark.parametrize("ka", [5.0, 20.0, 40.0])
    def test_auto_mode_count_tail(self, ka):
        # the shipped cutoff formula leaves the next ten coefficients tiny
        N = math.ceil(ka + 6 * ka ** (1 / 3) + 20)
        for nu in range(N + 1, N + 11):
            assert abs(incident_coefficient(2, nu, ka, 1.0)) < 1e-12


class TestModeSymmetry:
    def test_two_sided_sum_and_plane_wave(self):
        # cosine series with Neumann factors == full two-sided Fourier sum
        k, r = 1.0, 7.3
        N = mode_cutoff(k * r, 1.0, 1e-14) + 5
        for phi in (0.0, 0.3, 1.1, 2.9):
            one_sided = sum(
                incident_coefficient(2, nu, k, r) * math.cos(nu * phi)
                for nu in range(N + 1)
            )
            two_sided = 0.0 + 0.0j
            for m in range(-N, N + 1):
                Jm = bessel_jy(abs(m), k * r).J * ((-1) ** abs(m) if m < 0 else 1)
                two_sided += (1j ** m) * Jm * np.exp(1j * m * phi)
            assert abs(one_sided - two_sided) < 1e-10
            assert abs(one_sided - np.exp(1j * k * r * math.cos(phi))) < 1e-10


class TestErrorNorms:
    def _cfg(self, **kw):
        prof = PmlProfile(CUBIC2, QUARTER)
        args = dict(d=2, k=10.0, obstacle_radius=1.0, profile=prof,
                    R1=2.0, R_tr=2.8, n_grid=1600)
        args.update(kw)
        return ScatteringConfig(**args)

    def _exact_modes(self, cfg, n):
        radii = np.linspace(1.0, 2.8, n + 1)
        return [
            ModeSolution(nu, GridSolution(radii, np.asarray(
                reference_mode(2, nu, cfg.k, 1.0, radii))))
            for nu in range(3)
        ]

    def test_exact_modes_l2_error_vanishes(self):
        cfg = self._cfg(n_grid=400)
        rep = error_norms(cfg, self._exact_modes(cfg, 400))
        assert rep.rel_L2 <= 1e-12
        assert not rep.undefined_relative

    def test_exact_modes_h1_floor_is_sampling_order(self):
        # feeding the exact reference leaves only the second-order
        # derivative sampling residual, which collapses like h^2
        cfg = self._cfg(n_grid=400)
        coarse = error_norms(cfg, self._exact_modes(cfg, 400))
        fine = error_norms(cfg, self._exact_modes(cfg, 1600))
        assert 12.0 <= coarse.rel_H1 / fine.rel_H1 <= 22.0

    def test_single_mode_polynomial_hand_value(self):
        # e(r) = amp * r^2 on the annulus nodes 1, 1.45, 1.9; a quadratic
        # is differentiated exactly by the second-order stencils, and the
        # large amplitude drowns the reference sampling residual
        cfg = self._cfg(k=0.1, n_grid=4)  # grid 1, 1.45, 1.9, 2.35, 2.8
        amp = 1e9
        radii = np.linspace(1.0, 2.8, 5)
        base = np.asarray(reference_mode(2, 0, cfg.k, 1.0, radii))
        values = base + amp * radii**2
        rep = error_norms(cfg, [ModeSolution(0, GridSolution(radii, values))])
        r = radii[:3]
        l2 = 2 * math.pi * np.trapezoid(r**4 * r, r)
        grad = 2 * math.pi * np.trapezoid((2 * r) ** 2 * r, r)
        assert rep.abs_L2 == pytest.approx(amp * math.sqrt(l2), rel=1e-10)
        assert rep.abs_H1 == pytest.approx(amp * math.sqrt(l2 + grad), rel=1e-10)

    def test_parseval_matches_tensor_grid(self):
        # zero-valued modes make the "error" equal the reference series,
        # whose L2 norm is recomputed on a dense (r, phi) tensor grid
        cfg = self._cfg(n_grid=1600)
        k = cfg.k
        radii = np.linspace(1.0, 2.8, 1601)
        N = cfg.resolved_n_modes()
        zero = np.zeros(1601, dtype=complex)
        modes = [ModeSolution(nu, GridSolution(radii, zero)) for nu in range(N + 1)]
        rep = error_norms(cfg, modes)

        mask = radii <= 2.0 + 1e-12
        r = radii[mask]
        nphi = 1024
        phi = np.arange(nphi) * (2 * math.pi / nphi)
        u = np.zeros((r.size, nphi), dtype=complex)
        for nu in range(N + 1):
            u += np.outer(np.asarray(reference_mode(2, nu, k, 1.0, r)),
                          np.cos(nu * phi))
        dense = np.sqrt(np.trapezoid(np.sum(np.abs(u) ** 2, axis=1)
                                 * (2 * math.pi / nphi) * r, r))
        assert rep.abs_L2 == pytest.approx(dense, rel=1e-6)

    def test_streaming_matches_materialized(self):
        for d in (2, 3):
            cfg = self._cfg(d=d, n_grid=2000)
            rep_stream = scatter_error_report(cfg)
            rep_mat = error_norms(cfg, pml_scattering_solve(cfg))
            assert rep_stream.rel_H1 == rep_mat.rel_H1
            assert rep_stream.abs_L2 == rep_mat.abs_L2

    def test_decimated_quadrature_consistent(self):
        cfg = self._cfg(n_grid=4000)
        full = scatter_error_report(cfg)
        thin = scatter_error_report(cfg, max_quad_intervals=64)
        assert thin.rel_H1 == pytest.approx(full.rel_H1, rel=5e-3)

    def test_predicted_bound_and_ratio(self):
        cfg = self._cfg(n_grid=2000)
        rep = scatter_error_report(cfg, eta=0.1)
        pred = predicted_exponent(cfg.k, cfg.profile, 2, cfg.R_tr, eta=0.1)
        assert rep.predicted_bound == pred.bound
        assert rep.ratio == pytest.approx(rep.rel_H1 / pred.bound, rel=1e-12)
        assert rep.ratio < 1.0

    def test_negligible_modes_warn(self):
        cfg = self._cfg(k=0.5, n_grid=200, n_modes=160)
        sol = pml_scattering_solve(cfg)
        with pytest.warns(RuntimeWarning, match="negligible"):
            rep = error_norms(cfg, sol)
        assert np.isfinite(rep.rel_H1)

    def test_zero_denominator_flagged(self):
        rep = _finish_report(1.0, 2.0, 0.0,
                             predicted_exponent(10.0, PmlProfile(CUBIC2, QUARTER),
                                                2, 2.8))
        assert rep.undefined_relative
        assert math.isnan(rep.rel_H1)

    def test_mode_grid_mismatch_rejected(self):
        cfg = self._cfg(n_grid=100)
        r1 = np.linspace(1.0, 2.8, 101)
        r2 = np.linspace(1.0, 2.8, 51)
        modes = [
            ModeSolution(0, GridSolution(r1, np.zeros(101, dtype=complex))),
            ModeSolution(1, GridSolution(r2, np.zeros(51, dtype=complex))),
        ]
        with pytest.raises(ValueError):
            error_norms(cfg, modes)


class TestGridSolutionContract:
    def test_pml_modes_boundary_values(self):
        prof = PmlProfile(CUBIC2, QUARTER)
        cfg = ScatteringConfig(2, 8.0, 1.0, prof, 2.0, 2.8, n_grid=300,
                               n_modes=6)
        for m in _iter_mode_solutions(cfg):
            bc = -incident_coefficient(2, m.nu, 8.0, 1.0)
            assert m.grid.values[0] == bc
            assert m.grid.values[-1] == 0.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            GridSolution(np.zeros(3), np.zeros(4, dtype=complex))
