"""Manifold seeding, marching, reconstruction and transmission checks."""
import cmath
import math

import numpy as np
import pytest

from bomca import (IntegratorConfig, ManifoldConfig, find_seed, march_manifold,
                   reconstruct_wavefunction, sample_axis_window,
                   transmission_probability)
from bomca.errors import (DeadRegion, InsufficientCoverage, ManifoldStall,
                          NodeOnGrid, NonMonotonicArrivals, SeedNotFound,
                          SupportNotContained)
from bomca.manifold import (ManifoldSample, ReconstructedWavefunction,
                            hj_residual, projected_action)
from bomca.model import GaussianWavepacket
from bomca.reference import analytic_free_gaussian
from conftest import ALPHA, CENTER, MASS


def free_gamma(t):
    # arrival map of the free packet is affine with this slope
    return 1.0 + 2j * ALPHA * t / MASS


class TestFindSeed:
    def test_free_packet_at_rest_seeds_on_its_center(self, packet, free_system):
        seed = find_seed(packet(0.0), free_system, 2, 1.0, CENTER)
        assert abs(seed.sample.x0 - CENTER) < 2e-5
        assert seed.sample.x_f.real == pytest.approx(CENTER, abs=1e-4)
        assert abs(seed.sample.x_f.imag) <= 1e-4
        assert seed.dxf_dx0 == pytest.approx(free_gamma(1.0), rel=1e-6)

    def test_free_moving_packet_matches_exact_map_inverse(self, packet, free_system):
        wp = packet(50.0)
        t_f, target = 0.8, 0.3
        seed = find_seed(wp, free_system, 1, t_f, target)
        drift = wp.momentum / MASS * t_f
        want = CENTER + (target - CENTER - drift) / free_gamma(t_f)
        assert abs(seed.sample.x0 - want) < 1e-5

    def test_harmonic_full_period_returns_to_launch(self, packet, harmonic_system):
        # omega = 2, so t = pi closes one oscillation and the map is the identity
        seed = find_seed(packet(0.0), harmonic_system, 2, math.pi, 0.4)
        assert abs(seed.sample.x0 - 0.4) < 1e-4
        assert seed.dxf_dx0 == pytest.approx(1.0, rel=1e-5)

    def test_barrier_seed_needs_complex_launch(self, packet, eckart_system):
        # deep tunneling: the arrival at x = 0.5 is fed from a genuinely
        # complex launch point near the packet center
        seed = find_seed(packet(0.0), eckart_system, 1, 1.0, 0.5)
        x0 = seed.sample.x0
        assert abs(x0.real - CENTER) < 0.2
        assert abs(x0.imag) > 0.01
        assert seed.sample.x_f.real == pytest.approx(0.5, abs=1e-4)

    def test_no_convergence_raises(self, packet, eckart_system):
        mf = ManifoldConfig(max_newton_iters=1)
        with pytest.raises(SeedNotFound):
            find_seed(packet(50.0), eckart_system, 2, 0.85, 1.0, manifold=mf)

    def test_all_probes_dying_raises_dead_region(self, packet, eckart_system):
        cfg = IntegratorConfig(blowup_threshold=1e-4)
        mf = ManifoldConfig(blowup_rescue=1.0)
        with pytest.raises(DeadRegion):
            find_seed(packet(50.0), eckart_system, 2, 0.5, 0.3,
                      integrator=cfg, manifold=mf)


class TestMarch:
    def test_free_march_advances_uniformly(self, packet, free_system):
        wp = packet(0.0)
        t_f, dx = 1.0, 0.02
        seed = find_seed(wp, free_system, 1, t_f, 0.0)
        samples, dead = march_manifold(seed, wp, free_system, 1, t_f, dx, +1, 20)
        assert dead == []
        assert len(samples) == 20
        xf = np.array([s.x_f.real for s in samples])
        assert np.allclose(np.diff(xf), dx, atol=1e-6)
        assert all(abs(s.x_f.imag) <= 1e-4 for s in samples)
        # launch points follow the exact inverse map
        want = seed.sample.x0 + 5 * dx / free_gamma(t_f)
        assert abs(samples[4].x0 - want) < 1e-5

    def test_zero_count_is_seed_only(self, packet, free_system):
        wp = packet(0.0)
        seed = find_seed(wp, free_system, 1, 0.5, 0.0)
        samples, dead = march_manifold(seed, wp, free_system, 1, 0.5, 0.02, +1, 0)
        assert samples == [] and dead == []

    def test_argument_validation(self, packet, free_system):
        wp = packet(0.0)
        seed = find_seed(wp, free_system, 1, 0.5, 0.0)
        with pytest.raises(ValueError):
            march_manifold(seed, wp, free_system, 1, 0.5, 0.02, 0, 5)
        with pytest.raises(ValueError):
            march_manifold(seed, wp, free_system, 1, 0.5, -0.1, 1, 5)

    def test_stop_when_halts_the_march(self, packet, free_system):
        wp = packet(0.0)
        seed = find_seed(wp, free_system, 1, 0.5, 0.0)
        samples, _ = march_manifold(seed, wp, free_system, 1, 0.5, 0.02, +1, 30,
                                    stop_when=lambda s: s.x_f.real >= 0.1)
        assert 4 <= len(samples) < 30
        assert samples[-1].x_f.real >= 0.1

    def test_stall_carries_partial_results(self, packet, free_system):
        # an absurd stall threshold turns the very first advance into a
        # stall; the exception must still carry what was collected
        wp = packet(0.0)
        seed = find_seed(wp, free_system, 1, 0.5, 0.0)
        mf = ManifoldConfig(stall_fraction=10.0)
        with pytest.raises(ManifoldStall) as err:
            march_manifold(seed, wp, free_system, 1, 0.5, 0.02, +1, 10, manifold=mf)
        assert err.value.samples == ()
        assert err.value.dead == ()

    def test_dead_trajectories_accumulate_without_aborting(self, packet, eckart_system):
        wp = packet(50.0)
        seed = find_seed(wp, eckart_system, 2, 0.5, 0.3)
        bad = IntegratorConfig(blowup_threshold=1e-3)
        mf = ManifoldConfig(blowup_rescue=1.0)
        samples, dead = march_manifold(seed, wp, eckart_system, 2, 0.5, 0.02, +1, 30,
                                       integrator=bad, manifold=mf)
        assert samples == []
        assert len(dead) == mf.max_dead_run + 1
        assert all(s.status == "blowup" for s in dead)

    def test_stalled_window_sampling_degrades_to_seed_only(self, packet, free_system):
        wp = packet(0.0)
        mf = ManifoldConfig(stall_fraction=10.0)
        sweep = sample_axis_window(wp, free_system, 1, 0.5, -0.3, 0.3, 11, manifold=mf)
        assert len(sweep.samples) == 1
        assert sweep.samples[0] == sweep.seed.sample


def synthetic_samples(xs, s_of_x):
    return [ManifoldSample(x0=complex(x), t_f=1.0, x_f=complex(x), v_f=0j,
                           S_f=s_of_x(x), status="ok") for x in xs]


class TestReconstruct:
    def quadratic(self, x):
        return (0.3 + 0.1j) * x * x + 0.2 * x - 0.05j

    def test_spline_reproduces_polynomial_action(self, free_system):
        xs = np.linspace(-1.0, 1.0, 9)
        rec = reconstruct_wavefunction(synthetic_samples(xs, self.quadratic),
                                       np.linspace(-0.9, 0.9, 101), free_system)
        want = self.quadratic(rec.x)
        assert np.max(np.abs(rec.action - want)) < 1e-10
        assert np.allclose(rec.psi, np.exp(1j * want), atol=1e-10)
        assert rec.n_samples == 9
        assert rec.max_landing_offset == 0.0

    def test_projected_action_transports_to_the_axis(self, free_system):
        # landing slightly off axis: S is carried by p = m v
        s = ManifoldSample(x0=0j, t_f=1.0, x_f=0.5 + 1e-5j, v_f=1.2 - 0.3j,
                           S_f=0.7 + 0.2j, status="ok")
        want = s.S_f + MASS * s.v_f * (0.5 - s.x_f)
        assert projected_action(s, MASS) == want

    def test_duplicate_arrivals_with_matching_action_merge(self, free_system):
        xs = [-1.0, -0.5, 0.0, 0.5, 1.0]
        samples = synthetic_samples(xs + [0.5], self.quadratic)
        rec = reconstruct_wavefunction(samples, np.linspace(-0.8, 0.8, 33), free_system)
        assert rec.n_samples == 5

    def test_conflicting_duplicate_arrivals_raise(self, free_system):
        xs = [-1.0, -0.5, 0.0, 0.5, 1.0]
        samples = synthetic_samples(xs, self.quadratic)
        clash = ManifoldSample(x0=2.0 + 0j, t_f=1.0, x_f=0.5 + 0j, v_f=0j,
                               S_f=self.quadratic(0.5) + 0.3, status="ok")
        with pytest.raises(NonMonotonicArrivals):
            reconstruct_wavefunction(samples + [clash],
                                     np.linspace(-0.8, 0.8, 33), free_system)

    def test_wide_gap_raises(self, free_system):
        xs = [0.0, 0.1, 0.2, 0.3, 0.4, 3.0]
        with pytest.raises(InsufficientCoverage):
            reconstruct_wavefunction(synthetic_samples(xs, self.quadratic),
                                     np.linspace(0.0, 3.0, 61), free_system)

    def test_grid_outside_span_raises(self, free_system):
        xs = np.linspace(0.0, 0.4, 6)
        with pytest.raises(InsufficientCoverage):
            reconstruct_wavefunction(synthetic_samples(xs, self.quadratic),
                                     np.linspace(-0.5, 0.4, 10), free_system)

    def test_too_few_survivors_raise(self, free_system):
        xs = [0.0, 0.2, 0.4]
        with pytest.raises(InsufficientCoverage):
            reconstruct_wavefunction(synthetic_samples(xs, self.quadratic),
                                     np.linspace(0.0, 0.4, 5), free_system)


class TestFromPsi:
    def test_round_trip_and_continuous_phase(self, packet, free_system):
        wp = packet(50.0)
        x = np.linspace(-0.5, 2.0, 801)
        psi = analytic_free_gaussian(wp, free_system, x, 0.8)
        rec = ReconstructedWavefunction.from_psi(x, psi, 0.8)
        assert np.allclose(rec.psi, psi, rtol=0, atol=1e-14)
        assert np.allclose(np.exp(1j * rec.action), psi, rtol=0, atol=1e-12)
        # unwrapped: no 2 pi jumps between neighbouring points
        assert np.max(np.abs(np.diff(rec.action.real))) < 1.0
        assert np.allclose(rec.density(), np.abs(psi) ** 2)

    def test_node_on_grid_raises(self):
        x = np.linspace(-1.0, 1.0, 21)
        with pytest.raises(NodeOnGrid):
            ReconstructedWavefunction.from_psi(x, x.astype(complex), 0.0)


def gaussian_rec(alpha, center, x):
    wp = GaussianWavepacket(alpha=alpha, center=center, momentum=0.0)
    return ReconstructedWavefunction.from_psi(x, wp.psi0(x), 0.0)


class TestTransmissionProbability:
    def test_symmetric_density_splits_evenly(self):
        rec = gaussian_rec(10.0, 0.0, np.linspace(-3.0, 3.0, 2401))
        assert transmission_probability(rec) == pytest.approx(0.5, abs=1e-7)

    def test_left_supported_packet_transmits_nothing(self):
        rec = gaussian_rec(ALPHA, CENTER, np.linspace(-2.0, 1.5, 1401))
        assert transmission_probability(rec) < 1e-12

    def test_support_cut_at_the_right_edge_raises(self):
        rec = gaussian_rec(ALPHA, 0.5, np.linspace(-1.0, 0.5, 601))
        with pytest.raises(SupportNotContained):
            transmission_probability(rec)

    def test_unsampled_left_strip_raises(self):
        rec = gaussian_rec(ALPHA, 0.5, np.linspace(0.4, 1.5, 551))
        with pytest.raises(SupportNotContained):
            transmission_probability(rec)

    def test_negligible_left_strip_passes(self):
        rec = gaussian_rec(10.0, 1.0, np.linspace(0.2, 2.0, 721))
        t = transmission_probability(rec)
        assert 0.999 < t <= 1.0

    def test_rounding_clamp_and_hard_bound(self):
        x = np.linspace(0.2, 2.0, 721)
        rec = gaussian_rec(10.0, 1.0, x)
        t1 = transmission_probability(rec)
        bump = math.sqrt((1.0 + 5e-10) / t1)
        rec2 = ReconstructedWavefunction.from_psi(x, rec.psi * bump, 0.0)
        assert transmission_probability(rec2) == 1.0
        rec3 = ReconstructedWavefunction.from_psi(x, rec.psi * math.sqrt((1.0 + 1e-6) / t1), 0.0)
        with pytest.raises(ValueError):
            transmission_probability(rec3)

    def test_returns_zero_without_positive_support(self):
        rec = gaussian_rec(10.0, -0.9, np.linspace(-1.5, -0.5, 101))
        assert transmission_probability(rec) == 0.0


class TestHJResidual:
    def build(self, wp, system, x, t):
        return ReconstructedWavefunction.from_psi(x, analytic_free_gaussian(wp, system, x, t), t)

    def test_free_residual_is_small(self, packet, free_system):
        # dominated by the O(dt^2) truncation of S_t; halving dt quarters it
        wp = packet(50.0)
        x = np.linspace(0.0, 1.5, 241)
        dt = 5e-4
        recs = [self.build(wp, free_system, x, t) for t in (0.8 - dt, 0.8, 0.8 + dt)]
        xi, res = hj_residual(*recs, free_system)
        assert len(xi) == 239
        assert res.max() < 1e-4

    def test_corrupted_state_spikes_the_residual(self, packet, free_system):
        wp = packet(50.0)
        x = np.linspace(0.0, 1.5, 241)
        dt = 1e-3
        minus = self.build(wp, free_system, x, 0.8 - dt)
        plus = self.build(wp, free_system, x, 0.8 + dt)
        clean = self.build(wp, free_system, x, 0.8)
        _, res_clean = hj_residual(minus, clean, plus, free_system)
        psi_bad = clean.psi.copy()
        psi_bad[120] *= cmath.exp(1e-3j)
        bad = ReconstructedWavefunction.from_psi(x, psi_bad, 0.8)
        _, res_bad = hj_residual(minus, bad, plus, free_system)
        assert res_bad.max() > 100.0 * res_clean.max()

    def test_grid_and_time_validation(self, packet, free_system):
        wp = packet(50.0)
        x = np.linspace(0.0, 1.5, 241)
        dt = 1e-3
        minus = self.build(wp, free_system, x, 0.8 - dt)
        center = self.build(wp, free_system, x, 0.8)
        plus = self.build(wp, free_system, x, 0.8 + dt)
        other = self.build(wp, free_system, np.linspace(0.0, 1.5, 121), 0.8 - dt)
        with pytest.raises(ValueError):
            hj_residual(other, center, plus, free_system)
        lop = self.build(wp, free_system, x, 0.8 + 2 * dt)
        with pytest.raises(ValueError):
            hj_residual(minus, center, lop, free_system)
        xg = np.geomspace(0.1, 1.6, 241)
        warp = [self.build(wp, free_system, xg, t) for t in (0.8 - dt, 0.8, 0.8 + dt)]
        with pytest.raises(ValueError):
            hj_residual(*warp, free_system)


class TestPipelineInvariants:
    def test_free_transmission_matches_analytic_tail_mass(self, packet, free_system):
        # spreading packet at rest: the mass on x > 0 is a closed form
        wp = packet(0.0)
        t_f = 1.0
        sweep = sample_axis_window(wp, free_system, 2, t_f, -0.2, 1.3, 45)
        grid = np.linspace(-0.2, 1.3, 1501)  # keeps a node exactly at x = 0
        rec = reconstruct_wavefunction(sweep.samples, grid, free_system)
        t_rec = transmission_probability(rec)
        sigma_t = abs(free_gamma(t_f)) * wp.sigma_x()
        want = 0.5 * math.erfc(-CENTER / (math.sqrt(2.0) * sigma_t))
        assert abs(t_rec - want) <= 1e-8

    def test_free_reconstruction_matches_closed_form(self, packet, free_system):
        wp = packet(0.0)
        sweep = sample_axis_window(wp, free_system, 2, 1.0, -0.2, 1.3, 45)
        grid = np.linspace(-0.1, 1.2, 301)
        rec = reconstruct_wavefunction(sweep.samples, grid, free_system)
        want = analytic_free_gaussian(wp, free_system, grid, 1.0)
        assert np.max(np.abs(rec.psi - want)) < 1e-7

    def test_flow_map_slope_varies_slowly_along_the_march(self, packet, eckart_system):
        # at dx = 0.01 consecutive secant slopes may change by at most 20%
        wp = packet(50.0)
        seed = find_seed(wp, eckart_system, 2, 0.85, 1.0)
        samples, dead = march_manifold(seed, wp, eckart_system, 2, 0.85, 0.01, +1, 15)
        assert dead == []
        pts = [seed.sample] + samples
        slopes = [(b.x0 - a.x0) / (b.x_f - a.x_f) for a, b in zip(pts, pts[1:])]
        for s1, s2 in zip(slopes, slopes[1:]):
            assert abs(s2 / s1 - 1.0) < 0.2

    def test_projection_insensitive_to_landing_tolerance(self, packet, eckart_system):
        # tightening the landing tolerance tenfold must not move psi:
        # the first-order transport to the axis is already converged
        wp = packet(50.0)
        grid = np.linspace(0.95, 1.45, 201)
        psis = []
        for tol in (1e-4, 1e-5):
            mf = ManifoldConfig(landing_tolerance=tol)
            sweep = sample_axis_window(wp, eckart_system, 2, 0.85, 0.9, 1.5, 25,
                                       manifold=mf)
            rec = reconstruct_wavefunction(sweep.samples, grid, eckart_system,
                                           manifold=mf)
            assert rec.max_landing_offset <= tol
            psis.append(rec.psi)
        scale = np.max(np.abs(psis[0]))
        assert np.max(np.abs(psis[0] - psis[1])) < 2e-6 * scale
