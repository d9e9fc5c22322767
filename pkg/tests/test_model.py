"""Scenario layer: potentials, derivative jets, initial data."""
import math

import numpy as np
import pytest
from scipy.integrate import simpson

from bomca import (EckartPotential, FreePotential, GaussianWavepacket,
                   HarmonicPotential, SystemSpec, potential_jet)
from bomca.errors import PoleProximity
from bomca.model import (DerivativeJet, action_to_psi, initial_action,
                         initial_velocity_jet)
from conftest import ALPHA, CENTER, DEPTH, MASS, WIDTH

# Reference derivatives of D/cosh^2(beta x), D=40, beta=4.32, computed
# independently with mpmath at 40 digits and frozen here.
JET_AT_HALF = (2.07248709690440247153,
               -17.4362370432041018159,
               142.686513971706990554)
JET_AT_03 = (10.368517879535489663,
             -77.1040365983326452779,
             473.057259793412211902,
             -1279.86313281256555867,
             -25432.2135118041013035)
JET_COMPLEX_POINT = 0.25 - 0.15j
JET_AT_COMPLEX = (8.05983745115652253072 + 15.1386679723644636129j,
                  -90.8529687874104820149 - 105.586672850568615563j,
                  1061.36974915698061909 + 446.966550857759625083j,
                  -11631.6450309476997403 + 4583.01166298477777168j)


@pytest.fixture(scope="module")
def eckart():
    return EckartPotential(depth=DEPTH, width=WIDTH)


class TestPotentialJet:
    def test_frozen_values_real_point(self, eckart):
        jet = potential_jet(eckart, 0.5, 2)
        for got, want in zip(jet.values, JET_AT_HALF):
            assert got == pytest.approx(want, rel=1e-13)

    def test_frozen_values_higher_order(self, eckart):
        jet = potential_jet(eckart, 0.3, 4)
        assert jet.order == 4
        for got, want in zip(jet.values, JET_AT_03):
            assert got == pytest.approx(want, rel=1e-13)

    def test_frozen_values_complex_point(self, eckart):
        jet = potential_jet(eckart, JET_COMPLEX_POINT, 3)
        for got, want in zip(jet.values, JET_AT_COMPLEX):
            assert abs(got - want) <= 1e-12 * abs(want)

    def test_barrier_top(self, eckart):
        jet = potential_jet(eckart, 0.0, 1)
        assert jet.values[0] == pytest.approx(DEPTH, rel=1e-15)
        assert abs(jet.values[1]) < 1e-10

    def test_even_symmetry_kills_odd_derivatives_at_origin(self, eckart):
        jet = potential_jet(eckart, 0.0, 6)
        scale = max(abs(v) for v in jet.values)
        for n in (1, 3, 5):
            assert abs(jet.values[n]) <= 1e-9 * scale

    def test_free_potential_is_identically_zero(self):
        jet = potential_jet(FreePotential(), 1.0 + 2.0j, 4)
        assert jet.values == (0, 0, 0, 0, 0)

    def test_harmonic_closed_form(self):
        pot = HarmonicPotential(spring=120.0)
        jet = potential_jet(pot, 0.4 - 0.2j, 4)
        x = 0.4 - 0.2j
        assert jet.values[0] == pytest.approx(0.5 * 120.0 * x * x, rel=1e-15)
        assert jet.values[1] == pytest.approx(120.0 * x, rel=1e-15)
        assert jet.values[2] == pytest.approx(120.0, rel=1e-15)
        assert jet.values[3] == 0 and jet.values[4] == 0

    def test_jet_matches_central_difference(self, eckart, rng):
        # first-derivative entry vs symmetric difference of values
        h = 1e-6
        for _ in range(100):
            x = complex(rng.uniform(-1.5, 1.5), rng.uniform(-0.25, 0.25))
            jet = potential_jet(eckart, x, 1)
            vp = potential_jet(eckart, x + h, 0).values[0]
            vm = potential_jet(eckart, x - h, 0).values[0]
            fd = (vp - vm) / (2.0 * h)
            assert abs(fd - jet.values[1]) <= 1e-6 * max(1.0, abs(jet.values[1]))

    def test_pole_raises(self, eckart):
        pole = 1j * math.pi / (2.0 * WIDTH)
        with pytest.raises(PoleProximity):
            potential_jet(eckart, pole, 2)

    def test_jet_container(self, eckart):
        jet = potential_jet(eckart, 0.1, 3)
        assert isinstance(jet, DerivativeJet)
        assert jet.base_point == 0.1
        assert len(jet.values) == jet.order + 1
        assert jet[2] == jet.values[2]


class TestEckartShape:
    def test_even_and_decaying(self, eckart):
        xs = np.array([0.25, 0.6, 1.3])
        v = eckart.values(xs)
        assert np.allclose(v, eckart.values(-xs), rtol=1e-15)
        assert eckart.values(np.array([8.0]))[0] < 1e-25
        assert np.all(np.diff(v) < 0)

    def test_pole_distance(self, eckart):
        first = math.pi / (2.0 * WIDTH)
        assert eckart.pole_distance(0.0) == pytest.approx(first)
        assert eckart.pole_distance(1j * first) < 1e-12
        # nearest pole below the axis for a trajectory dipping negative
        assert eckart.pole_distance(0.5 - 0.1j) == pytest.approx(
            abs(0.5 - 0.1j + 1j * first))

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            EckartPotential(depth=-1.0, width=WIDTH)
        with pytest.raises(ValueError):
            EckartPotential(depth=DEPTH, width=0.0)


class TestGaussianWavepacket:
    def test_normalized_on_real_grid(self, packet):
        wp = packet(0.0)
        x = np.linspace(-2.0, 1.0, 20001)
        dens = np.abs(wp.psi0(x)) ** 2
        assert simpson(dens, x=x) == pytest.approx(1.0, abs=1e-10)

    def test_norm_prefactor(self, packet):
        wp = packet(0.0)
        assert wp.norm_prefactor == pytest.approx((2 * ALPHA / math.pi) ** 0.25)

    def test_energy_momentum_round_trip(self, packet):
        wp = packet(50.0)
        assert wp.energy(MASS) == pytest.approx(50.0, rel=1e-14)
        assert wp.momentum == pytest.approx(math.sqrt(2 * MASS * 50.0))
        with pytest.raises(ValueError):
            GaussianWavepacket.from_energy(ALPHA, CENTER, -1.0, MASS)
        with pytest.raises(ValueError):
            GaussianWavepacket(alpha=0.0, center=CENTER, momentum=0.0)

    def test_sigma_x(self, packet):
        assert packet(0.0).sigma_x() == pytest.approx(1.0 / (2 * math.sqrt(ALPHA)))

    def test_momentum_weight_normalized(self, packet):
        wp = packet(25.0)
        k = np.linspace(wp.momentum - 80, wp.momentum + 80, 40001)
        w = wp.momentum_weight(k)
        assert simpson(w, x=k) == pytest.approx(1.0, rel=1e-10)
        assert k[np.argmax(w)] == pytest.approx(wp.momentum, abs=1e-2)


class TestInitialData:
    def test_velocity_jet_closed_form(self, packet, eckart_system):
        wp = packet(50.0)
        jet = initial_velocity_jet(wp, eckart_system, CENTER, 4)
        assert jet.values[0] == pytest.approx(wp.momentum / MASS, rel=1e-15)
        assert jet.values[1] == pytest.approx(2j * ALPHA / MASS, rel=1e-15)
        assert all(v == 0 for v in jet.values[2:])

    def test_velocity_jet_displaced_point(self, packet, eckart_system):
        # alpha = 30 pi makes the displaced value come out in closed form
        wp = packet(0.0)
        jet = initial_velocity_jet(wp, eckart_system, CENTER + 0.1, 1)
        assert jet.values[0] == pytest.approx(6j * math.pi / 30.0, rel=1e-14)
        assert jet.values[1] == pytest.approx(2j * math.pi, rel=1e-14)

    def test_velocity_jet_matches_finite_differences(self, packet, eckart_system, rng):
        wp = packet(25.0)
        h = 1e-4
        for _ in range(20):
            x0 = complex(rng.uniform(-1.2, -0.2), rng.uniform(-0.3, 0.3))
            v = lambda z: initial_velocity_jet(wp, eckart_system, z, 1).values[0]
            jet = initial_velocity_jet(wp, eckart_system, x0, 2)
            d1 = (v(x0 + h) - v(x0 - h)) / (2 * h)
            d2 = (v(x0 + h) - 2 * v(x0) + v(x0 - h)) / (h * h)
            assert abs(d1 - jet.values[1]) <= 1e-6 * abs(jet.values[1])
            assert abs(d2 - jet.values[2]) <= 1e-6

    def test_action_at_center_purely_imaginary(self, packet, eckart_system):
        wp = packet(0.0)
        s = initial_action(wp, eckart_system, CENTER)
        assert s.real == 0.0
        assert s == pytest.approx(-1j * math.log((2 * ALPHA / math.pi) ** 0.25))

    def test_action_displaced_closed_form(self, packet, eckart_system):
        wp = packet(0.0)
        s = initial_action(wp, eckart_system, CENTER + 1.0)
        base = -1j * math.log((2 * ALPHA / math.pi) ** 0.25)
        assert s == pytest.approx(base + 1j * ALPHA, rel=1e-14)

    def test_action_round_trip(self, packet, eckart_system, rng):
        # exp(iS/hbar) must reproduce the initial state everywhere
        wp = packet(50.0)
        for _ in range(100):
            x0 = complex(rng.uniform(CENTER - 2, CENTER + 2), rng.uniform(-2, 2))
            psi = action_to_psi(initial_action(wp, eckart_system, x0), 1.0)
            want = wp.psi0(x0)
            assert abs(psi - want) <= 1e-12 * abs(want)


class TestSystemSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            SystemSpec(mass=0.0, potential=FreePotential())
        with pytest.raises(ValueError):
            SystemSpec(mass=MASS, potential=FreePotential(), hbar=-1.0)

    def test_harmonic_omega(self):
        sys = SystemSpec(mass=MASS, potential=HarmonicPotential(spring=120.0))
        assert sys.potential.omega(MASS) == pytest.approx(2.0)
