"""Shared scenario fixtures.

The benchmark throughout is a sech^2 barrier of height 40 and inverse
width 4.32 hit by a narrow Gaussian (alpha = 30 pi) launched from
x = -0.7 with mass 30, hbar = 1. Everything here is in those units.
"""
import math

import numpy as np
import pytest

from bomca import (EckartPotential, FreePotential, GaussianWavepacket,
                   HarmonicPotential, SystemSpec)

ALPHA = 30.0 * math.pi
MASS = 30.0
CENTER = -0.7
DEPTH = 40.0
WIDTH = 4.32


@pytest.fixture(scope="session")
def eckart_system():
    return SystemSpec(mass=MASS, potential=EckartPotential(depth=DEPTH, width=WIDTH))


@pytest.fixture(scope="session")
def free_system():
    return SystemSpec(mass=MASS, potential=FreePotential())


@pytest.fixture(scope="session")
def harmonic_system():
    # omega = 2 with mass 30
    return SystemSpec(mass=MASS, potential=HarmonicPotential(spring=120.0))


@pytest.fixture(scope="session")
def packet():
    """Factory: benchmark wavepacket at a given translational energy."""

    def make(energy=0.0):
        return GaussianWavepacket.from_energy(ALPHA, CENTER, energy, MASS)

    return make


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
