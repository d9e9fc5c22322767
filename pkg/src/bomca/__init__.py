"""Complex-trajectory quantum dynamics in one dimension.

Propagates analytic continuations of Bohmian trajectories carrying a
complex action whose spatial derivatives close under a truncated hierarchy,
reconstructs the wavefunction on the real axis from the trajectories that
land there, and validates everything against an independent split-operator
grid oracle. The flagship application is deep tunneling through a sech^2
barrier, where a handful of trajectories reproduces transmission
probabilities down to 1e-7.
"""
__version__ = "0.1.0"

from .errors import BomcaError
from .hierarchy import (IntegratorConfig, TrajectoryState, initial_state,
                        propagate_classical_n1, propagate_trajectory)
from .manifold import (ManifoldConfig, ReconstructedWavefunction, find_seed,
                       hj_residual, march_manifold, reconstruct_wavefunction,
                       sample_axis_window, sample_transmitted_lobe,
                       transmission_point, transmission_probability)
from .model import (EckartPotential, FreePotential, GaussianWavepacket,
                    HarmonicPotential, SystemSpec, potential_jet)
from .reference import (GridSpec, analytic_free_gaussian, analytic_harmonic_gaussian,
                        exact_wavefunction, gaussian_average_transmission,
                        plane_wave_transmission, split_operator_propagate,
                        transmission_exact)

__all__ = [
    "BomcaError", "EckartPotential", "FreePotential", "GaussianWavepacket",
    "GridSpec", "HarmonicPotential", "IntegratorConfig", "ManifoldConfig",
    "ReconstructedWavefunction", "SystemSpec", "TrajectoryState",
    "analytic_free_gaussian", "analytic_harmonic_gaussian", "exact_wavefunction",
    "find_seed", "gaussian_average_transmission", "hj_residual", "initial_state",
    "march_manifold", "plane_wave_transmission", "potential_jet",
    "propagate_classical_n1", "propagate_trajectory", "reconstruct_wavefunction",
    "sample_axis_window", "sample_transmitted_lobe", "split_operator_propagate",
    "transmission_exact", "transmission_point", "transmission_probability",
]
