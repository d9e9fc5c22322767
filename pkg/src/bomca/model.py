"""Physical model: potentials, Gaussian wavepacket, initial data on complex launch points.

Atomic-style units throughout (hbar defaults to 1). The wavefunction is
represented through its complex action S, psi = exp(i S / hbar), so initial
data for a Gaussian is quadratic in the launch point and exact:

    S(x, 0) = -i hbar ln[(2 alpha / pi)^(1/4)]
              + i hbar alpha (x - x_c)^2 + p_c (x - x_c)

    v0(x, 0) = S_x / m = (p_c + 2 i hbar alpha (x - x_c)) / m
    v1(x, 0) = 2 i hbar alpha / m,     v_n(x, 0) = 0 for n >= 2

All of these continue analytically to complex launch points x.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import PoleProximity


class PotentialModel:
    """Base class for analytic 1D potentials.

    Subclasses fix ``kind_id`` (the kernel dispatch flag) and provide their
    parameters through ``kernel_params``. ``values`` evaluates V on a real
    grid for the grid-based oracle; derivative jets at complex points go
    through :func:`potential_jet`.
    """

    kind_id = kernels.POT_FREE

    def kernel_params(self):
        """(kind_id, a, b) consumed by the kernels."""
        return (self.kind_id, 0.0, 0.0)

    def values(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class FreePotential(PotentialModel):
    """V = 0; every trajectory quantity has a closed form, used for validation."""

    kind_id = kernels.POT_FREE

    def values(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class HarmonicPotential(PotentialModel):
    """V = spring x^2 / 2. The Gaussian stays Gaussian, second validation rung."""

    spring: float

    kind_id = kernels.POT_HARMONIC

    def __post_init__(self):
        if self.spring <= 0:
            raise ValueError("spring constant must be positive")

    def kernel_params(self):
        return (self.kind_id, float(self.spring), 0.0)

    def values(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.spring * x * x

    def omega(self, mass):
        return math.sqrt(self.spring / mass)


@dataclass(frozen=True)
class EckartPotential(PotentialModel):
    """Symmetric barrier V = depth / cosh^2(width x).

    Its analytic continuation has second-order poles at
    x = i pi (2n + 1) / (2 width); complex trajectories must keep away from
    them, which the jet kernel enforces through a pole guard.
    """

    depth: float
    width: float

    kind_id = kernels.POT_ECKART

    def __post_init__(self):
        if self.depth <= 0 or self.width <= 0:
            raise ValueError("Eckart depth and width must be positive")

    def kernel_params(self):
        return (self.kind_id, float(self.depth), float(self.width))

    def values(self, x):
        x = np.asarray(x, dtype=float)
        return self.depth / np.cosh(self.width * x) ** 2

    def pole_distance(self, x):
        """Distance from complex x to the nearest potential pole."""
        x = complex(x)
        spacing = math.pi / self.width
        pole_im = spacing / 2.0
        n = round((x.imag - pole_im) / spacing)
        nearest = 1j * (pole_im + n * spacing)
        return abs(x - nearest)


@dataclass(frozen=True)
class SystemSpec:
    """Mass, hbar and the potential; immutable so runs are reproducible."""

    mass: float
    potential: PotentialModel
    hbar: float = 1.0

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")


@dataclass(frozen=True)
class GaussianWavepacket:
    """psi(x, 0) = (2 alpha / pi)^(1/4) exp(-alpha (x - center)^2 + i momentum (x - center) / hbar)."""

    alpha: float
    center: float
    momentum: float
    hbar: float = 1.0
    norm_prefactor: float = field(default=0.0)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.norm_prefactor == 0.0:
            object.__setattr__(self, "norm_prefactor", (2.0 * self.alpha / math.pi) ** 0.25)

    @classmethod
    def from_energy(cls, alpha, center, energy, mass, hbar=1.0):
        """Rightward-moving packet with mean kinetic energy p_c^2 / 2m = energy."""
        if energy < 0:
            raise ValueError("energy must be nonnegative")
        return cls(alpha=alpha, center=center, momentum=math.sqrt(2.0 * mass * energy), hbar=hbar)

    def energy(self, mass):
        return self.momentum ** 2 / (2.0 * mass)

    def sigma_x(self):
        """Position-space standard deviation of |psi|^2 at t = 0."""
        return 1.0 / (2.0 * math.sqrt(self.alpha))

    def psi0(self, x):
        """Initial wavefunction, valid for real arrays and complex scalars."""
        u = np.asarray(x) - self.center
        return self.norm_prefactor * np.exp(-self.alpha * u * u + 1j * self.momentum * u / self.hbar)

    def momentum_weight(self, k):
        """|phi(k)|^2, the normalized momentum distribution (Gaussian, variance alpha)."""
        k = np.asarray(k, dtype=float)
        return np.exp(-((k - self.momentum) ** 2) / (2.0 * self.alpha)) / math.sqrt(2.0 * math.pi * self.alpha)


@dataclass(frozen=True)
class DerivativeJet:
    """Derivative stack f(x0), f'(x0), ..., f^(order)(x0) at a complex base point."""

    base_point: complex
    values: tuple

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("a jet carries at least the value itself")

    @property
    def order(self):
        return len(self.values) - 1

    def __getitem__(self, n):
        return self.values[n]


def potential_jet(potential, x, order):
    """Jet of the analytically continued potential at complex x.

    Raises PoleProximity when x sits within the kernel's pole guard of a
    pole of the continued potential.
    """
    if order < 0:
        raise ValueError("jet order must be >= 0")
    kind, a, b = potential.kernel_params()
    status, vals = kernels.backend.potential_jet(kind, a, b, complex(x), int(order))
    if status == kernels.POLE:
        raise PoleProximity(f"potential jet requested within pole guard at x = {complex(x)}")
    return DerivativeJet(base_point=complex(x), values=tuple(vals))


def initial_velocity_jet(wavepacket, system, x0, order):
    """Velocity-field derivatives of the initial Gaussian at launch point x0."""
    if order < 1:
        raise ValueError("the hierarchy carries at least v0 and v1")
    x0 = complex(x0)
    vals = [0j] * (order + 1)
    vals[0] = (wavepacket.momentum + 2j * system.hbar * wavepacket.alpha * (x0 - wavepacket.center)) / system.mass
    vals[1] = 2j * system.hbar * wavepacket.alpha / system.mass
    return DerivativeJet(base_point=x0, values=tuple(vals))


def initial_action(wavepacket, system, x0):
    """Complex action of the initial Gaussian at launch point x0 (exponent form, no branch cuts)."""
    x0 = complex(x0)
    u = x0 - wavepacket.center
    hbar = system.hbar
    return (-1j * hbar * math.log(wavepacket.norm_prefactor)
            + 1j * hbar * wavepacket.alpha * u * u
            + wavepacket.momentum * u)


def action_to_psi(action, hbar=1.0):
    """psi = exp(i S / hbar) for scalar or array complex action."""
    return np.exp(1j * np.asarray(action) / hbar)
