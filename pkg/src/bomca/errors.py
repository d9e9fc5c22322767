"""Typed failure modes shared across the package.

Numerical kernels report failures through integer status codes; the wrapper
layer translates those into the exceptions below so callers can distinguish
"trajectory hit the potential's pole" from "step controller gave up" without
string matching.
"""


class BomcaError(Exception):
    """Base class for all package-specific failures."""


class PoleProximity(BomcaError):
    """A complex trajectory approached a pole of the analytically continued potential."""


class Blowup(BomcaError):
    """A velocity-hierarchy component exceeded the blowup threshold (runaway trajectory)."""


class StepLimitExceeded(BomcaError):
    """The adaptive integrator used up its step budget before reaching the final time."""


class StepUnderflow(BomcaError):
    """The adaptive integrator's step size collapsed below machine resolution."""


class SeedNotFound(BomcaError):
    """Newton iteration on the launch map failed to land a trajectory at the target point."""


class DeadRegion(BomcaError):
    """Every probe trajectory in the search region failed (pole/blowup), nothing to seed from."""


class ManifoldStall(BomcaError):
    """Arrival points stopped advancing while marching the launch manifold.

    Carries the samples accepted before the stall so callers that only
    need partial coverage can recover them.
    """

    samples = ()
    dead = ()


class InsufficientCoverage(BomcaError):
    """Surviving trajectory arrivals do not cover the requested reconstruction grid."""


class NonMonotonicArrivals(BomcaError):
    """Arrival points cannot be strictly ordered along the real axis (fold/caustic)."""


class SupportNotContained(BomcaError):
    """|psi|^2 is not negligible at the integration boundary; the probability integral is unsafe."""


class NodeOnGrid(BomcaError):
    """|psi| vanishes on a grid point; the reconstructed action is undefined there."""


class NyquistViolation(BomcaError):
    """The wavepacket's momentum content does not fit in the grid's spectral band."""


class GridTooSmall(BomcaError):
    """Probability reached the edge of the spatial grid during split-operator propagation."""


class NotAsymptotic(BomcaError):
    """Probability flux through the dividing surface has not decayed at the final time."""


class ConfigError(BomcaError):
    """Scenario configuration is malformed (unknown key, missing field, bad value)."""
