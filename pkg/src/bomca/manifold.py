"""Launch manifolds: which complex initial points land on the real axis at t_f.

The wavefunction at a real point x' and time t_f is carried by the
trajectory that arrives there: psi(x', t_f) = exp(i S / hbar) evaluated at
the complex launch point x0 whose trajectory satisfies x(t_f) = x'. This
module finds such launch points (complex Newton on the flow map), marches
the one-parameter family of them along the real arrival axis, projects the
action onto the axis, and assembles psi and transmission probabilities from
the surviving trajectories.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (Blowup, DeadRegion, InsufficientCoverage, ManifoldStall,
                     NodeOnGrid, NonMonotonicArrivals, PoleProximity,
                     SeedNotFound, StepLimitExceeded, StepUnderflow,
                     SupportNotContained)
from .hierarchy import IntegratorConfig, propagate_trajectory
from .reference import positive_probability, transmission_exact, transmitted_group_momentum


@dataclass(frozen=True)
class ManifoldConfig:
    """Knobs for seeding, marching and reconstruction.

    landing_tolerance is the allowed |Im x(t_f)| of an accepted arrival;
    fd_step scales the finite-difference probe of the flow map; the gap
    factor declares the manifold torn when the widest spacing between
    surviving arrivals exceeds that multiple of the mean spacing.
    """

    landing_tolerance: float = 1e-4
    fd_step: float = 1e-6
    max_newton_iters: int = 40
    newton_step_cap: float = 0.5
    recenter_passes: int = 2
    stall_fraction: float = 1e-3
    max_dead_run: int = 10
    max_gap_factor: float = 4.0
    support_cutoff: float = 1e-2
    strip_tolerance: float = 0.02
    blowup_rescue: float = 1e4
    node_cutoff: float = 1e-200

    def __post_init__(self):
        if self.landing_tolerance <= 0 or self.fd_step <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_gap_factor <= 1:
            raise ValueError("max_gap_factor must exceed 1")


@dataclass(frozen=True)
class ManifoldSample:
    """One propagated launch point: where it started, where and how it arrived."""

    x0: complex
    t_f: float
    x_f: complex
    v_f: complex
    S_f: complex
    status: str  # 'ok' | 'blowup' | 'pole' | 'step_limit' | 'landing'

    @property
    def ok(self):
        return self.status == "ok"


@dataclass(frozen=True)
class SeedResult:
    """A converged seed and the local flow-map slope d x_f / d x0 at it."""

    sample: ManifoldSample
    dxf_dx0: complex


@dataclass(frozen=True)
class ManifoldSweep:
    """Result of marching a manifold: surviving samples sorted along the axis."""

    samples: tuple
    dead: tuple
    seed: SeedResult
    t_f: float


def _propagate_sample(x0, wavepacket, system, order, t_f, integrator, rescue=1.0):
    # High orders spike past the blowup threshold mid-flight and recover;
    # a genuine node approach keeps diverging, so one retry at a raised
    # threshold separates the two.
    try:
        st = propagate_trajectory(x0, wavepacket, system, order, t_f, config=integrator)
    except Blowup:
        status = "blowup"
        if rescue > 1.0:
            raised = replace(integrator,
                             blowup_threshold=integrator.blowup_threshold * rescue)
            try:
                st = propagate_trajectory(x0, wavepacket, system, order, t_f,
                                          config=raised)
            except (Blowup, PoleProximity, StepLimitExceeded, StepUnderflow):
                pass
            else:
                return ManifoldSample(x0=complex(x0), t_f=t_f, x_f=st.x, v_f=st.v[0],
                                      S_f=st.S, status="ok")
    except PoleProximity:
        status = "pole"
    except (StepLimitExceeded, StepUnderflow):
        status = "step_limit"
    else:
        return ManifoldSample(x0=complex(x0), t_f=t_f, x_f=st.x, v_f=st.v[0],
                              S_f=st.S, status="ok")
    nan = complex("nan+nanj")
    return ManifoldSample(x0=complex(x0), t_f=t_f, x_f=nan, v_f=nan, S_f=nan, status=status)


def projected_action(sample, mass):
    """Action carried to the real axis: S(Re x_f) = S_f + m v_f (Re x_f - x_f).

    First-order Taylor transport using p = dS/dx = m v; the landing
    tolerance keeps |Im x_f| small enough that the quadratic remainder is
    far below every tolerance in use.
    """
    return sample.S_f + mass * sample.v_f * (sample.x_f.real - sample.x_f)


def axis_density(sample, mass, hbar):
    """|psi|^2 contributed at Re x_f: exp(-2 Im S_projected / hbar)."""
    s = projected_action(sample, mass)
    return math.exp(-2.0 * s.imag / hbar)


def _free_map_rewind(wavepacket, system, t_f, target):
    """Initial guess from the exactly invertible free-packet flow map.

    For V = 0 the arrival map is affine: x_f = x_c + p_c t/m + gamma (x0 - x_c)
    with gamma = 1 + 2 i hbar alpha t / m. Inverting it lands interacting
    seeds close enough for Newton, including at p_c = 0 where the purely
    classical rewind x0 = target - p_c t / m degenerates to the identity.
    """
    gamma = 1.0 + 2j * system.hbar * wavepacket.alpha * t_f / system.mass
    drift = wavepacket.momentum / system.mass * t_f
    return wavepacket.center + (target - wavepacket.center - drift) / gamma


def find_seed(wavepacket, system, order, t_f, target, integrator=None, manifold=None):
    """Complex Newton on the flow map: find x0 with x(t_f; x0) = target (real).

    The derivative of the map is probed by finite differences. Tries the
    free-map rewind first, then a classical rewind and deterministic
    perturbations of the first guess. Every guess is first iterated with
    monotone backtracking (near a fold the full Newton step can jump into a
    different basin of the flow map); guesses that stall in regions too
    curved for the line search get a second, undamped pass whose free jumps
    can cross such valleys. Raises SeedNotFound when no start converges, or
    DeadRegion when every probe trajectory fails outright.
    """
    integrator = integrator or IntegratorConfig()
    manifold = manifold or ManifoldConfig()
    target = float(target)
    base = _free_map_rewind(wavepacket, system, t_f, target)
    jitter = 0.25 * abs(target - base) + 0.05
    guesses = [base,
               complex(target - wavepacket.momentum / system.mass * t_f),
               base + jitter,
               base - jitter,
               base - 0.5j * jitter]
    any_arrival = False
    for damped in (True, False):
        for guess in guesses:
            x0 = complex(guess)
            for _ in range(manifold.max_newton_iters):
                s = _propagate_sample(x0, wavepacket, system, order, t_f, integrator,
                                      manifold.blowup_rescue)
                if not s.ok:
                    break
                any_arrival = True
                f = s.x_f - target
                d = manifold.fd_step * max(1.0, abs(x0))
                s2 = _propagate_sample(x0 + d, wavepacket, system, order, t_f, integrator,
                                       manifold.blowup_rescue)
                if not s2.ok:
                    d = -d
                    s2 = _propagate_sample(x0 + d, wavepacket, system, order, t_f,
                                           integrator, manifold.blowup_rescue)
                    if not s2.ok:
                        break
                slope = (s2.x_f - s.x_f) / d
                if abs(f) <= 0.5 * manifold.landing_tolerance:
                    if slope == 0:
                        break
                    return SeedResult(sample=s, dxf_dx0=slope)
                if slope == 0:
                    break
                step = -f / slope
                if abs(step) > manifold.newton_step_cap:
                    step *= manifold.newton_step_cap / abs(step)
                if damped:
                    accepted = None
                    for _ in range(6):
                        cand = _propagate_sample(x0 + step, wavepacket, system, order,
                                                 t_f, integrator, manifold.blowup_rescue)
                        if cand.ok and abs(cand.x_f - target) < abs(f):
                            accepted = step
                            break
                        step *= 0.5
                    if accepted is None:
                        break
                    step = accepted
                x0 = x0 + step
    if not any_arrival:
        raise DeadRegion(
            f"every probe trajectory failed near target {target:.6g} at t_f = {t_f:.6g}")
    raise SeedNotFound(
        f"Newton on the flow map did not converge to target {target:.6g} at t_f = {t_f:.6g}")


def march_manifold(seed, wavepacket, system, order, t_f, dx_real, direction,
                   max_count, integrator=None, manifold=None, stop_when=None):
    """March launch points so arrivals advance by ~dx_real along the real axis.

    Continuation: the next launch step is the last observed slope
    d x0 / d x_f times the desired arrival increment. Arrivals drifting off
    the axis beyond the landing tolerance get Newton recenter passes using
    the same local slope. Failed propagations are recorded and stepped
    over (up to max_dead_run in a row); arrivals that stop advancing raise
    ManifoldStall. Returns (new samples in march order, dead samples).
    """
    integrator = integrator or IntegratorConfig()
    manifold = manifold or ManifoldConfig()
    if direction not in (-1, 1):
        raise ValueError("direction must be +1 or -1")
    if dx_real <= 0:
        raise ValueError("dx_real must be positive")
    samples = []
    dead = []
    prev_x0 = seed.sample.x0
    prev_xf = seed.sample.x_f
    step_x0 = direction * dx_real / seed.dxf_dx0
    cursor = prev_x0
    dead_run = 0
    scale = 1.0
    for _ in range(4 * max_count):
        if len(samples) >= max_count:
            break
        cursor = cursor + scale * step_x0
        s = _propagate_sample(cursor, wavepacket, system, order, t_f, integrator,
                              manifold.blowup_rescue)
        if s.ok and abs(s.x_f.imag) > manifold.landing_tolerance:
            for _ in range(manifold.recenter_passes):
                denom = s.x_f - prev_xf
                if denom == 0:
                    break
                slope_inv = (s.x0 - prev_x0) / denom
                cand = _propagate_sample(s.x0 - 1j * s.x_f.imag * slope_inv,
                                         wavepacket, system, order, t_f, integrator,
                                         manifold.blowup_rescue)
                if not cand.ok:
                    s = cand
                    break
                s = cand
                if abs(s.x_f.imag) <= manifold.landing_tolerance:
                    break
            if s.ok and abs(s.x_f.imag) > manifold.landing_tolerance:
                s = ManifoldSample(x0=s.x0, t_f=s.t_f, x_f=s.x_f, v_f=s.v_f,
                                   S_f=s.S_f, status="landing")
        if s.ok:
            dead_run = 0
            advance = s.x_f - prev_xf
            if abs(advance) < manifold.stall_fraction * dx_real:
                err = ManifoldStall(
                    f"arrival advance {abs(advance):.3e} below stall threshold near "
                    f"x_f = {prev_xf.real:.6g}")
                err.samples = tuple(samples)
                err.dead = tuple(dead)
                raise err
            step_x0 = (s.x0 - prev_x0) / advance * (direction * dx_real)
            cursor = s.x0
            prev_x0 = s.x0
            prev_xf = s.x_f
            samples.append(s)
            scale = min(1.0, 2.0 * scale)
            if stop_when is not None and stop_when(s):
                break
        else:
            dead.append(s)
            dead_run += 1
            if dead_run > manifold.max_dead_run:
                break
            if s.status == "landing" and scale >= 1.0 / 16.0:
                # Off-axis drift means the manifold bends faster than the
                # secant can follow; retreat to the last good point and
                # creep up on the bend with a finer step.
                cursor = prev_x0
                scale *= 0.5
            else:
                scale = 1.0
    return samples, dead


def _sorted_sweep(ok_samples, dead, seed, t_f):
    ordered = tuple(sorted(ok_samples, key=lambda s: s.x_f.real))
    return ManifoldSweep(samples=ordered, dead=tuple(dead), seed=seed, t_f=t_f)


def _march_or_stall(*args, stop_when):
    # A stall (fold of the launch manifold) bounds the reachable window;
    # the samples collected up to it are still good, so keep them and let
    # the reconstruction coverage checks decide whether they suffice.
    try:
        return march_manifold(*args, stop_when=stop_when)
    except ManifoldStall as err:
        return list(err.samples), list(err.dead)


def sample_axis_window(wavepacket, system, order, t_f, x_lo, x_hi, count,
                       integrator=None, manifold=None):
    """Cover the arrival window [x_lo, x_hi] with ~count surviving trajectories."""
    if x_hi <= x_lo:
        raise ValueError("window must have positive width")
    if count < 4:
        raise ValueError("need at least 4 samples")
    manifold = manifold or ManifoldConfig()
    mid = 0.5 * (x_lo + x_hi)
    dx = (x_hi - x_lo) / (count - 1)
    seed = find_seed(wavepacket, system, order, t_f, mid, integrator, manifold)
    right, dead_r = _march_or_stall(
        seed, wavepacket, system, order, t_f, dx, +1, count + 5, integrator, manifold,
        stop_when=lambda s: s.x_f.real >= x_hi + dx)
    left, dead_l = _march_or_stall(
        seed, wavepacket, system, order, t_f, dx, -1, count + 5, integrator, manifold,
        stop_when=lambda s: s.x_f.real <= x_lo - dx)
    return _sorted_sweep(left + [seed.sample] + right, dead_l + dead_r, seed, t_f)


def sample_transmitted_lobe(wavepacket, system, order, t_f, count=50,
                            rel_cutoff=1e-7, x_inner=0.02,
                            integrator=None, manifold=None):
    """Cover the transmitted density lobe on x > 0 adaptively.

    Seeds at the arrival point of the most-probable transmitted momentum
    and marches outward until the projected density falls below rel_cutoff
    of the running lobe maximum (or, on the left, until x_inner guards the
    barrier region).
    """
    manifold = manifold or ManifoldConfig()
    k_star = transmitted_group_momentum(wavepacket, system)
    center = wavepacket.center + k_star / system.mass * t_f
    center = max(center, x_inner + 0.3)
    gamma = 1.0 + 2j * system.hbar * wavepacket.alpha * t_f / system.mass
    sigma_t = abs(gamma) / (2.0 * math.sqrt(wavepacket.alpha))
    dx = 6.0 * sigma_t / count
    seed = find_seed(wavepacket, system, order, t_f, center, integrator, manifold)
    peak = [axis_density(seed.sample, system.mass, system.hbar)]

    def track(s):
        d = axis_density(s, system.mass, system.hbar)
        if d > peak[0]:
            peak[0] = d
        return d

    def stop_right(s):
        return track(s) < rel_cutoff * peak[0]

    def stop_left(s):
        return track(s) < rel_cutoff * peak[0] or s.x_f.real <= x_inner + dx

    right, dead_r = _march_or_stall(seed, wavepacket, system, order, t_f, dx, +1,
                                    3 * count, integrator, manifold, stop_when=stop_right)
    left, dead_l = _march_or_stall(seed, wavepacket, system, order, t_f, dx, -1,
                                   3 * count, integrator, manifold, stop_when=stop_left)
    return _sorted_sweep(left + [seed.sample] + right, dead_l + dead_r, seed, t_f)


@dataclass(frozen=True)
class ReconstructedWavefunction:
    """psi on a real grid assembled from trajectory arrivals (or psi directly)."""

    x: np.ndarray
    action: np.ndarray
    psi: np.ndarray
    t: float
    hbar: float
    order: int | None = None
    n_samples: int = 0
    max_landing_offset: float = 0.0

    @classmethod
    def from_psi(cls, x, psi, t, hbar=1.0, node_cutoff=1e-200, **meta):
        """Recover the complex action by an unwrapped logarithm of psi.

        The phase is unwrapped along the grid and anchored to its principal
        value at the density maximum; NodeOnGrid is raised if |psi|
        effectively vanishes anywhere on the grid.
        """
        x = np.asarray(x, dtype=float)
        psi = np.asarray(psi, dtype=np.complex128)
        amp = np.abs(psi)
        if amp.min() < node_cutoff:
            raise NodeOnGrid(f"|psi| = {amp.min():.3e} on the grid; action undefined")
        phase = np.unwrap(np.angle(psi))
        anchor = int(np.argmax(amp))
        phase -= 2.0 * math.pi * round((phase[anchor] - np.angle(psi[anchor])) / (2.0 * math.pi))
        action = hbar * phase - 1j * hbar * np.log(amp)
        return cls(x=x, action=action, psi=psi.copy(), t=float(t), hbar=hbar, **meta)

    def density(self):
        return np.abs(self.psi) ** 2


def reconstruct_wavefunction(samples, grid, system, order=None, manifold=None):
    """Spline the projected action of surviving arrivals and exponentiate.

    Arrivals are ordered along Re x_f; near-duplicates are merged when
    their projected actions agree, otherwise NonMonotonicArrivals signals a
    fold. The grid must lie inside the sampled span and the samples must
    not contain a dead gap wider than max_gap_factor times the mean
    spacing, else InsufficientCoverage.
    """
    manifold = manifold or ManifoldConfig()
    ok = [s for s in samples if s.ok]
    if len(ok) < 4:
        raise InsufficientCoverage(f"only {len(ok)} surviving arrivals, need at least 4")
    ok.sort(key=lambda s: s.x_f.real)
    span = ok[-1].x_f.real - ok[0].x_f.real
    if span <= 0:
        raise NonMonotonicArrivals("all arrivals at a single axis point")
    mass = system.mass
    kept = [ok[0]]
    for s in ok[1:]:
        if s.x_f.real - kept[-1].x_f.real < 1e-12 * span:
            a = projected_action(s, mass)
            b = projected_action(kept[-1], mass)
            if abs(a - b) <= 1e-6 * (1.0 + abs(b)):
                continue
            raise NonMonotonicArrivals(
                f"coincident arrivals at x = {s.x_f.real:.6g} carry conflicting actions")
        kept.append(s)
    if len(kept) < 4:
        raise InsufficientCoverage("fewer than 4 distinct arrival points")
    xs = np.array([s.x_f.real for s in kept])
    grid = np.asarray(grid, dtype=float)
    pad = 1e-12 * max(1.0, span)
    if grid[0] < xs[0] - pad or grid[-1] > xs[-1] + pad:
        raise InsufficientCoverage(
            f"grid [{grid[0]:.6g}, {grid[-1]:.6g}] outside sampled span "
            f"[{xs[0]:.6g}, {xs[-1]:.6g}]")
    gaps = np.diff(xs)
    if gaps.max() > manifold.max_gap_factor * gaps.mean():
        raise InsufficientCoverage(
            f"dead gap {gaps.max():.3e} exceeds {manifold.max_gap_factor} x mean "
            f"spacing {gaps.mean():.3e}")
    s_proj = np.array([projected_action(s, mass) for s in kept])
    spline = CubicSpline(xs, s_proj)
    action = spline(grid)
    psi = np.exp(1j * action / system.hbar)
    max_off = max(abs(s.x_f.imag) for s in kept)
    return ReconstructedWavefunction(
        x=grid.copy(), action=action, psi=psi, t=kept[0].t_f, hbar=system.hbar,
        order=order, n_samples=len(kept), max_landing_offset=max_off)


def transmission_probability(reconstruction, support_cutoff=1e-2, strip_tolerance=0.02):
    """T = integral over x > 0 of the reconstructed |psi|^2 (shared Simpson rule).

    The grid must contain the transmitted support: |psi| at the right edge
    has to lie below support_cutoff of the positive-axis maximum. When the
    grid starts inside x > 0 the unsampled strip [0, x_left] must be
    negligible; its mass is bounded by the edge density times the strip
    width and compared against strip_tolerance of the integral. Violations
    raise SupportNotContained.
    """
    x = reconstruction.x
    dens = reconstruction.density()
    mask = x >= 0.0
    if mask.sum() < 5:
        return 0.0
    dpos = dens[mask]
    peak = float(dpos.max())
    if peak > 0.0 and math.sqrt(dpos[-1]) > support_cutoff * math.sqrt(peak):
        raise SupportNotContained(
            f"|psi| {math.sqrt(dpos[-1]):.3e} at the right edge vs peak "
            f"{math.sqrt(peak):.3e} exceeds the support cutoff {support_cutoff:g}")
    value = positive_probability(x, reconstruction.psi)
    if x[0] > 0.0 and value > 0.0:
        strip = float(dpos[0]) * x[0]
        if strip > strip_tolerance * value:
            raise SupportNotContained(
                f"unsampled strip [0, {x[0]:.4g}] holds up to {strip:.3e} "
                f"probability vs integral {value:.3e}")
    if value < 0.0:
        if value < -1e-9:
            raise ValueError(f"transmission {value} is not a probability")
        value = 0.0
    if value > 1.0:
        if value > 1.0 + 1e-9:
            raise ValueError(f"transmission {value} is not a probability")
        value = 1.0
    return value


def hj_residual(minus, center, plus, system):
    """Pointwise residual of the complex Hamilton-Jacobi equation.

    Given reconstructions at t_f - dt, t_f, t_f + dt (matching uniform
    grids), forms S_t + S_x^2 / 2m + V - (i hbar / 2m) S_xx by central
    differences and returns (interior grid, |residual|). A small residual
    certifies psi against the dynamics with no reference solution at all.
    """
    x = center.x
    for other in (minus, plus):
        if len(other.x) != len(x) or not np.allclose(other.x, x, rtol=0.0, atol=1e-12):
            raise ValueError("reconstructions must share one grid")
    h = np.diff(x)
    if not np.allclose(h, h[0], rtol=1e-8, atol=0.0):
        raise ValueError("hj_residual needs a uniform grid")
    h = float(h[0])
    dt_m = center.t - minus.t
    dt_p = plus.t - center.t
    if not math.isclose(dt_m, dt_p, rel_tol=1e-9):
        raise ValueError("time offsets must be symmetric around the center time")
    s_m, s_0, s_p = minus.action, center.action, plus.action
    s_t = (s_p - s_m) / (dt_m + dt_p)
    s_x = (s_0[2:] - s_0[:-2]) / (2.0 * h)
    s_xx = (s_0[2:] - 2.0 * s_0[1:-1] + s_0[:-2]) / (h * h)
    v = system.potential.values(x[1:-1])
    resid = (s_t[1:-1] + s_x * s_x / (2.0 * system.mass) + v
             - 0.5j * system.hbar / system.mass * s_xx)
    return x[1:-1], np.abs(resid)


@dataclass(frozen=True)
class TransmissionPoint:
    """One energy on the transmission curve: oracle value and per-order results."""

    energy: float
    t_final: float
    exact: float
    bomca: dict
    divergence: dict
    errors: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TransmissionCurve:
    points: tuple

    @property
    def failed(self):
        return any(p.errors for p in self.points)

    def orders(self):
        seen = sorted({n for p in self.points for n in (*p.bomca, *p.errors)})
        return seen


def transmission_point(wavepacket, system, orders, t_final=None,
                       oracle_grid=None, oracle_dt=1e-4, t_max=8.0,
                       count=50, grid_points=513,
                       integrator=None, manifold=None):
    """Oracle + trajectory transmission at one packet energy.

    The oracle fixes the (possibly auto-selected) final time; every
    truncation order is then reconstructed at that same time. Per-order
    failures are recorded as error strings rather than aborting the point.
    """
    from .errors import BomcaError
    ex = transmission_exact(wavepacket, system, grid=oracle_grid, dt=oracle_dt,
                            t_final=t_final, t_max=t_max)
    mf = manifold or ManifoldConfig()
    bomca = {}
    divergence = {}
    errors = {}
    for order in orders:
        try:
            sweep = sample_transmitted_lobe(wavepacket, system, order, ex.t_final,
                                            count=count, integrator=integrator,
                                            manifold=mf)
            xs = [s.x_f.real for s in sweep.samples]
            grid = np.linspace(min(xs), max(xs), grid_points)
            rec = reconstruct_wavefunction(sweep.samples, grid, system,
                                           order=order, manifold=mf)
            t_val = transmission_probability(rec, mf.support_cutoff, mf.strip_tolerance)
            bomca[order] = t_val
            divergence[order] = abs(t_val - ex.value) / ex.value
        except BomcaError as err:
            errors[order] = f"{type(err).__name__}: {err}"
    return TransmissionPoint(energy=wavepacket.energy(system.mass), t_final=ex.t_final,
                             exact=ex.value, bomca=bomca, divergence=divergence,
                             errors=errors)
