"""Scenario configuration: strict TOML schema, named presets, sidecar dicts.

A scenario bundles the physical system, the initial wavepacket and the run
parameters for the CLI commands. Parsing is strict: unknown keys anywhere
in the file are hard errors (silent typos in tolerance names have burned
enough careful studies), exactly one of wavepacket.energy / momentum must
be given, and every number is range checked at construction time.
"""
import math
from dataclasses import asdict, dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ConfigError
from .hierarchy import MAX_TRUNCATION_ORDER, IntegratorConfig
from .manifold import ManifoldConfig
from .model import (EckartPotential, FreePotential, GaussianWavepacket,
                    HarmonicPotential, SystemSpec)
from .reference import GridSpec

_MISSING = object()


@dataclass(frozen=True)
class ScenarioConfig:
    label: str
    system: SystemSpec
    wavepacket: GaussianWavepacket
    t_final: float
    orders: tuple
    trajectories: int
    window: tuple
    grid_points: int
    energies: tuple
    auto_time: bool
    path_points: int
    integrator: IntegratorConfig
    manifold: ManifoldConfig
    oracle_grid: GridSpec
    oracle_dt: float
    oracle_t_max: float
    output_dir: str

    def describe(self):
        """Fully resolved scenario as a plain dict (JSON sidecar payload)."""
        pot = self.system.potential
        if isinstance(pot, EckartPotential):
            pot_d = {"kind": "eckart", "depth": pot.depth, "width": pot.width}
        elif isinstance(pot, HarmonicPotential):
            pot_d = {"kind": "harmonic", "spring": pot.spring}
        else:
            pot_d = {"kind": "free"}
        return {
            "label": self.label,
            "system": {"mass": self.system.mass, "hbar": self.system.hbar,
                       "potential": pot_d},
            "wavepacket": {"alpha": self.wavepacket.alpha,
                           "center": self.wavepacket.center,
                           "momentum": self.wavepacket.momentum,
                           "energy": self.wavepacket.energy(self.system.mass)},
            "run": {"time": self.t_final, "orders": list(self.orders),
                    "trajectories": self.trajectories, "window": list(self.window),
                    "grid_points": self.grid_points,
                    "energies": list(self.energies), "auto_time": self.auto_time,
                    "path_points": self.path_points,
                    "integrator": asdict(self.integrator),
                    "manifold": asdict(self.manifold)},
            "oracle": {"x_min": self.oracle_grid.x_min, "x_max": self.oracle_grid.x_max,
                       "n_points": self.oracle_grid.n_points, "dt": self.oracle_dt,
                       "t_max": self.oracle_t_max},
            "output": {"directory": self.output_dir},
        }


def _pop(table, dotted, key, kind, default=_MISSING):
    if key not in table:
        if default is _MISSING:
            raise ConfigError(f"missing required key '{dotted}.{key}'")
        return default
    value = table.pop(key)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"'{dotted}.{key}' must be a number")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"'{dotted}.{key}' must be an integer")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"'{dotted}.{key}' must be true or false")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"'{dotted}.{key}' must be a string")
        return value
    if kind is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"'{dotted}.{key}' must be a table")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"'{dotted}.{key}' must be an array")
        return value
    raise AssertionError(kind)


def _number_list(values, dotted):
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"'{dotted}' must contain only numbers")
        out.append(float(v))
    return out


def _finish(table, dotted):
    if table:
        names = ", ".join(sorted(table))
        raise ConfigError(f"unknown key(s) under '{dotted}': {names}")


def _parse_potential(table):
    kind = _pop(table, "system.potential", "kind", str)
    if kind == "free":
        pot = FreePotential()
    elif kind == "harmonic":
        pot = HarmonicPotential(spring=_pop(table, "system.potential", "spring", float))
    elif kind == "eckart":
        pot = EckartPotential(depth=_pop(table, "system.potential", "depth", float),
                              width=_pop(table, "system.potential", "width", float))
    else:
        raise ConfigError(f"unknown potential kind '{kind}' "
                          "(expected 'free', 'harmonic' or 'eckart')")
    _finish(table, "system.potential")
    return pot


def config_from_dict(data, label="config"):
    """Validate a parsed TOML dict into a ScenarioConfig. Strict on keys."""
    data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in dict(data).items()}

    label = _pop(data, "", "label", str, label)
    sys_t = _pop(data, "", "system", dict)
    mass = _pop(sys_t, "system", "mass", float)
    hbar = _pop(sys_t, "system", "hbar", float, 1.0)
    pot_t = dict(_pop(sys_t, "system", "potential", dict))
    potential = _parse_potential(pot_t)
    _finish(sys_t, "system")
    try:
        system = SystemSpec(mass=mass, potential=potential, hbar=hbar)
    except ValueError as err:
        raise ConfigError(str(err)) from None

    wp_t = _pop(data, "", "wavepacket", dict)
    alpha = _pop(wp_t, "wavepacket", "alpha", float)
    center = _pop(wp_t, "wavepacket", "center", float)
    energy = _pop(wp_t, "wavepacket", "energy", float, None)
    momentum = _pop(wp_t, "wavepacket", "momentum", float, None)
    _finish(wp_t, "wavepacket")
    if (energy is None) == (momentum is None):
        raise ConfigError("give exactly one of 'wavepacket.energy' or 'wavepacket.momentum'")
    try:
        if energy is not None:
            wavepacket = GaussianWavepacket.from_energy(alpha, center, energy, mass, hbar)
        else:
            wavepacket = GaussianWavepacket(alpha=alpha, center=center,
                                            momentum=momentum, hbar=hbar)
    except ValueError as err:
        raise ConfigError(str(err)) from None

    run_t = _pop(data, "", "run", dict)
    t_final = _pop(run_t, "run", "time", float, None)
    if t_final is not None and t_final <= 0:
        raise ConfigError("'run.time' must be positive")
    orders_raw = _pop(run_t, "run", "orders", list, [1, 2, 3, 4])
    orders = []
    for n in orders_raw:
        if isinstance(n, bool) or not isinstance(n, int):
            raise ConfigError("'run.orders' must contain integers")
        if not 1 <= n <= MAX_TRUNCATION_ORDER:
            raise ConfigError(f"'run.orders' entries must lie in 1..{MAX_TRUNCATION_ORDER}")
        orders.append(n)
    trajectories = _pop(run_t, "run", "trajectories", int, 50)
    if trajectories < 4:
        raise ConfigError("'run.trajectories' must be at least 4")
    window_raw = _number_list(_pop(run_t, "run", "window", list, [0.05, 1.5]), "run.window")
    if len(window_raw) != 2 or window_raw[1] <= window_raw[0]:
        raise ConfigError("'run.window' must be [low, high] with low < high")
    grid_points = _pop(run_t, "run", "grid_points", int, 801)
    if grid_points < 16:
        raise ConfigError("'run.grid_points' must be at least 16")
    energies = _number_list(_pop(run_t, "run", "energies", list, []), "run.energies")
    if any(e < 0 for e in energies):
        raise ConfigError("'run.energies' must be nonnegative")
    auto_time = _pop(run_t, "run", "auto_time", bool, True)
    if t_final is None and not auto_time:
        raise ConfigError("'run.time' must be set when 'run.auto_time' is false")
    path_points = _pop(run_t, "run", "path_points", int, 201)
    if path_points < 2:
        raise ConfigError("'run.path_points' must be at least 2")

    integ_t = _pop(run_t, "run", "integrator", dict, {})
    integ_kwargs = {}
    for key, kind in (("rel_tol", float), ("abs_tol", float), ("initial_step", float),
                      ("max_step", float), ("max_steps", int), ("blowup_threshold", float)):
        val = _pop(integ_t, "run.integrator", key, kind, None)
        if val is not None:
            integ_kwargs[key] = val
    _finish(integ_t, "run.integrator")
    mani_t = _pop(run_t, "run", "manifold", dict, {})
    mani_kwargs = {}
    for key, kind in (("landing_tolerance", float), ("fd_step", float),
                      ("max_newton_iters", int), ("newton_step_cap", float),
                      ("recenter_passes", int), ("stall_fraction", float),
                      ("max_dead_run", int), ("max_gap_factor", float),
                      ("support_cutoff", float), ("strip_tolerance", float),
                      ("blowup_rescue", float), ("node_cutoff", float)):
        val = _pop(mani_t, "run.manifold", key, kind, None)
        if val is not None:
            mani_kwargs[key] = val
    _finish(mani_t, "run.manifold")
    _finish(run_t, "run")
    try:
        integrator = IntegratorConfig(**integ_kwargs)
        manifold = ManifoldConfig(**mani_kwargs)
    except ValueError as err:
        raise ConfigError(str(err)) from None

    oracle_t = _pop(data, "", "oracle", dict, {})
    x_min = _pop(oracle_t, "oracle", "x_min", float, -10.0)
    x_max = _pop(oracle_t, "oracle", "x_max", float, 10.0)
    n_points = _pop(oracle_t, "oracle", "n_points", int, 4096)
    oracle_dt = _pop(oracle_t, "oracle", "dt", float, 1e-4)
    oracle_t_max = _pop(oracle_t, "oracle", "t_max", float, 8.0)
    _finish(oracle_t, "oracle")
    if oracle_dt <= 0:
        raise ConfigError("'oracle.dt' must be positive")
    try:
        oracle_grid = GridSpec(x_min=x_min, x_max=x_max, n_points=n_points)
    except ValueError as err:
        raise ConfigError(str(err)) from None

    out_t = _pop(data, "", "output", dict, {})
    output_dir = _pop(out_t, "output", "directory", str, "bomca-out")
    _finish(out_t, "output")
    _finish(data, "top level")

    return ScenarioConfig(
        label=label, system=system, wavepacket=wavepacket, t_final=t_final,
        orders=tuple(orders), trajectories=trajectories,
        window=(window_raw[0], window_raw[1]), grid_points=grid_points,
        energies=tuple(energies), auto_time=auto_time, path_points=path_points,
        integrator=integrator, manifold=manifold, oracle_grid=oracle_grid,
        oracle_dt=oracle_dt, oracle_t_max=oracle_t_max, output_dir=output_dir)


def load_config(path):
    """Parse and validate a scenario TOML file."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from None
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"invalid TOML in {path}: {err}") from None
    return config_from_dict(data, label=str(path))


# The benchmark scenario behind all presets: a sech^2 barrier of height 40
# and width parameter 4.32 hit by a Gaussian with alpha = 30 pi launched
# from x = -0.7, mass 30, hbar = 1 (atomic-style units).
def _benchmark_base():
    return {
        "system": {"mass": 30.0, "hbar": 1.0,
                   "potential": {"kind": "eckart", "depth": 40.0, "width": 4.32}},
        "wavepacket": {"alpha": 30.0 * math.pi, "center": -0.7, "energy": 0.0},
        "run": {"time": 1.0, "orders": [1, 2, 3, 4], "trajectories": 50},
        "oracle": {},
        "output": {},
    }


def _preset_fig1():
    d = _benchmark_base()
    d["run"]["orders"] = [1]
    d["run"]["path_points"] = 201
    d["output"]["directory"] = "bomca-fig1"
    return d


def _preset_fig2a():
    d = _benchmark_base()
    d["wavepacket"]["energy"] = 50.0
    d["run"]["time"] = 0.85
    d["run"]["window"] = [0.1, 2.0]
    d["output"]["directory"] = "bomca-fig2a"
    return d


def _preset_fig2b():
    d = _benchmark_base()
    d["run"]["window"] = [0.05, 1.5]
    d["output"]["directory"] = "bomca-fig2b"
    return d


def _preset_fig3():
    d = _benchmark_base()
    d["run"]["energies"] = [2.5 * i for i in range(25)]
    d["run"]["auto_time"] = True
    # sweeping to asymptotic times needs a wider box than the figure runs
    d["oracle"] = {"x_min": -16.0, "x_max": 16.0, "n_points": 8192, "dt": 2e-4}
    d["output"]["directory"] = "bomca-fig3"
    return d


PRESETS = {
    "fig1": _preset_fig1,
    "fig2a": _preset_fig2a,
    "fig2b": _preset_fig2b,
    "fig3": _preset_fig3,
}


def load_preset(name):
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset '{name}' (available: {known})")
    return config_from_dict(PRESETS[name](), label=f"preset:{name}")
