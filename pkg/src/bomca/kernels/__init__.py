"""Kernel backend selection.

The numerical kernels in ``_impl`` are plain Python over numpy scalars and
arrays. By default they are compiled with ``numba.njit``; setting the
environment variable ``BOMCA_DISABLE_NUMBA=1`` (or running without numba
installed) selects the interpreted pure-numpy fallback instead. Both
backends expose the identical module-level API and produce matching
trajectories; the jitted one is a few hundred times faster on the stepper.

Callers should go through the module attribute ``backend`` at call time
(``kernels.backend.propagate(...)``) so that ``select_backend`` can swap
implementations under benchmarks and tests.
"""
import importlib.util
import os
import sys
from pathlib import Path

_IMPL_PATH = Path(__file__).with_name("_impl.py")
_instances = {}


def numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _fresh_instance(name):
    spec = importlib.util.spec_from_file_location(name, _IMPL_PATH)
    mod = importlib.util.module_from_spec(spec)
    sys.modules[name] = mod
    spec.loader.exec_module(mod)
    return mod


def load_backend(name):
    """Return the kernel module for backend 'numba' or 'numpy' (cached)."""
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name in _instances:
        return _instances[name]
    mod = _fresh_instance(f"bomca.kernels._impl_{name}")
    if name == "numba":
        import numba
        jit = numba.njit(cache=True, nogil=True)
        for fname in mod.KERNEL_NAMES:
            setattr(mod, fname, jit(getattr(mod, fname)))
    _instances[name] = mod
    return mod


def select_backend(name):
    """Swap the active backend; returns the previously active name."""
    global backend, backend_name
    previous = backend_name
    backend = load_backend(name)
    backend_name = name
    return previous


def _env_disabled():
    return os.environ.get("BOMCA_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


backend_name = "numba" if (numba_available() and not _env_disabled()) else "numpy"
backend = load_backend(backend_name)

# status codes and flags are plain ints, identical across backends
OK = backend.OK
STEP_LIMIT = backend.STEP_LIMIT
BLOWUP = backend.BLOWUP
POLE = backend.POLE
STEP_UNDERFLOW = backend.STEP_UNDERFLOW
POT_FREE = backend.POT_FREE
POT_HARMONIC = backend.POT_HARMONIC
POT_ECKART = backend.POT_ECKART
RHS_HIERARCHY = backend.RHS_HIERARCHY
RHS_CLASSICAL_N1 = backend.RHS_CLASSICAL_N1
MAX_ORDER = backend.MAX_ORDER
