"""Backend selection for the hot kernels.

Two interchangeable implementations exist: a compiled numba path and a
pure-numpy path.  The active one is chosen at import time from the
RWRE_BACKEND environment variable:

    RWRE_BACKEND=auto    use numba when importable, else numpy (default)
    RWRE_BACKEND=numba   require the compiled path
    RWRE_BACKEND=numpy   force the fallback

`use()` switches at runtime (tests and the benchmark flip it); everything
else calls through the module-level functions below, so the choice is a
single point of configuration.  Walker paths are bit-identical across
backends; float kernels agree to rounding.
"""

from __future__ import annotations

import os

from . import _backend_numpy
from .errors import ConfigurationError

try:
    from . import _backend_numba

    HAVE_NUMBA = True
except ImportError:  # numba genuinely unavailable
    _backend_numba = None
    HAVE_NUMBA = False

_active = _backend_numpy


def resolve(name: str | None):
    name = (name or os.environ.get("RWRE_BACKEND", "auto")).lower()
    if name == "auto":
        return _backend_numba if HAVE_NUMBA else _backend_numpy
    if name == "numba":
        if not HAVE_NUMBA:
            raise ConfigurationError("RWRE_BACKEND=numba but numba is not importable")
        return _backend_numba
    if name == "numpy":
        return _backend_numpy
    raise ConfigurationError(f"unknown backend {name!r} (use auto, numba, or numpy)")


def use(name: str | None = None) -> str:
    """Activate a backend by name; returns the name now active."""
    global _active
    _active = resolve(name)
    return _active.NAME


def active() -> str:
    return _active.NAME


def kernel_power_step(*args):
    return _active.kernel_power_step(*args)


def apply_markov(*args):
    return _active.apply_markov(*args)


def poisson_sweeps(*args):
    return _active.poisson_sweeps(*args)


def resolvent_sweeps(*args):
    return _active.resolvent_sweeps(*args)


def walk_ensemble(*args):
    return _active.walk_ensemble(*args)


def walk_path(*args):
    return _active.walk_path(*args)


use(None)
