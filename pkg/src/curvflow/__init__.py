"""curvflow: spectral tools for contracting convex hypersurfaces by curvature.

Submodules are imported lazily so the command-line entry point can cap BLAS
thread counts (CURVFLOW_THREADS) before numpy is loaded.
"""

from importlib import import_module

_SUBMODULES = (
    "spectral",
    "body",
    "shapes",
    "speeds",
    "geometry",
    "flow",
    "verify",
    "cli",
)

__all__ = list(_SUBMODULES)


def __getattr__(name):
    if name in _SUBMODULES:
        return import_module(f"{__name__}.{name}")
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
