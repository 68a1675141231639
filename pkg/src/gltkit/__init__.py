"""gltkit: spectral-symbol toolkit for structured matrices from FEM meshes.

Submodules are imported lazily so that the CLI can apply the GLT_THREADS
cap to the numerics libraries before anything touches them.
"""

__version__ = "0.1.0"

_SUBMODULES = ("lagrange", "symbols", "toeplitz", "fem", "spectra", "solvers",
               "tgm", "coefficients", "experiments", "service")


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(list(globals()) + list(_SUBMODULES))
