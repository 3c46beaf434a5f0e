"""Kernel backend selection.

The hot numeric kernels (stump threshold scans, coordinate-descent sweeps,
KKT violation passes) exist twice: numba-jitted and pure numpy.  The active
backend is chosen by the CWBOOST_BACKEND environment variable ("numba",
"numpy", or "auto"; default auto = numba when importable) and can be switched
at runtime with use_backend(), e.g. for benchmarking both in one process.
"""

import os

from . import numpy_backend

_BACKENDS = {"numpy": numpy_backend}
_NUMBA_ERROR = None

try:
    from . import numba_backend
    _BACKENDS["numba"] = numba_backend
except ImportError as exc:  # pragma: no cover - depends on environment
    _NUMBA_ERROR = exc


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def _resolve(name: str):
    name = name.lower()
    if name == "auto":
        name = "numba" if "numba" in _BACKENDS else "numpy"
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected 'numba', 'numpy' or 'auto'")
    if name not in _BACKENDS:
        raise ImportError(f"backend {name!r} is not available: {_NUMBA_ERROR}")
    return _BACKENDS[name]


_active = _resolve(os.environ.get("CWBOOST_BACKEND", "auto"))


def use_backend(name: str) -> None:
    """Switch the active kernel backend ("numba", "numpy" or "auto")."""
    global _active
    _active = _resolve(name)


def current_backend() -> str:
    return _active.NAME


def get_kernels():
    """Module exposing stump_scan, coordinate_sweep and violation_values."""
    return _active
