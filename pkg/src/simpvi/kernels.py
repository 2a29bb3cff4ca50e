"""Backend selection for the step kernels.

The compiled extension ``simpvi._ckernels`` is used when importable; the
numpy module ``simpvi._pykernels`` is the fallback.  Setting the
environment variable ``SIMPVI_PURE_PYTHON=1`` before import forces the
fallback, and :func:`set_backend` switches at run time (tests, benchmarks).
"""
import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

if _ckernels is not None and not os.environ.get("SIMPVI_PURE_PYTHON"):
    _active = _ckernels
else:
    _active = _pykernels


def available():
    """Names of the importable backends."""
    return sorted(_BACKENDS)


def active():
    return _active


def backend_name():
    return _active.NAME


def get(name):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {available()}") from None


def set_backend(name):
    """Select ``"python"`` or ``"cython"``; returns the previous backend name."""
    global _active
    previous = _active.NAME
    _active = get(name)
    return previous
