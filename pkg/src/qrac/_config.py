"""Runtime switches read from the environment.

``QRAC_DISABLE_NUMBA=1`` forces the pure-numpy kernels even when numba is
importable.  ``QRAC_WORKERS`` overrides the worker count used by chunked
searches.
"""
import os

_TRUE = {"1", "true", "yes", "on"}


def _flag(name, default="0"):
    return os.environ.get(name, default).strip().lower() in _TRUE


try:
    import numba  # noqa: F401

    numba_installed = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_installed = False

USE_NUMBA = numba_installed and not _flag("QRAC_DISABLE_NUMBA")

numba_opts = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "boundscheck": False,
}


def worker_count(requested=None):
    """Number of worker threads for chunked enumerations."""
    if requested is not None and requested > 0:
        return int(requested)
    env = os.environ.get("QRAC_WORKERS")
    if env:
        try:
            value = int(env)
        except ValueError:
            value = 0
        if value > 0:
            return value
    return os.cpu_count() or 1
