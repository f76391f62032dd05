"""Backend selection for the episode kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``MONOTONE_BANDITS_PURE`` is set to a non-empty value
other than ``0``, the pure-Python twin is used.  ``BACKEND`` names the
choice ("cython" or "python").
"""
import os

from . import _kernels_py

_force_pure = os.environ.get("MONOTONE_BANDITS_PURE", "") not in ("", "0")

if _force_pure:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

escalation_episode = _impl.escalation_episode
ucb_episode = _impl.ucb_episode


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or None for active)."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
