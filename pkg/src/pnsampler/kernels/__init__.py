"""Chain kernels with a compiled backend and a pure-Python fallback.

The compiled extension is used when it imports; set
``PNSAMPLER_PURE_PYTHON=1`` to force the fallback. Both backends expose the
same names and replay the same chain for the same seed.
"""
from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("PNSAMPLER_PURE_PYTHON", "").strip() not in ("", "0"):
    _backend = _pykernels
else:
    try:
        from . import _ckernels as _backend
    except ImportError:  # extension not built
        _backend = _pykernels

BACKEND: str = _backend.NAME

NoExitError = _backend.NoExitError
QuboTarget = _backend.QuboTarget
TableTarget = _backend.TableTarget
ModelTarget = _backend.ModelTarget
DonutsTarget = _backend.DonutsTarget
DensityTarget = _backend.DensityTarget
mh_chain = _backend.mh_chain
rf_chain = _backend.rf_chain
basic_pns_chain = _backend.basic_pns_chain
sa_run = _backend.sa_run
opt_run = _backend.opt_run
mh_continuous = _backend.mh_continuous
pns_continuous = _backend.pns_continuous


def backend_module(name: str):
    """Kernel module by name (``"cython"`` or ``"python"``); for tests and benchmarks."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


__all__ = [
    "BACKEND",
    "NoExitError",
    "QuboTarget",
    "TableTarget",
    "ModelTarget",
    "DonutsTarget",
    "DensityTarget",
    "mh_chain",
    "rf_chain",
    "basic_pns_chain",
    "sa_run",
    "opt_run",
    "mh_continuous",
    "pns_continuous",
    "backend_module",
]
