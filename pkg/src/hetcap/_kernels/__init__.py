"""Kernel dispatch: compiled extension when available, pure Python otherwise.

Set HETCAP_PURE_PYTHON=1 to force the fallback (used by the parity tests and
the benchmark).  Both backends are bit-identical by construction.
"""

from __future__ import annotations

import os


def _load():
    if not os.environ.get("HETCAP_PURE_PYTHON"):
        try:
            from hetcap._kernels import _simcore

            return _simcore
        except ImportError:
            pass
    from hetcap._kernels import simcore_py

    return simcore_py


_impl = _load()

BACKEND: str = _impl.BACKEND
ps_departures = _impl.ps_departures

__all__ = ["BACKEND", "ps_departures"]
