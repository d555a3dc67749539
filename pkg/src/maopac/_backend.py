"""Selects the compiled kernels when available, the numpy fallback otherwise.

Set ``MAOPAC_BACKEND=python`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("MAOPAC_BACKEND", "").lower() == "python":
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _fallback

BACKEND = "cython" if _impl is not _fallback else "python"

belief_rounds = _impl.belief_rounds
consensus_rounds = _impl.consensus_rounds
