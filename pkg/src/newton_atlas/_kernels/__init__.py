"""Orbit kernel selection.

Two interchangeable kernels exist: a compiled one (``_core``, built
from Cython at install time) and a pure-Python reference
(``fallback``).  They are written to produce bit-identical results;
the compiled one is roughly two orders of magnitude faster.

Selection: the env var NEWTON_ATLAS_BACKEND forces "compiled" or
"fallback"; otherwise the compiled kernel is used when the extension
imported successfully.
"""

from __future__ import annotations

import os

from . import fallback
from .fallback import (  # noqa: F401  (re-exported constants)
    K_MAX,
    K_MIN,
    K_SIZE,
    OUTCOME_CONVERGED,
    OUTCOME_CRITICAL,
    OUTCOME_DIVERGED,
    OUTCOME_STALLED,
    REGIME_FAR,
    REGIME_INTERMEDIATE,
    REGIME_NEAR,
    REGIME_OUTSIDE,
)

try:
    from . import _core
except ImportError:  # extension not built; pure Python still works
    _core = None

_forced = os.environ.get("NEWTON_ATLAS_BACKEND", "").strip().lower()
if _forced == "fallback":
    _active = fallback
elif _forced == "compiled":
    if _core is None:
        raise ImportError(
            "NEWTON_ATLAS_BACKEND=compiled but the compiled kernel is not "
            "available; reinstall the package with a C compiler present"
        )
    _active = _core
elif _forced:
    raise ImportError(
        f"NEWTON_ATLAS_BACKEND={_forced!r} not recognized "
        "(expected 'compiled' or 'fallback')"
    )
else:
    _active = _core if _core is not None else fallback

run_orbit_kernel = _active.run_orbit_kernel
BACKEND = "compiled" if _active is _core else "fallback"


def available_backends() -> tuple[str, ...]:
    return ("compiled", "fallback") if _core is not None else ("fallback",)
