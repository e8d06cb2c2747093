"""Process-wide numerical tolerance settings.

The environment variable ``MGSG_TOL_OVERRIDE`` multiplies every default
tolerance used by the library.  It exists for diagnosing borderline inputs;
leaving it unset is strongly recommended.
"""
import os

_ENV_VAR = "MGSG_TOL_OVERRIDE"


def tol_scale():
    raw = os.environ.get(_ENV_VAR)
    if not raw:
        return 1.0
    try:
        scale = float(raw)
    except ValueError:
        return 1.0
    return scale if scale > 0 else 1.0


def tol(value):
    """Return ``value`` scaled by the active tolerance override."""
    return value * tol_scale()
