"""Tolerance defaults shared by every module.

The base tolerance is relative: checks compare against
``tol * max(1, ||input||)``.  ``ALLPASS_TOL`` in the environment overrides
the built-in default; an explicit ``tol=`` argument overrides both.
"""

import os

import numpy as np

DEFAULT_TOL = 1e-9
DEFAULT_GRID = 64
ENV_TOL = "ALLPASS_TOL"


def resolve_tol(tol=None):
    """Return ``tol`` if given, else the environment override, else the default."""
    if tol is not None:
        tol = float(tol)
    else:
        raw = os.environ.get(ENV_TOL)
        tol = float(raw) if raw else DEFAULT_TOL
    if not np.isfinite(tol) or tol <= 0:
        raise ValueError(f"tolerance must be a positive finite number, got {tol!r}")
    return tol


def scaled_tol(tol, *arrays):
    """``tol * max(1, ||a||_2 for a in arrays)``; empty arrays are ignored."""
    scale = 1.0
    for a in arrays:
        a = np.asarray(a)
        if a.size:
            scale = max(scale, float(np.linalg.norm(np.atleast_2d(a), 2)))
    return resolve_tol(tol) * scale
