"""Order-of-accuracy fits for residual sequences under grid refinement."""

from __future__ import annotations

import math

import numpy as np

#: residuals below this are treated as exactly zero for fitting purposes
RESIDUAL_FLOOR = 1e-12


def fit_order(hs, residuals) -> float:
    """Least-squares slope of log(residual) against log(h).

    Residual sequences that sit at the floor are identities satisfied to
    machine precision; their order is reported as inf so that "order >=
    threshold" checks pass without pretending a slope was measurable.
    Mixed sequences drop floored entries before fitting.
    """
    hs = np.asarray(hs, float)
    rs = np.asarray(residuals, float)
    keep = rs > RESIDUAL_FLOOR
    if keep.sum() < 2:
        return math.inf
    slope, _ = np.polyfit(np.log(hs[keep]), np.log(rs[keep]), 1)
    return float(slope)


def grid_steps(patch, resolutions) -> list[float]:
    """Mesh size h (max of du, dv) for each resolution of a patch."""
    out = []
    for n in resolutions:
        d = patch.domain.with_resolution(n)
        out.append(max(d.du, d.dv))
    return out


def decay_ratio(residuals) -> float:
    """Last-to-first ratio; near 1 means the sequence is not decaying,
    which is what negative controls must exhibit."""
    rs = np.asarray(residuals, float)
    if rs[0] <= RESIDUAL_FLOOR:
        return 1.0
    return float(rs[-1] / rs[0])
