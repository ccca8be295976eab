"""Covariant differencing of frame-component tensor fields, quadrature
helpers, and cutoff functions.

A "normal-valued tensor" here is an array of frame components with shape
(nu, nv, 2, ..., 2, 2k): ``n_tslots`` tangent slots followed by one normal
slot.  Covariant derivatives add one tangent slot in front; every
application widens the boundary layer of one-sided-stencil values by one
cell, which callers must trim before reporting maxima.
"""

from __future__ import annotations

import numpy as np

from .errors import SupportTouchesBoundary
from .frames import FramePackage, grid_partials


def cov_deriv(T: np.ndarray, frames: FramePackage, n_tslots: int) -> np.ndarray:
    """Covariant derivative along the tangent frame directions.

    Input components T[..., i1..in, a]; output adds a leading direction
    slot: out[..., p, i1..in, a] = (nabla_{tau_p} T)_{i1..in}^a.
    """
    du, dv = frames.du, frames.dv
    Tu, Tv = grid_partials(T, du, dv)
    chart = np.stack([Tu, Tv], axis=2)  # (nu, nv, dir, slots..., 2k)

    for a in range(2):
        w = frames.omega_chart[:, :, a]  # (..., b, g)
        chart[:, :, a] += np.einsum("xybg,xy...g->xy...b", w, T)
        g = frames.gamma_chart[:, :, a]  # (..., l, j)
        for s in range(n_tslots):
            # value slot s: subtract gamma[l, i_s] T[..., l in slot s, ...]
            Tm = np.moveaxis(T, 2 + s, -1)
            corr = np.einsum("xy...l,xylj->xy...j", Tm, g)
            chart[:, :, a] -= np.moveaxis(corr, -1, 2 + s)
    return np.einsum("xypa,xya...->xyp...", frames.c, chart)


def trimmed_max_norm(T: np.ndarray, margin: int, vec_axes: int = 1) -> float:
    """Max over interior grid points of the Frobenius norm over the trailing
    ``vec_axes`` axes."""
    core = T[margin:-margin, margin:-margin] if margin else T
    sq = core**2
    for _ in range(vec_axes):
        sq = sq.sum(axis=-1)
    return float(np.sqrt(sq.max()))


def area_weights(frames: FramePackage) -> np.ndarray:
    """Node quadrature weights sqrt(det g) du dv (trapezoid edge halving is
    immaterial for compactly supported integrands and omitted)."""
    return frames.metric.sqrt_det * frames.du * frames.dv


def integrate(field: np.ndarray, frames: FramePackage) -> float:
    """Quadrature of a scalar field against the induced area element, with a
    fixed deterministic summation order."""
    return float(np.sum(field * area_weights(frames)))


def riemannian_gradient_sq(f: np.ndarray, frames: FramePackage) -> np.ndarray:
    """|grad f|^2 = g^{ab} d_a f d_b f on the grid."""
    fu, fv = grid_partials(f, frames.du, frames.dv)
    ginv = frames.metric.ginv
    return (
        ginv[..., 0, 0] * fu**2 + 2 * ginv[..., 0, 1] * fu * fv + ginv[..., 1, 1] * fv**2
    )


def bump_field(frames: FramePackage, margin: int = 3, power: int = 4) -> np.ndarray:
    """A compactly supported cutoff: sin^power profiles across the whole
    chart, with the boundary margin zeroed exactly.

    The profile vanishes to order ``power`` at the edge, so hard-zeroing
    the margin cells perturbs it by O(h^power) and quadratic convergence
    of difference stencils applied to it is preserved with small constants
    (unlike the classical exp bump, whose high derivatives near the edge
    of its support dominate the error at practical resolutions).
    """
    dom = frames.patch.domain
    U, V = dom.mesh()
    tu = (U - dom.u_min) / (dom.u_max - dom.u_min)
    tv = (V - dom.v_min) / (dom.v_max - dom.v_min)
    f = np.sin(np.pi * tu) ** power * np.sin(np.pi * tv) ** power
    m = margin
    f[:m] = 0.0
    f[-m:] = 0.0
    f[:, :m] = 0.0
    f[:, -m:] = 0.0
    return f


def plateau_field(
    frames: FramePackage,
    flat_u: float = 0.4,
    flat_v: float = 0.0,
    power_u: int = 2,
    power_v: int = 1,
    margin: int = 3,
) -> np.ndarray:
    """A wide cutoff: per-axis profiles equal to 1 on the central ``flat``
    fraction with sin^power ramps to the boundary, margin cells zeroed.

    Slowly-varying cutoffs like this make the gradient term of the
    second-variation integrand as small as the patch allows, which is what
    exhibits instability through the special variations.
    """
    dom = frames.patch.domain
    U, V = dom.mesh()

    def profile(x, lo, hi, flat, power):
        t = (x - lo) / (hi - lo)
        r = 0.5 * (1.0 - flat)
        ramp_lo = np.sin(0.5 * np.pi * np.clip(t / r, 0.0, 1.0))
        ramp_hi = np.sin(0.5 * np.pi * np.clip((1.0 - t) / r, 0.0, 1.0))
        return (ramp_lo * ramp_hi) ** power if flat == 0 else np.minimum(ramp_lo, ramp_hi) ** power

    f = profile(U, dom.u_min, dom.u_max, flat_u, power_u) * profile(
        V, dom.v_min, dom.v_max, flat_v, power_v
    )
    m = margin
    f[:m] = 0.0
    f[-m:] = 0.0
    f[:, :m] = 0.0
    f[:, -m:] = 0.0
    return f


def check_compact_support(field: np.ndarray, margin: int = 2) -> None:
    """Raise unless the field vanishes on the boundary margin."""
    m = margin
    edges = [field[:m], field[-m:], field[:, :m], field[:, -m:]]
    if any(np.abs(e).max() > 0 for e in edges):
        raise SupportTouchesBoundary(
            f"section must vanish on a {margin}-cell boundary margin"
        )
