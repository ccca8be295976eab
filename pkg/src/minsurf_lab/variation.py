"""Special variations, the Jacobi operator, and the quadratic form q.

Normal sections are arrays of frame coefficients s[..., b] with
s = sum_b s^b nu_b.  The quadratic form q(a) compares |A^{a_perp}|^2
against |A^{J_N a_perp}|^2; it is evaluated three ways (directly and via
the two A-plus/A-minus formulas) and the spread between them is an
algebraic-identity check, not a discretization one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import (
    area_weights,
    check_compact_support,
    cov_deriv,
    integrate,
    riemannian_gradient_sq,
    trimmed_max_norm,
)
from .complex_structure import JSIGMA_FRAME, as_field
from .frames import FramePackage, SecondFundamentalForm


def normal_projection_constant(a: np.ndarray, frames: FramePackage) -> np.ndarray:
    """Frame coefficients of the normal part of a constant ambient vector:
    (a_perp)^b = <a, nu_b>."""
    return np.einsum("...bd,d->...b", frames.nu, np.asarray(a, float))


def tangent_projection_constant(a: np.ndarray, frames: FramePackage) -> np.ndarray:
    """Frame coefficients of the tangent part: (a^T)^i = <a, tau_i>."""
    return np.einsum("...id,d->...i", frames.tau, np.asarray(a, float))


def first_derivative_identity_residual(
    a: np.ndarray, frames: FramePackage, A: SecondFundamentalForm, margin: int = 2
) -> float:
    """max_i || D_{tau_i} a_perp + A(tau_i, a^T) || over the trimmed grid.

    The identity D a_perp = -A(., a^T) holds exactly for constant a, so the
    residual is pure discretization error.
    """
    s = normal_projection_constant(a, frames)
    aT = tangent_projection_constant(a, frames)
    Ds = cov_deriv(s, frames, n_tslots=0)  # [..., i, b]
    rhs = np.einsum("...ijb,...j->...ib", A.A, aT)
    return trimmed_max_norm(Ds + rhs, margin, vec_axes=2)


def jacobi_operator(
    s: np.ndarray, frames: FramePackage, A: SecondFundamentalForm
) -> np.ndarray:
    """J(s) = D*D s - A^s_{tau_i tau_j} A_{tau_i tau_j} with the rough
    Laplacian D*D = -sum_i D^2_{tau_i, tau_i}.

    Two nested difference stencils; callers should trim a margin of 3.
    """
    Ds = cov_deriv(s, frames, n_tslots=0)
    DDs = cov_deriv(Ds, frames, n_tslots=1)  # [..., p, i, b]
    rough = -np.einsum("...ppb->...b", DDs)
    As = np.einsum("...ijb,...b->...ij", A.A, s)
    curv = np.einsum("...ij,...ijb->...b", As, A.A)
    return rough - curv


def apply_JN(JN: np.ndarray, s: np.ndarray) -> np.ndarray:
    """(J_N s)^b = JN[b, g] s^g with JN broadcast over the grid."""
    return np.einsum("...bg,...g->...b", JN, s)


def q_direct(
    a: np.ndarray, A: SecondFundamentalForm, JN: np.ndarray, frames: FramePackage
) -> np.ndarray:
    """q(a) = |A^{a_perp}|^2 - |A^{J_N a_perp}|^2 pointwise."""
    JN = as_field(JN, frames)
    s = normal_projection_constant(a, frames)
    Js = apply_JN(JN, s)

    def norm_A_s(sec):
        As = np.einsum("...ijb,...b->...ij", A.A, sec)
        return np.einsum("...ij,...ij->...", As, As)

    return norm_A_s(s) - norm_A_s(Js)


def q_trace(
    A: SecondFundamentalForm, JN: np.ndarray, frames: FramePackage, basis: np.ndarray | None = None
) -> np.ndarray:
    """sum_i q(e_i) over an ambient orthonormal basis (standard by
    default); vanishes pointwise for any pointwise-orthogonal JN."""
    dim = frames.nu.shape[-1]
    if basis is None:
        basis = np.eye(dim)
    total = np.zeros(frames.metric.sqrt_det.shape)
    for e in basis:
        total = total + q_direct(e, A, JN, frames)
    return total


@dataclass
class ApmTensors:
    """A = Aplus + Aminus with A^± = (A -/+ J_N A(J_Sigma., .)) / 2,
    components [..., i, j, b] in the tangent/normal frames."""

    Aplus: np.ndarray
    Aminus: np.ndarray

    def norms(self):
        np_ = np.sqrt(np.einsum("...ijb,...ijb->...", self.Aplus, self.Aplus))
        nm = np.sqrt(np.einsum("...ijb,...ijb->...", self.Aminus, self.Aminus))
        return np_, nm


def apm_decompose(A: SecondFundamentalForm, JN: np.ndarray, frames: FramePackage) -> ApmTensors:
    JN = as_field(JN, frames)
    # A(J_Sigma tau_i, tau_j)^b = JS[l, i] A_{l j}^b
    AJ = np.einsum("li,...ljb->...ijb", JSIGMA_FRAME, A.A)
    JNAJ = np.einsum("...bg,...ijg->...ijb", JN, AJ)
    return ApmTensors(Aplus=0.5 * (A.A - JNAJ), Aminus=0.5 * (A.A + JNAJ))


def intertwining_residual(apm: ApmTensors, JN: np.ndarray, frames: FramePackage) -> float:
    """max over signs of || A^±(J_Sigma v, w) -/+ J_N A^±(v, w) ||."""
    JN = as_field(JN, frames)
    worst = 0.0
    for T, sign in ((apm.Aplus, 1.0), (apm.Aminus, -1.0)):
        TJ = np.einsum("li,...ljb->...ijb", JSIGMA_FRAME, T)
        JT = np.einsum("...bg,...ijg->...ijb", JN, T)
        worst = max(worst, trimmed_max_norm(TJ - sign * JT, 0, vec_axes=3))
    return worst


def antiholomorphic_residual(A: SecondFundamentalForm, JN: np.ndarray, frames: FramePackage) -> float:
    """max || A(J_Sigma v, w) - J_N A(v, w) ||, which equals 2 max ||A^-||
    exactly: the difference is -2 J_N A^-(v, w)."""
    JN = as_field(JN, frames)
    AJ = np.einsum("li,...ljb->...ijb", JSIGMA_FRAME, A.A)
    JNA = np.einsum("...bg,...ijg->...ijb", JN, A.A)
    return trimmed_max_norm(AJ - JNA, 0, vec_axes=3)


def q_via_apm(
    a: np.ndarray,
    apm: ApmTensors,
    frames: FramePackage,
    JN: np.ndarray,
    form: str = "general",
    tau_index: int = 0,
) -> np.ndarray:
    """q(a) from the A^± splitting.

    form="general": 4 sum_{ij} <A^+_{ij}, a_perp> <A^-_{ij}, a_perp>.
    form="surface": 8<A^+_tt,s><A^-_tt,s> - 8<A^+_tt,J_N s><A^-_tt,J_N s>
    with t = tau_{tau_index}; the value is independent of tau_index.
    """
    JN = as_field(JN, frames)
    s = normal_projection_constant(a, frames)
    if form == "general":
        p = np.einsum("...ijb,...b->...ij", apm.Aplus, s)
        m = np.einsum("...ijb,...b->...ij", apm.Aminus, s)
        return 4.0 * np.einsum("...ij,...ij->...", p, m)
    if form == "surface":
        Js = apply_JN(JN, s)
        t = tau_index
        ap = apm.Aplus[..., t, t, :]
        am = apm.Aminus[..., t, t, :]
        dot = lambda x, y: np.einsum("...b,...b->...", x, y)
        return 8.0 * (dot(ap, s) * dot(am, s) - dot(ap, Js) * dot(am, Js))
    raise ValueError(f"unknown form {form!r}")


@dataclass
class DichotomyField:
    """Pointwise certificate that A^+ or A^- vanishes wherever q does.

    m_field = min(|xi+|, |xi-|) with xi± = A^±_{tau_1 tau_1};
    c_field = |xi+|^2 |xi-|^2 + <xi+, xi->^2 + <xi+, J_N xi->^2;
    bound = (3/8) (|xi+|^2 + |xi-|^2), so that max|q| <= eps on the patch
    forces c <= bound * eps.
    """

    m_field: np.ndarray
    c_field: np.ndarray
    bound: np.ndarray


def polarized_dichotomy_check(
    apm: ApmTensors, JN: np.ndarray, frames: FramePackage
) -> DichotomyField:
    JN = as_field(JN, frames)
    xp = apm.Aplus[..., 0, 0, :]
    xm = apm.Aminus[..., 0, 0, :]
    np2 = np.einsum("...b,...b->...", xp, xp)
    nm2 = np.einsum("...b,...b->...", xm, xm)
    dot = np.einsum("...b,...b->...", xp, xm)
    dotJ = np.einsum("...b,...b->...", xp, apply_JN(JN, xm))
    return DichotomyField(
        m_field=np.minimum(np.sqrt(np2), np.sqrt(nm2)),
        c_field=np2 * nm2 + dot**2 + dotJ**2,
        bound=0.375 * (np2 + nm2),
    )


# ---------------------------------------------------------------------------
# second-variation integrals
# ---------------------------------------------------------------------------


def _edge_energy(s: np.ndarray, frames: FramePackage) -> float:
    """Discrete Dirichlet part sum g^{ab} <D_a s, D_b s> dA using forward
    differences on grid edges with edge-averaged coefficients; the mixed
    g^{uv} term is assembled cell-centered.  This is, by construction, the
    same quadrature as the sparse quadratic form in the stability module.
    """
    du, dv = frames.du, frames.dv
    g = frames.metric.ginv
    w = frames.metric.sqrt_det
    om = frames.omega_chart  # [..., a, b, g]

    def edge_diff(axis):
        if axis == 0:
            ds = (s[1:, :] - s[:-1, :]) / du
            om_mid = 0.5 * (om[1:, :, 0] + om[:-1, :, 0])
            s_mid = 0.5 * (s[1:, :] + s[:-1, :])
        else:
            ds = (s[:, 1:] - s[:, :-1]) / dv
            om_mid = 0.5 * (om[:, 1:, 1] + om[:, :-1, 1])
            s_mid = 0.5 * (s[:, 1:] + s[:, :-1])
        return ds + np.einsum("...bg,...g->...b", om_mid, s_mid)

    Du = edge_diff(0)
    Dv = edge_diff(1)

    cu = 0.5 * (w[1:, :] * g[1:, :, 0, 0] + w[:-1, :] * g[:-1, :, 0, 0])
    cv = 0.5 * (w[:, 1:] * g[:, 1:, 1, 1] + w[:, :-1] * g[:, :-1, 1, 1])
    total = np.sum(cu * np.einsum("...b,...b->...", Du, Du))
    total += np.sum(cv * np.einsum("...b,...b->...", Dv, Dv))

    # cell-centered mixed term (vanishes on conformal charts)
    Du_c = 0.5 * (Du[:, 1:] + Du[:, :-1])
    Dv_c = 0.5 * (Dv[1:, :] + Dv[:-1, :])
    wg = w * g[..., 0, 1]
    wg_c = 0.25 * (wg[1:, 1:] + wg[1:, :-1] + wg[:-1, 1:] + wg[:-1, :-1])
    total += 2.0 * np.sum(wg_c * np.einsum("...b,...b->...", Du_c, Dv_c))
    return float(total * du * dv)


def _curvature_energy(s: np.ndarray, frames: FramePackage, A: SecondFundamentalForm) -> float:
    """Node quadrature of |A^s|^2 dA."""
    As = np.einsum("...ijb,...b->...ij", A.A, s)
    dens = np.einsum("...ij,...ij->...", As, As)
    return integrate(dens, frames)


def second_variation_direct(
    s: np.ndarray, frames: FramePackage, A: SecondFundamentalForm, margin: int = 2
) -> float:
    """delta^2 V(s, s) = integral of |Ds|^2 - |A^s|^2 for a compactly
    supported section (zero on the boundary margin)."""
    check_compact_support(s, margin)
    return _edge_energy(s, frames) - _curvature_energy(s, frames, A)


def second_variation_cutoff_identity(
    f: np.ndarray,
    s: np.ndarray,
    frames: FramePackage,
    A: SecondFundamentalForm,
    margin: int = 3,
):
    """Compare delta^2 V(fs, fs) against
    integral of |grad f|^2 |s|^2 + f^2 <J(s), s>.

    Returns (lhs, rhs, discrepancy); the identity is exact in the
    continuum, so the discrepancy is discretization plus quadrature error.
    """
    check_compact_support(f, margin)
    lhs = second_variation_direct(f[..., None] * s, frames, A, margin=2)
    grad2 = riemannian_gradient_sq(f, frames)
    s2 = np.einsum("...b,...b->...", s, s)
    Js = jacobi_operator(s, frames, A)
    pairing = np.einsum("...b,...b->...", Js, s)
    dens = grad2 * s2 + f**2 * pairing
    # the Jacobi stencil is unreliable on the outermost cells; f vanishes
    # there so zero the quadrature explicitly
    mask = np.zeros_like(dens)
    mask[margin:-margin, margin:-margin] = 1.0
    rhs = integrate(dens * mask, frames)
    return lhs, rhs, abs(lhs - rhs)
