"""Induced metric, orthonormal frames, second fundamental form, connections.

Everything is computed on the chart grid from jets.  The tangent frame is
the Gram-Schmidt frame of (F_u, F_v), which is positively oriented with
respect to the chart.  The normal frame comes from projecting smooth
reference fields onto the normal space and orthonormalizing pointwise; a
row-major continuation sweep then repairs any frame flips by rotating a
point's frame (polar alignment) towards its already-processed neighbor.
For the catalog surfaces the reference projections never lose rank and the
sweep leaves the smooth pointwise gauge untouched, which is what makes the
grid derivatives of the frame fields second-order accurate.

Index conventions used throughout the package:

* ``tau[..., i, :]``   tangent frame vector tau_i in ambient coordinates,
* ``nu[..., a, :]``    normal frame vector nu_a in ambient coordinates,
* ``c[..., i, a]``     chart coefficients, tau_i = c[i,0] d_u + c[i,1] d_v,
* ``gamma_chart[..., a, l, j] = <d_a tau_j, tau_l>`` (antisymmetric in l,j),
* ``omega_chart[..., a, b, g] = <d_a nu_g, nu_b>``  (antisymmetric in b,g).

With these, a normal section with frame coefficients s has
``(D_a s)^b = d_a s^b + omega[a, b, g] s^g``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateImmersion, GaugeContinuationFailure
from .immersion import ImmersionPatch, Jet3

METRIC_TOL = 1e-8
RANK_TOL = 1e-6

#: overlap-deviation threshold above which the continuation sweep realigns
_REALIGN_THRESHOLD = 0.5


@dataclass
class InducedMetric:
    g: np.ndarray          # (nu, nv, 2, 2)
    ginv: np.ndarray       # (nu, nv, 2, 2)
    sqrt_det: np.ndarray   # (nu, nv)


@dataclass
class FramePackage:
    patch: ImmersionPatch
    metric: InducedMetric
    tau: np.ndarray          # (nu, nv, 2, d)
    nu: np.ndarray           # (nu, nv, 2k, d)
    c: np.ndarray            # (nu, nv, 2, 2)
    gamma_chart: np.ndarray  # (nu, nv, 2, 2, 2)
    omega_chart: np.ndarray  # (nu, nv, 2, 2k, 2k)
    realignments: int = 0    # continuation-sweep interventions (0 = smooth gauge)
    margin: int = 1          # boundary cells where gamma/omega are one-sided

    @property
    def codim(self) -> int:
        return self.nu.shape[-2]

    @property
    def du(self) -> float:
        return self.patch.domain.du

    @property
    def dv(self) -> float:
        return self.patch.domain.dv

    def gamma_tau(self) -> np.ndarray:
        """Gamma[..., i, l, j] = <nabla_{tau_i} tau_j, tau_l>."""
        return np.einsum("...ia,...alj->...ilj", self.c, self.gamma_chart)

    def theta_tau(self) -> np.ndarray:
        """theta[..., i, b, g] = <D_{tau_i} nu_g, nu_b>."""
        return np.einsum("...ia,...abg->...ibg", self.c, self.omega_chart)


@dataclass
class SecondFundamentalForm:
    A: np.ndarray  # (nu, nv, 2, 2, 2k): A[..., i, j, a] = <A(tau_i, tau_j), nu_a>

    def norm_sq(self) -> np.ndarray:
        return np.einsum("...ija,...ija->...", self.A, self.A)

    def trace(self) -> np.ndarray:
        """tr_Sigma A as a normal-frame vector field (..., 2k)."""
        return self.A[..., 0, 0, :] + self.A[..., 1, 1, :]


@dataclass
class CurvatureFields:
    FD: np.ndarray      # (nu, nv, 2k, 2k) = F^D(tau_1, tau_2), antisymmetric
    K: np.ndarray       # (nu, nv) Gauss curvature
    margin: int = 2

    def rsigma_tau(self, sign: float = 1.0) -> np.ndarray:
        """R^Sigma(tau_1, tau_2) as a 2x2 matrix on the tangent frame.

        Entry [l, j] = <R(tau_1,tau_2) tau_j, tau_l> for the bracket
        convention R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]; ``sign=-1``
        selects the opposite convention.
        """
        m = np.zeros(self.K.shape + (2, 2))
        m[..., 0, 1] = sign * self.K
        m[..., 1, 0] = -sign * self.K
        return m


def grid_partials(f: np.ndarray, du: float, dv: float) -> tuple[np.ndarray, np.ndarray]:
    """Centered partial derivatives along the two grid axes.

    Edge rows/columns use one-sided second-order stencils and must be
    trimmed by the caller before any reported reduction.
    """
    fu = np.gradient(f, du, axis=0, edge_order=2)
    fv = np.gradient(f, dv, axis=1, edge_order=2)
    return fu, fv


def trim(f: np.ndarray, margin: int) -> np.ndarray:
    """Drop ``margin`` cells from each chart-grid edge."""
    if margin == 0:
        return f
    return f[margin:-margin, margin:-margin]


def _tangent_frame(jet: Jet3):
    Fu, Fv = jet.Fu, jet.Fv
    g = np.empty(Fu.shape[:-1] + (2, 2))
    g[..., 0, 0] = np.einsum("...d,...d->...", Fu, Fu)
    g[..., 0, 1] = g[..., 1, 0] = np.einsum("...d,...d->...", Fu, Fv)
    g[..., 1, 1] = np.einsum("...d,...d->...", Fv, Fv)

    nrm_u = np.sqrt(g[..., 0, 0])
    if nrm_u.min() < 1e-12:
        raise DegenerateImmersion("vanishing first coordinate tangent")
    tau1 = Fu / nrm_u[..., None]
    proj = np.einsum("...d,...d->...", Fv, tau1)
    w = Fv - proj[..., None] * tau1
    nrm_w = np.linalg.norm(w, axis=-1)
    if nrm_w.min() < 1e-12:
        raise DegenerateImmersion("rank-deficient differential")
    tau2 = w / nrm_w[..., None]

    c = np.zeros(g.shape)
    c[..., 0, 0] = 1.0 / nrm_u
    c[..., 1, 0] = -proj / (nrm_u * nrm_w)
    c[..., 1, 1] = 1.0 / nrm_w
    tau = np.stack([tau1, tau2], axis=-2)
    return g, tau, c


def _default_reference(patch: ImmersionPatch, shape):
    ref = np.zeros(shape + (patch.codim, patch.ambient_dim))
    for a in range(patch.codim):
        ref[..., a, 2 + a] = 1.0
    return ref


def _pointwise_normal_frame(ref, tau, rank_tol: float):
    """Project reference fields onto the normal space and Gram-Schmidt them.

    Returns (frame, min_norm): the smallest pre-normalization column norm
    seen, which certifies the gauge is smooth when well above rank_tol.
    """
    twok = ref.shape[-2]
    vecs = ref - np.einsum("...ad,...id,...ie->...ae", ref, tau, tau)
    out = np.empty_like(vecs)
    min_norm = np.inf
    for a in range(twok):
        v = vecs[..., a, :].copy()
        for b in range(a):
            v -= np.einsum("...d,...d->...", v, out[..., b, :])[..., None] * out[..., b, :]
        nrm = np.linalg.norm(v, axis=-1)
        min_norm = min(min_norm, float(nrm.min()))
        if min_norm < rank_tol:
            return None, min_norm
        out[..., a, :] = v / nrm[..., None]
    return out, min_norm


def _polar_align(frame: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Rotate ``frame`` (rows = vectors) to best match ``target``."""
    M = target @ frame.T
    U, _, Vt = np.linalg.svd(M)
    return (U @ Vt) @ frame


def _continuation_sweep(nu_frame: np.ndarray) -> int:
    """Row-major sweep repairing discontinuities against the previous
    neighbor; returns the number of realignments applied."""
    n_u, n_v = nu_frame.shape[:2]
    twok = nu_frame.shape[2]
    eye = np.eye(twok)
    count = 0
    for i in range(n_u):
        for j in range(n_v):
            if i == 0 and j == 0:
                continue
            prev = nu_frame[i, j - 1] if j > 0 else nu_frame[i - 1, j]
            overlap = nu_frame[i, j] @ prev.T
            if np.linalg.norm(overlap - eye) > _REALIGN_THRESHOLD:
                nu_frame[i, j] = _polar_align(nu_frame[i, j], prev)
                count += 1
    return count


def frame_at(patch: ImmersionPatch, U, V, rank_tol: float = RANK_TOL):
    """Pointwise frames at arbitrary chart points (the smooth gauge).

    Only valid when the grid frames did not need continuation repairs;
    ``compute_frames`` records that in ``realignments``.
    """
    jet = patch.jet(U, V, order=1)
    g, tau, c = _tangent_frame(jet)
    shape = np.asarray(jet.F).shape[:-1]
    if patch.normal_reference is not None:
        ref = patch.normal_reference(U, V)
    else:
        ref = _default_reference(patch, shape)
    nu_frame, min_norm = _pointwise_normal_frame(ref, tau, rank_tol)
    if nu_frame is None:
        raise GaugeContinuationFailure(
            f"normal reference projections lost rank (min norm {min_norm:.2e})"
        )
    return g, tau, c, nu_frame


def compute_frames(
    patch: ImmersionPatch,
    metric_tol: float = METRIC_TOL,
    rank_tol: float = RANK_TOL,
) -> FramePackage:
    """Frames, metric and connection coefficient fields on the chart grid."""
    jet = patch.grid_jets(order=1)
    g, tau, c = _tangent_frame(jet)

    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
    tr = g[..., 0, 0] + g[..., 1, 1]
    lam_min = 0.5 * (tr - np.sqrt(np.maximum(tr**2 - 4 * det, 0.0)))
    if lam_min.min() < metric_tol:
        raise DegenerateImmersion(
            f"metric eigenvalue {lam_min.min():.3e} below metric_tol={metric_tol:g}"
        )
    if np.sqrt(lam_min.min()) < rank_tol:
        raise DegenerateImmersion("Jacobian smallest singular value below rank_tol")

    metric = InducedMetric(g=g, ginv=np.linalg.inv(g), sqrt_det=np.sqrt(det))

    shape = g.shape[:-2]
    if patch.normal_reference is not None:
        U, V = patch.domain.mesh()
        ref = patch.normal_reference(U, V)
    else:
        ref = _default_reference(patch, shape)

    nu_frame, min_norm = _pointwise_normal_frame(ref, tau, rank_tol)
    if nu_frame is None:
        raise GaugeContinuationFailure(
            f"normal reference projections lost rank (min norm {min_norm:.2e}); "
            "supply a better normal_reference for this patch"
        )
    realignments = _continuation_sweep(nu_frame)

    du, dv = patch.domain.du, patch.domain.dv
    tau_u, tau_v = grid_partials(tau, du, dv)
    nu_u, nu_v = grid_partials(nu_frame, du, dv)

    gamma_chart = np.empty(shape + (2, 2, 2))
    omega_chart = np.empty(shape + (2, patch.codim, patch.codim))
    for a, (dt, dn) in enumerate(((tau_u, nu_u), (tau_v, nu_v))):
        raw = np.einsum("...jd,...ld->...lj", dt, tau)
        gamma_chart[..., a, :, :] = 0.5 * (raw - np.swapaxes(raw, -1, -2))
        raw = np.einsum("...gd,...bd->...bg", dn, nu_frame)
        omega_chart[..., a, :, :] = 0.5 * (raw - np.swapaxes(raw, -1, -2))

    return FramePackage(
        patch=patch,
        metric=metric,
        tau=tau,
        nu=nu_frame,
        c=c,
        gamma_chart=gamma_chart,
        omega_chart=omega_chart,
        realignments=realignments,
    )


def omega_at(patch: ImmersionPatch, U, V, step: float = 1e-5):
    """Normal connection matrices (omega_u, omega_v) at arbitrary points.

    Uses tiny centered differences of the pointwise smooth gauge, so the
    result is h-independent up to ~1e-10; used by the transport integrator.
    """
    U = np.asarray(U, float)
    V = np.asarray(V, float)
    _, _, _, nu0 = frame_at(patch, U, V)
    out = []
    for dU, dV in (((step, 0.0)), ((0.0, step))):
        _, _, _, nup = frame_at(patch, U + dU, V + dV)
        _, _, _, num = frame_at(patch, U - dU, V - dV)
        dn = (nup - num) / (2 * step)
        raw = np.einsum("...gd,...bd->...bg", dn, nu0)
        out.append(0.5 * (raw - np.swapaxes(raw, -1, -2)))
    return out[0], out[1]


def second_fundamental_form(patch: ImmersionPatch, frames: FramePackage) -> SecondFundamentalForm:
    """A[..., i, j, a] = <Hess F(tau_i, tau_j), nu_a>; exact per point given
    exact jets, and symmetric in (i, j) by the symmetry of the jet."""
    jet = patch.grid_jets(order=2)
    H = np.stack(
        [np.stack([jet.Fuu, jet.Fuv], axis=-2), np.stack([jet.Fuv, jet.Fvv], axis=-2)],
        axis=-3,
    )  # (..., a, b, d)
    Hn = np.einsum("...abd,...nd->...abn", H, frames.nu)
    A = np.einsum("...ia,...jb,...abn->...ijn", frames.c, frames.c, Hn)
    return SecondFundamentalForm(A=A)


def minimality_residual(A: SecondFundamentalForm) -> float:
    """max over the grid of |tr_Sigma A|."""
    return float(np.linalg.norm(A.trace(), axis=-1).max())


def connection_coefficients(frames: FramePackage) -> tuple[np.ndarray, np.ndarray]:
    """(Gamma, theta) along the tangent frame directions.

    Gamma[..., i, l, j] = <nabla_{tau_i} tau_j, tau_l> and
    theta[..., i, b, g] = <D_{tau_i} nu_g, nu_b>; both antisymmetric in
    their last two indices by construction.
    """
    return frames.gamma_tau(), frames.theta_tau()


def curvatures(frames: FramePackage) -> CurvatureFields:
    """Normal curvature F^D(tau_1, tau_2) and Gauss curvature.

    Chart curvature of a connection d + w is dw + w ^ w; evaluation on the
    orthonormal frame rescales by det(c) = 1/sqrt(det g).
    """
    du, dv = frames.du, frames.dv
    detc = frames.c[..., 0, 0] * frames.c[..., 1, 1] - frames.c[..., 0, 1] * frames.c[..., 1, 0]

    w_u = frames.omega_chart[..., 0, :, :]
    w_v = frames.omega_chart[..., 1, :, :]
    dwv_u, _ = grid_partials(w_v, du, dv)
    _, dwu_v = grid_partials(w_u, du, dv)
    F_uv = dwv_u - dwu_v + w_u @ w_v - w_v @ w_u
    FD = detc[..., None, None] * F_uv

    g_u = frames.gamma_chart[..., 0, :, :]
    g_v = frames.gamma_chart[..., 1, :, :]
    dgv_u, _ = grid_partials(g_v, du, dv)
    _, dgu_v = grid_partials(g_u, du, dv)
    G_uv = dgv_u - dgu_v + g_u @ g_v - g_v @ g_u
    K = detc * G_uv[..., 0, 1]

    return CurvatureFields(FD=FD, K=K, margin=frames.margin + 1)
