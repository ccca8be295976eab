"""Holomorphicity diagnostics for the splitting A = A+ + A-.

Implements the (0,1)/(1,0) halves of the normal connection on
tangent-slotted, normal-valued tensors, the holomorphicity checks for A+
and A-, the two Weitzenboeck-type second-order identities, the elliptic
equation satisfied by A+, and the reconstruction of a constant ambient
complex structure from the frame data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .calculus import cov_deriv, trimmed_max_norm
from .complex_structure import JSIGMA_FRAME, as_field, pullback_structure
from .errors import MinimalityPreconditionViolated
from .frames import CurvatureFields, FramePackage, SecondFundamentalForm, grid_partials
from .variation import ApmTensors, antiholomorphic_residual

#: trace of A above this triggers the minimality warning in the A+ / A-
#: holomorphicity check
MINIMALITY_WARN_TOL = 1e-6


@dataclass
class HoloResiduals:
    """Residuals of the two equivalent holomorphicity conditions, for both
    orientations of the normal structure.

    res_b is algebraic, max || A(J_Sigma v, w) - J_N A(v, w) ||, and equals
    2 max ||A-|| identically.  res_a differentiates the pulled-back ambient
    structure along the surface, max_i || d_{tau_i} J ||, which vanishes iff
    the same structure parallel-extends off the surface.
    """

    res_b: float
    res_a: float
    res_b_minus: float
    res_a_minus: float


def inf_holo_residuals(
    A: SecondFundamentalForm, frames: FramePackage, JN: np.ndarray, margin: int = 2
) -> HoloResiduals:
    JN = as_field(JN, frames)

    def res_a(sign):
        Jamb = pullback_structure(frames, JN, sign)
        Ju, Jv = grid_partials(Jamb, frames.du, frames.dv)
        chart = np.stack([Ju, Jv], axis=2)
        dJ = np.einsum("...ia,...a de->...i de", frames.c, chart)
        return trimmed_max_norm(dJ, margin, vec_axes=3)

    return HoloResiduals(
        res_b=antiholomorphic_residual(A, JN, frames),
        res_a=res_a(1.0),
        res_b_minus=antiholomorphic_residual(A, -JN, frames),
        res_a_minus=res_a(-1.0),
    )


# ---------------------------------------------------------------------------
# the (0,1)/(1,0) calculus
# ---------------------------------------------------------------------------


def _split_leading(DT: np.ndarray, JN: np.ndarray, part: str) -> np.ndarray:
    """Project the leading tau slot of a derivative tensor:
    (0,1) half = (DT_v + J_N DT_{J_Sigma v}) / 2, (1,0) = the difference."""
    DTJ = np.einsum("lv,xyl...->xyv...", JSIGMA_FRAME, DT)
    JDTJ = np.einsum("xybg,xy...g->xy...b", JN, DTJ)
    if part == "01":
        return 0.5 * (DT + JDTJ)
    if part == "10":
        return 0.5 * (DT - JDTJ)
    raise ValueError(part)


def dbar_operators(
    T: np.ndarray, frames: FramePackage, JN: np.ndarray, n_tslots: int
) -> tuple[np.ndarray, np.ndarray]:
    """(D01 T, D10 T) for a normal-valued tensor with ``n_tslots`` tangent
    slots; each output gains a leading tau-direction slot."""
    JN = as_field(JN, frames)
    DT = cov_deriv(T, frames, n_tslots)
    return _split_leading(DT, JN, "01"), _split_leading(DT, JN, "10")


def dbar_intertwining_residual(
    T: np.ndarray, frames: FramePackage, JN: np.ndarray, n_tslots: int, margin: int = 2
) -> float:
    """max || (D01 T)_{J_Sigma v} + J_N (D01 T)_v ||, zero by construction
    up to roundoff for any T."""
    JN = as_field(JN, frames)
    D01, _ = dbar_operators(T, frames, JN, n_tslots)
    DJ = np.einsum("lv,xyl...->xyv...", JSIGMA_FRAME, D01)
    JD = np.einsum("xybg,xy...g->xy...b", JN, D01)
    return trimmed_max_norm(DJ + JD, margin, vec_axes=T.ndim - 2 + 1)


def verify_apm_holomorphicity(
    apm: ApmTensors,
    frames: FramePackage,
    JN: np.ndarray,
    A: SecondFundamentalForm,
    margin: int = 2,
):
    """Headline residuals res_plus = max |(D01 A+)_{tau1,tau1,tau1}| and
    res_minus = max |(D10 A-)_{tau1,tau1,tau1}|, plus the full-tensor
    residuals as a redundancy check.

    Warns (and still computes) when the surface is visibly non-minimal:
    the vanishing statement uses the Codazzi equation with tr A = 0.
    """
    tr = trimmed_max_norm(A.trace(), margin)
    if tr > MINIMALITY_WARN_TOL:
        warnings.warn(
            f"trace of A reaches {tr:.3e}; holomorphicity of A+/A- needs "
            "minimality and these residuals will not decay",
            MinimalityPreconditionViolated,
        )
    JN = as_field(JN, frames)
    D01p, _ = dbar_operators(apm.Aplus, frames, JN, n_tslots=2)
    _, D10m = dbar_operators(apm.Aminus, frames, JN, n_tslots=2)
    res_plus = trimmed_max_norm(D01p[..., 0, 0, 0, :], margin)
    res_minus = trimmed_max_norm(D10m[..., 0, 0, 0, :], margin)
    full_plus = trimmed_max_norm(D01p, margin, vec_axes=4)
    full_minus = trimmed_max_norm(D10m, margin, vec_axes=4)
    return res_plus, res_minus, full_plus, full_minus


# ---------------------------------------------------------------------------
# second-order identities
# ---------------------------------------------------------------------------


def _trace_second(S: np.ndarray, frames: FramePackage, n_tslots: int) -> np.ndarray:
    """-sum_i (D_{tau_i} S)_{tau_i} for a tensor S whose leading slot is a
    tau direction (the rough divergence closing S back to T's shape)."""
    DS = cov_deriv(S, frames, n_tslots + 1)
    return -np.einsum("xyii...->xy...", DS)


def verify_weitzenbock(
    T: np.ndarray, frames: FramePackage, JN: np.ndarray, n_tslots: int, margin: int = 3
) -> tuple[float, float]:
    """Residuals of the two second-order identities for the split halves.

    sum: (D10)*(D10)T + (D01)*(D01)T = D*D T.
    diff: (D10)*(D10)T - (D01)*(D01)T = J_N (D^2_{1,2} - D^2_{2,1}) T,
    the commutator acting through the twisted curvature.
    The adjoints reduce to the rough divergence because each half is
    already a (0,1)- resp. (1,0)-form in its leading slot.
    """
    JN = as_field(JN, frames)
    DT = cov_deriv(T, frames, n_tslots)
    D2T = cov_deriv(DT, frames, n_tslots + 1)  # [..., w, v, slots..., b]
    rough = -np.einsum("xyii...->xy...", D2T)

    box01 = _trace_second(_split_leading(DT, JN, "01"), frames, n_tslots)
    box10 = _trace_second(_split_leading(DT, JN, "10"), frames, n_tslots)

    sum_res = trimmed_max_norm(box10 + box01 - rough, margin, vec_axes=n_tslots + 1)

    comm = D2T[:, :, 0, 1] - D2T[:, :, 1, 0]
    Jcomm = np.einsum("xybg,xy...g->xy...b", JN, comm)
    diff_res = trimmed_max_norm(box10 - box01 - Jcomm, margin, vec_axes=n_tslots + 1)
    return sum_res, diff_res


def a_plus_pde_residual(
    apm: ApmTensors,
    frames: FramePackage,
    JN: np.ndarray,
    curv: CurvatureFields,
    margin: int = 3,
) -> dict:
    """Residual of the elliptic identity
    (1/2) D*D A+ = (1/2) J_N [ F^D(A+_{v,w}) - A+(Rv, w) - A+(v, Rw) ]
    with R the tangent curvature operator, tested under both sign
    conventions for R; returns both residuals and the annihilating sign.
    """
    JN = as_field(JN, frames)
    DT = cov_deriv(apm.Aplus, frames, n_tslots=2)
    D2T = cov_deriv(DT, frames, n_tslots=3)
    rough = -np.einsum("xyii...->xy...", D2T)  # [..., v, w, b]

    FA = np.einsum("xybg,xyvwg->xyvwb", curv.FD, apm.Aplus)
    out = {}
    for sign in (1.0, -1.0):
        R = curv.rsigma_tau(sign)  # [..., 2, 2]
        ARw = np.einsum("xylv,xylwb->xyvwb", R, apm.Aplus)
        AwR = np.einsum("xylw,xyvlb->xyvwb", R, apm.Aplus)
        rhs = 0.5 * np.einsum("xybg,xyvwg->xyvwb", JN, FA - ARw - AwR)
        out[sign] = trimmed_max_norm(0.5 * rough - rhs, margin, vec_axes=3)
    out["sign"] = 1.0 if out[1.0] <= out[-1.0] else -1.0
    out["residual"] = min(out[1.0], out[-1.0])
    return out


# ---------------------------------------------------------------------------
# ambient structure reconstruction
# ---------------------------------------------------------------------------


@dataclass
class AmbientComplexStructure:
    Jbar: np.ndarray
    constancy_residual: float
    holomorphy_residual: float
    #: Frobenius distance moved by the polar projection of the grid mean
    projection_distance: float

    def orthogonality_defect(self) -> float:
        n = self.Jbar.shape[0]
        return float(np.linalg.norm(self.Jbar.T @ self.Jbar - np.eye(n)))

    def square_defect(self) -> float:
        n = self.Jbar.shape[0]
        return float(np.linalg.norm(self.Jbar @ self.Jbar + np.eye(n)))


def reconstruct_ambient_J(
    frames: FramePackage, JN: np.ndarray, which: str = "plus", margin: int = 2
) -> AmbientComplexStructure:
    """Assemble J_{ij}(x) = <e_i, J e_j> from the surface data, average it
    over the interior grid, and project to the nearest orthogonal matrix.

    On a surface admitting a genuinely constant ambient structure the
    constancy residual is discretization-small; on the catenoid it is
    bounded below at every resolution, which is the numerical face of the
    converse direction.
    """
    sign = {"plus": 1.0, "minus": -1.0}[which]
    JN = as_field(JN, frames)
    Jamb = pullback_structure(frames, JN, sign)

    m = margin
    interior = Jamb[m:-m, m:-m]
    mean = interior.mean(axis=(0, 1))
    U, _, Vt = np.linalg.svd(mean)
    Jbar = U @ Vt
    proj_dist = float(np.linalg.norm(Jbar - mean))

    constancy = trimmed_max_norm(Jamb - Jbar, margin, vec_axes=2)

    # holomorphy: J_bar tau_1 = tau_2 and J_bar tau_2 = -tau_1
    r1 = np.einsum("de,xye->xyd", Jbar, frames.tau[..., 0, :]) - frames.tau[..., 1, :]
    r2 = np.einsum("de,xye->xyd", Jbar, frames.tau[..., 1, :]) + frames.tau[..., 0, :]
    holo = max(trimmed_max_norm(r1, margin), trimmed_max_norm(r2, margin))

    return AmbientComplexStructure(
        Jbar=Jbar,
        constancy_residual=constancy,
        holomorphy_residual=holo,
        projection_distance=proj_dist,
    )
