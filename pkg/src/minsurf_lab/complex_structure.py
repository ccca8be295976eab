"""Complex structures on the tangent and normal bundles.

The tangent-bundle structure is the +90 degree rotation in the oriented
orthonormal frame.  Normal structures J_N are matrix fields in the normal
frame, checked against three axioms: orthogonality, square = -Id, and
parallelism with respect to the induced normal connection.  The module also
integrates normal parallel transport along grid loops and searches the
commutant of the collected holonomy/curvature matrices for a parallel
complex structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LoopLeavesDomain
from .frames import (
    CurvatureFields,
    FramePackage,
    grid_partials,
    omega_at,
    trim,
)
from .calculus import trimmed_max_norm

#: relative singular-value threshold separating the numerical commutant
#: null space from noise
COMMUTANT_TOL = 1e-6

#: J_Sigma in frame components: J tau_1 = tau_2, J tau_2 = -tau_1
JSIGMA_FRAME = np.array([[0.0, -1.0], [1.0, 0.0]])

#: default chart-distance bound for one RK4 transport step
TRANSPORT_STEP = 0.02


def canonical_JSigma(frames: FramePackage) -> np.ndarray:
    """Ambient-coordinate field of J_Sigma (rotation by +90 degrees in the
    oriented tangent frame): tau_2 tau_1^T - tau_1 tau_2^T."""
    t1 = frames.tau[..., 0, :]
    t2 = frames.tau[..., 1, :]
    return np.einsum("...d,...e->...de", t2, t1) - np.einsum("...d,...e->...de", t1, t2)


@dataclass
class AxiomReport:
    orthogonality: float
    square: float
    parallelism: float

    def max_residual(self) -> float:
        return max(self.orthogonality, self.square, self.parallelism)


def as_field(JN: np.ndarray, frames: FramePackage) -> np.ndarray:
    """Broadcast a constant matrix to a grid field if needed."""
    if JN.ndim == 2:
        shape = frames.metric.sqrt_det.shape
        return np.broadcast_to(JN, shape + JN.shape).copy()
    return JN


def check_JN_axioms(JN: np.ndarray, frames: FramePackage, margin: int = 2) -> AxiomReport:
    """Residuals of the three normal-structure axioms.

    Parallelism is measured as max_i || d_{tau_i} J_N + [theta_i, J_N] ||,
    the frame expression of D(J_N s) = J_N(D s).
    """
    JN = as_field(JN, frames)
    twok = JN.shape[-1]
    eye = np.eye(twok)
    orth = trimmed_max_norm(np.swapaxes(JN, -1, -2) @ JN - eye, 0, vec_axes=2)
    square = trimmed_max_norm(JN @ JN + eye, 0, vec_axes=2)

    Ju, Jv = grid_partials(JN, frames.du, frames.dv)
    chart = np.stack([Ju, Jv], axis=2)
    for a in range(2):
        w = frames.omega_chart[:, :, a]
        chart[:, :, a] += w @ JN - JN @ w
    par_tau = np.einsum("...ia,...a de->...i de", frames.c, chart)
    par = trimmed_max_norm(par_tau, margin, vec_axes=3)
    return AxiomReport(orthogonality=orth, square=square, parallelism=par)


def pullback_structure(frames: FramePackage, JN: np.ndarray, sign: float = 1.0) -> np.ndarray:
    """Ambient matrix field of J X = J_Sigma X^T + sign * J_N X^perp."""
    JN = as_field(JN, frames)
    JS = canonical_JSigma(frames)
    # normal part: sum_bg nu_b JN[b,g] nu_g^T
    JNamb = np.einsum("...bd,...bg,...ge->...de", frames.nu, JN, frames.nu)
    return JS + sign * JNamb


def nearest_complex_structure(M: np.ndarray) -> np.ndarray:
    """Closest orthogonal anti-symmetric square root of -Id to M (pointwise
    over leading axes): antisymmetrize, then S (-S^2)^(-1/2)."""
    S = 0.5 * (M - np.swapaxes(M, -1, -2))
    lam, Q = np.linalg.eigh(-S @ S)
    lam = np.maximum(lam, 1e-300)
    inv_sqrt = np.einsum("...ab,...b,...cb->...ac", Q, 1.0 / np.sqrt(lam), Q)
    return S @ inv_sqrt


# ---------------------------------------------------------------------------
# parallel transport
# ---------------------------------------------------------------------------


class NormalConnection:
    """Connection matrices omega_u, omega_v evaluated at chart points, plus
    transport along polylines; base class interface."""

    def __init__(self, domain, twok: int):
        self.domain = domain
        self.twok = twok

    def omega(self, u, v):  # -> (omega_u, omega_v), each (..., 2k, 2k)
        raise NotImplementedError

    def transport(self, path: np.ndarray, step: float = TRANSPORT_STEP) -> np.ndarray:
        """Parallel transport along the polyline ``path`` ((n, 2) chart
        points): solves dP/ds = -omega(gamma') P with RK4 steps no longer
        than ``step`` in chart distance."""
        path = np.asarray(path, float)
        dom = self.domain
        if not np.all(dom.contains(path[:, 0], path[:, 1])):
            raise LoopLeavesDomain("transport path has a vertex outside the chart")
        P = np.eye(self.twok)
        for (u0, v0), (u1, v1) in zip(path[:-1], path[1:]):
            seg = float(np.hypot(u1 - u0, v1 - v0))
            if seg == 0.0:
                continue
            n = max(1, int(np.ceil(seg / step)))
            # omega at every step endpoint and midpoint in one batched
            # evaluation; the RK4 recurrence itself is cheap
            ts = np.linspace(0.0, 1.0, 2 * n + 1)
            wu, wv = self.omega(u0 + ts * (u1 - u0), v0 + ts * (v1 - v0))
            omdir = -((u1 - u0) * wu + (v1 - v0) * wv)
            h = 1.0 / n
            for s in range(n):
                A1, A2, A4 = omdir[2 * s], omdir[2 * s + 1], omdir[2 * s + 2]
                k1 = h * (A1 @ P)
                k2 = h * (A2 @ (P + 0.5 * k1))
                k3 = h * (A2 @ (P + 0.5 * k2))
                k4 = h * (A4 @ (P + k3))
                P = P + (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        return P


class PatchConnection(NormalConnection):
    """Connection of an immersion patch in the smooth pointwise gauge;
    omega is evaluated on demand by tiny-step frame differencing, so the
    transport integrator keeps its full fourth order."""

    def __init__(self, patch, frames: FramePackage, step: float = 1e-5):
        super().__init__(patch.domain, frames.codim)
        self.patch = patch
        self.step = step

    def omega(self, u, v):
        return omega_at(self.patch, np.asarray(u), np.asarray(v), self.step)


class GridConnection(NormalConnection):
    """Connection given by omega grids (bilinear interpolation between
    nodes); used for synthetic connection fields."""

    def __init__(self, domain, omega_u: np.ndarray, omega_v: np.ndarray):
        super().__init__(domain, omega_u.shape[-1])
        self.omega_u = omega_u
        self.omega_v = omega_v

    def _interp(self, W, u, v):
        dom = self.domain
        x = np.clip((np.asarray(u, float) - dom.u_min) / dom.du, 0, dom.nu - 1 - 1e-12)
        y = np.clip((np.asarray(v, float) - dom.v_min) / dom.dv, 0, dom.nv - 1 - 1e-12)
        i = np.floor(x).astype(int)
        j = np.floor(y).astype(int)
        fx = (x - i)[..., None, None]
        fy = (y - j)[..., None, None]
        return (
            (1 - fx) * (1 - fy) * W[i, j]
            + fx * (1 - fy) * W[i + 1, j]
            + (1 - fx) * fy * W[i, j + 1]
            + fx * fy * W[i + 1, j + 1]
        )

    def omega(self, u, v):
        return self._interp(self.omega_u, u, v), self._interp(self.omega_v, u, v)


def connection_for(patch, frames: FramePackage) -> NormalConnection:
    """Preferred transportable connection for a patch: the pointwise smooth
    gauge when available, otherwise the grid fields."""
    if frames.realignments == 0:
        return PatchConnection(patch, frames)
    return GridConnection(
        patch.domain, frames.omega_chart[..., 0, :, :], frames.omega_chart[..., 1, :, :]
    )


def parallel_transport_normal(
    conn: NormalConnection, loop: np.ndarray, step: float = TRANSPORT_STEP
) -> np.ndarray:
    """Transport around a closed polygon of chart points; the loop is closed
    automatically if its endpoints differ."""
    loop = np.asarray(loop, float)
    if not np.allclose(loop[0], loop[-1]):
        loop = np.vstack([loop, loop[0]])
    return conn.transport(loop, step)


def rectangle_loops(domain, n_anchor: int = 6) -> list[np.ndarray]:
    """Axis-aligned rectangles anchored at the domain corner, with opposite
    corners on a coarse sublattice, plus the domain boundary loop."""
    us = np.linspace(domain.u_min, domain.u_max, n_anchor + 1)[1:]
    vs = np.linspace(domain.v_min, domain.v_max, n_anchor + 1)[1:]
    loops = []
    for u in us:
        for v in vs:
            loops.append(
                np.array(
                    [
                        [domain.u_min, domain.v_min],
                        [u, domain.v_min],
                        [u, v],
                        [domain.u_min, v],
                        [domain.u_min, domain.v_min],
                    ]
                )
            )
    return loops


# ---------------------------------------------------------------------------
# commutant search for a parallel J_N
# ---------------------------------------------------------------------------


@dataclass
class ParallelJNResult:
    found: bool
    JN: np.ndarray | None  # grid field (nu, nv, 2k, 2k) when found
    commutant_dim: int
    antisym_dim: int
    #: smallest singular value above the commutant cutoff (the certificate
    #: that further null directions do not exist)
    certificate: float
    holonomy_matrices: list = field(default_factory=list)
    axiom_report: AxiomReport | None = None


def commutant_basis(mats: list[np.ndarray], tol: float = COMMUTANT_TOL):
    """Orthonormal basis (as matrices) of {J : [G, J] = 0 for all G}."""
    n = mats[0].shape[0]
    eye = np.eye(n)
    blocks = [np.kron(G, eye) - np.kron(eye, G.T) for G in mats]
    L = np.vstack(blocks)
    _, s, Vt = np.linalg.svd(L)
    cutoff = tol * max(s[0], 1.0)
    null_mask = s <= cutoff
    dim = int(null_mask.sum()) + (n * n - len(s))
    basis = [Vt[i].reshape(n, n) for i in range(len(s)) if null_mask[i]]
    # rows of Vt beyond rank are also null directions
    for i in range(len(s), n * n):
        basis.append(Vt[i].reshape(n, n))
    certificate = float(s[~null_mask].min()) if (~null_mask).any() else 0.0
    return basis, dim, certificate


def transport_field(conn: NormalConnection, J0: np.ndarray, domain, step: float = TRANSPORT_STEP):
    """Conjugate J0 from the domain corner to every grid node by parallel
    transport along the first column and then along rows."""
    us, vs = domain.u_grid(), domain.v_grid()
    n_u, n_v = len(us), len(vs)
    T = np.empty((n_u, n_v, conn.twok, conn.twok))
    T[0, 0] = np.eye(conn.twok)
    for i in range(1, n_u):
        T[i, 0] = conn.transport(np.array([[us[i - 1], vs[0]], [us[i], vs[0]]]), step) @ T[i - 1, 0]
    for j in range(1, n_v):
        steps = np.empty((n_u, conn.twok, conn.twok))
        for i in range(n_u):
            steps[i] = conn.transport(np.array([[us[i], vs[j - 1]], [us[i], vs[j]]]), step)
        T[:, j] = steps @ T[:, j - 1]
    return np.einsum("xyab,bc,xydc->xyad", T, J0, T)


def find_parallel_JN(
    conn: NormalConnection,
    loops: list[np.ndarray] | None = None,
    curvature_samples: list[np.ndarray] | None = None,
    step: float = TRANSPORT_STEP,
    frames: FramePackage | None = None,
    tol: float = COMMUTANT_TOL,
) -> ParallelJNResult:
    """Search the commutant of holonomy and curvature matrices for a
    parallel orthogonal complex structure; NoneFound is a value.

    When ``frames`` is given the returned field's axioms are re-checked
    against the frame connection and attached to the result.
    """
    domain = conn.domain
    if loops is None:
        loops = rectangle_loops(domain)
    holonomies = [parallel_transport_normal(conn, lp, step) for lp in loops]
    mats = list(holonomies)
    if curvature_samples:
        mats += [np.asarray(Fx) for Fx in curvature_samples]

    basis, dim, certificate = commutant_basis(mats, tol)

    # antisymmetric part of the commutant
    anti = [0.5 * (B - B.T) for B in basis]
    stacked = np.array([a.ravel() for a in anti])
    if stacked.size:
        _, s, Vt = np.linalg.svd(stacked, full_matrices=False)
        keep = s > 1e-8 * max(1.0, s[0] if len(s) else 1.0)
        anti_basis = [Vt[i].reshape(anti[0].shape) for i in np.nonzero(keep)[0]]
    else:
        anti_basis = []

    def none_result():
        return ParallelJNResult(
            found=False,
            JN=None,
            commutant_dim=dim,
            antisym_dim=len(anti_basis),
            certificate=certificate,
            holonomy_matrices=holonomies,
        )

    if not anti_basis:
        return none_result()

    # deterministic candidate combinations: prefixes of the antisym basis
    comm_scale = max(np.linalg.norm(G - np.eye(conn.twok)) for G in mats)
    comm_scale = max(comm_scale, 10 * tol)
    for stop in range(1, len(anti_basis) + 1):
        S = sum(anti_basis[:stop])
        sv = np.linalg.svd(S, compute_uv=False)
        if sv[-1] < 1e-8 * sv[0]:
            continue
        J0 = nearest_complex_structure(S)
        comm_res = max(np.linalg.norm(G @ J0 - J0 @ G) for G in mats)
        if comm_res <= 10 * tol * max(1.0, comm_scale):
            break
    else:
        return none_result()

    # canonical representative: positive first off-diagonal entry at base
    row = J0[0]
    idx = int(np.argmax(np.abs(row[1:]))) + 1
    if row[idx] < 0:
        J0 = -J0

    JN_field = transport_field(conn, J0, domain, step)
    report = check_JN_axioms(JN_field, frames) if frames is not None else None
    return ParallelJNResult(
        found=True,
        JN=JN_field,
        commutant_dim=dim,
        antisym_dim=len(anti_basis),
        certificate=certificate,
        holonomy_matrices=holonomies,
        axiom_report=report,
    )


# ---------------------------------------------------------------------------
# catalog structures and synthetic connections
# ---------------------------------------------------------------------------


def catalog_normal_structure(patch, frames: FramePackage) -> np.ndarray:
    """The canonical J_N field for a catalog surface, in frame components.

    Holomorphic-family patches restrict the constant ambient structure to
    the normal bundle; R^3-family patches pair the scalar normal direction
    with the first flat direction and the remaining flat pair with each
    other.  Perturbed patches project the ambient restriction to the
    nearest pointwise complex structure.
    """
    if patch.jn_frame is not None:
        return as_field(patch.jn_frame, frames)
    Jbar = patch.ambient_J
    if Jbar is None:
        raise ValueError(f"no canonical normal structure for patch {patch.name!r}")
    M = np.einsum("...bd,de,...ge->...bg", frames.nu, Jbar, frames.nu)
    if patch.family == "perturbed":
        return nearest_complex_structure(M)
    return M


def synthetic_so4_connection(domain, seed: int = 0, amplitude: float = 1.2) -> GridConnection:
    """A smooth random so(4)-valued connection whose holonomy fills SO(4),
    so that no parallel complex structure exists."""
    rng = np.random.default_rng(seed)
    U, V = domain.mesh()
    su = (U - domain.u_min) / (domain.u_max - domain.u_min)
    sv = (V - domain.v_min) / (domain.v_max - domain.v_min)

    def smooth_scalar():
        c = rng.normal(size=5)
        return (
            c[0]
            + c[1] * np.sin(np.pi * su)
            + c[2] * np.cos(np.pi * sv)
            + c[3] * np.sin(np.pi * su * sv)
            + c[4] * su * sv
        )

    def smooth_field():
        W = np.zeros(U.shape + (4, 4))
        for a in range(4):
            for b in range(a + 1, 4):
                f = amplitude * smooth_scalar()
                W[..., a, b] = f
                W[..., b, a] = -f
        return W

    return GridConnection(domain, smooth_field(), smooth_field())
