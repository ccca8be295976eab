"""Chart domains, immersion patches and the builtin surface catalog.

An :class:`ImmersionPatch` is a chart-parametrized immersion of a planar
domain into R^(2+2k), together with a jet oracle that returns partial
derivatives up to third order.  Catalog surfaces carry closed-form jets;
any patch can also be evaluated in finite-difference mode, where jets are
built from centered stencils applied to the position map alone.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import BadParams, PointOutsideDomain, UnknownSurface

#: Default finite-difference step, as a fraction of the domain extent.
FD_STEP_FRACTION = 1e-3


@dataclass(frozen=True)
class ChartDomain:
    """A rectangular chart [u_min,u_max] x [v_min,v_max] with grid resolution."""

    u_min: float
    u_max: float
    v_min: float
    v_max: float
    nu: int = 33
    nv: int = 33

    def __post_init__(self):
        if not (self.u_min < self.u_max and self.v_min < self.v_max):
            raise BadParams("chart bounds must satisfy u_min < u_max, v_min < v_max")
        if self.nu < 8 or self.nv < 8:
            raise BadParams("grid resolution must be at least 8 in each direction")

    @property
    def du(self) -> float:
        return (self.u_max - self.u_min) / (self.nu - 1)

    @property
    def dv(self) -> float:
        return (self.v_max - self.v_min) / (self.nv - 1)

    @property
    def extent(self) -> float:
        return max(self.u_max - self.u_min, self.v_max - self.v_min)

    def u_grid(self) -> np.ndarray:
        return np.linspace(self.u_min, self.u_max, self.nu)

    def v_grid(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.nv)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(nu, nv) meshgrid arrays in 'ij' indexing."""
        return np.meshgrid(self.u_grid(), self.v_grid(), indexing="ij")

    def with_resolution(self, nu: int, nv: int | None = None) -> "ChartDomain":
        return replace(self, nu=nu, nv=nv if nv is not None else nu)

    def contains(self, u, v) -> np.ndarray:
        u = np.asarray(u)
        v = np.asarray(v)
        return (
            (u >= self.u_min) & (u <= self.u_max) & (v >= self.v_min) & (v <= self.v_max)
        )


@dataclass
class Jet3:
    """Partial derivatives of the immersion at one or many points.

    All arrays share a common leading shape (the point batch) with a trailing
    ambient-dimension axis.  Third-order entries are ``None`` unless the jet
    was requested at order 3.
    """

    F: np.ndarray
    Fu: np.ndarray
    Fv: np.ndarray
    Fuu: np.ndarray | None = None
    Fuv: np.ndarray | None = None
    Fvv: np.ndarray | None = None
    Fuuu: np.ndarray | None = None
    Fuuv: np.ndarray | None = None
    Fuvv: np.ndarray | None = None
    Fvvv: np.ndarray | None = None
    order: int = 2


@dataclass
class ImmersionPatch:
    """A chart-parametrized immersion into R^(2+2k).

    ``family`` selects how downstream modules pick a canonical normal complex
    structure: "holo" surfaces carry a constant ambient structure, "r3"
    surfaces sit in an R^3 factor and pair the scalar normal with the flat
    directions, "perturbed" surfaces only admit an approximate structure.
    """

    name: str
    ambient_dim: int
    eval_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    domain: ChartDomain
    jet_fn: Callable[[np.ndarray, np.ndarray, int], Jet3] | None = None
    jet_mode: str = "analytic"  # "analytic" or "fd"
    fd_step: float | None = None
    family: str = "holo"
    params: dict = field(default_factory=dict)
    #: optional smooth reference fields for the normal-frame gauge,
    #: (U, V) -> (..., 2k, d); defaults to the last 2k ambient basis vectors.
    normal_reference: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    #: constant ambient complex structure (holo family), (d, d)
    ambient_J: np.ndarray | None = None
    #: constant normal-frame matrix J_N (r3 family), (2k, 2k)
    jn_frame: np.ndarray | None = None

    @property
    def codim(self) -> int:
        return self.ambient_dim - 2

    @property
    def k(self) -> int:
        return self.codim // 2

    def with_resolution(self, nu: int, nv: int | None = None) -> "ImmersionPatch":
        return replace(self, domain=self.domain.with_resolution(nu, nv))

    def with_jet_mode(self, mode: str, h: float | None = None) -> "ImmersionPatch":
        if mode not in ("analytic", "fd"):
            raise BadParams(f"unknown jet mode {mode!r}")
        if mode == "analytic" and self.jet_fn is None:
            raise BadParams(f"surface {self.name!r} has no analytic jets")
        return replace(self, jet_mode=mode, fd_step=h)

    def default_fd_step(self) -> float:
        return self.fd_step if self.fd_step is not None else FD_STEP_FRACTION * self.domain.extent

    def jet(self, U: np.ndarray, V: np.ndarray, order: int = 2) -> Jet3:
        """Jet at arbitrary point arrays; no domain check (catalog maps are
        entire).  Use :func:`evaluate_jet` for the checked single-point API."""
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        if self.jet_mode == "analytic":
            return self.jet_fn(U, V, order)
        return fd_jet(self.eval_fn, U, V, self.default_fd_step(), order)

    def grid_jets(self, order: int = 2) -> Jet3:
        U, V = self.domain.mesh()
        return self.jet(U, V, order)


def evaluate_jet(patch: ImmersionPatch, point: tuple[float, float], order: int = 2) -> Jet3:
    """Checked jet evaluation at a single chart point."""
    if order not in (1, 2, 3):
        raise BadParams("order must be 1, 2 or 3")
    u, v = point
    dom = patch.domain
    if not dom.contains(u, v):
        raise PointOutsideDomain(f"({u}, {v}) outside chart {dom}")
    if patch.jet_mode == "fd":
        h = patch.default_fd_step()
        margin = 2 * h
        if (
            u - dom.u_min < margin
            or dom.u_max - u < margin
            or v - dom.v_min < margin
            or dom.v_max - v < margin
        ):
            raise PointOutsideDomain(
                f"({u}, {v}) closer than 2h={margin:g} to the chart boundary"
            )
    return patch.jet(np.asarray(u), np.asarray(v), order)


def fd_jet(eval_fn, U, V, h: float, order: int) -> Jet3:
    """Centered O(h^2) finite-difference jet from the position map.

    The cross stencil is symmetric in (u, v) by construction, so mixed
    partials come out exactly equal.  Third derivatives use wider stencils
    and are noticeably less accurate.
    """
    e = eval_fn
    F = e(U, V)
    Fu = (e(U + h, V) - e(U - h, V)) / (2 * h)
    Fv = (e(U, V + h) - e(U, V - h)) / (2 * h)
    jet = Jet3(F=F, Fu=Fu, Fv=Fv, order=order)
    if order >= 2:
        jet.Fuu = (e(U + h, V) - 2 * F + e(U - h, V)) / h**2
        jet.Fvv = (e(U, V + h) - 2 * F + e(U, V - h)) / h**2
        jet.Fuv = (
            e(U + h, V + h) - e(U + h, V - h) - e(U - h, V + h) + e(U - h, V - h)
        ) / (4 * h**2)
    if order >= 3:
        jet.Fuuu = (e(U + 2 * h, V) - 2 * e(U + h, V) + 2 * e(U - h, V) - e(U - 2 * h, V)) / (
            2 * h**3
        )
        jet.Fvvv = (e(U, V + 2 * h) - 2 * e(U, V + h) + 2 * e(U, V - h) - e(U, V - 2 * h)) / (
            2 * h**3
        )

        def _dv(f):
            return (f(V + h) - f(V - h)) / (2 * h)

        jet.Fuuv = _dv(lambda W: (e(U + h, W) - 2 * e(U, W) + e(U - h, W)) / h**2)
        jet.Fuvv = (
            lambda: (
                (e(U + h, V + h) - 2 * e(U + h, V) + e(U + h, V - h))
                - (e(U - h, V + h) - 2 * e(U - h, V) + e(U - h, V - h))
            )
            / (2 * h**3)
        )()
    return jet


# ---------------------------------------------------------------------------
# holomorphic-component machinery
# ---------------------------------------------------------------------------


def _poly_derivatives(coeffs: np.ndarray, Z: np.ndarray, n: int) -> list[np.ndarray]:
    """Values of p, p', ..., p^(n) at Z for p given by ascending coefficients."""
    out = []
    c = np.asarray(coeffs, dtype=complex)
    for _ in range(n + 1):
        out.append(np.polyval(c[::-1], Z) if c.size else np.zeros_like(Z))
        c = c[1:] * np.arange(1, c.size)
    return out


def _holo_jet(poly_list: Sequence[np.ndarray], U, V, order: int) -> Jet3:
    """Jet of z -> (w_0(z), ..., w_k(z)) in C^(1+k) ~ R^(2+2k).

    Each holomorphic component w contributes the real pair (Re w, Im w);
    the partial d^m/du^m d^n/dv^n of that pair is the pair of i^n w^(m+n).
    """
    Z = np.asarray(U) + 1j * np.asarray(V)
    derivs = [_poly_derivatives(c, Z, order) for c in poly_list]

    def partial(m, n):
        comps = []
        for d in derivs:
            w = (1j**n) * d[m + n]
            comps.append(w.real)
            comps.append(w.imag)
        return np.stack(comps, axis=-1)

    jet = Jet3(F=partial(0, 0), Fu=partial(1, 0), Fv=partial(0, 1), order=order)
    if order >= 2:
        jet.Fuu = partial(2, 0)
        jet.Fuv = partial(1, 1)
        jet.Fvv = partial(0, 2)
    if order >= 3:
        jet.Fuuu = partial(3, 0)
        jet.Fuuv = partial(2, 1)
        jet.Fuvv = partial(1, 2)
        jet.Fvvv = partial(0, 3)
    return jet


def _standard_ambient_J(dim: int) -> np.ndarray:
    """Block-diagonal J with 2x2 rotation blocks: e_{2i} -> e_{2i+1}."""
    J = np.zeros((dim, dim))
    for i in range(0, dim, 2):
        J[i + 1, i] = 1.0
        J[i, i + 1] = -1.0
    return J


def parse_polynomial(spec) -> np.ndarray:
    """Parse a polynomial in z: 'z^2', '0.5*z^3', a coefficient sequence
    (ascending powers), or a number (constant)."""
    if isinstance(spec, str):
        s = spec.replace(" ", "").replace("*", "")
        coeffs = np.zeros(8, dtype=complex)
        if not s:
            raise BadParams("empty polynomial spec")
        # split on '+' only; each term is c, z, z^n or cz^n
        for term in s.split("+"):
            if "z" not in term:
                coeffs[0] += complex(term)
                continue
            pre, _, post = term.partition("z")
            c = complex(pre) if pre not in ("", "+") else 1.0
            n = int(post[1:]) if post.startswith("^") else 1
            if n >= coeffs.size:
                coeffs = np.concatenate([coeffs, np.zeros(n + 1 - coeffs.size, complex)])
            coeffs[n] += c
        return np.trim_zeros(coeffs, "b")
    if np.isscalar(spec):
        return np.array([spec], dtype=complex)
    return np.asarray(spec, dtype=complex)


# ---------------------------------------------------------------------------
# catalog surfaces
# ---------------------------------------------------------------------------


def _make_holo_patch(name, polys, domain, scale=1.0, params=None) -> ImmersionPatch:
    k = len(polys)
    dim = 2 + 2 * k
    poly_list = [scale * np.array([0.0, 1.0], dtype=complex)] + [
        scale * np.asarray(p, dtype=complex) for p in polys
    ]

    def jet_fn(U, V, order):
        return _holo_jet(poly_list, U, V, order)

    def eval_fn(U, V):
        return jet_fn(U, V, 1).F

    return ImmersionPatch(
        name=name,
        ambient_dim=dim,
        eval_fn=eval_fn,
        jet_fn=jet_fn,
        domain=domain,
        family="holo",
        params=params or {},
        ambient_J=_standard_ambient_J(dim),
    )


_R6_JN_FRAME = np.array(
    [
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
    ]
)


def _catenoid_patch(tmax: float, domain: ChartDomain | None) -> ImmersionPatch:
    if not (0.25 <= tmax <= 2.0):
        raise BadParams("catenoid tmax must be in [0.25, 2] to keep the chart well conditioned")
    dom = domain or ChartDomain(-tmax, tmax, -np.pi, np.pi)

    def jet_fn(U, V, order):
        t, th = np.asarray(U, float), np.asarray(V, float)
        ch, sh = np.cosh(t), np.sinh(t)
        c, s = np.cos(th), np.sin(th)
        z0 = np.zeros_like(t)
        one = np.ones_like(t)

        def vec(a, b, cc):
            return np.stack([a, b, cc, z0, z0, z0], axis=-1)

        jet = Jet3(
            F=vec(ch * c, ch * s, t),
            Fu=vec(sh * c, sh * s, one),
            Fv=vec(-ch * s, ch * c, z0),
            order=order,
        )
        if order >= 2:
            jet.Fuu = vec(ch * c, ch * s, z0)
            jet.Fuv = vec(-sh * s, sh * c, z0)
            jet.Fvv = vec(-ch * c, -ch * s, z0)
        if order >= 3:
            jet.Fuuu = vec(sh * c, sh * s, z0)
            jet.Fuuv = vec(-ch * s, ch * c, z0)
            jet.Fuvv = vec(-sh * c, -sh * s, z0)
            jet.Fvvv = vec(ch * s, -ch * c, z0)
        return jet

    def normal_reference(U, V):
        t, th = np.asarray(U, float), np.asarray(V, float)
        shape = np.broadcast(t, th).shape
        ref = np.zeros(shape + (4, 6))
        ref[..., 0, 0] = -np.cos(th)
        ref[..., 0, 1] = -np.sin(th)
        ref[..., 0, 2] = np.sinh(t)
        ref[..., 1, 3] = 1.0
        ref[..., 2, 4] = 1.0
        ref[..., 3, 5] = 1.0
        return ref

    return ImmersionPatch(
        name="catenoid_r6",
        ambient_dim=6,
        eval_fn=lambda U, V: jet_fn(U, V, 1).F,
        jet_fn=jet_fn,
        domain=dom,
        family="r3",
        params={"tmax": tmax},
        normal_reference=normal_reference,
        jn_frame=_R6_JN_FRAME.copy(),
    )


def _enneper_patch(domain: ChartDomain | None) -> ImmersionPatch:
    dom = domain or ChartDomain(-0.5, 0.5, -0.5, 0.5)

    def jet_fn(U, V, order):
        u, v = np.asarray(U, float), np.asarray(V, float)
        z0 = np.zeros_like(u)

        def vec(a, b, cc):
            return np.stack(
                [np.broadcast_to(a, z0.shape), np.broadcast_to(b, z0.shape),
                 np.broadcast_to(cc, z0.shape), z0, z0, z0], axis=-1)

        jet = Jet3(
            F=vec(u - u**3 / 3 + u * v**2, -v + v**3 / 3 - u**2 * v, u**2 - v**2),
            Fu=vec(1 - u**2 + v**2, -2 * u * v, 2 * u),
            Fv=vec(2 * u * v, -1 + v**2 - u**2, -2 * v),
            order=order,
        )
        if order >= 2:
            jet.Fuu = vec(-2 * u, -2 * v, 2.0)
            jet.Fuv = vec(2 * v, -2 * u, 0.0)
            jet.Fvv = vec(2 * u, 2 * v, -2.0)
        if order >= 3:
            jet.Fuuu = vec(-2.0, 0.0, 0.0)
            jet.Fuuv = vec(0.0, -2.0, 0.0)
            jet.Fuvv = vec(2.0, 0.0, 0.0)
            jet.Fvvv = vec(0.0, 2.0, 0.0)
        return jet

    return ImmersionPatch(
        name="enneper_r6",
        ambient_dim=6,
        eval_fn=lambda U, V: jet_fn(U, V, 1).F,
        jet_fn=jet_fn,
        domain=dom,
        family="r3",
        params={},
        jn_frame=_R6_JN_FRAME.copy(),
    )


def _perturbed_patch(polys, eps: float, domain: ChartDomain) -> ImmersionPatch:
    base = _make_holo_patch("perturbed_graph", polys, domain)
    dim = base.ambient_dim

    def jet_fn(U, V, order):
        u, v = np.asarray(U, float), np.asarray(V, float)
        jet = base.jet_fn(U, V, order)
        # non-harmonic bump in the first graph component breaks minimality
        jet.F = jet.F.copy()
        jet.F[..., 2] += eps * (u**2 + v**2)
        jet.Fu = jet.Fu.copy()
        jet.Fu[..., 2] += 2 * eps * u
        jet.Fv = jet.Fv.copy()
        jet.Fv[..., 2] += 2 * eps * v
        if order >= 2:
            jet.Fuu = jet.Fuu.copy()
            jet.Fuu[..., 2] += 2 * eps
            jet.Fvv = jet.Fvv.copy()
            jet.Fvv[..., 2] += 2 * eps
        return jet

    return ImmersionPatch(
        name="perturbed_graph",
        ambient_dim=dim,
        eval_fn=lambda U, V: jet_fn(U, V, 1).F,
        jet_fn=jet_fn,
        domain=domain,
        family="perturbed",
        params={"eps": eps},
        ambient_J=_standard_ambient_J(dim),
    )


CATALOG_NAMES = (
    "plane_k",
    "holo_graph",
    "catenoid_r6",
    "enneper_r6",
    "scaled_graph",
    "perturbed_graph",
)


def builtin_surface(name: str, params: dict | None = None) -> ImmersionPatch:
    """Construct a catalog surface by name.

    Recognized parameters (all optional): ``k`` codimension half-rank,
    ``p`` / ``p1``..``pk`` holomorphic graph polynomials, ``tmax`` catenoid
    truncation, ``scale`` uniform scaling, ``eps`` perturbation size, and
    ``u_min``/``u_max``/``v_min``/``v_max`` chart bounds.
    """
    params = dict(params or {})
    if name not in CATALOG_NAMES:
        raise UnknownSurface(f"unknown surface {name!r}; choose from {CATALOG_NAMES}")

    def chart(default):
        keys = ("u_min", "u_max", "v_min", "v_max")
        if any(kk in params for kk in keys):
            vals = [float(params.get(kk, getattr(default, kk))) for kk in keys]
            return ChartDomain(*vals)
        return default

    try:
        k = int(params.get("k", 1))
    except (TypeError, ValueError) as exc:
        raise BadParams(f"bad k: {params.get('k')!r}") from exc
    if k < 1:
        raise BadParams("k must be >= 1")

    square = ChartDomain(-1.0, 1.0, -1.0, 1.0)

    if name == "plane_k":
        return _make_holo_patch("plane_k", [np.zeros(1)] * k, chart(square), params={"k": k})

    if name in ("holo_graph", "scaled_graph", "perturbed_graph"):
        polys = []
        for i in range(1, k + 1):
            spec = params.get(f"p{i}", params.get("p", "z^2"))
            try:
                polys.append(parse_polynomial(spec))
            except (ValueError, BadParams) as exc:
                raise BadParams(f"bad polynomial spec {spec!r}") from exc
        if name == "holo_graph":
            return _make_holo_patch("holo_graph", polys, chart(square), params={"k": k, **params})
        if name == "scaled_graph":
            scale = float(params.get("scale", 0.5))
            if scale <= 0:
                raise BadParams("scale must be positive")
            return _make_holo_patch(
                "scaled_graph", polys, chart(square), scale=scale, params={"k": k, **params}
            )
        eps = float(params.get("eps", 0.05))
        if eps == 0:
            raise BadParams("perturbed_graph needs eps != 0")
        return _perturbed_patch(polys, eps, chart(square))

    if name == "catenoid_r6":
        tmax = float(params.get("tmax", 2.0))
        default = ChartDomain(-tmax, tmax, -np.pi, np.pi)
        return _catenoid_patch(tmax, chart(default))

    return _enneper_patch(chart(ChartDomain(-0.5, 0.5, -0.5, 0.5)))
