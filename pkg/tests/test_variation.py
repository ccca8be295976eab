import numpy as np
import pytest

from minsurf_lab.calculus import bump_field, integrate, plateau_field
from minsurf_lab.convergence import fit_order, grid_steps
from minsurf_lab.errors import SupportTouchesBoundary
from minsurf_lab.frames import compute_frames, second_fundamental_form
from minsurf_lab.immersion import builtin_surface
from minsurf_lab.variation import (
    apm_decompose,
    apply_JN,
    first_derivative_identity_residual,
    jacobi_operator,
    normal_projection_constant,
    polarized_dichotomy_check,
    q_direct,
    q_trace,
    q_via_apm,
    second_variation_cutoff_identity,
    second_variation_direct,
    tangent_projection_constant,
)


def test_normal_projection_waist_values(surface_cache):
    # catenoid at (t, theta) = (0, 0): nu_1 = (-1, 0, 0, ...) in R^6, so
    # a = e_1 projects to (a_perp)^1 = -1 and e_4 lies fully in the
    # flat normal directions
    p, fr, _, _ = surface_cache("catenoid_r6", 33)
    a = np.eye(6)[0]
    perp = normal_projection_constant(a, fr)
    assert np.isclose(perp[16, 16, 0], -1.0, atol=1e-12)
    tang = tangent_projection_constant(a, fr)
    full = np.einsum("...b,...bd->...d", perp, fr.nu) + \
        np.einsum("...i,...id->...d", tang, fr.tau)
    assert np.abs(full - a).max() < 1e-12


def test_q_waist_oracle(surface_cache):
    # hand-computed at the catenoid waist: q(e_1) = 2, q(e_4) = -2,
    # mixed direction (e_1 + e_4)/sqrt(2) gives 0JN swaps the two normal
    # slots there
    p, fr, A, JN = surface_cache("catenoid_r6", 33)
    i = j = 16
    q1 = q_direct(np.eye(6)[0], A, JN, fr)
    q4 = q_direct(np.eye(6)[3], A, JN, fr)
    assert np.isclose(q1[i, j], 2.0, atol=1e-10)
    assert np.isclose(q4[i, j], -2.0, atol=1e-10)


def test_q_three_formulas_agree(surface_cache, rnd_dirs):
    for name in ("holo_graph", "catenoid_r6", "enneper_r6"):
        p, fr, A, JN = surface_cache(name, 21)
        apm = apm_decompose(A, JN, fr)
        tr = q_trace(A, JN, fr)
        assert np.abs(tr).max() < 1e-10, name
        for a in rnd_dirs(p.ambient_dim, 6, seed=1):
            qd = q_direct(a, A, JN, fr)
            qa = q_via_apm(a, apm, fr, JN, form="general")
            qs = q_via_apm(a, apm, fr, JN, form="surface")
            assert np.abs(qd - qa).max() < 1e-10, name
            assert np.abs(qd - qs).max() < 1e-10, name


def test_q_surface_form_needs_minimality(surface_cache, rnd_dirs):
    p, fr, A, JN = surface_cache("perturbed_graph", 33)
    apm = apm_decompose(A, JN, fr)
    a = rnd_dirs(p.ambient_dim, 1, seed=4)[0]
    qg = q_via_apm(a, apm, fr, JN, form="general")
    qs = q_via_apm(a, apm, fr, JN, form="surface")
    assert np.abs(qg - q_direct(a, A, JN, fr)).max() < 1e-10
    assert np.abs(qs - qg).max() > 0.05


def test_apm_properties(surface_cache):
    p, fr, A, JN = surface_cache("holo_graph", 21)
    apm = apm_decompose(A, JN, fr)
    assert np.abs(apm.Aplus + apm.Aminus - A.A).max() < 1e-14
    # JN flip exchanges the two pieces
    flipped = apm_decompose(A, -JN, fr)
    assert np.abs(flipped.Aplus - apm.Aminus).max() < 1e-14
    assert np.abs(flipped.Aminus - apm.Aplus).max() < 1e-14


def test_first_derivative_identity_convergence():
    patch = builtin_surface("catenoid_r6")
    res = (17, 33, 65)
    vals = []
    for n in res:
        p = patch.with_resolution(n)
        fr = compute_frames(p)
        A = second_fundamental_form(p, fr)
        vals.append(first_derivative_identity_residual(np.eye(6)[1], fr, A))
    assert fit_order(grid_steps(patch, res), vals) > 1.9


def test_jacobi_operator_kills_normal_projections():
    patch = builtin_surface("holo_graph", {"p": "z^2"})
    res = (33, 65, 129)
    vals = []
    for n in res:
        p = patch.with_resolution(n)
        fr = compute_frames(p)
        A = second_fundamental_form(p, fr)
        a = np.eye(4)[2]
        J = jacobi_operator(normal_projection_constant(a, fr), fr, A)
        m = 3
        vals.append(np.abs(J[m:-m, m:-m]).max())
    assert fit_order(grid_steps(patch, res), vals) > 1.9


def test_cutoff_identity(surface_cache):
    p, fr, A, JN = surface_cache("catenoid_r6", 65)
    f = bump_field(fr)
    a = np.eye(6)[0]
    s = normal_projection_constant(a, fr)
    lhs, rhs, disc = second_variation_cutoff_identity(f, s, fr, A)
    assert abs(lhs - rhs) < 2e-2 * max(1.0, abs(lhs))
    assert disc == pytest.approx(lhs - rhs)


def test_cutoff_identity_convergence():
    patch = builtin_surface("catenoid_r6")
    res = (33, 65, 129)
    vals = []
    for n in res:
        p = patch.with_resolution(n)
        fr = compute_frames(p)
        A = second_fundamental_form(p, fr)
        f = bump_field(fr)
        s = normal_projection_constant(np.eye(6)[0], fr)
        _, _, disc = second_variation_cutoff_identity(f, s, fr, A)
        vals.append(abs(disc))
    assert fit_order(grid_steps(patch, res), vals) > 1.9


def test_second_variation_direct_requires_support():
    p = builtin_surface("catenoid_r6").with_resolution(17)
    fr = compute_frames(p)
    A = second_fundamental_form(p, fr)
    s = np.ones(fr.tau.shape[:2] + (4,))
    with pytest.raises(SupportTouchesBoundary):
        second_variation_direct(s, fr, A)


def test_dichotomy_plane_trivial(surface_cache):
    # totally geodesic: both coefficient fields vanish identically
    p, fr, A, JN = surface_cache("plane_k", 17)
    apm = apm_decompose(A, JN, fr)
    d = polarized_dichotomy_check(apm, JN, fr)
    assert np.abs(d.m_field).max() < 1e-14
    assert np.abs(d.c_field).max() < 1e-14


def test_dichotomy_bound_catenoid(surface_cache):
    # the polarization bound: wherever every q vanishes the certificate
    # forces one of xi+- to vanish; numerically c <= bound * sup|q|
    p, fr, A, JN = surface_cache("catenoid_r6", 33)
    apm = apm_decompose(A, JN, fr)
    d = polarized_dichotomy_check(apm, JN, fr)
    assert np.all(d.c_field >= -1e-14)
    assert np.all(d.bound >= 0.0)
    qmax = np.zeros(d.c_field.shape)
    for a in np.eye(6):
        qmax = np.maximum(qmax, np.abs(q_direct(a, A, JN, fr)))
    assert np.all(d.c_field <= d.bound * qmax + 1e-12)


def test_catenoid_waist_dichotomy_value(surface_cache):
    p, fr, A, JN = surface_cache("catenoid_r6", 33)
    apm = apm_decompose(A, JN, fr)
    d = polarized_dichotomy_check(apm, JN, fr)
    assert np.isclose(d.m_field[16, 16], 0.5, atol=1e-10)


def test_plateau_field_flat_region(surface_cache):
    _, fr, _, _ = surface_cache("catenoid_r6", 33)
    f = plateau_field(fr, flat_u=0.4)
    assert f.max() == pytest.approx(1.0)
    assert f[0].max() == 0.0 and f[:, 0].max() == 0.0
    # genuinely flat in the middle
    assert np.isclose(f[16, 16], f[17, 16], atol=1e-14)


def test_integrate_node_rule(surface_cache):
    # each node carries sqrt(det g) du dv; for densities supported away
    # from the boundary this is the plain Riemann sum
    p, fr, _, _ = surface_cache("plane_k", 33)
    du = (p.domain.u_max - p.domain.u_min) / (p.domain.nu - 1)
    dv = (p.domain.v_max - p.domain.v_min) / (p.domain.nv - 1)
    f = bump_field(fr)
    assert np.isclose(integrate(f, fr),
                      (f * fr.metric.sqrt_det).sum() * du * dv, rtol=1e-12)


def test_apply_JN_squares_to_minus_one(surface_cache):
    _, fr, _, JN = surface_cache("holo_graph", 17)
    s = np.stack([np.ones(fr.tau.shape[:2]), np.zeros(fr.tau.shape[:2])], axis=-1)
    ss = apply_JN(JN, apply_JN(JN, s))
    assert np.abs(ss + s).max() < 1e-14
