import numpy as np
import pytest

from minsurf_lab.calculus import cov_deriv, trimmed_max_norm
from minsurf_lab.convergence import fit_order, grid_steps
from minsurf_lab.errors import DegenerateImmersion
from minsurf_lab.frames import (
    compute_frames,
    curvatures,
    frame_at,
    minimality_residual,
    second_fundamental_form,
)
from minsurf_lab.immersion import ChartDomain, ImmersionPatch, builtin_surface


def frame_orthonormality(fr):
    tau, nu = fr.tau, fr.nu
    basis = np.concatenate([tau, nu], axis=-2)
    gram = np.einsum("...ad,...bd->...ab", basis, basis)
    eye = np.eye(gram.shape[-1])
    return np.abs(gram - eye).max()


def test_frames_orthonormal_everywhere(surface_cache):
    for name in ("plane_k", "holo_graph", "catenoid_r6", "enneper_r6"):
        _, fr, _, _ = surface_cache(name, 21)
        assert frame_orthonormality(fr) < 1e-12, name
        assert fr.realignments == 0


def test_minimality_of_catalog(surface_cache):
    for name in ("plane_k", "holo_graph", "scaled_graph", "catenoid_r6", "enneper_r6"):
        _, _, A, _ = surface_cache(name, 21)
        assert minimality_residual(A) < 1e-12, name
    _, _, A, _ = surface_cache("perturbed_graph", 21)
    assert minimality_residual(A) > 0.1


def test_catenoid_norm_A_closed_form(surface_cache):
    p, fr, A, _ = surface_cache("catenoid_r6", 33)
    T, _ = p.domain.mesh()
    assert np.abs(A.norm_sq() - 2.0 / np.cosh(T) ** 4).max() < 1e-12


def test_catenoid_waist_A_components(surface_cache):
    # at (t, theta) = (0, 0): nu_1 = (-1, 0, 0, ...), A_11 = -nu_1 scaled by
    # the principal curvature -1, A_22 = +1, off-diagonal zero
    p, fr, A, _ = surface_cache("catenoid_r6", 33)
    i = j = 16
    assert np.allclose(fr.nu[i, j, 0, :3], [-1.0, 0.0, 0.0], atol=1e-12)
    assert np.isclose(A.A[i, j, 0, 0, 0], -1.0, atol=1e-12)
    assert np.isclose(A.A[i, j, 1, 1, 0], 1.0, atol=1e-12)
    assert abs(A.A[i, j, 0, 1, 0]) < 1e-12


def test_gauss_curvature_catenoid_convergence():
    patch = builtin_surface("catenoid_r6", {"tmax": 1.0})
    res = (17, 33, 65)
    errs = []
    for n in res:
        p = patch.with_resolution(n)
        fr = compute_frames(p)
        cv = curvatures(fr)
        T, _ = p.domain.mesh()
        exact = -1.0 / np.cosh(T) ** 4
        m = cv.margin
        errs.append(np.abs((cv.K - exact)[m:-m, m:-m]).max())
    assert fit_order(grid_steps(patch, res), errs) > 1.9


def test_brioschi_oracle_enneper():
    # independent Gauss-curvature oracle: K for the classical form with
    # |A|^2 = -2K and conformal factor (1 + u^2 + v^2)^2
    p = builtin_surface("enneper_r6").with_resolution(65)
    fr = compute_frames(p)
    cv = curvatures(fr)
    U, V = p.domain.mesh()
    exact = -4.0 / (1.0 + U**2 + V**2) ** 4
    m = cv.margin
    assert np.abs((cv.K - exact)[m:-m, m:-m]).max() < 2e-3


def test_catenoid_normal_connection_flat(surface_cache):
    _, fr, _, _ = surface_cache("catenoid_r6", 21)
    assert trimmed_max_norm(fr.omega_chart, 1, vec_axes=3) < 1e-10
    cv = curvatures(fr)
    assert trimmed_max_norm(cv.FD, cv.margin, vec_axes=2) < 1e-10


def test_omega_antisymmetric(surface_cache):
    for name in ("holo_graph", "enneper_r6"):
        _, fr, _, _ = surface_cache(name, 17)
        asym = fr.omega_chart + np.swapaxes(fr.omega_chart, -1, -2)
        assert np.abs(asym).max() == 0.0
        asym_g = fr.gamma_chart + np.swapaxes(fr.gamma_chart, -1, -2)
        assert np.abs(asym_g).max() == 0.0


def test_frame_at_matches_grid(surface_cache):
    p, fr, _, _ = surface_cache("catenoid_r6", 17)
    U, V = p.domain.mesh()
    _, tau, _, nu = frame_at(p, U, V)
    assert np.abs(tau - fr.tau).max() < 1e-12
    assert np.abs(nu - fr.nu).max() < 1e-12


def test_degenerate_immersion_raises():
    dom = ChartDomain(-1, 1, -1, 1, 9, 9)

    def collapse(U, V):
        out = np.zeros(np.shape(U) + (4,))
        out[..., 0] = np.asarray(U)
        out[..., 1] = np.asarray(U)  # rank-1 differential
        return out

    p = ImmersionPatch(
        name="degenerate", ambient_dim=4, eval_fn=collapse, domain=dom,
        jet_fn=None, jet_mode="fd", fd_step=1e-4, family="holo")
    with pytest.raises(DegenerateImmersion):
        compute_frames(p)


def test_first_derivative_identity_order():
    patch = builtin_surface("catenoid_r6")
    res = (17, 33, 65)
    vals = []
    for n in res:
        p = patch.with_resolution(n)
        fr = compute_frames(p)
        A = second_fundamental_form(p, fr)
        from minsurf_lab.variation import first_derivative_identity_residual

        vals.append(first_derivative_identity_residual(np.eye(6)[2], fr, A))
    assert fit_order(grid_steps(patch, res), vals) > 1.9


def test_cov_deriv_scalar_slot_consistency(surface_cache):
    # covariant derivative of a pure normal section agrees with direct
    # partials plus the connection term, contracted with c
    p, fr, _, _ = surface_cache("holo_graph", 17)
    U, V = p.domain.mesh()
    s = np.stack([np.sin(U) * V, np.cos(V)], axis=-1)
    Ds = cov_deriv(s, fr, n_tslots=0)
    assert Ds.shape == s.shape[:2] + (2, 2)
    assert np.all(np.isfinite(Ds))
