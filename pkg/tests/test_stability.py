import numpy as np
import pytest

from minsurf_lab.calculus import plateau_field
from minsurf_lab.errors import GridTooCoarse, NoConvergence
from minsurf_lab.frames import compute_frames, second_fundamental_form
from minsurf_lab.immersion import builtin_surface
from minsurf_lab.stability import (
    assemble_form,
    quadratic_value,
    smallest_eigenvalue,
    special_variation_inequality,
)
from minsurf_lab.variation import second_variation_direct


def build_form(surface_cache, name, n, params=None):
    p, fr, A, JN = surface_cache(name, n, params)
    return p, fr, A, JN, assemble_form(fr, A)


def test_grid_too_coarse(surface_cache):
    from dataclasses import replace

    from minsurf_lab.frames import InducedMetric

    p, fr, A, _ = surface_cache("plane_k", 9)
    k = 5
    small_metric = InducedMetric(
        g=fr.metric.g[:k, :k], ginv=fr.metric.ginv[:k, :k],
        sqrt_det=fr.metric.sqrt_det[:k, :k])
    small = replace(
        fr, metric=small_metric, tau=fr.tau[:k, :k], nu=fr.nu[:k, :k],
        c=fr.c[:k, :k], gamma_chart=fr.gamma_chart[:k, :k],
        omega_chart=fr.omega_chart[:k, :k])
    with pytest.raises(GridTooCoarse):
        assemble_form(small, A)


def test_form_exactly_symmetric(surface_cache):
    for name in ("plane_k", "catenoid_r6"):
        _, _, _, _, form = build_form(surface_cache, name, 33)
        C = form.K - form.P
        assert abs(C - C.T).max() == 0.0, name


def test_plane_P_vanishes(surface_cache):
    _, _, _, _, form = build_form(surface_cache, "plane_k", 17)
    assert form.P.nnz == 0 or abs(form.P).max() == 0.0


def test_catenoid_P_only_first_normal_block(surface_cache):
    # the catenoid sits in a 2-plane of R^6: A is valued in nu_1 alone, so
    # the A*A blocks touch only the first normal component
    p, fr, A, _ = surface_cache("catenoid_r6", 17)
    form = assemble_form(fr, A)
    codim = fr.codim
    Pd = form.P.toarray()
    n_nodes = form.n_dofs // codim
    blocks = Pd.reshape(n_nodes, codim, n_nodes, codim)
    off = blocks[:, 1:, :, :].max(), blocks[:, :, :, 1:].max()
    assert max(abs(off[0]), abs(off[1])) < 1e-14
    assert blocks[:, 0, :, 0].max() > 0.1


def test_quadratic_matches_direct_energy(surface_cache):
    p, fr, A, _, form = (*surface_cache("catenoid_r6", 33), None)
    form = assemble_form(fr, A)
    rng = np.random.default_rng(0)
    shape = fr.metric.sqrt_det.shape + (fr.codim,)
    for _ in range(5):
        s = np.zeros(shape)
        s[2:-2, 2:-2] = rng.standard_normal(
            (shape[0] - 4, shape[1] - 4, fr.codim))
        qv = quadratic_value(form, s)
        dv = second_variation_direct(s, fr, A)
        assert abs(qv - dv) <= 1e-10 * max(1.0, abs(qv))


def test_plane_eigenvalue_dirichlet_oracle():
    # flat totally geodesic chart: the smallest eigenvalue is the first
    # Dirichlet eigenvalue of the Laplacian on the square of side 2
    # in the induced metric, pi^2/2 for plane_k
    p = builtin_surface("plane_k").with_resolution(65)
    fr = compute_frames(p)
    A = second_fundamental_form(p, fr)
    out = smallest_eigenvalue(assemble_form(fr, A))
    assert abs(out.lambda_min - np.pi**2 / 2.0) < 0.01 * np.pi**2 / 2.0
    assert out.residual_norm < 1e-7


def test_catenoid_eigenvalue_monotone_in_height():
    # longer catenoid necks are less stable; frozen values at res 49
    expected = {0.8: 2.07, 1.4: -0.105, 2.0: -0.380}
    for tmax, target in expected.items():
        p = builtin_surface("catenoid_r6", {"tmax": tmax}).with_resolution(49)
        fr = compute_frames(p)
        A = second_fundamental_form(p, fr)
        out = smallest_eigenvalue(assemble_form(fr, A))
        assert abs(out.lambda_min - target) < 0.02 * max(1.0, abs(target)), tmax
    lams = []
    for tmax in sorted(expected):
        p = builtin_surface("catenoid_r6", {"tmax": tmax}).with_resolution(49)
        fr = compute_frames(p)
        A = second_fundamental_form(p, fr)
        lams.append(smallest_eigenvalue(assemble_form(fr, A)).lambda_min)
    assert lams[0] > lams[1] > lams[2]


def test_holo_graph_nonnegative(surface_cache):
    _, fr, A, _, form = (*surface_cache("holo_graph", 33), None)
    form = assemble_form(fr, A)
    out = smallest_eigenvalue(form)
    assert out.lambda_min >= -1e-9


def test_no_convergence_carries_best_iterate(surface_cache):
    _, fr, A, _ = surface_cache("catenoid_r6", 17)
    form = assemble_form(fr, A)
    with pytest.raises(NoConvergence) as exc:
        smallest_eigenvalue(form, tol=1e-16, max_iterations=1)
    best = exc.value.result
    assert best is not None
    assert np.isfinite(best.lambda_min)
    assert best.eigen_section.shape == fr.metric.sqrt_det.shape + (fr.codim,)


def test_special_variation_inequality_unstable_catenoid():
    p = builtin_surface("catenoid_r6", {"tmax": 2.0}).with_resolution(65)
    fr = compute_frames(p)
    A = second_fundamental_form(p, fr)
    from minsurf_lab.complex_structure import catalog_normal_structure

    JN = catalog_normal_structure(p, fr)
    f = plateau_field(fr, flat_u=0.4)
    a = np.eye(6)[3]
    out = special_variation_inequality(a, f, fr, A, JN)
    # both the true second variation and the middle integral go negative:
    # the stability chain fails and certifies instability for this neck
    assert out["lhs"] < 0.0
    assert out["middle"] < 0.0
    assert out["right"] >= out["middle"]
    # e4 is everywhere normal here, so the |a_perp| <= 1 relaxation is tight
    assert out["relaxation_slack"] == pytest.approx(0.0, abs=1e-12)
