import numpy as np
import pytest

from minsurf_lab.complex_structure import (
    GridConnection,
    canonical_JSigma,
    catalog_normal_structure,
    check_JN_axioms,
    commutant_basis,
    connection_for,
    find_parallel_JN,
    nearest_complex_structure,
    parallel_transport_normal,
    pullback_structure,
    rectangle_loops,
    synthetic_so4_connection,
    transport_field,
)
from minsurf_lab.errors import LoopLeavesDomain
from minsurf_lab.frames import compute_frames
from minsurf_lab.immersion import ChartDomain, builtin_surface


def test_canonical_JSigma_axioms(surface_cache):
    _, fr, _, _ = surface_cache("holo_graph", 17)
    J = canonical_JSigma(fr)
    JJ = np.einsum("...ab,...bc->...ac", J, J)
    span = np.einsum("...id,...ie->...de", fr.tau, fr.tau)
    assert np.abs(JJ + span).max() < 1e-12
    assert np.abs(J + np.swapaxes(J, -1, -2)).max() < 1e-12


def test_catalog_JN_axioms(surface_cache):
    for name in ("plane_k", "holo_graph", "catenoid_r6", "enneper_r6"):
        _, fr, _, JN = surface_cache(name, 33)
        rep = check_JN_axioms(JN, fr)
        assert rep.orthogonality < 1e-12, name
        assert rep.square < 1e-12, name
        assert rep.parallelism < 1e-8, name


def test_nearest_complex_structure_fixes_valid_J():
    rng = np.random.default_rng(3)
    J0 = np.kron(np.eye(2), np.array([[0.0, -1.0], [1.0, 0.0]]))
    S = J0 + 1e-3 * rng.standard_normal((4, 4))
    J = nearest_complex_structure(S)
    assert np.abs(J @ J + np.eye(4)).max() < 1e-12
    assert np.abs(J + J.T).max() < 1e-12
    assert np.abs(J - J0).max() < 5e-3
    # already-valid input is a fixed point
    assert np.abs(nearest_complex_structure(J0) - J0).max() < 1e-12


def test_commutant_basis_oracle():
    # commutant of a single complex structure on R^4 is gl(2, C): dim 8
    J0 = np.kron(np.eye(2), np.array([[0.0, -1.0], [1.0, 0.0]]))
    basis, dim, _ = commutant_basis([J0], tol=1e-8)
    assert dim == 8
    assert len(basis) == 8
    for B in basis:
        assert np.abs(B @ J0 - J0 @ B).max() < 1e-10


def test_transport_integrator_order():
    conn = synthetic_so4_connection(ChartDomain(-1, 1, -1, 1, 65, 65), seed=5)
    path = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5]])
    ref = conn.transport(path, step=0.001)
    errs = []
    steps = (0.16, 0.08, 0.04)
    for st in steps:
        errs.append(np.abs(conn.transport(path, step=st) - ref).max())
    rates = np.log(np.array(errs[:-1]) / np.array(errs[1:])) / np.log(2.0)
    assert rates.min() > 3.5


def test_transport_preserves_orthogonality():
    conn = synthetic_so4_connection(ChartDomain(-1, 1, -1, 1, 33, 33), seed=0)
    loop = np.array([[-0.6, -0.6], [0.6, -0.6], [0.6, 0.6], [-0.6, 0.6], [-0.6, -0.6]])
    G = conn.transport(loop)
    assert np.abs(G @ G.T - np.eye(4)).max() < 1e-5


def test_loop_leaves_domain():
    p = builtin_surface("holo_graph").with_resolution(17)
    fr = compute_frames(p)
    conn = connection_for(p, fr)
    bad = np.array([[0.0, 0.0], [50.0, 0.0]])
    with pytest.raises(LoopLeavesDomain):
        parallel_transport_normal(conn, bad)


def test_rectangle_loops_inside_domain():
    p = builtin_surface("catenoid_r6").with_resolution(17)
    loops = rectangle_loops(p.domain)
    assert len(loops) >= 16
    for lp in loops:
        assert lp[0] == pytest.approx(lp[-1])
        assert np.all(lp[:, 0] >= p.domain.u_min) and np.all(lp[:, 0] <= p.domain.u_max)
        assert np.all(lp[:, 1] >= p.domain.v_min) and np.all(lp[:, 1] <= p.domain.v_max)


def test_find_parallel_JN_holo_graph():
    p = builtin_surface("holo_graph", {"p": "z^3"}).with_resolution(17)
    fr = compute_frames(p)
    conn = connection_for(p, fr)
    res = find_parallel_JN(conn, frames=fr)
    assert res.found
    assert res.antisym_dim == 1
    rep = check_JN_axioms(res.JN, fr)
    assert rep.max_residual() < 1e-6
    ref = catalog_normal_structure(p, fr)
    agree = min(np.abs(res.JN - ref).max(), np.abs(res.JN + ref).max())
    assert agree < 1e-4


def test_find_parallel_JN_catenoid_flat():
    p = builtin_surface("catenoid_r6").with_resolution(17)
    fr = compute_frames(p)
    conn = connection_for(p, fr)
    res = find_parallel_JN(conn, frames=fr)
    assert res.found
    # flat normal bundle: every antisymmetric matrix commutes with holonomy
    assert res.antisym_dim == 6
    rep = check_JN_axioms(res.JN, fr)
    assert rep.max_residual() < 1e-6


def test_find_parallel_JN_so4_negative():
    conn = synthetic_so4_connection(ChartDomain(-1, 1, -1, 1, 33, 33), seed=11)
    res = find_parallel_JN(conn)
    assert not res.found
    assert res.certificate is not None and res.certificate > 0.1
    assert res.JN is None


def test_transport_field_reproduces_constant():
    conn = synthetic_so4_connection(ChartDomain(-1, 1, -1, 1, 17, 17),
                                    seed=2, amplitude=0.0)
    J0 = np.kron(np.eye(2), np.array([[0.0, -1.0], [1.0, 0.0]]))
    field = transport_field(conn, J0, ChartDomain(-1, 1, -1, 1, 17, 17))
    assert np.abs(field - J0).max() < 1e-12


def test_pullback_structure_square():
    p = builtin_surface("holo_graph").with_resolution(17)
    fr = compute_frames(p)
    JN = catalog_normal_structure(p, fr)
    Jamb = pullback_structure(fr, JN, sign=1.0)
    JJ = np.einsum("...ab,...bc->...ac", Jamb, Jamb)
    assert np.abs(JJ + np.eye(p.ambient_dim)).max() < 1e-12
