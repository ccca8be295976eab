"""Check suites shared by the command-line front end and the test gate.

Each suite returns (checks, tables, fields): judged statements, residual
vs mesh-size tables for the order fits, and named scalar grid fields at
the finest resolution for CSV dumps and figure rendering.
"""

from __future__ import annotations

import numpy as np

from . import complex_structure as cxs
from . import holo as holo_mod
from . import stability as stab
from . import variation as var
from .calculus import bump_field, plateau_field, trimmed_max_norm
from .convergence import decay_ratio, fit_order, grid_steps
from .errors import NoConvergence
from .frames import (
    METRIC_TOL,
    compute_frames,
    curvatures,
    minimality_residual,
    second_fundamental_form,
)
from .immersion import builtin_surface
from .report import Check, make_check

IDENTITY_TOL = 1e-10
EXACT_TOL = 1e-12
ORDER_MIN = 1.9
DEFAULT_RESOLUTIONS = (33, 65, 129)

#: catalog surfaces satisfying tr A = 0, where the minimality-dependent
#: identities (surface-form q, symmetry and trace of A+/A-, A+/A-
#: holomorphicity) are in force
MINIMAL_SURFACES = ("plane_k", "holo_graph", "scaled_graph", "catenoid_r6", "enneper_r6")


def build_patch(name, params=None, k=None, jet="analytic", fd_step=None, tmax=None):
    params = dict(params or {})
    if k is not None:
        params["k"] = k
    if tmax is not None:
        params["tmax"] = tmax
    patch = builtin_surface(name, params or None)
    if jet == "fd":
        patch = patch.with_jet_mode("fd", fd_step)
    return patch


def surface_data(patch, n):
    p = patch.with_resolution(n)
    fr = compute_frames(p)
    A = second_fundamental_form(p, fr)
    JN = cxs.catalog_normal_structure(p, fr)
    return p, fr, A, JN


def random_directions(dim, count, seed=0):
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(count, dim))
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def _order_check(name, patch, resolutions, residuals, anchor, threshold=ORDER_MIN):
    hs = grid_steps(patch, resolutions)
    order = fit_order(hs, residuals)
    table = {"h": hs, "residual": list(map(float, residuals)), "order": order}
    chk = make_check(
        name, "order_geq", order, threshold, anchor,
        extras={"residuals": list(map(float, residuals)), "resolutions": list(resolutions)},
    )
    return chk, table


# ---------------------------------------------------------------------------
# the identity suite
# ---------------------------------------------------------------------------


def identity_suite(patch, resolutions=DEFAULT_RESOLUTIONS, n_dirs=12, seed=0):
    checks: list[Check] = []
    tables: dict = {}

    if patch.family == "perturbed":
        c2, t2, f2 = _negative_control_suite(patch, resolutions, seed)
        return c2, t2, f2

    n_fine = resolutions[-1]
    p, fr, A, JN = surface_data(patch, n_fine)
    dim = 2 + 2 * p.k
    dirs = random_directions(dim, n_dirs, seed)
    apm = var.apm_decompose(A, JN, fr)

    worst = {"general": 0.0, "surface": 0.0, "tau2": 0.0}
    for a in dirs:
        qd = var.q_direct(a, A, JN, fr)
        qg = var.q_via_apm(a, apm, fr, JN, "general")
        qs = var.q_via_apm(a, apm, fr, JN, "surface")
        qs2 = var.q_via_apm(a, apm, fr, JN, "surface", tau_index=1)
        worst["general"] = max(worst["general"], float(np.abs(qd - qg).max()))
        worst["surface"] = max(worst["surface"], float(np.abs(qd - qs).max()))
        worst["tau2"] = max(worst["tau2"], float(np.abs(qs - qs2).max()))
    checks.append(make_check(
        "q_direct_vs_general", "max_leq", worst["general"], IDENTITY_TOL,
        "q(a) from |A^s|^2 difference equals the full A+/A- pairing sum"))
    checks.append(make_check(
        "q_direct_vs_surface", "max_leq", worst["surface"], IDENTITY_TOL,
        "q(a) equals the single-direction surface formula on minimal surfaces"))
    checks.append(make_check(
        "q_surface_tau_independent", "max_leq", worst["tau2"], IDENTITY_TOL,
        "surface formula gives the same value along either frame direction"))

    checks.append(make_check(
        "q_trace_free", "max_leq", float(np.abs(var.q_trace(A, JN, fr)).max()),
        IDENTITY_TOL, "trace of q over an ambient orthonormal basis vanishes"))
    rng = np.random.default_rng(seed + 1)
    Q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    checks.append(make_check(
        "q_trace_free_random_basis", "max_leq",
        float(np.abs(var.q_trace(A, JN, fr, basis=Q)).max()), IDENTITY_TOL,
        "the q trace is independent of the ambient orthonormal basis"))

    checks.append(make_check(
        "apm_sum", "max_leq",
        trimmed_max_norm(apm.Aplus + apm.Aminus - A.A, 0, vec_axes=3), EXACT_TOL,
        "A+ and A- sum back to A"))
    checks.append(make_check(
        "apm_intertwining", "max_leq", var.intertwining_residual(apm, JN, fr),
        IDENTITY_TOL, "A± rotate by ±J_N when the tangent slot rotates by J_Sigma"))
    sym = max(
        trimmed_max_norm(T - np.swapaxes(T, 2, 3), 0, vec_axes=3)
        for T in (apm.Aplus, apm.Aminus)
    )
    trfree = max(
        trimmed_max_norm(np.einsum("...iib->...b", T), 0)
        for T in (apm.Aplus, apm.Aminus)
    )
    checks.append(make_check(
        "apm_symmetric", "max_leq", sym, IDENTITY_TOL,
        "A± symmetric in their tangent slots on minimal surfaces"))
    checks.append(make_check(
        "apm_trace_free", "max_leq", trfree, IDENTITY_TOL,
        "A± trace-free over the tangent frame on minimal surfaces"))

    hres = holo_mod.inf_holo_residuals(A, fr, JN)
    npl, nmi = apm.norms()
    checks.append(make_check(
        "res_b_equals_2norm_Aminus", "max_leq",
        abs(hres.res_b - 2.0 * float(nmi.max())), EXACT_TOL,
        "A(J v, w) - J_N A(v, w) has norm exactly 2|A-|"))
    checks.append(make_check(
        "res_b_minus_equals_2norm_Aplus", "max_leq",
        abs(hres.res_b_minus - 2.0 * float(npl.max())), EXACT_TOL,
        "with the opposite normal orientation the roles of A+ and A- swap"))
    apm_swapped = var.apm_decompose(A, -cxs.as_field(JN, fr), fr)
    swap_res = max(
        trimmed_max_norm(apm_swapped.Aplus - apm.Aminus, 0, vec_axes=3),
        trimmed_max_norm(apm_swapped.Aminus - apm.Aplus, 0, vec_axes=3),
    )
    checks.append(make_check(
        "jn_flip_swaps_apm", "max_leq", swap_res, EXACT_TOL,
        "negating J_N exchanges the two halves of the splitting"))

    ax = cxs.check_JN_axioms(JN, fr)
    checks.append(make_check(
        "jn_orthogonal", "max_leq", ax.orthogonality, IDENTITY_TOL,
        "catalog normal structure is pointwise orthogonal"))
    checks.append(make_check(
        "jn_squares_to_minus_id", "max_leq", ax.square, IDENTITY_TOL,
        "catalog normal structure squares to -Id"))
    checks.append(make_check(
        "jn_parallel", "max_leq", ax.parallelism, 1e-8,
        "catalog normal structure is parallel for the induced connection"))

    # discretization-limited identities, fitted across resolutions
    a_fd = np.zeros(dim)
    a_fd[2] = 1.0
    res_min, res_fd, res_jac, res_cut = [], [], [], []
    res_p, res_m, res_pde = [], [], []
    for n in resolutions:
        pn, frn, An, JNn = surface_data(patch, n)
        fd_patch = pn.with_jet_mode("fd", max(pn.domain.du, pn.domain.dv))
        fd_frames = compute_frames(fd_patch)
        res_min.append(minimality_residual(second_fundamental_form(fd_patch, fd_frames)))
        res_fd.append(var.first_derivative_identity_residual(a_fd, frn, An))
        s = var.normal_projection_constant(a_fd, frn)
        res_jac.append(trimmed_max_norm(var.jacobi_operator(s, frn, An), 3))
        f = bump_field(frn)
        _, _, disc = var.second_variation_cutoff_identity(f, s, frn, An)
        res_cut.append(disc)
        apmn = var.apm_decompose(An, JNn, frn)
        rp, rm, _, _ = holo_mod.verify_apm_holomorphicity(apmn, frn, JNn, An)
        res_p.append(rp)
        res_m.append(rm)
        res_pde.append(holo_mod.a_plus_pde_residual(apmn, frn, JNn, curvatures(frn))["residual"])

    for key, vals, anchor in (
        ("minimality", res_min, "trace of A vanishes; measured with grid-matched fd jets"),
        ("first_derivative_identity", res_fd,
         "covariant derivative of a normal projection is -A against the tangent part"),
        ("jacobi_of_projection", res_jac,
         "normal projections of constant vectors are Jacobi fields"),
        ("cutoff_identity", res_cut,
         "second variation of f s splits into |grad f|^2 |s|^2 plus f^2 <J(s), s>"),
        ("dbar_Aplus", res_p, "the (0,1) derivative of A+ vanishes on minimal surfaces"),
        ("del_Aminus", res_m, "the (1,0) derivative of A- vanishes on minimal surfaces"),
        ("a_plus_pde", res_pde,
         "A+ solves the second-order equation driven by normal and Gauss curvature"),
    ):
        chk, tbl = _order_check(f"order_{key}", patch, resolutions, vals, anchor)
        checks.append(chk)
        tables[key] = tbl

    # Weitzenboeck identities: discretely exact by linearity of the
    # stencils, reported with the measured values
    wsum, wdiff = holo_mod.verify_weitzenbock(apm.Aplus, fr, JN, n_tslots=2)
    checks.append(make_check(
        "weitzenbock_sum", "max_leq", wsum, IDENTITY_TOL,
        "the two split second-order operators sum to the rough Laplacian"))
    checks.append(make_check(
        "weitzenbock_difference", "max_leq", wdiff, 1e-8,
        "their difference is the twisted-curvature commutator"))

    if patch.family == "holo":
        rec_c, rec_h = [], []
        for n in resolutions:
            _, frn, An, JNn = surface_data(patch, n)
            rec = holo_mod.reconstruct_ambient_J(frn, JNn, "plus")
            rec_c.append(rec.constancy_residual)
            rec_h.append(rec.holomorphy_residual)
        chk, tbl = _order_check(
            "order_ambient_J_constancy", patch, resolutions, rec_c,
            "the assembled ambient structure is constant over the surface")
        checks.append(chk)
        tables["ambient_J_constancy"] = tbl
        chk, tbl = _order_check(
            "order_ambient_J_holomorphy", patch, resolutions, rec_h,
            "the differential intertwines J_Sigma with the recovered ambient structure")
        checks.append(chk)
        tables["ambient_J_holomorphy"] = tbl

        res_b_tbl = []
        for n in resolutions:
            _, frn, An, JNn = surface_data(patch, n)
            res_b_tbl.append(holo_mod.inf_holo_residuals(An, frn, JNn).res_b)
        chk, tbl = _order_check(
            "order_Aminus_decay", patch, resolutions, res_b_tbl,
            "holomorphic graphs satisfy the infinitesimal condition A- = 0")
        checks.append(chk)
        tables["Aminus_decay"] = tbl

    if patch.name == "catenoid_r6":
        checks.extend(_catenoid_controls(patch, resolutions))

    dich = var.polarized_dichotomy_check(apm, JN, fr)
    fields = {
        "q_e3": var.q_direct(a_fd, A, JN, fr),
        "min_apm_norm": dich.m_field,
        "dichotomy_certificate": dich.c_field,
        "A_norm_sq": A.norm_sq(),
    }
    return checks, tables, fields


def _catenoid_controls(patch, resolutions):
    checks = []
    consts = []
    for n in resolutions:
        _, frn, An, JNn = surface_data(patch, n)
        consts.append(holo_mod.reconstruct_ambient_J(frn, JNn, "plus").constancy_residual)
    checks.append(make_check(
        "catenoid_no_ambient_J", "min_geq", float(min(consts)), 0.1,
        "no constant ambient structure fits the catenoid at any resolution",
        extras={"residuals": consts}))

    p, fr, A, JN = surface_data(patch, resolutions[-1])
    apm = var.apm_decompose(A, JN, fr)
    iw, jw = np.abs(fr.patch.domain.u_grid()).argmin(), np.abs(fr.patch.domain.v_grid()).argmin()
    dich = var.polarized_dichotomy_check(apm, JN, fr)
    checks.append(make_check(
        "catenoid_waist_min_apm", "min_geq", float(dich.m_field[iw, jw]), 0.05,
        "both halves of the splitting are bounded below at the waist"))
    hres = holo_mod.inf_holo_residuals(A, fr, JN)
    checks.append(make_check(
        "catenoid_not_holomorphic_either_way", "min_geq",
        float(min(hres.res_b, hres.res_b_minus)), 0.5,
        "the catenoid is holomorphic for neither normal orientation"))
    return checks


def _negative_control_suite(patch, resolutions, seed):
    """Checks for the non-minimal perturbed graph: algebraic identities
    that survive without minimality must still hold, while the
    minimality-dependent residuals must stay bounded away from zero."""
    checks: list[Check] = []
    tables: dict = {}
    two = resolutions[-2:]

    p, fr, A, JN = surface_data(patch, two[-1])
    dim = 2 + 2 * p.k
    apm = var.apm_decompose(A, JN, fr)
    worst = 0.0
    for a in random_directions(dim, 6, seed):
        qd = var.q_direct(a, A, JN, fr)
        qg = var.q_via_apm(a, apm, fr, JN, "general")
        worst = max(worst, float(np.abs(qd - qg).max()))
    checks.append(make_check(
        "q_general_identity_without_minimality", "max_leq", worst, IDENTITY_TOL,
        "the full pairing formula for q is purely algebraic"))
    checks.append(make_check(
        "q_trace_free_without_minimality", "max_leq",
        float(np.abs(var.q_trace(A, JN, fr)).max()), IDENTITY_TOL,
        "the q trace needs only pointwise orthogonality of the normal structure"))

    res_min, res_jac, res_p = [], [], []
    a = np.zeros(dim)
    a[2] = 1.0
    import warnings

    for n in two:
        pn, frn, An, JNn = surface_data(patch, n)
        res_min.append(minimality_residual(An))
        s = var.normal_projection_constant(a, frn)
        res_jac.append(trimmed_max_norm(var.jacobi_operator(s, frn, An), 3))
        apmn = var.apm_decompose(An, JNn, frn)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rp, _, _, _ = holo_mod.verify_apm_holomorphicity(apmn, frn, JNn, An)
        res_p.append(rp)

    checks.append(make_check(
        "perturbed_fails_minimality", "min_geq", float(min(res_min)), 10 * METRIC_TOL,
        "the perturbation has nonzero mean curvature", extras={"residuals": res_min}))
    checks.append(make_check(
        "perturbed_jacobi_not_decaying", "min_geq", decay_ratio(res_jac), 0.5,
        "without minimality the projection is no Jacobi field",
        extras={"residuals": res_jac}))
    checks.append(make_check(
        "perturbed_dbar_Aplus_not_decaying", "min_geq", decay_ratio(res_p), 0.5,
        "without minimality A+ is not holomorphic",
        extras={"residuals": res_p}))
    checks.append(make_check(
        "perturbed_dbar_Aplus_bounded_below", "min_geq", float(min(res_p)), 0.05,
        "the non-decaying residual is macroscopic", extras={"residuals": res_p}))

    fields = {"A_trace_norm": np.sqrt(np.einsum("...b,...b->...", A.trace(), A.trace()))}
    return checks, tables, fields


# ---------------------------------------------------------------------------
# spectral suite
# ---------------------------------------------------------------------------


def spectrum_suite(patch, resolutions=DEFAULT_RESOLUTIONS, n_random=20, seed=0):
    checks: list[Check] = []
    tables: dict = {}
    fields: dict = {}

    lams = []
    last = None
    for n in resolutions:
        pn, frn, An, _ = surface_data(patch, n)
        form = stab.assemble_form(frn, An)
        sym = float(np.abs((form.K - form.P) - (form.K - form.P).T).max())
        try:
            res = stab.smallest_eigenvalue(form)
        except NoConvergence as exc:
            res = exc.result
            checks.append(make_check(
                f"eigensolver_converged_n{n}", "bool", False, None,
                "inverse iteration reached its residual target"))
        lams.append(res.lambda_min)
        last = (pn, frn, An, form, res)
        checks.append(make_check(
            f"form_symmetric_n{n}", "max_leq", sym, 0.0,
            "stiffness minus curvature matrix is symmetric by construction"))
        xn = res.eigen_section[1:-1, 1:-1].reshape(-1)
        checks.append(make_check(
            f"eigen_residual_n{n}", "max_leq", res.residual_norm,
            stab.SOLVER_TOL * float(np.linalg.norm(xn)),
            "generalized eigen-residual within solver tolerance",
            extras={"lambda": res.lambda_min, "iterations": res.iterations}))

    pn, frn, An, form, res = last
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_random):
        s = np.zeros(frn.metric.sqrt_det.shape + (frn.codim,))
        s[2:-2, 2:-2] = rng.normal(size=s[2:-2, 2:-2].shape)
        direct = var.second_variation_direct(s, frn, An)
        quad = stab.quadratic_value(form, s)
        worst = max(worst, abs(direct - quad) / (1.0 + abs(direct)))
    checks.append(make_check(
        "form_matches_direct_quadrature", "max_leq", worst, IDENTITY_TOL,
        "matrix quadratic form and array-wise energy are the same sums"))

    if patch.name == "plane_k":
        target = np.pi**2 / 2.0
        errs = [abs(l - target) for l in lams]
        chk, tbl = _order_check(
            "order_flat_eigenvalue", patch, resolutions, errs,
            "flat-square smallest eigenvalue converges to the closed form")
        checks.append(chk)
        tables["flat_eigenvalue_error"] = tbl
        checks.append(make_check(
            "flat_eigenvalue_within_1pct", "max_leq", errs[-1] / target, 0.01,
            "closed-form Dirichlet value reproduced at the finest grid",
            extras={"lambda": lams[-1], "target": target}))
    elif patch.name == "catenoid_r6":
        checks.append(make_check(
            "catenoid_patch_unstable", "bool", all(l < 0 for l in lams), None,
            "wide catenoid patches admit area-decreasing variations",
            extras={"lambdas": lams}))
        _, frc, Ac, JNc = surface_data(patch, resolutions[-1])
        f = plateau_field(frc, flat_u=0.4, flat_v=0.0, power_u=2, power_v=1)
        a = np.zeros(6)
        a[3] = 1.0
        svi = stab.special_variation_inequality(a, f, frc, Ac, JNc)
        checks.append(make_check(
            "special_variation_detects_instability", "bool", svi["middle"] < 0, None,
            "a slowly-varying cutoff against a flat normal direction has "
            "negative second variation", extras=svi))
    elif patch.family == "holo":
        checks.append(make_check(
            "holo_patch_stable", "min_geq", float(min(lams)), -1e-9,
            "holomorphic graphs are area-minimizing, so patches are stable",
            extras={"lambdas": lams}))

    label = "patch-stable" if lams[-1] >= -stab.SOLVER_TOL else "patch-unstable"
    checks.append(make_check(
        "stability_label", "info", label, None,
        "patch spectra are necessary, not sufficient, evidence for stability",
        extras={"lambda_min": lams[-1]}))

    fields["eigen_section_norm"] = np.sqrt(
        np.einsum("...b,...b->...", res.eigen_section, res.eigen_section))
    fields["_eigen_section"] = res.eigen_section
    fields["_lambda_min"] = lams[-1]
    return checks, tables, fields


# ---------------------------------------------------------------------------
# holonomy suite
# ---------------------------------------------------------------------------


def holonomy_suite(surface=None, params=None, synthetic=None, resolution=17, seed=0):
    checks: list[Check] = []

    if synthetic is not None:
        if synthetic != "so4":
            raise ValueError(f"unknown synthetic connection {synthetic!r}")
        domain = builtin_surface("holo_graph").domain.with_resolution(33)
        conn = cxs.synthetic_so4_connection(domain, seed=seed)
        result = cxs.find_parallel_JN(conn)
        checks.append(make_check(
            "so4_no_parallel_structure", "bool", not result.found, None,
            "full-rotation holonomy leaves no antisymmetric commutant",
            extras={
                "commutant_dim": result.commutant_dim,
                "antisym_dim": result.antisym_dim,
                "certificate": result.certificate,
            }))
        checks.append(make_check(
            "so4_certificate_positive", "min_geq", result.certificate, 1.0,
            "smallest retained singular value certifies the empty null space"))
        return checks, result

    patch = builtin_surface(surface, params).with_resolution(resolution)
    fr = compute_frames(patch)
    conn = cxs.connection_for(patch, fr)
    result = cxs.find_parallel_JN(conn, frames=fr)
    checks.append(make_check(
        f"{surface}_parallel_structure_found", "bool", result.found, None,
        "the holonomy commutant contains an orthogonal complex structure",
        extras={"commutant_dim": result.commutant_dim,
                "antisym_dim": result.antisym_dim}))
    if result.found:
        rep = result.axiom_report
        checks.append(make_check(
            "found_jn_orthogonal", "max_leq", rep.orthogonality, 1e-8,
            "recovered structure is orthogonal"))
        checks.append(make_check(
            "found_jn_squares_to_minus_id", "max_leq", rep.square, 1e-8,
            "recovered structure squares to -Id"))
        checks.append(make_check(
            "found_jn_parallel", "max_leq", rep.parallelism, 1e-6,
            "recovered structure is parallel"))
        if result.antisym_dim == 1:
            # a one-dimensional antisymmetric commutant pins the structure
            # up to sign; flat connections admit many and skip this
            JN_cat = cxs.as_field(cxs.catalog_normal_structure(patch, fr), fr)
            dist = min(
                trimmed_max_norm(result.JN - JN_cat, 1, vec_axes=2),
                trimmed_max_norm(result.JN + JN_cat, 1, vec_axes=2),
            )
            checks.append(make_check(
                "found_jn_matches_catalog", "max_leq", dist, 1e-4,
                "recovered structure agrees with the catalog one up to sign"))
    return checks, result


# ---------------------------------------------------------------------------
# convergence suite (order tables only)
# ---------------------------------------------------------------------------


def convergence_suite(patch, resolutions=DEFAULT_RESOLUTIONS, seed=0):
    checks, tables, _ = identity_suite(patch, resolutions, n_dirs=4, seed=seed)
    order_checks = [c for c in checks if c.mode == "order_geq"]
    return order_checks, tables
