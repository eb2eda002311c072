"""Biot-Savart velocity, velocity-gradient PV integrals, and moment expansion.

Scheme
------
All near/mid-range integrals run in polar coordinates centred at the
evaluation point: the velocity kernel becomes bounded there and the gradient
kernels reduce to mean-zero angular factors times dr/r, so the symmetric
exclusion limit exists node-by-node.  Rays are split exactly at the
reflection-plane and support-sphere crossings, which makes the radial rule
exact for cone-constant data.  For bounded symmetric (non-decaying) fields
the far region is integrated on origin-centred shells with the zero-mean
far-field kernel subtracted; on the group-invariant grid the subtracted term
cancels to rounding, and the remaining O(1/R) tail is Richardson
extrapolated over outer checkpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import VectorField3
from .quadrature import (
    NonIntegrableError,
    PvResult,
    QuadratureSpec,
    REFLECTION_PLANE_NORMALS_3D,
    gauss_panels,
    ray_segments,
    richardson_tail,
    sphere_grid_sym48,
)

__all__ = [
    "DEFAULT_SPEC_3D",
    "MomentSet",
    "ExpansionResult",
    "compute_moments",
    "velocity_pv",
    "velocity_expansion",
    "velocity_gradient_pv",
    "sphere_moment_residual",
]

DEFAULT_SPEC_3D = QuadratureSpec(n_theta=64, n_phi=128)

# Quadratic angular factors of the gradient kernels, expanded over the basis
#   b0..b5 = n1*n2, n1*n3, n2*n3, 1-3*n1^2, 1-3*n2^2, 1-3*n3^2
# (on the unit sphere (y_a^2 - y_c^2) + (y_b^2 - y_c^2) = 1 - 3*n_c^2).
# _GRAD_COEF[i, j, c, b] gives the entry d_j u_i paired with vorticity
# component c and basis form b.
_GRAD_COEF = np.zeros((3, 3, 3, 6))
_GRAD_COEF[0, 0, 1, 1] = -3.0
_GRAD_COEF[0, 0, 2, 0] = 3.0
_GRAD_COEF[1, 0, 0, 1] = 3.0
_GRAD_COEF[1, 0, 2, 3] = 1.0
_GRAD_COEF[2, 0, 0, 0] = -3.0
_GRAD_COEF[2, 0, 1, 3] = -1.0
_GRAD_COEF[0, 1, 1, 2] = -3.0
_GRAD_COEF[0, 1, 2, 4] = -1.0
_GRAD_COEF[1, 1, 0, 2] = 3.0
_GRAD_COEF[1, 1, 2, 0] = -3.0
_GRAD_COEF[2, 1, 0, 4] = 1.0
_GRAD_COEF[2, 1, 1, 0] = 3.0
_GRAD_COEF[0, 2, 1, 5] = 1.0
_GRAD_COEF[0, 2, 2, 2] = 3.0
_GRAD_COEF[1, 2, 0, 5] = -1.0
# the d3 u2 kernel against omega_3 is -3 y1 y3 (differentiating z1/|z|^3;
# the +3 variant breaks curl(u) = omega, cf. the finite-difference oracle)
_GRAD_COEF[1, 2, 2, 1] = -3.0
_GRAD_COEF[2, 2, 0, 2] = -3.0
_GRAD_COEF[2, 2, 1, 1] = 3.0


def _basis_forms(n: np.ndarray) -> np.ndarray:
    """The six quadratic forms at unit directions n, shape (..., 6)."""
    n1, n2, n3 = n[..., 0], n[..., 1], n[..., 2]
    return np.stack(
        [
            n1 * n2,
            n1 * n3,
            n2 * n3,
            1.0 - 3.0 * n1 ** 2,
            1.0 - 3.0 * n2 ** 2,
            1.0 - 3.0 * n3 ** 2,
        ],
        axis=-1,
    )


def _local_gradient_term(w: np.ndarray) -> np.ndarray:
    w1, w2, w3 = w
    return np.array([[0.0, -w3, w2], [w3, 0.0, -w1], [-w2, w1, 0.0]]) / 3.0


def _check_integrable(field: VectorField3) -> None:
    if not field.compactly_supported and field.symmetry_tag not in (
        "O-symmetric",
        "Otilde-odd",
    ):
        raise NonIntegrableError(
            "field is neither compactly supported nor symmetry-tagged; "
            "the Biot-Savart integral need not converge"
        )


def _has_cone_jumps(field: VectorField3) -> bool:
    return field.symmetry_tag in ("O-symmetric", "Otilde-odd")


def _outer_radius(field: VectorField3, xnorm: float, spec: QuadratureSpec):
    """(R1, R_out): end of the point-centred region and of the far tail."""
    if field.compactly_supported:
        r1 = xnorm + field.support_radius * 1.0 + 1.0
        return r1, None
    scale = max(xnorm, 1e-12)
    return 4.0 * scale, spec.r_outer * scale


def _main_segments(field, x, dirs, r_lo, spec, xnorm, r1):
    xn = dirs @ x
    with np.errstate(invalid="ignore"):
        rplus = xn + np.sqrt(np.maximum(xn ** 2 + r1 ** 2 - xnorm ** 2, 0.0))
    planes = REFLECTION_PLANE_NORMALS_3D if _has_cone_jumps(field) else None
    spheres = []
    if field.compactly_supported:
        spheres.append(field.support_radius)
    spheres.extend(field.radial_kinks)
    return ray_segments(
        x, dirs, r_lo, rplus, plane_normals=planes, sphere_radii=tuple(spheres)
    )


def _radial_rule(field, lo, hi, spec, log: bool):
    if field.cone_constant:
        return gauss_panels(lo, hi, panels=1, q=2, log=log)
    return gauss_panels(lo, hi, panels=4, q=spec.n_radial, log=log)


def _eval_on_rays(field, x, dirs, nodes):
    m, k = nodes.shape
    pts = x[None, None, :] - nodes[:, :, None] * dirs[:, None, :]
    vals = field(pts.reshape(-1, 3)).reshape(m, k, 3)
    return vals


def _velocity_main(field, x, spec, dirs, wts, r1, xnorm):
    lo, hi = _main_segments(field, x, dirs, 0.0, spec, xnorm, r1)
    nodes, wr = _radial_rule(field, lo, hi, spec, log=False)
    vals = _eval_on_rays(field, x, dirs, nodes)
    fw = np.einsum("mk,mkc->mc", wr, vals)      # radially integrated vorticity
    return np.einsum("m,mc->c", wts, np.cross(fw, dirs))


def _velocity_tail(field, x, spec, dirs, wts, r1, r_out):
    """Far region on origin-centred shells with the x=0 kernel subtracted."""
    checkpoints = [r_out / 16.0, r_out / 4.0, r_out]
    partials = []
    total = np.zeros(3)
    lo = r1
    for rc in checkpoints:
        nodes, wt = gauss_panels(
            np.array([lo]), np.array([rc]), panels=5, q=5, log=True
        )
        pts = nodes[:, None, None] * dirs[None, :, :]
        vals = field(pts.reshape(-1, 3)).reshape(len(nodes), -1, 3)
        d = x[None, None, :] - pts
        dn = np.linalg.norm(d, axis=-1)
        k_near = np.cross(vals, d) / dn[..., None] ** 3
        k_far = np.cross(vals, -pts) / nodes[:, None, None] ** 3
        contrib = np.einsum("r,m,rmc->c", wt * nodes ** 3, wts, k_near - k_far)
        total = total + contrib
        partials.append(total.copy())
        lo = rc
    return richardson_tail(np.array(partials), np.array(checkpoints))


def velocity_pv(
    field: VectorField3, x: np.ndarray, spec: QuadratureSpec = DEFAULT_SPEC_3D
) -> PvResult:
    """Principal-value Biot-Savart velocity at x.

    Requires the field to be compactly supported or symmetry-tagged (the
    rotational symmetry is what makes the outer limit exist).  The
    point-centred main region is refined in angle for the error estimate;
    the smooth subtracted tail is integrated once at base resolution with
    its own extrapolation estimate.
    """
    _check_integrable(field)
    x = np.asarray(x, dtype=float)
    xnorm = float(np.linalg.norm(x))
    r1, r_out = _outer_radius(field, xnorm, spec)
    dirs, wts = sphere_grid_sym48(spec.n_theta, spec.n_phi)
    u = _velocity_main(field, x, spec, dirs, wts, r1, xnorm)
    err = math.inf
    if spec.refine > 1:
        fine = spec.refined()
        dirs_f, wts_f = sphere_grid_sym48(fine.n_theta, fine.n_phi)
        u_fine = _velocity_main(field, x, fine, dirs_f, wts_f, r1, xnorm)
        err = float(np.abs(u_fine - u).max())
        u = u_fine
    if r_out is not None:
        tail, tail_err = _velocity_tail(field, x, spec, dirs, wts, r1, r_out)
        u = u + tail
        err = err + tail_err
    return PvResult(value=u / (4.0 * math.pi), err_est=err / (4.0 * math.pi)).check(
        spec.fail_tolerance, "velocity_pv"
    )


def _plane_distance(x: np.ndarray) -> float:
    a = REFLECTION_PLANE_NORMALS_3D
    return float(np.min(np.abs(a @ x) / np.linalg.norm(a, axis=1)))


def _gradient_eps_scale(field, x, xnorm) -> float:
    if _has_cone_jumps(field):
        d = _plane_distance(x)
        if d <= 1e-12 * max(xnorm, 1.0):
            raise ValueError(
                "gradient PV requested on a reflection plane, where the "
                "extended vorticity jumps"
            )
        return d
    return 0.1 * max(xnorm, 0.1)


def _gradient_main(field, x, spec, dirs, wts, r1, xnorm, eps):
    lo, hi = _main_segments(field, x, dirs, eps, spec, xnorm, r1)
    nodes, wr = _radial_rule(field, lo, hi, spec, log=True)
    vals = _eval_on_rays(field, x, dirs, nodes)
    fw = np.einsum("mk,mkc->mc", wr, vals)
    forms = _basis_forms(dirs)
    return np.einsum("ijcb,mb,mc,m->ij", _GRAD_COEF, forms, fw, wts)


def _gradient_inner(field, x, spec, dirs, wts, e_lo, e_hi):
    """Contribution of the shell eps in [e_lo, e_hi] around x."""
    nodes, wt = gauss_panels(
        np.array([e_lo]), np.array([e_hi]), panels=2, q=4, log=True
    )
    pts = x[None, None, :] - nodes[:, None, None] * dirs[None, :, :]
    vals = field(pts.reshape(-1, 3)).reshape(len(nodes), -1, 3)
    forms = _basis_forms(dirs)
    fw = np.einsum("r,rmc->mc", wt, vals)
    return np.einsum("ijcb,mb,mc,m->ij", _GRAD_COEF, forms, fw, wts)


def _gradient_tail(field, x, spec, dirs, wts, r1, r_out):
    checkpoints = [r_out / 16.0, r_out / 4.0, r_out]
    partials = []
    total = np.zeros((3, 3))
    lo = r1
    for rc in checkpoints:
        nodes, wt = gauss_panels(
            np.array([lo]), np.array([rc]), panels=5, q=5, log=True
        )
        pts = nodes[:, None, None] * dirs[None, :, :]
        vals = field(pts.reshape(-1, 3)).reshape(len(nodes), -1, 3)
        d = x[None, None, :] - pts
        dn = np.linalg.norm(d, axis=-1)
        forms_near = _basis_forms(d / dn[..., None])
        forms_far = _basis_forms(-pts / nodes[:, None, None])
        k_near = np.einsum(
            "ijcb,rmb,rmc->rmij", _GRAD_COEF, forms_near, vals
        ) / dn[..., None, None] ** 3
        k_far = np.einsum(
            "ijcb,rmb,rmc->rmij", _GRAD_COEF, forms_far, vals
        ) / nodes[:, None, None, None] ** 3
        contrib = np.einsum("r,m,rmij->ij", wt * nodes ** 3, wts, k_near - k_far)
        total = total + contrib
        partials.append(total.copy())
        lo = rc
    return richardson_tail(np.array(partials), np.array(checkpoints))


def _gradient_main_eps(field, x, spec, dirs, wts, r1, xnorm):
    """Main region with the 2-point Richardson limit in the exclusion radius."""
    scale = _gradient_eps_scale(field, x, xnorm)
    eps = sorted(e * scale for e in spec.eps_schedule)  # ascending
    g_base = _gradient_main(field, x, spec, dirs, wts, r1, xnorm, eps[0])
    # values at the larger exclusion radii differ by thin inner shells
    g_at = [g_base]
    for k in range(len(eps) - 1):
        sh = _gradient_inner(field, x, spec, dirs, wts, eps[k], eps[k + 1])
        g_at.append(g_at[-1] - sh)
    g0, g1 = g_at[0], g_at[1] if len(g_at) > 1 else g_at[0]
    e0, e1 = eps[0], eps[1] if len(eps) > 1 else 2 * eps[0]
    g_lim = g0 + (g0 - g1) * (e0 / (e1 - e0))
    return g_lim, float(np.abs(g_lim - g0).max())


def velocity_gradient_pv(
    field: VectorField3, x: np.ndarray, spec: QuadratureSpec = DEFAULT_SPEC_3D
) -> PvResult:
    """PV velocity gradient at x; entry (i, j) is d u_i / d x_j.

    Each entry is the local antisymmetric vorticity term plus a PV
    convolution with a mean-zero quadratic kernel; the symmetric exclusion
    radius follows the eps schedule (scaled by the distance to the nearest
    field discontinuity) with a 2-point Richardson limit.
    """
    _check_integrable(field)
    x = np.asarray(x, dtype=float)
    xnorm = float(np.linalg.norm(x))
    r1, r_out = _outer_radius(field, xnorm, spec)
    dirs, wts = sphere_grid_sym48(spec.n_theta, spec.n_phi)
    g, eps_err = _gradient_main_eps(field, x, spec, dirs, wts, r1, xnorm)
    err = math.inf
    if spec.refine > 1:
        fine = spec.refined()
        dirs_f, wts_f = sphere_grid_sym48(fine.n_theta, fine.n_phi)
        g_fine, eps_err = _gradient_main_eps(field, x, fine, dirs_f, wts_f, r1, xnorm)
        err = float(np.abs(g_fine - g).max())
        g = g_fine
    err = err + eps_err
    if r_out is not None:
        tail, tail_err = _gradient_tail(field, x, spec, dirs, wts, r1, r_out)
        g = g + tail
        err = err + tail_err
    g = g / (4.0 * math.pi) + _local_gradient_term(field(x))
    return PvResult(value=g, err_est=err / (4.0 * math.pi)).check(
        spec.fail_tolerance, "velocity_gradient_pv"
    )


@dataclass(frozen=True)
class MomentSet:
    """First and truncated second moments of one vorticity component."""

    component: int
    r: float
    I: np.ndarray      # (3,)  y_j/|y|^3 moments
    II1: np.ndarray    # (3,)  (y_{j+1}^2 - y_{j-1}^2)/|y|^5 over |y| >= 2r
    II2: np.ndarray    # (3,)  y_{j+1} y_{j-1}/|y|^5 over |y| >= 2r


def _moment_matrices(field: VectorField3, r: float, spec: QuadratureSpec):
    """(I, II1, II2) as (3, 3) arrays indexed [j, component]."""
    _check_integrable(field)
    dirs, wts = sphere_grid_sym48(spec.n_theta, spec.n_phi)
    r_up = field.support_radius if field.compactly_supported else spec.r_outer

    def shells(radial_lo, log):
        if radial_lo >= r_up:
            return None, None
        kinks = [s for s in field.radial_kinks if radial_lo < s < r_up]
        edges = np.array([radial_lo, *sorted(kinks), r_up])
        nodes, wt = gauss_panels(edges[:-1], edges[1:], panels=8, q=spec.n_radial,
                                 log=log)
        return nodes.ravel(), wt.ravel()

    # first moments: kernel y_j/|y|^3, measure ds after the angular factor
    nodes, wt = shells(1e-9 * max(r, 1.0) if not field.compactly_supported else 0.0,
                       log=False)
    I = np.zeros((3, 3))
    if nodes is not None:
        pts = nodes[:, None, None] * dirs[None, :, :]
        vals = field(pts.reshape(-1, 3)).reshape(len(nodes), -1, 3)
        I = np.einsum("r,m,mj,rmc->jc", wt, wts, dirs, vals) / (4.0 * math.pi)

    # second moments over |y| >= 2r: quadratic kernels, measure ds/s
    lo2 = max(2.0 * r, 1e-9 * max(r, 1.0))
    nodes2, wt2 = shells(lo2, log=True)
    II1 = np.zeros((3, 3))
    II2 = np.zeros((3, 3))
    if nodes2 is not None:
        pts = nodes2[:, None, None] * dirs[None, :, :]
        vals = field(pts.reshape(-1, 3)).reshape(len(nodes2), -1, 3)
        jp = np.roll(dirs, -1, axis=1)  # n_{j+1} per j
        jm = np.roll(dirs, 1, axis=1)   # n_{j-1}
        q1 = jp ** 2 - jm ** 2
        q2 = jp * jm
        II1 = np.einsum("r,m,mj,rmc->jc", wt2, wts, q1, vals) / (4.0 * math.pi)
        II2 = np.einsum("r,m,mj,rmc->jc", wt2, wts, q2, vals) / (4.0 * math.pi)
    return I, II1, II2


def compute_moments(
    field: VectorField3,
    component: int,
    r: float,
    spec: QuadratureSpec = DEFAULT_SPEC_3D,
) -> MomentSet:
    """Moment integrals of one component (0-based index) at radius r."""
    if component not in (0, 1, 2):
        raise ValueError("component must be 0, 1, or 2")
    I, II1, II2 = _moment_matrices(field, r, spec)
    return MomentSet(
        component=component, r=r, I=I[:, component], II1=II1[:, component],
        II2=II2[:, component],
    )


@dataclass(frozen=True)
class ExpansionResult:
    """Moment-expansion velocity and the measured remainder against the PV."""

    u_expansion: np.ndarray
    u_pv: np.ndarray
    remainder: float
    omega_sup: float
    c_fit: float  # remainder / (|x| * omega_sup)


def expansion_terms(x: np.ndarray, I: np.ndarray, II1: np.ndarray,
                    II2: np.ndarray) -> np.ndarray:
    """Assemble the ten moment terms per component (arrays indexed [j, c])."""
    u = np.zeros(3)
    for i in range(3):
        ip, im = (i + 1) % 3, (i + 2) % 3
        u[i] = (
            I[ip, im]
            - I[im, ip]
            - x[ip] * II1[im, im]
            + x[ip] * II1[i, im]
            + x[im] * II1[i, ip]
            - x[im] * II1[ip, ip]
            + 3.0 * x[i] * II2[im, im]
            + 3.0 * x[im] * II2[i, im]
            - 3.0 * x[ip] * II2[i, ip]
            - 3.0 * x[i] * II2[ip, ip]
        )
    return u


def velocity_expansion(
    field: VectorField3, x: np.ndarray, spec: QuadratureSpec = DEFAULT_SPEC_3D
) -> ExpansionResult:
    """Near-origin expansion of the velocity for compactly supported data.

    Returns the assembled moment terms together with the measured remainder
    |u_pv - u_expansion|; the bound predicts remainder <= C |x| |omega|_inf
    with an absolute constant.
    """
    if not field.compactly_supported:
        raise NonIntegrableError("the moment expansion requires compact support")
    x = np.asarray(x, dtype=float)
    xnorm = float(np.linalg.norm(x))
    I, II1, II2 = _moment_matrices(field, xnorm, spec)
    u_exp = expansion_terms(x, I, II1, II2)
    pv = velocity_pv(field, x, spec)
    # sup |omega| sampled on the quadrature sphere grid across the support
    dirs, _ = sphere_grid_sym48(spec.n_theta, spec.n_phi)
    radii = np.linspace(0.05, 1.0, 12) * field.support_radius
    sup = max(
        float(np.abs(field(r * dirs)).max()) for r in radii
    )
    remainder = float(np.linalg.norm(pv.value - u_exp))
    c = remainder / (xnorm * sup) if xnorm > 0 and sup > 0 else 0.0
    return ExpansionResult(
        u_expansion=u_exp, u_pv=pv.value, remainder=remainder,
        omega_sup=sup, c_fit=c,
    )


_SPHERE_MONOMIALS = {
    "y1": (0,), "y2": (1,), "y3": (2,),
    "y1*y2": (0, 1), "y1*y3": (0, 2), "y2*y3": (1, 2),
    "y1^2": (0, 0), "y2^2": (1, 1), "y3^2": (2, 2),
}


def sphere_moment_residual(
    field: VectorField3,
    R: float,
    p: str,
    component: int,
    spec: QuadratureSpec = DEFAULT_SPEC_3D,
) -> float:
    """|integral over the sphere |y| = R of p(y)/|y|^k omega_c(y) dsigma|.

    First-order monomials use k = 3, second-order k = 5, matching the
    kernels whose shell integrals the symmetry argument kills.  For an
    O-symmetric field on the group-adapted grid the cancellation is exact to
    rounding.
    """
    try:
        idx = _SPHERE_MONOMIALS[p]
    except KeyError:
        raise ValueError(
            f"unknown monomial {p!r}; one of {sorted(_SPHERE_MONOMIALS)}"
        ) from None
    dirs, wts = sphere_grid_sym48(spec.n_theta, spec.n_phi)
    vals = field(R * dirs)[:, component]
    poly = np.ones(len(dirs))
    for i in idx:
        poly = poly * dirs[:, i]
    # R^deg * R^2 / R^(deg+3) = 1/R for quadratics, 1 for linears
    scale = 1.0 if len(idx) == 1 else 1.0 / R
    return float(abs(np.sum(wts * poly * vals) * scale))
