"""Planar sector machinery: Poisson modes, the sign-function series, and
principal-value double Riesz transforms with their closed-form anchors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .fields import plateau_cutoff
from .quadrature import (
    PvResult,
    QuadratureSpec,
    circle_grid,
    gauss_panels,
    ray_segments,
    richardson_tail,
)
from .symgroup import DomainLocator, extended_group_2d, extend_scalar

__all__ = [
    "DEFAULT_SPEC_2D",
    "Sector",
    "SectorFunction2",
    "ScalarField2",
    "RieszKernel2",
    "riesz_kernel",
    "PoissonMode",
    "UnsupportedResonanceError",
    "sector_poisson_mode",
    "polar_laplacian_residual",
    "bahouri_chemin_partial_sum",
    "odd_quadrant_indicator",
    "checkerboard_indicator",
    "bahouri_chemin_input",
    "riesz_pv_2d",
    "riesz_quadrant_closed_form",
    "bc_log_slope",
    "SlopeFit",
    "halfmoon_integral",
]

DEFAULT_SPEC_2D = QuadratureSpec(
    eps_schedule=(1e-2, 10.0 ** -2.2, 10.0 ** -2.4),
    r_outer=1e3,
    n_theta=1024,
    n_radial=6,
    refine=2,
)


class UnsupportedResonanceError(ValueError):
    """(2 + alpha)^2 = m^2 for a pair other than (m, alpha) = (2, 0)."""


@dataclass(frozen=True)
class Sector:
    """One of the 2m congruent sectors of opening pi/m."""

    m: int
    copy_index: int = 1

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("need m >= 2 (opening at most pi/2)")
        if not 1 <= self.copy_index <= 2 * self.m:
            raise ValueError("copy_index must lie in 1..2m")

    @property
    def theta_range(self) -> tuple[float, float]:
        w = math.pi / self.m
        return ((self.copy_index - 1) * w, self.copy_index * w)

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        th = np.arctan2(pts[:, 1], pts[:, 0]) % (2.0 * math.pi)
        a, b = self.theta_range
        ok = (th > a) & (th < b) & (np.hypot(pts[:, 0], pts[:, 1]) > 0)
        return ok if np.asarray(points).ndim > 1 else bool(ok[0])


@dataclass(frozen=True)
class SectorFunction2:
    """Sector data as a truncated sine series with radial profiles.

    Terms are (mode, profile) pairs representing sum_k profile_k(r)
    sin(mode_k * theta), multiplied by the cutoff in r.
    """

    terms: tuple[tuple[int, Callable[[np.ndarray], np.ndarray]], ...]
    cutoff: Callable[[np.ndarray], np.ndarray] = plateau_cutoff

    def __post_init__(self):
        for mode, _ in self.terms:
            if int(mode) != mode or mode <= 0:
                raise ValueError("series modes must be positive integers")

    def evaluate_polar(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(np.broadcast_shapes(r.shape, theta.shape))
        for mode, profile in self.terms:
            out = out + np.asarray(profile(r)) * np.sin(mode * theta)
        return out * np.asarray(self.cutoff(r))

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = np.arctan2(pts[:, 1], pts[:, 0])
        out = self.evaluate_polar(r, th)
        return out if np.asarray(points).ndim > 1 else float(out[0])


@dataclass(frozen=True)
class PoissonMode:
    """Radial profile of the sector Poisson solve for r^alpha sin(m theta).

    For (2 + alpha)^2 != m^2 the profile is coefficient * r^(2+alpha); the
    resonant pair m = 2, alpha = 0 instead produces (1/4) r^2 ln r, flagged
    by ``logarithmic``.
    """

    m: int
    alpha: float
    coefficient: float
    logarithmic: bool

    def stream(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.logarithmic:
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(r > 0, 0.25 * r ** 2 * np.log(r), 0.0)
        return self.coefficient * r ** (2.0 + self.alpha)

    def source(self, r: np.ndarray) -> np.ndarray:
        return np.asarray(r, dtype=float) ** self.alpha


def sector_poisson_mode(m_total: int, alpha: float) -> PoissonMode:
    """Solve the radial mode ODE psi'' + psi'/r - m^2 psi/r^2 = r^alpha on r <= 1."""
    if int(m_total) != m_total or m_total < 2:
        raise ValueError("mode must be an integer >= 2")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    denom = (2.0 + alpha) ** 2 - float(m_total) ** 2
    if abs(denom) < 1e-12:
        if m_total == 2 and alpha == 0.0:
            return PoissonMode(m=2, alpha=0.0, coefficient=0.25, logarithmic=True)
        raise UnsupportedResonanceError(
            f"resonant pair (m, alpha) = ({m_total}, {alpha}) not supported"
        )
    return PoissonMode(
        m=m_total, alpha=alpha, coefficient=1.0 / denom, logarithmic=False
    )


def polar_laplacian_residual(
    mode: PoissonMode,
    r_samples: Sequence[float],
    theta_samples: Sequence[float] | None = None,
    h: float = 1e-3,
) -> float:
    """Apply the discrete polar Laplacian to psi(r) sin(m theta) and compare
    against r^alpha sin(m theta); returns the max relative error."""
    m = mode.m
    if theta_samples is None:
        # stay away from the sine zeros so the relative error is meaningful
        theta_samples = [math.pi / (2 * m), math.pi / (3 * m), math.pi / (4 * m)]
    worst = 0.0
    for r in r_samples:
        if not h < r < 1.0 - h:
            raise ValueError("need h < r < 1 - h (plateau region)")
        for th in theta_samples:
            u = lambda rr, tt: mode.stream(np.asarray(rr)) * math.sin(m * tt)
            lap = (
                (u(r, th + h) - 2 * u(r, th) + u(r, th - h)) / (r ** 2 * h ** 2)
                + (u(r + h, th) - 2 * u(r, th) + u(r - h, th)) / h ** 2
                + (u(r + h, th) - u(r - h, th)) / (2 * r * h)
            )
            f = r ** mode.alpha * math.sin(m * th)
            worst = max(worst, abs(lap - f) / abs(f))
    return worst


def bahouri_chemin_partial_sum(theta: float, K: int) -> tuple[float, float]:
    """Partial sums of sum_{k>=0} sin(2(2k+1) theta)/(2k+1), K terms.

    Returns (raw, normalized): the raw series converges to (pi/4) times the
    sign pattern sgn(sin 2 theta); the normalized value carries the 4/pi
    factor and tends to the sign itself.
    """
    if K < 1:
        raise ValueError("need at least one term")
    k = np.arange(K)
    raw = float(np.sum(np.sin(2.0 * (2 * k + 1) * theta) / (2 * k + 1)))
    return raw, raw * 4.0 / math.pi


@dataclass(frozen=True)
class ScalarField2:
    """Whole-plane scalar data for the PV quadrature, with jump geometry.

    ``breakline_angles`` lists (mod pi) the angles of lines through the
    origin across which the data jumps; ``radial_kinks`` lists radii of
    circles where the radial profile loses smoothness.  ``tail_cancellation``
    asserts that the circle means against the two quadratic harmonics vanish
    (true for odd data and for odd extensions over the dihedral group),
    which is what makes the outer principal value converge for non-decaying
    data.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    support_radius: float = math.inf
    tail_cancellation: bool = False
    breakline_angles: tuple[float, ...] = ()
    radial_kinks: tuple[float, ...] = ()
    ray_constant: bool = False

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            return float(np.asarray(self.evaluator(pts[None, :]))[0])
        return np.asarray(self.evaluator(pts), dtype=float)

    @property
    def compactly_supported(self) -> bool:
        return math.isfinite(self.support_radius)


def odd_quadrant_indicator() -> ScalarField2:
    """+1 on the sector {0 < theta < pi/4}, -1 on its antipode, else 0."""

    def evaluate(pts: np.ndarray) -> np.ndarray:
        x1, x2 = pts[:, 0], pts[:, 1]
        pos = (x2 > 0) & (x2 < x1)
        neg = (x2 < 0) & (x2 > x1)
        return np.where(pos, 1.0, np.where(neg, -1.0, 0.0))

    return ScalarField2(
        evaluator=evaluate,
        tail_cancellation=True,
        breakline_angles=(0.0, math.pi / 4.0),
        ray_constant=True,
    )


def checkerboard_indicator() -> ScalarField2:
    """Alternating-sign indicator over the eight pi/4 sectors.

    Built as the odd scalar extension of 1 on {0 < x2 < x1} over the
    dihedral group, so the sign pattern is (-1)^(i-1) on sector i.
    """
    ev = extend_scalar(
        lambda pts: np.ones(len(pts)), extended_group_2d(), DomainLocator("U2-tilde")
    )
    return ScalarField2(
        evaluator=ev,
        tail_cancellation=True,
        breakline_angles=(0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4),
        ray_constant=True,
    )


def bahouri_chemin_input(normalization: str = "raw") -> ScalarField2:
    """Cut-off sign data chi(|x|) sgn(x1 x2), in either normalization.

    ``raw`` scales by pi/4 so the data matches the bare series
    sum sin(2(2k+1) theta)/(2k+1); ``sign`` keeps amplitude one.
    """
    if normalization not in ("raw", "sign"):
        raise ValueError("normalization must be 'raw' or 'sign'")
    amp = math.pi / 4.0 if normalization == "raw" else 1.0

    def evaluate(pts: np.ndarray) -> np.ndarray:
        r = np.hypot(pts[:, 0], pts[:, 1])
        return amp * plateau_cutoff(r) * np.sign(pts[:, 0] * pts[:, 1])

    return ScalarField2(
        evaluator=evaluate,
        support_radius=2.0,
        breakline_angles=(0.0, math.pi / 2.0),
        radial_kinks=(1.0, 2.0),
        ray_constant=False,
    )


@dataclass(frozen=True)
class RieszKernel2:
    """Second-derivative kernel of the plane Newtonian potential.

    The off-diagonal kernel is z1 z2/|z|^4 with prefactor 1/pi; the diagonal
    kernels are +-(z1^2 - z2^2)/|z|^4 with prefactor 1/(2 pi) and carry the
    local term -f(x)/2, so that the two diagonal transforms sum to -Id.
    """

    name: str

    def __post_init__(self):
        if self.name not in ("11", "22", "12"):
            raise ValueError("kernel must be one of '11', '22', '12'")

    @property
    def local_coeff(self) -> float:
        return 0.0 if self.name == "12" else -0.5

    def angular(self, dirs: np.ndarray) -> np.ndarray:
        c, s = dirs[..., 0], dirs[..., 1]
        if self.name == "12":
            return c * s / math.pi
        q = (c * c - s * s) / (2.0 * math.pi)
        return q if self.name == "11" else -q

    def full(self, z: np.ndarray) -> np.ndarray:
        # angular() applied to a non-unit argument is quadratic in z, so the
        # homogeneity-(-2) kernel needs division by |z|^4
        r2 = np.einsum("...i,...i->...", z, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.angular(z) / (r2 * r2)
        return out

    def __str__(self) -> str:
        return f"R{self.name}"


def riesz_kernel(name: str) -> RieszKernel2:
    return RieszKernel2(name=name)


def _line_normals(angles: Sequence[float]) -> np.ndarray:
    return np.array([[-math.sin(a), math.cos(a)] for a in angles])


def _discontinuity_distance(field: ScalarField2, x: np.ndarray) -> float:
    d = math.inf
    if field.breakline_angles:
        a = _line_normals(field.breakline_angles)
        d = min(d, float(np.min(np.abs(a @ x))))
    r = float(np.hypot(*x))
    for k in field.radial_kinks:
        d = min(d, abs(r - k))
    if math.isinf(d):
        d = max(r, 1.0)
    return d


def _riesz_main(field, kernel, x, spec, dirs, wts, r1, eps_list):
    xnorm = float(np.hypot(*x))
    xn = dirs @ x
    rplus = xn + np.sqrt(np.maximum(xn ** 2 + r1 ** 2 - xnorm ** 2, 0.0))
    normals = _line_normals(field.breakline_angles) if field.breakline_angles else None
    spheres = []
    if field.compactly_supported:
        spheres.append(field.support_radius)
    spheres.extend(field.radial_kinks)
    lo, hi = ray_segments(
        x, dirs, eps_list[0], rplus, plane_normals=normals,
        sphere_radii=tuple(spheres),
    )
    if field.ray_constant:
        nodes, wr = gauss_panels(lo, hi, panels=1, q=2, log=True)
    else:
        nodes, wr = gauss_panels(lo, hi, panels=4, q=spec.n_radial, log=True)
    m, k = nodes.shape
    pts = x[None, None, :] - nodes[:, :, None] * dirs[:, None, :]
    vals = field(pts.reshape(-1, 2)).reshape(m, k)
    fw = np.einsum("mk,mk->m", wr, vals)
    q = kernel.angular(dirs)
    base = float(np.sum(wts * q * fw))
    # inner shells between consecutive exclusion radii, for the eps limit
    values = [base]
    for e_lo, e_hi in zip(eps_list[:-1], eps_list[1:]):
        nodes_i, wt_i = gauss_panels(
            np.array([e_lo]), np.array([e_hi]), panels=2, q=4, log=True
        )
        pts = x[None, None, :] - nodes_i[:, None, None] * dirs[None, :, :]
        vals_i = field(pts.reshape(-1, 2)).reshape(len(nodes_i), -1)
        shell = float(np.einsum("r,rm,m,m->", wt_i, vals_i, q, wts))
        values.append(values[-1] - shell)
    e0, e1 = eps_list[0], eps_list[1] if len(eps_list) > 1 else 2 * eps_list[0]
    v0, v1 = values[0], values[1] if len(values) > 1 else values[0]
    v_lim = v0 + (v0 - v1) * (e0 / (e1 - e0))
    return v_lim, abs(v_lim - v0)


def _riesz_tail(field, kernel, x, spec, dirs, wts, r1, r_out):
    checkpoints = [r_out / 16.0, r_out / 4.0, r_out]
    partials = []
    total = 0.0
    lo = r1
    for rc in checkpoints:
        nodes, wt = gauss_panels(
            np.array([lo]), np.array([rc]), panels=6, q=6, log=True
        )
        pts = nodes[:, None, None] * dirs[None, :, :]
        vals = field(pts.reshape(-1, 2)).reshape(len(nodes), -1)
        k_near = kernel.full(x[None, None, :] - pts)
        k_far = kernel.full(-pts)
        contrib = float(
            np.einsum("r,m,rm,rm->", wt * nodes ** 2, wts, k_near - k_far, vals)
        )
        total += contrib
        partials.append(total)
        lo = rc
    return richardson_tail(np.array(partials), np.array(checkpoints))


def _riesz_once(field, kernel, x, spec):
    xnorm = float(np.hypot(*x))
    dirs, wts = circle_grid(spec.n_theta)
    if field.compactly_supported:
        r1, r_out = xnorm + field.support_radius + 1.0, None
    else:
        if not field.tail_cancellation:
            raise ValueError(
                "non-compact data requires the circle-mean cancellation "
                "(odd or dihedral-odd symmetry) for the outer PV to converge"
            )
        r1 = 4.0 * max(xnorm, 1.0)
        r_out = spec.r_outer * max(xnorm, 1.0)
    d_loc = _discontinuity_distance(field, x)
    scale = min(1.0, d_loc)
    eps_list = sorted(e * scale for e in spec.eps_schedule)
    value, eps_err = _riesz_main(field, kernel, x, spec, dirs, wts, r1, eps_list)
    tail_err = 0.0
    if r_out is not None:
        tail, tail_err = _riesz_tail(field, kernel, x, spec, dirs, wts, r1, r_out)
        value += tail
    return value, eps_err + tail_err


def riesz_pv_2d(
    field: ScalarField2,
    kernel: RieszKernel2,
    x: np.ndarray,
    spec: QuadratureSpec = DEFAULT_SPEC_2D,
) -> PvResult:
    """Principal-value double Riesz transform of extended planar data at x.

    x must lie off the jump lines of the data.  The error estimate combines
    the angular-refinement difference with the exclusion-limit and tail
    extrapolation corrections.
    """
    x = np.asarray(x, dtype=float)
    if _discontinuity_distance(field, x) <= 1e-9 * max(1.0, float(np.hypot(*x))):
        raise ValueError("evaluation point lies on a jump line of the data")
    v_coarse, _ = _riesz_once(field, kernel, x, spec)
    if spec.refine > 1:
        v_fine, aux = _riesz_once(field, kernel, x, spec.refined())
        err = abs(v_fine - v_coarse) + aux
        value = v_fine
    else:
        value, err = v_coarse, math.inf
    value += kernel.local_coeff * field(x)
    return PvResult(value=np.float64(value), err_est=float(err)).check(
        spec.fail_tolerance, f"riesz_pv_2d[{kernel}]"
    )


def riesz_quadrant_closed_form(x: np.ndarray) -> float:
    """Exact off-diagonal transform of the odd quadrant indicator.

    The truncated integrals evaluate to arctan and logarithm terms; the
    logarithms cancel pairwise in the limit and each arctan tends to pi/2,
    leaving 2 pi/(8 pi) = 1/4 independently of the point as long as
    0 < x2 < x1.
    """
    x = np.asarray(x, dtype=float)
    x1, x2 = float(x[0]), float(x[1])
    if not 0.0 < x2 < x1:
        raise ValueError("closed form is valid strictly inside {0 < x2 < x1}")
    arctan_terms = -2.0 * (-math.pi / 2.0) + 2.0 * (math.pi / 2.0)
    log_terms = 0.0  # the four logarithms cancel pairwise as R -> infinity
    return (arctan_terms + log_terms) / (8.0 * math.pi)


@dataclass(frozen=True)
class SlopeFit:
    c: float
    b: float
    residual: float
    radii: tuple[float, ...]
    values: tuple[float, ...]


def bc_log_slope(
    kernel: RieszKernel2,
    radii: Sequence[float],
    spec: QuadratureSpec = DEFAULT_SPEC_2D,
    input_field: ScalarField2 | None = None,
) -> SlopeFit:
    """Fit value = c ln r + b for the transform of the cut-off sign data.

    Evaluation points are (r/sqrt(2), r/sqrt(2)).  The default input is the
    raw-series normalization of the sign data (amplitude pi/4), so the
    fitted constant absorbs the series normalization.
    """
    radii = tuple(float(r) for r in radii)
    if len(radii) < 4:
        raise ValueError("need at least four radii for a meaningful fit")
    if any(not 0.0 < r <= 0.25 for r in radii):
        raise ValueError("radii must lie in (0, 1/4]")
    field = bahouri_chemin_input("raw") if input_field is None else input_field
    vals = []
    for r in radii:
        x = np.array([r, r]) / math.sqrt(2.0)
        vals.append(float(riesz_pv_2d(field, kernel, x, spec).value))
    logs = np.log(np.array(radii))
    coef = np.polyfit(logs, np.array(vals), 1)
    fit = np.polyval(coef, logs)
    residual = float(np.max(np.abs(fit - np.array(vals))))
    return SlopeFit(
        c=float(coef[0]), b=float(coef[1]), residual=residual,
        radii=radii, values=tuple(vals),
    )


def halfmoon_integral(v1: float, l: float, trig: str) -> float:
    """Radial integral of the clipped angular averages from the half-moon bound.

    The angular set is [-(pi - theta_r), pi - theta_r] minus the two polar
    caps (with negative sign), cos(theta_r) = v1/r.  The sine harmonic
    integrates to zero identically; the cosine harmonic leaves
    -2 sin(2 theta_r)/r, whose integral stays bounded by 4 v1 (1/v1 - 1/l).
    """
    if not 0.0 < v1 < l <= 1.0:
        raise ValueError("need 0 < v1 < l <= 1")
    if trig not in ("sin2", "cos2"):
        raise ValueError("trig must be 'sin2' or 'cos2'")

    def clipped_mean(r: float) -> float:
        theta_r = math.acos(min(1.0, v1 / r))
        a = math.pi - theta_r
        if trig == "sin2":
            anti = lambda t: -0.5 * math.cos(2.0 * t)
        else:
            anti = lambda t: 0.5 * math.sin(2.0 * t)
        main = anti(a) - anti(-a)
        cap_lo = anti(-a) - anti(-math.pi)
        cap_hi = anti(math.pi) - anti(a)
        return main - cap_lo - cap_hi

    val, _ = quad(lambda r: clipped_mean(r) / r, v1, l, limit=200)
    return float(val)
