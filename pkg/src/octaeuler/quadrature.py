"""Grids, radial panel rules, and result types shared by the PV integrators.

The angular grids are group-adapted: the 3D sphere rule places Gauss nodes
inside the fundamental spherical triangle and replicates them over all 48
signed permutations.  Every group element then permutes the node set exactly,
so the angular cancellations that make the principal values converge hold to
rounding error on the grid itself, not just in the limit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, replace
from functools import lru_cache

import numpy as np

from .symgroup import extended_octahedral_group

__all__ = [
    "QuadratureSpec",
    "PvResult",
    "QuadratureFailureError",
    "NonIntegrableError",
    "sphere_grid_sym48",
    "circle_grid",
    "REFLECTION_PLANE_NORMALS_3D",
    "ray_segments",
    "gauss_panels",
]


class QuadratureFailureError(RuntimeError):
    """Extrapolation did not converge; carries the partial value."""

    def __init__(self, message: str, partial, err_est: float):
        super().__init__(message)
        self.partial = partial
        self.err_est = err_est


class NonIntegrableError(RuntimeError):
    """Shell integrals fail to decay: the integral diverges."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Knobs for the principal-value quadratures.

    ``eps_schedule`` lists inner exclusion radii (relative to the local
    discontinuity distance) used for the Richardson limit of the gradient
    kernels; ``r_outer`` is the outer truncation (times |x| for
    scale-invariant data); ``n_theta``/``n_phi`` control angular resolution
    (2D uses n_theta alone); ``n_radial`` is the Gauss order per radial
    panel.  ``refine`` > 1 repeats the computation at doubled angular
    resolution and uses the difference as the error estimate.
    """

    eps_schedule: tuple[float, ...] = (1e-1, 10.0 ** -1.5, 1e-2)
    r_outer: float = 1e3
    n_theta: int = 48
    n_phi: int = 96
    n_radial: int = 6
    refine: int = 2
    fail_tolerance: float | None = None

    def refined(self, factor: int = 2) -> "QuadratureSpec":
        return replace(
            self, n_theta=self.n_theta * factor, n_phi=self.n_phi * factor, refine=1
        )

    def to_json(self) -> str:
        d = asdict(self)
        d["eps_schedule"] = list(self.eps_schedule)
        d["R_outer"] = d.pop("r_outer")
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str | dict) -> "QuadratureSpec":
        d = dict(json.loads(text)) if isinstance(text, str) else dict(text)
        if "R_outer" in d:
            d["r_outer"] = d.pop("R_outer")
        if "eps_schedule" in d:
            d["eps_schedule"] = tuple(float(v) for v in d["eps_schedule"])
        if d.get("fail_tolerance") is not None:
            d["fail_tolerance"] = float(d["fail_tolerance"])
        return cls(**d)


@dataclass(frozen=True)
class PvResult:
    """A principal-value quadrature outcome with its error estimate."""

    value: np.ndarray
    err_est: float

    def check(self, tolerance: float | None, label: str = "pv") -> "PvResult":
        if tolerance is not None and not self.err_est <= tolerance:
            raise QuadratureFailureError(
                f"{label}: error estimate {self.err_est:.3e} above {tolerance:.3e}",
                partial=self.value,
                err_est=self.err_est,
            )
        return self


@lru_cache(maxsize=8)
def _leggauss(q: int):
    return np.polynomial.legendre.leggauss(q)


@lru_cache(maxsize=16)
def _triangle_grid(nu: int, nv: int):
    # Fundamental spherical triangle {x1 > x2 > x3 > 0} on S^2 in spherical
    # coordinates: phi in (0, pi/4), theta in (arctan(1/sin phi), pi/2).
    xu, wu = _leggauss(nu)
    xv, wv = _leggauss(nv)
    phi = 0.5 * (xu + 1.0) * (np.pi / 4.0)
    wphi = wu * (np.pi / 8.0)
    tmin = np.arctan2(1.0, np.sin(phi))              # (nu,)
    theta = tmin[:, None] + 0.5 * (xv + 1.0)[None, :] * (np.pi / 2.0 - tmin)[:, None]
    wtheta = 0.5 * (np.pi / 2.0 - tmin)[:, None] * wv[None, :]
    st, ct = np.sin(theta), np.cos(theta)
    dirs = np.stack(
        [st * np.cos(phi)[:, None], st * np.sin(phi)[:, None], ct], axis=-1
    ).reshape(-1, 3)
    wts = (wphi[:, None] * wtheta * st).reshape(-1)
    return dirs, wts


@lru_cache(maxsize=16)
def sphere_grid_sym48(n_theta: int = 48, n_phi: int = 96):
    """Full-sphere rule invariant under all 48 signed permutations.

    Node count is 48 * (n_theta//6) * (n_phi//8), approximately
    n_theta * n_phi.  No node lies on a reflection plane.
    """
    nu = max(2, n_phi // 8)
    nv = max(2, n_theta // 6)
    base_d, base_w = _triangle_grid(nu, nv)
    mats = extended_octahedral_group().matrices          # (48, 3, 3), exact
    dirs = np.einsum("gij,nj->gni", mats, base_d).reshape(-1, 3)
    wts = np.tile(base_w, len(mats))
    dirs.setflags(write=False)   # cached: guard against accidental mutation
    wts.setflags(write=False)
    return dirs, wts


def circle_grid(n: int):
    """Midpoint rule on the circle; nodes avoid all multiples of pi/4."""
    th = (np.arange(n) + 0.5) * (2.0 * np.pi / n)
    dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    wts = np.full(n, 2.0 * np.pi / n)
    return dirs, wts


# Integer normals of the nine reflection planes of the extended group
# (x_i = 0 and x_i = +-x_j); crossing radii are scale-free in the normal.
REFLECTION_PLANE_NORMALS_3D = np.array(
    [
        [1, 0, 0], [0, 1, 0], [0, 0, 1],
        [1, -1, 0], [1, 1, 0], [1, 0, -1],
        [1, 0, 1], [0, 1, -1], [0, 1, 1],
    ],
    dtype=float,
)


def ray_segments(
    x: np.ndarray,
    dirs: np.ndarray,
    r_lo: np.ndarray | float,
    r_hi: np.ndarray | float,
    plane_normals: np.ndarray | None = None,
    sphere_radii: tuple[float, ...] = (),
) -> tuple[np.ndarray, np.ndarray]:
    """Split the rays x - r*dir, r in [r_lo, r_hi], at field discontinuities.

    Breakpoints are the exact crossings with planes through the origin and
    with origin-centred spheres.  Returns (lo, hi) edge arrays of shape
    (M, S); zero-length segments (from out-of-range candidates) carry zero
    weight downstream and are harmless.
    """
    x = np.asarray(x, dtype=float)
    dirs = np.asarray(dirs, dtype=float)
    m = len(dirs)
    lo = np.broadcast_to(np.asarray(r_lo, dtype=float), (m,)).copy()
    hi = np.broadcast_to(np.asarray(r_hi, dtype=float), (m,)).copy()
    cands = []
    if plane_normals is not None and len(plane_normals):
        ax = plane_normals @ x                      # (P,)
        an = dirs @ plane_normals.T                 # (M, P)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(np.abs(an) > 1e-300, ax[None, :] / an, -1.0)
        cands.append(r)
    for rad in sphere_radii:
        xn = dirs @ x
        disc = xn ** 2 - (x @ x - rad ** 2)
        ok = disc > 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        r1 = np.where(ok, xn - sq, -1.0)
        r2 = np.where(ok, xn + sq, -1.0)
        cands.append(np.stack([r1, r2], axis=1))
    if cands:
        c = np.concatenate(cands, axis=1)
        c = np.where((c > lo[:, None]) & (c < hi[:, None]), c, hi[:, None])
        c.sort(axis=1)
        edges = np.concatenate([lo[:, None], c, hi[:, None]], axis=1)
    else:
        edges = np.stack([lo, hi], axis=1)
    return edges[:, :-1], edges[:, 1:]


def gauss_panels(
    lo: np.ndarray,
    hi: np.ndarray,
    panels: int,
    q: int,
    log: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule rowwise on [lo, hi], flattened per row.

    With ``log=False`` the returned weights integrate dr.  With ``log=True``
    panels are geometric and the weights integrate dr/r (the natural measure
    for the -n-homogeneous kernels); requires lo > 0 on nondegenerate
    segments.
    """
    gx, gw = _leggauss(q)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if log:
        a = np.log(np.maximum(lo, 1e-300))
        b = np.log(np.maximum(hi, 1e-300))
    else:
        a, b = lo, hi
    frac = np.linspace(0.0, 1.0, panels + 1)
    e = a[..., None] + (b - a)[..., None] * frac
    el, eh = e[..., :-1], e[..., 1:]
    mid = 0.5 * (el + eh)
    half = 0.5 * (eh - el)
    nodes = mid[..., None] + half[..., None] * gx
    wts = np.broadcast_to(half[..., None] * gw, nodes.shape)
    new_shape = (*lo.shape[:-1], lo.shape[-1] * panels * q)
    nodes = nodes.reshape(new_shape)
    wts = wts.reshape(new_shape)
    if log:
        nodes = np.exp(nodes)
    return nodes, wts


def richardson_tail(partials: np.ndarray, radii: np.ndarray):
    """Extrapolate cumulative integrals I(R) assuming an O(1/R) tail.

    Returns (limit, err_est) from the last two checkpoints; the estimate is
    the size of the applied correction plus the checkpoint disagreement.
    """
    if len(partials) < 2:
        return partials[-1], math.inf
    i1, i2 = partials[-2], partials[-1]
    r1, r2 = radii[-2], radii[-1]
    limit = (r2 * i2 - r1 * i1) / (r2 - r1)
    err = float(np.max(np.abs(limit - i2)))
    return limit, err
