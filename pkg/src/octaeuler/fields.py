"""Field containers, sampled Hölder seminorms, and pointwise constraint residuals."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "VectorField3",
    "SampleCloud",
    "InsufficientDataError",
    "plateau_cutoff",
    "holder_seminorm",
    "ring_holder_seminorm",
    "divergence_residual",
    "vanishing_condition_residual",
    "validate_support",
    "halfline_probe_points",
    "smooth_bump_field",
]


class InsufficientDataError(ValueError):
    """Fewer than two sample points: no difference quotient exists."""


@dataclass(frozen=True)
class VectorField3:
    """A pointwise-evaluable field on R^3 with quadrature hints.

    ``evaluator`` maps an (N, 3) array of points to (N, 3) values.  The
    symmetry tag records how the field was built ("none", "O-symmetric",
    "Otilde-odd"); ``cone_constant`` marks fields that are constant along
    rays inside each reflection cone, which the singular-integral quadrature
    exploits for exact radial integration.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    support_radius: float = math.inf
    symmetry_tag: str = "none"
    cone_constant: bool = False
    radial_kinks: tuple[float, ...] = ()

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            return np.asarray(self.evaluator(pts[None, :]), dtype=float)[0]
        return np.asarray(self.evaluator(pts), dtype=float)

    @property
    def compactly_supported(self) -> bool:
        return math.isfinite(self.support_radius)


def validate_support(field: VectorField3, n_samples: int = 100, seed: int = 0) -> float:
    """Max |f| over random points outside the declared support radius."""
    if not field.compactly_supported:
        return 0.0
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_samples, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = field.support_radius * (1.0 + rng.uniform(0.01, 10.0, size=n_samples))
    vals = field(dirs * radii[:, None])
    return float(np.abs(vals).max())


@dataclass(frozen=True)
class SampleCloud:
    """Matched point/value samples used for sampled-norm estimation."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if len(pts) != len(vals):
            raise ValueError("points and values must match in length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def from_field(cls, evaluator, points: np.ndarray) -> "SampleCloud":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(points=pts, values=np.asarray(evaluator(pts), dtype=float))

    def to_csv(self) -> str:
        d = self.points.shape[1]
        k = self.values.shape[1]
        header = [f"x{i+1}" for i in range(d)] + [f"f{i+1}" for i in range(k)]
        buf = io.StringIO()
        buf.write(",".join(header) + "\n")
        for p, v in zip(self.points, self.values):
            buf.write(",".join(f"{u:.17g}" for u in (*p, *v)) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampleCloud":
        lines = [ln for ln in text.strip().splitlines() if ln]
        header = lines[0].split(",")
        d = sum(1 for h in header if h.startswith("x"))
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        return cls(points=data[:, :d], values=data[:, d:])


def _pair_quotients(points: np.ndarray, values: np.ndarray, alpha: float) -> float:
    n = len(points)
    if n < 2:
        raise InsufficientDataError("need at least two sample points")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    best = 0.0
    # all pairs, processed in row blocks to bound memory
    block = max(1, int(4e6 // max(n, 1)))
    for i0 in range(0, n, block):
        i1 = min(n, i0 + block)
        dp = points[i0:i1, None, :] - points[None, :, :]
        dv = values[i0:i1, None, :] - values[None, :, :]
        dist = np.linalg.norm(dp, axis=2)
        diff = np.linalg.norm(dv, axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(dist > 0, diff / dist ** alpha, 0.0)
        best = max(best, float(q.max()))
    return best


def holder_seminorm(cloud: SampleCloud, alpha: float) -> float:
    """Sampled Hölder difference-quotient sup (a lower bound on the norm)."""
    return _pair_quotients(cloud.points, cloud.values, alpha)


def ring_holder_seminorm(cloud: SampleCloud, alpha: float) -> float:
    """Scale-invariant variant: values are weighted by |x|^alpha first."""
    w = np.linalg.norm(cloud.points, axis=1) ** alpha
    return _pair_quotients(cloud.points, cloud.values * w[:, None], alpha)


def divergence_residual(
    field, probes: np.ndarray, h: float = 1e-3, richardson: bool = False
) -> float:
    """Max |div f| over probes via second-order central differences.

    With ``richardson`` the step is halved and the two estimates combined,
    cancelling the leading O(h^2) truncation term.
    """
    pts = np.atleast_2d(np.asarray(probes, dtype=float))

    def central(step):
        div = np.zeros(len(pts))
        for i in range(3):
            e = np.zeros(3)
            e[i] = step
            div += (field(pts + e)[:, i] - field(pts - e)[:, i]) / (2.0 * step)
        return div

    div = central(h)
    if richardson:
        div = (4.0 * central(h / 2.0) - div) / 3.0
    return float(np.abs(div).max())


def vanishing_condition_residual(field, samples: Sequence[float]) -> float:
    """Max |f1 + f2| along the diagonal half-line {x1 = x2 = z, x3 = 0}."""
    z = np.asarray(samples, dtype=float)
    if np.any(z <= 0):
        raise ValueError("samples must be positive")
    pts = np.stack([z, z, np.zeros_like(z)], axis=1)
    vals = field(pts)
    return float(np.abs(vals[:, 0] + vals[:, 1]).max())


def plateau_cutoff(z: np.ndarray) -> np.ndarray:
    """C^2 quintic plateau: 1 for |z| <= 1, 0 for z >= 2, smoothstep between."""
    z = np.abs(np.asarray(z, dtype=float))
    s = np.clip(z - 1.0, 0.0, 1.0)
    return 1.0 - s ** 3 * (10.0 - 15.0 * s + 6.0 * s ** 2)


def halfline_probe_points(
    vertex: np.ndarray,
    n_scales: int = 13,
    n_angular: int = 32,
    spread: float = 0.2,
    seed: int = 0,
) -> np.ndarray:
    """Probe cloud clustered around a boundary half-line.

    Geometric radii 2^-k for k = 0..n_scales-1 times angular samples of the
    spherical triangle near the given vertex direction, matching the scale
    structure the ring norms measure.
    """
    v = np.asarray(vertex, dtype=float)
    v = v / np.linalg.norm(v)
    rng = np.random.default_rng(seed)
    # tangent frame at the vertex
    t1 = np.cross(v, [0.0, 0.0, 1.0])
    if np.linalg.norm(t1) < 1e-12:
        t1 = np.cross(v, [0.0, 1.0, 0.0])
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(v, t1)
    pts = []
    for k in range(n_scales):
        r = 2.0 ** -k
        ab = rng.uniform(-spread, spread, size=(n_angular, 2))
        d = v[None, :] + ab[:, :1] * t1[None, :] + ab[:, 1:] * t2[None, :]
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        pts.append(r * d)
    return np.concatenate(pts)


def smooth_bump_field(support_radius: float = 1.0) -> VectorField3:
    """Divergence-free C^3 bump supported in a ball, with generic moments.

    Built as curl(psi(|y|^2) v(y)) for a polynomial window psi and a fixed
    polynomial profile v, so the divergence vanishes identically and all
    values are exact polynomials.
    """
    R2 = support_radius ** 2

    def evaluate(pts: np.ndarray) -> np.ndarray:
        y = np.asarray(pts, dtype=float)
        s = np.einsum("ij,ij->i", y, y) / R2
        inside = s < 1.0
        psi = np.where(inside, (1.0 - np.clip(s, 0.0, 1.0)) ** 4, 0.0)
        dpsi = np.where(inside, -4.0 * (1.0 - np.clip(s, 0.0, 1.0)) ** 3, 0.0) / R2
        y1, y2, y3 = y[:, 0], y[:, 1], y[:, 2]
        v = np.stack(
            [y2 * y3 + 0.3, 0.1 * y3 ** 2 - y1, 0.7 * y1 * y2 - 0.2], axis=1
        )
        curl_v = np.stack(
            [0.7 * y1 - 0.2 * y3, y2 - 0.7 * y2, -1.0 - y3], axis=1
        )
        grad_psi = 2.0 * dpsi[:, None] * y
        return psi[:, None] * curl_v + np.cross(grad_psi, v)

    return VectorField3(
        evaluator=evaluate, support_radius=support_radius, symmetry_tag="none"
    )
