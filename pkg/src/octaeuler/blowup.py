"""Constant-vorticity dynamics on the fundamental cone and its blow-up analysis.

A spatially constant vorticity (-lam, lam, mu) on {x1 > x2 > x3 > 0} stays
constant in form under the Euler evolution; the amplitudes obey a two
variable quadratic ODE whose finite-time escape drives the singularity
construction.  This module holds the exact closed forms (velocity, gradient,
stretching term), the escape classification, adaptive integration with
blow-up time estimation, the slip/flow-map geometry checks, and the
compactly supported localized variant of the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .fields import VectorField3, plateau_cutoff
from .symgroup import extended_octahedral_group, extend_vector_field

__all__ = [
    "OdeState",
    "BlowupVerdict",
    "Trajectory",
    "LocalizedData",
    "StiffFailureError",
    "PastBlowupError",
    "InternalInconsistencyError",
    "InvalidCutoffError",
    "ode_rhs",
    "stretching_product",
    "classify_initial_data",
    "integrate",
    "difference_identity_residual",
    "si_vorticity",
    "si_velocity",
    "si_velocity_gradient",
    "slip_residual",
    "flow_map",
    "flow_map_batch",
    "FlowMapResult",
    "constant_vorticity_field",
    "extended_constant_vorticity",
    "localized_initial_data",
    "FACE_LABELS",
]


class StiffFailureError(RuntimeError):
    """Step size underflowed before escape or t_max."""


class PastBlowupError(ValueError):
    """A trajectory was requested beyond its escape time."""


class InternalInconsistencyError(AssertionError):
    """Closed form and matrix product disagree beyond rounding."""


class InvalidCutoffError(ValueError):
    """Cutoff profile violates its plateau/support contract."""


@dataclass(frozen=True)
class OdeState:
    t: float
    lam: float
    mu: float


@dataclass(frozen=True)
class BlowupVerdict:
    blows_up: bool
    rule: str  # ThmB-1 | ThmB-2 | remark-axis | global-decay
    t_star_estimate: float | None


def ode_rhs(state: OdeState | tuple) -> tuple[float, float]:
    """d/dt of the two vorticity amplitudes."""
    if isinstance(state, OdeState):
        lam, mu = state.lam, state.mu
    else:
        lam, mu = state[-2], state[-1]
    dlam = (2.0 / 3.0) * lam * mu - (1.0 / 3.0) * lam ** 2
    dmu = (2.0 / 3.0) * lam * mu - (1.0 / 3.0) * mu ** 2
    return dlam, dmu


def si_vorticity(lam: float, mu: float) -> np.ndarray:
    return np.array([-lam, lam, mu])


def si_velocity(lam: float, mu: float, x: np.ndarray) -> np.ndarray:
    """Exact linear velocity with slip walls for the constant vorticity."""
    x = np.asarray(x, dtype=float)
    return x @ si_velocity_gradient(lam, mu).T


def si_velocity_gradient(lam: float, mu: float) -> np.ndarray:
    """Gradient matrix, entry (i, j) = d u_i / d x_j."""
    return (
        np.array(
            [
                [-lam + 2.0 * mu, -3.0 * mu, 3.0 * lam],
                [0.0, -lam - mu, 3.0 * lam],
                [0.0, 0.0, 2.0 * lam - mu],
            ]
        )
        / 3.0
    )


def stretching_product(lam: float, mu: float) -> np.ndarray:
    """The vortex-stretching vector, cross-checked against the matrix product."""
    closed = np.array(
        [
            lam ** 2 - 2.0 * lam * mu,
            -(lam ** 2) + 2.0 * lam * mu,
            2.0 * lam * mu - mu ** 2,
        ]
    ) / 3.0
    direct = si_velocity_gradient(lam, mu) @ si_vorticity(lam, mu)
    scale = 1.0 + abs(lam) ** 2 + abs(mu) ** 2
    if np.abs(closed - direct).max() > 1e-12 * scale:
        raise InternalInconsistencyError(
            f"stretching mismatch at (lam, mu) = ({lam}, {mu})"
        )
    return closed


def classify_initial_data(lam0: float, mu0: float) -> BlowupVerdict:
    """Escape-or-decay verdict from the sign pattern of the amplitudes.

    The generic off-diagonal condition and the positive diagonal come from
    the two sufficient blow-up conditions; the axis cases (one amplitude
    zero) reduce to a scalar Riccati equation solvable in closed form, as do
    the diagonal ones.
    """
    if lam0 != mu0 and lam0 != 0.0 and mu0 != 0.0:
        return BlowupVerdict(True, "ThmB-1", None)
    if lam0 == mu0:
        if lam0 > 0.0:
            # lam' = lam^2/3  =>  lam(t) = lam0/(1 - lam0 t/3)
            return BlowupVerdict(True, "ThmB-2", 3.0 / lam0)
        return BlowupVerdict(False, "global-decay", None)
    if lam0 == 0.0:
        if mu0 < 0.0:
            # mu' = -mu^2/3 blows up for negative data at t = -3/mu0
            return BlowupVerdict(True, "remark-axis", -3.0 / mu0)
        return BlowupVerdict(False, "remark-axis" if mu0 else "global-decay", None)
    # mu0 == 0, lam0 != 0
    if lam0 < 0.0:
        return BlowupVerdict(True, "remark-axis", -3.0 / lam0)
    return BlowupVerdict(False, "remark-axis", None)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    escaped: bool
    t_star_estimate: float | None
    t_star_residual: float | None
    dense: Callable[[np.ndarray], np.ndarray]

    def state(self, t: float) -> OdeState:
        y = self.dense(t)
        return OdeState(t=t, lam=float(y[0]), mu=float(y[1]))


def integrate(
    lam0: float,
    mu0: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    escape_threshold: float = 1e8,
    t_max: float = 50.0,
) -> Trajectory:
    """Adaptive RK5(4) integration with escape detection and T* tail fit.

    On escape the final decade of growth is fitted to A/(T* - t) (linear
    least squares on 1/(|lam|+|mu|)), which is exact for the Riccati-type
    asymptotics of this system.
    """
    for name, v in (("rtol", rtol), ("atol", atol),
                    ("escape_threshold", escape_threshold), ("t_max", t_max)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")

    def rhs(t, y):
        return ode_rhs((y[0], y[1]))

    def escape(t, y):
        return abs(y[0]) + abs(y[1]) - escape_threshold

    escape.terminal = True
    escape.direction = 1.0
    sol = solve_ivp(
        rhs,
        (0.0, t_max),
        [lam0, mu0],
        method="RK45",
        rtol=rtol,
        atol=atol,
        events=escape,
        dense_output=True,
    )
    if sol.status == -1:
        raise StiffFailureError(sol.message)
    escaped = sol.status == 1
    t_star = residual = None
    if escaped:
        t_end = float(sol.t[-1])
        mag = np.abs(sol.y[0]) + np.abs(sol.y[1])
        m_end = mag[-1]
        # fit window: last decade of growth, sampled from the dense output
        in_window = np.where(mag >= m_end / 10.0)[0]
        t0 = float(sol.t[max(in_window[0] - 1, 0)])
        ts = np.linspace(t0, t_end, 200)
        ys = sol.sol(ts)
        inv = 1.0 / (np.abs(ys[0]) + np.abs(ys[1]))
        coef = np.polyfit(ts, inv, 1)
        t_star = float(-coef[1] / coef[0])
        fit = np.polyval(coef, ts)
        residual = float(np.max(np.abs(fit - inv)) / np.max(inv))
    return Trajectory(
        t=sol.t,
        lam=sol.y[0],
        mu=sol.y[1],
        escaped=escaped,
        t_star_estimate=t_star,
        t_star_residual=residual,
        dense=sol.sol,
    )


def difference_identity_residual(traj: Trajectory, n_samples: int = 64) -> float:
    """Relative residual of d/dt(lam - mu) = -(lam - mu)(lam + mu)/3.

    Five-point central differences on the dense output, scaled by the local
    magnitude of the right-hand side.  The step shrinks with the local
    amplitude so the check stays accurate up to the escape region, where the
    solution steepens like 1/(T* - t).
    """
    t0, t1 = float(traj.t[0]), float(traj.t[-1])
    span = t1 - t0
    if span <= 0:
        return 0.0

    def diff(t):
        y = traj.dense(t)
        return y[0] - y[1]

    worst = 0.0
    for t in np.linspace(t0, t1, n_samples + 2)[1:-1]:
        y = traj.dense(t)
        mag = abs(y[0]) + abs(y[1])
        h = min(0.03 / max(1.0, mag), span * 1e-2)
        if t - 2 * h <= t0 or t + 2 * h >= t1:
            continue
        d = (
            diff(t - 2 * h) - 8 * diff(t - h) + 8 * diff(t + h) - diff(t + 2 * h)
        ) / (12.0 * h)
        rhs = -(y[0] - y[1]) * (y[0] + y[1]) / 3.0
        scale = max(1.0, abs(rhs))
        worst = max(worst, abs(d - rhs) / scale)
    return worst


FACE_LABELS = ("x3=0", "x1=x2", "x2=x3")
_FACE_NORMALS = {
    "x3=0": np.array([0.0, 0.0, 1.0]),
    "x1=x2": np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0),
    "x2=x3": np.array([0.0, 1.0, -1.0]) / math.sqrt(2.0),
}


def slip_residual(
    lam: float, mu: float, face: str, samples: np.ndarray
) -> float:
    """Max |u . n| of the closed-form velocity over points on the named wall."""
    try:
        n = _FACE_NORMALS[face]
    except KeyError:
        raise ValueError(f"unknown face {face!r}; one of {FACE_LABELS}") from None
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    # the samples must actually lie on the face
    onface = {
        "x3=0": np.abs(pts[:, 2]),
        "x1=x2": np.abs(pts[:, 0] - pts[:, 1]),
        "x2=x3": np.abs(pts[:, 1] - pts[:, 2]),
    }[face]
    if onface.max() > 1e-9 * max(1.0, np.abs(pts).max()):
        raise ValueError(f"samples are not on face {face}")
    u = pts @ si_velocity_gradient(lam, mu).T
    return float(np.abs(u @ n).max())


@dataclass(frozen=True)
class FlowMapResult:
    position: np.ndarray
    min_face_values: dict[str, float]


def _face_values(x: np.ndarray) -> np.ndarray:
    return np.stack([x[..., 2], x[..., 0] - x[..., 1], x[..., 1] - x[..., 2]],
                    axis=-1)


def flow_map_batch(
    source: Trajectory | tuple[float, float],
    x0: np.ndarray,
    t: float,
    n_steps: int = 2000,
) -> tuple[np.ndarray, np.ndarray]:
    """RK4 push of a batch of points along the linear velocity field.

    Returns (positions, per-point minima over the path of the three wall
    functionals x3, x1-x2, x2-x3).  All points advance with the same
    fixed step, so a batch costs as much as a single path.
    """
    x = np.atleast_2d(np.asarray(x0, dtype=float)).copy()
    if isinstance(source, Trajectory):
        if source.escaped and source.t_star_estimate is not None:
            if t >= source.t_star_estimate or t > float(source.t[-1]):
                raise PastBlowupError(
                    f"t = {t} is beyond the trajectory (escape near "
                    f"{source.t_star_estimate:.6g})"
                )
        elif t > float(source.t[-1]):
            raise PastBlowupError(f"t = {t} exceeds the integrated span")

        def gradient(tt: float) -> np.ndarray:
            y = source.dense(tt)
            return si_velocity_gradient(float(y[0]), float(y[1]))

    else:
        lam0, mu0 = source
        frozen = si_velocity_gradient(lam0, mu0)

        def gradient(tt: float) -> np.ndarray:
            return frozen

    dt = t / n_steps if n_steps else 0.0
    mins = _face_values(x)
    tt = 0.0
    for _ in range(n_steps):
        a1 = gradient(tt)
        a2 = gradient(tt + dt / 2)
        a4 = gradient(tt + dt)
        k1 = x @ a1.T
        k2 = (x + dt / 2 * k1) @ a2.T
        k3 = (x + dt / 2 * k2) @ a2.T
        k4 = (x + dt * k3) @ a4.T
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        tt += dt
        mins = np.minimum(mins, _face_values(x))
    return x, mins


def flow_map(
    source: Trajectory | tuple[float, float],
    x0: np.ndarray,
    t: float,
    n_steps: int = 2000,
) -> FlowMapResult:
    """Push one point along the flow; see ``flow_map_batch``.

    The reported minima certify (when nonnegative) that the path never left
    the closed fundamental cone, which is what the slip condition predicts.
    """
    pos, mins = flow_map_batch(source, np.asarray(x0, dtype=float)[None, :], t,
                               n_steps=n_steps)
    return FlowMapResult(
        position=pos[0],
        min_face_values={
            "x3=0": float(mins[0, 0]),
            "x1=x2": float(mins[0, 1]),
            "x2=x3": float(mins[0, 2]),
        },
    )


def constant_vorticity_field(lam: float, mu: float) -> VectorField3:
    """The constant vorticity on the fundamental cone, as a field object."""
    w = si_vorticity(lam, mu)

    def evaluate(pts: np.ndarray) -> np.ndarray:
        return np.broadcast_to(w, (len(pts), 3)).copy()

    return VectorField3(
        evaluator=evaluate,
        support_radius=math.inf,
        symmetry_tag="none",
        cone_constant=True,
    )


def extended_constant_vorticity(lam: float, mu: float) -> VectorField3:
    """Odd (pseudovector) extension of the constant vorticity to R^3.

    Vorticity transforms with an extra det(g) under reflections; this is the
    extension whose Biot-Savart velocity satisfies the slip condition on the
    cone walls and reproduces the closed-form linear velocity inside.
    """
    base = constant_vorticity_field(lam, mu)
    ev = extend_vector_field(
        base.evaluator, extended_octahedral_group(), parity="pseudovector"
    )
    return VectorField3(
        evaluator=ev,
        support_radius=math.inf,
        symmetry_tag="Otilde-odd",
        cone_constant=True,
    )


@dataclass(frozen=True)
class LocalizedData:
    """Amplitudes plus cutoff profile for the compactly supported data."""

    lam0: float
    mu0: float
    cutoff: Callable[[np.ndarray], np.ndarray] = plateau_cutoff


def _check_cutoff(chi: Callable[[np.ndarray], np.ndarray]) -> None:
    z_plateau = np.linspace(0.0, 1.0, 9)
    z_zero = np.linspace(2.0, 6.0, 9)
    if np.abs(np.asarray(chi(z_plateau)) - 1.0).max() > 1e-12:
        raise InvalidCutoffError("cutoff must equal 1 on |z| <= 1")
    if np.abs(np.asarray(chi(z_zero))).max() > 1e-12:
        raise InvalidCutoffError("cutoff must vanish for z >= 2")


def localized_initial_data(data: LocalizedData, extend: bool = True) -> VectorField3:
    """Compactly supported divergence-free data matching the constant
    vorticity on the unit ball.

    The components are (-lam0, lam0, mu0) * chi(x1 + x2); the first two
    cancel in the divergence and along the diagonal half-line exactly, for
    any profile chi.  With ``extend=True`` the odd extension over the group
    is returned (supported in |x| <= 2); otherwise the raw formula, which on
    the cone agrees with the extension.
    """
    _check_cutoff(data.cutoff)
    amp = np.array([-data.lam0, data.lam0, data.mu0])

    def formula(pts: np.ndarray) -> np.ndarray:
        chi = np.asarray(data.cutoff(pts[:, 0] + pts[:, 1]), dtype=float)
        return chi[:, None] * amp[None, :]

    if not extend:
        return VectorField3(
            evaluator=formula, support_radius=math.inf, symmetry_tag="none"
        )
    ev = extend_vector_field(
        formula, extended_octahedral_group(), parity="pseudovector"
    )
    # on the cone, x1 + x2 <= 2 and x3 < x2 force |x| <= 2
    return VectorField3(
        evaluator=ev,
        support_radius=2.0,
        symmetry_tag="Otilde-odd",
        cone_constant=False,
    )
