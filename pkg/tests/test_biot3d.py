import math

import numpy as np
import pytest

from octaeuler import biot3d, blowup
from octaeuler.fields import VectorField3, smooth_bump_field
from octaeuler.quadrature import NonIntegrableError, QuadratureSpec
from octaeuler.symgroup import HALF_LINE_DIRECTIONS

FAST = QuadratureSpec(n_theta=48, n_phi=96, refine=2)
COARSE = QuadratureSpec(n_theta=48, n_phi=96, refine=1)


def test_velocity_closed_form_example():
    field = blowup.extended_constant_vorticity(1.0, 0.0)
    res = biot3d.velocity_pv(field, np.array([3.0, 2.0, 1.0]), FAST)
    assert np.abs(res.value - [0.0, 1.0 / 3.0, 2.0 / 3.0]).max() <= 5e-3


def test_velocity_zero_field():
    zero = VectorField3(evaluator=lambda p: np.zeros((len(p), 3)),
                        support_radius=1.0)
    res = biot3d.velocity_pv(zero, np.array([0.5, 0.2, 0.1]), COARSE)
    assert np.abs(res.value).max() == 0.0


def test_velocity_slip_on_wall():
    # lam = 0, mu = 1 at a point on the wall x1 = x2: normal component
    # (u1 - u2)/sqrt(2) vanishes
    field = blowup.extended_constant_vorticity(0.0, 1.0)
    res = biot3d.velocity_pv(field, np.array([2.0, 2.0, 1.0]), FAST)
    assert abs(res.value[0] - res.value[1]) / math.sqrt(2.0) <= 5e-3


def test_velocity_requires_symmetry_or_support():
    bad = VectorField3(evaluator=lambda p: np.ones((len(p), 3)))
    with pytest.raises(NonIntegrableError):
        biot3d.velocity_pv(bad, np.array([1.0, 0.5, 0.2]))


def test_gradient_closed_form_example():
    field = blowup.extended_constant_vorticity(1.0, 0.0)
    res = biot3d.velocity_gradient_pv(field, np.array([3.0, 2.0, 1.0]), FAST)
    expected = np.array([[-1.0, 0.0, 3.0], [0.0, -1.0, 3.0], [0.0, 0.0, 2.0]]) / 3.0
    assert np.abs(res.value - expected).max() <= 1e-2


def test_gradient_zero_field():
    zero = VectorField3(evaluator=lambda p: np.zeros((len(p), 3)),
                        support_radius=1.0)
    res = biot3d.velocity_gradient_pv(zero, np.array([0.5, 0.2, 0.1]), COARSE)
    assert np.abs(res.value).max() == 0.0


def test_gradient_trace_and_antisymmetric_part(rng):
    field = blowup.extended_constant_vorticity(1.0, 1.0)
    for _ in range(2):
        x = np.sort(rng.uniform(0.3, 2.0, size=3))[::-1]
        x[0] += 0.2  # keep clear of the x1 = x2 wall
        res = biot3d.velocity_gradient_pv(field, x, FAST)
        g = res.value
        assert abs(np.trace(g)) <= 1e-2
        w = field(x)
        antisym = 0.5 * (g - g.T)
        expected = 0.5 * np.array(
            [[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]]
        )
        assert np.abs(antisym - expected).max() <= 1e-2


def test_gradient_rejects_wall_points():
    field = blowup.extended_constant_vorticity(1.0, 0.0)
    with pytest.raises(ValueError):
        biot3d.velocity_gradient_pv(field, np.array([2.0, 2.0, 1.0]), COARSE)


def test_curl_consistency():
    # central-difference curl of the PV velocity reproduces the vorticity
    field = blowup.extended_constant_vorticity(1.0, 1.0)
    x = np.array([1.5, 1.0, 0.5])
    h = 5e-3
    u = {}
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        u[j] = (
            biot3d.velocity_pv(field, x + e, COARSE).value
            - biot3d.velocity_pv(field, x - e, COARSE).value
        ) / (2 * h)
    curl = np.array(
        [u[1][2] - u[2][1], u[2][0] - u[0][2], u[0][1] - u[1][0]]
    )
    assert np.abs(curl - field(x)).max() <= 5e-2


def test_moments_vanish_for_symmetric_field():
    field = blowup.extended_constant_vorticity(1.0, 1.0)
    for comp in (0, 1, 2):
        ms = biot3d.compute_moments(field, comp, r=0.5, spec=COARSE)
        assert np.abs(ms.I).max() <= 1e-6
        assert np.abs(ms.II1).max() <= 1e-6
        assert np.abs(ms.II2).max() <= 1e-6


def test_moments_reject_divergent_data():
    bad = VectorField3(evaluator=lambda p: np.ones((len(p), 3)))
    with pytest.raises(NonIntegrableError):
        biot3d.compute_moments(bad, 0, r=0.5, spec=COARSE)


def test_moments_zero_field():
    zero = VectorField3(evaluator=lambda p: np.zeros((len(p), 3)),
                        support_radius=1.0)
    ms = biot3d.compute_moments(zero, 0, r=0.1, spec=COARSE)
    assert np.abs(ms.I).max() == 0.0 and np.abs(ms.II1).max() == 0.0


def test_first_moment_parity_on_ball():
    # constant e3 on the unit ball: the y3/|y|^3 moment of the third
    # component vanishes by parity
    ball = VectorField3(
        evaluator=lambda p: np.where(
            (np.einsum("ij,ij->i", p, p) < 1.0)[:, None],
            np.broadcast_to([0.0, 0.0, 1.0], (len(p), 3)),
            0.0,
        ),
        support_radius=1.0,
    )
    ms = biot3d.compute_moments(ball, 2, r=0.1, spec=COARSE)
    assert abs(ms.I[2]) <= 1e-10


def test_moments_truncation_beyond_support():
    bump = smooth_bump_field()
    ms = biot3d.compute_moments(bump, 0, r=0.6, spec=COARSE)  # 2r > support
    assert np.abs(ms.II1).max() == 0.0 and np.abs(ms.II2).max() == 0.0


def test_sphere_moment_examples():
    field = blowup.extended_constant_vorticity(1.0, 1.0)
    assert biot3d.sphere_moment_residual(field, 1.0, "y3", 1, COARSE) <= 1e-8
    assert biot3d.sphere_moment_residual(field, 1.0, "y1*y2", 1, COARSE) <= 1e-8
    witness = VectorField3(
        evaluator=lambda p: np.broadcast_to([0.0, 0.0, 1.0], (len(p), 3)).copy(),
        symmetry_tag="O-symmetric",
    )
    val = biot3d.sphere_moment_residual(witness, 1.0, "y3^2", 2, COARSE)
    assert val == pytest.approx(4.0 * math.pi / 3.0, rel=1e-6)
    with pytest.raises(ValueError):
        biot3d.sphere_moment_residual(field, 1.0, "y1^3", 0, COARSE)


def test_expansion_zero_field():
    zero = VectorField3(evaluator=lambda p: np.zeros((len(p), 3)),
                        support_radius=1.0)
    res = biot3d.velocity_expansion(zero, np.array([0.2, 0.1, 0.05]), COARSE)
    assert np.abs(res.u_expansion).max() == 0.0
    assert res.remainder == 0.0


def test_expansion_requires_compact_support():
    field = blowup.extended_constant_vorticity(1.0, 0.0)
    with pytest.raises(NonIntegrableError):
        biot3d.velocity_expansion(field, np.array([0.1, 0.05, 0.02]))


def test_expansion_index_bookkeeping():
    # the second component of the expansion equals the first component of
    # the cyclically relabeled field at the rotated point
    bump = smooth_bump_field()
    cyc = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])

    def relabeled(p):
        return bump(p @ cyc) @ cyc.T

    field_rel = VectorField3(evaluator=relabeled, support_radius=1.0)
    x = np.array([0.21, 0.13, 0.08])
    I, II1, II2 = biot3d._moment_matrices(bump, float(np.linalg.norm(x)), COARSE)
    u = biot3d.expansion_terms(x, I, II1, II2)
    xr = cyc @ x
    Ir, II1r, II2r = biot3d._moment_matrices(
        field_rel, float(np.linalg.norm(xr)), COARSE
    )
    ur = biot3d.expansion_terms(xr, Ir, II1r, II2r)
    assert u[1] == pytest.approx(ur[0], abs=1e-10)


def test_gradient_bounded_near_edge_halflines():
    """Boundedness probe of the gradient kernels near the three edge
    half-lines of the cone, on Holder data satisfying the diagonal
    vanishing condition: the sampled entries must not grow as the
    evaluation points slide down the edges toward the origin."""
    field = blowup.localized_initial_data(blowup.LocalizedData(1.0, 0.0))
    interior = np.array([3.0, 2.0, 1.0]) / np.linalg.norm([3.0, 2.0, 1.0])
    sup = 1.0  # amplitude of the data
    for vertex in ("a2", "a3", "a4"):
        v = HALF_LINE_DIRECTIONS[vertex]
        d = v + 0.25 * (interior - v)
        d /= np.linalg.norm(d)
        assert d[0] > d[1] > d[2] > 0  # strictly inside the cone
        vals = []
        for k in (2, 5):
            x = 2.0 ** -k * d
            res = biot3d.velocity_gradient_pv(field, x, COARSE)
            vals.append(np.abs(res.value).max())
        # no logarithmic growth down the edge: small-scale magnitude stays
        # comparable to the large-scale one and to the data amplitude
        assert vals[1] <= max(2.0 * vals[0], 1.5 * sup)


def test_expansion_remainder_small_for_bump():
    bump = smooth_bump_field()
    x = 0.05 * np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)
    res = biot3d.velocity_expansion(bump, x, COARSE)
    assert res.remainder <= 0.5 * res.omega_sup * float(np.linalg.norm(x))
