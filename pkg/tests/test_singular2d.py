import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from octaeuler import singular2d as s2
from octaeuler.fields import SampleCloud, holder_seminorm
from octaeuler.quadrature import QuadratureFailureError, QuadratureSpec


def test_sector_type():
    sec = s2.Sector(m=4, copy_index=2)
    assert sec.theta_range == (math.pi / 4, math.pi / 2)
    assert sec.contains(np.array([1.0, 2.0]))
    assert not sec.contains(np.array([2.0, 1.0]))
    with pytest.raises(ValueError):
        s2.Sector(m=1)
    with pytest.raises(ValueError):
        s2.Sector(m=4, copy_index=9)


def test_sector_function_series():
    prof = lambda r: r ** 2
    f = s2.SectorFunction2(terms=((2, prof),))
    r, th = 0.5, 0.3
    x = np.array([r * math.cos(th), r * math.sin(th)])
    assert f(x) == pytest.approx(r ** 2 * math.sin(2 * th))
    with pytest.raises(ValueError):
        s2.SectorFunction2(terms=((0, prof),))


def test_sector_poisson_mode_values():
    assert s2.sector_poisson_mode(2, 0.5).coefficient == pytest.approx(1 / 2.25)
    assert s2.sector_poisson_mode(4, 0.0).coefficient == pytest.approx(-1.0 / 12.0)
    mode = s2.sector_poisson_mode(2, 0.0)
    assert mode.logarithmic and mode.coefficient == 0.25
    with pytest.raises(s2.UnsupportedResonanceError):
        s2.sector_poisson_mode(3, 1.0)
    with pytest.raises(ValueError):
        s2.sector_poisson_mode(1, 0.5)


def test_polar_laplacian_recovers_source():
    mode = s2.sector_poisson_mode(4, 0.5)
    assert s2.polar_laplacian_residual(mode, [0.25, 0.5, 0.75]) <= 1e-4


def test_log_mode_satisfies_equation():
    # (1/4) r^2 ln r is the resonant stream profile: check the radial ODE
    mode = s2.sector_poisson_mode(2, 0.0)
    assert s2.polar_laplacian_residual(mode, [0.3, 0.6]) <= 1e-4


def test_bahouri_chemin_partial_sums():
    raw, norm = s2.bahouri_chemin_partial_sum(math.pi / 4, 200)
    assert norm == pytest.approx(1.0, abs=5e-3)
    assert raw == pytest.approx(math.pi / 4, abs=5e-3)
    raw0, norm0 = s2.bahouri_chemin_partial_sum(0.0, 37)
    assert raw0 == 0.0 and norm0 == 0.0
    _, norm_neg = s2.bahouri_chemin_partial_sum(3 * math.pi / 4, 200)
    assert norm_neg == pytest.approx(-1.0, abs=5e-3)
    with pytest.raises(ValueError):
        s2.bahouri_chemin_partial_sum(0.1, 0)


def test_quadrant_closed_form():
    assert s2.riesz_quadrant_closed_form([2.0, 1.0]) == 0.25
    assert s2.riesz_quadrant_closed_form([10.0, 1.0]) == 0.25
    assert s2.riesz_quadrant_closed_form([1.0, 0.999]) == 0.25
    for bad in ([1.0, 2.0], [1.0, -0.5], [1.0, 1.0]):
        with pytest.raises(ValueError):
            s2.riesz_quadrant_closed_form(bad)


def test_riesz_pv_matches_closed_form():
    field = s2.odd_quadrant_indicator()
    k12 = s2.riesz_kernel("12")
    for x in ([2.0, 1.0], [0.7, 0.2], [3.0, 2.9]):
        res = s2.riesz_pv_2d(field, k12, np.array(x))
        assert abs(float(res.value) - 0.25) <= 1e-3


def test_riesz_zero_field():
    zero = s2.ScalarField2(
        evaluator=lambda p: np.zeros(len(p)), support_radius=1.0
    )
    res = s2.riesz_pv_2d(zero, s2.riesz_kernel("12"), np.array([2.0, 1.0]))
    assert float(res.value) == 0.0


def test_trace_identity_both_fields():
    k11, k22 = s2.riesz_kernel("11"), s2.riesz_kernel("22")
    x = np.array([2.0, 1.0])
    for field in (s2.odd_quadrant_indicator(), s2.checkerboard_indicator()):
        total = (
            float(s2.riesz_pv_2d(field, k11, x).value)
            + float(s2.riesz_pv_2d(field, k22, x).value)
        )
        assert total == pytest.approx(-field(x), abs=1e-3)


def test_riesz_rejects_point_on_jump_line():
    field = s2.odd_quadrant_indicator()
    with pytest.raises(ValueError):
        s2.riesz_pv_2d(field, s2.riesz_kernel("12"), np.array([1.0, 1.0]))


def test_riesz_rejects_noncancelling_unbounded_data():
    bad = s2.ScalarField2(evaluator=lambda p: np.ones(len(p)))
    with pytest.raises(ValueError):
        s2.riesz_pv_2d(bad, s2.riesz_kernel("12"), np.array([2.0, 1.0]))


def test_quadrature_failure_carries_partial():
    field = s2.odd_quadrant_indicator()
    strict = QuadratureSpec(
        eps_schedule=(1e-2, 10 ** -2.2), n_theta=64, n_radial=4,
        refine=2, fail_tolerance=1e-12,
    )
    with pytest.raises(QuadratureFailureError) as exc:
        s2.riesz_pv_2d(field, s2.riesz_kernel("12"), np.array([2.0, 1.0]), strict)
    assert exc.value.partial == pytest.approx(0.25, abs=1e-2)
    assert exc.value.err_est > 1e-12


def test_checkerboard_piecewise_constant():
    # sampled transform varies by <= 1e-3 within a sector
    field = s2.checkerboard_indicator()
    k12 = s2.riesz_kernel("12")
    rng = np.random.default_rng(3)
    for lo, hi in ((0.05, math.pi / 4 - 0.05), (math.pi / 4 + 0.05,
                                                math.pi / 2 - 0.05)):
        th = rng.uniform(lo, hi, size=4)
        rr = rng.uniform(0.5, 2.5, size=4)
        vals = [
            float(s2.riesz_pv_2d(field, k12,
                                 np.array([r * math.cos(t), r * math.sin(t)])).value)
            for r, t in zip(rr, th)
        ]
        assert max(vals) - min(vals) <= 1e-3


def test_bc_slope_values():
    radii = [2.0 ** -k for k in range(3, 9)]
    fit12 = s2.bc_log_slope(s2.riesz_kernel("12"), radii)
    fit11 = s2.bc_log_slope(s2.riesz_kernel("11"), radii)
    # honest constants under the kernel normalization fixed by the exact 1/4
    # quadrant value: -1/2 for the off-diagonal (raw series input), 0 on the
    # diagonal
    assert fit12.c == pytest.approx(-0.5, abs=0.02)
    assert abs(fit11.c) <= 0.02
    assert fit12.residual < 1e-3


def test_bc_slope_zero_input():
    zero = s2.ScalarField2(
        evaluator=lambda p: np.zeros(len(p)), support_radius=2.0
    )
    fit = s2.bc_log_slope(
        s2.riesz_kernel("12"), [2.0 ** -k for k in range(3, 7)], input_field=zero
    )
    assert fit.c == 0.0 and fit.b == 0.0


def test_bc_slope_validates_radii():
    with pytest.raises(ValueError):
        s2.bc_log_slope(s2.riesz_kernel("12"), [0.1, 0.05, 0.01])  # too few
    with pytest.raises(ValueError):
        s2.bc_log_slope(s2.riesz_kernel("12"), [0.5, 0.1, 0.05, 0.01])


@settings(max_examples=20, deadline=None)
@given(data=st.data())
def test_halfmoon_sine_vanishes(data):
    v1 = data.draw(st.floats(0.01, 0.8))
    l = data.draw(st.floats(v1 * 1.1 + 1e-6, 1.0))
    assert abs(s2.halfmoon_integral(v1, l, "sin2")) <= 1e-8


def test_halfmoon_cosine_bounded():
    v1, l = 0.1, 0.5
    val = s2.halfmoon_integral(v1, l, "cos2")
    assert val != 0.0
    assert abs(val) <= 4.0 * v1 * (1.0 / v1 - 1.0 / l)


def test_halfmoon_collapses_as_v1_to_l():
    val = s2.halfmoon_integral(0.499999, 0.5, "cos2")
    assert abs(val) < 1e-4
    with pytest.raises(ValueError):
        s2.halfmoon_integral(0.5, 0.5, "cos2")
    with pytest.raises(ValueError):
        s2.halfmoon_integral(0.1, 0.5, "tan")


def test_symmetry_reduction_smoothing_spot_check():
    """The non-adjacent part of the odd extension acts smoothly near the
    sector: its transform has a bounded sampled quotient down to small radii."""
    alpha = 0.5

    def base_profile(pts):
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = np.arctan2(pts[:, 1], pts[:, 0]) % (2 * np.pi)
        ang = np.sin(4 * th) ** 2 * ((th > 0) & (th < np.pi / 4))
        return r ** alpha * np.clip(1 - r, 0, 1) * ang

    # full dihedral-odd extension evaluated through the sector index
    def extension(pts):
        th = np.arctan2(pts[:, 1], pts[:, 0]) % (2 * np.pi)
        sector = np.floor(th / (np.pi / 4)).astype(int)  # 0..7
        sign = np.where(sector % 2 == 0, 1.0, -1.0)
        # reflect into the base sector: even sectors map by rotation,
        # odd ones by reflection across their leading edge
        th0 = th - sector * (np.pi / 4)
        th0 = np.where(sector % 2 == 1, np.pi / 4 - th0, th0)
        r = np.hypot(pts[:, 0], pts[:, 1])
        base_pts = np.stack([r * np.cos(th0), r * np.sin(th0)], axis=1)
        return sign * base_profile(base_pts)

    def remainder(pts):
        th = np.arctan2(pts[:, 1], pts[:, 0]) % (2 * np.pi)
        sector = np.floor(th / (np.pi / 4)).astype(int)
        non_adjacent = (sector >= 2) & (sector <= 6)
        return np.where(non_adjacent, extension(pts), 0.0)

    field = s2.ScalarField2(
        evaluator=remainder,
        support_radius=1.0,
        breakline_angles=(0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4),
    )
    k12 = s2.riesz_kernel("12")
    rng = np.random.default_rng(11)
    pts, vals = [], []
    for scale in (0.02, 0.12, 0.7):
        for _ in range(4):
            th = rng.uniform(0.15, np.pi / 4 - 0.15)
            r = scale * rng.uniform(0.8, 1.2)
            x = np.array([r * np.cos(th), r * np.sin(th)])
            pts.append(x)
            vals.append(float(s2.riesz_pv_2d(field, k12, x).value))
    quot = holder_seminorm(SampleCloud(np.array(pts), np.array(vals)), alpha)

    # sampled seminorm of the base data itself, on a matching cloud
    cl_pts = []
    for scale in (0.02, 0.12, 0.7):
        th = rng.uniform(0.05, np.pi / 4 - 0.05, size=8)
        rr = scale * rng.uniform(0.7, 1.3, size=8)
        cl_pts.append(np.stack([rr * np.cos(th), rr * np.sin(th)], axis=1))
    cl_pts = np.concatenate(cl_pts)
    f_norm = holder_seminorm(SampleCloud(cl_pts, base_profile(cl_pts)), alpha)
    assert quot <= 50.0 * f_norm


def test_spec_json_roundtrip():
    spec = QuadratureSpec(eps_schedule=(0.1, 0.01), r_outer=500.0, n_theta=32,
                          n_phi=64, n_radial=4, refine=1, fail_tolerance=0.5)
    back = QuadratureSpec.from_json(spec.to_json())
    assert back == spec
