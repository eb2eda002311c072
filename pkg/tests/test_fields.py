import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from octaeuler import fields
from octaeuler.blowup import (
    LocalizedData,
    constant_vorticity_field,
    localized_initial_data,
)


def _brute_seminorm(points, values, alpha):
    # independent O(n^2) oracle with explicit loops
    best = 0.0
    pts = np.atleast_2d(points)
    vals = np.atleast_2d(values.reshape(len(pts), -1))
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = np.linalg.norm(pts[i] - pts[j])
            if d > 0:
                best = max(best, np.linalg.norm(vals[i] - vals[j]) / d ** alpha)
    return best


def test_holder_constant_field_is_zero(rng):
    pts = rng.normal(size=(30, 3))
    cloud = fields.SampleCloud(pts, np.full(30, 2.5))
    assert fields.holder_seminorm(cloud, 0.3) == 0.0


def test_holder_two_point_example():
    cloud = fields.SampleCloud(
        np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]), np.array([0.0, 1.0])
    )
    assert fields.holder_seminorm(cloud, 0.5) == pytest.approx(1.0, abs=1e-15)


def test_holder_power_profile_1d():
    alpha = 0.37
    h = 0.05
    xs = np.arange(0.0, 1.0 + 1e-12, h)
    pts = np.stack([xs, 0 * xs, 0 * xs], axis=1)
    vals = xs ** alpha
    cloud = fields.SampleCloud(pts, vals)
    got = fields.holder_seminorm(cloud, alpha)
    oracle = _brute_seminorm(pts, vals, alpha)
    assert got == pytest.approx(oracle, rel=1e-12)
    # sup is attained against the origin: exactly 1 up to rounding
    assert 1.0 - 1e-6 <= got <= 1.0 + 1e-12


def test_holder_requires_two_points():
    cloud = fields.SampleCloud(np.array([[1.0, 0.0, 0.0]]), np.array([1.0]))
    with pytest.raises(fields.InsufficientDataError):
        fields.holder_seminorm(cloud, 0.5)
    with pytest.raises(ValueError):
        fields.holder_seminorm(
            fields.SampleCloud(np.eye(3), np.arange(3.0)), 1.5
        )


def test_ring_seminorm_matches_weighted_plain(rng):
    alpha = 0.5
    pts = rng.uniform(0.1, 2.0, size=(40, 3))
    vals = np.full(40, 3.0)
    cloud = fields.SampleCloud(pts, vals)
    w = np.linalg.norm(pts, axis=1) ** alpha
    ref = fields.holder_seminorm(fields.SampleCloud(pts, vals * w), alpha)
    assert fields.ring_holder_seminorm(cloud, alpha) == pytest.approx(ref)


def test_ring_seminorm_allows_nonzero_value_at_origin():
    # the |x|^alpha weight kills the origin sample
    cloud = fields.SampleCloud(
        np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]), np.array([5.0, 1.0])
    )
    assert fields.ring_holder_seminorm(cloud, 0.5) == pytest.approx(1.0)


def test_ring_seminorm_scale_invariant_profile(rng):
    # f = 1 on rays reduces to the seminorm of |x|^alpha itself
    alpha = 0.4
    pts = rng.uniform(-1.5, 1.5, size=(60, 3))
    pts = pts[np.linalg.norm(pts, axis=1) > 1e-3]
    cloud = fields.SampleCloud(pts, np.ones(len(pts)))
    ref_vals = np.linalg.norm(pts, axis=1) ** alpha
    ref = _brute_seminorm(pts, ref_vals, alpha)
    assert fields.ring_holder_seminorm(cloud, alpha) == pytest.approx(ref, rel=1e-12)
    zero = fields.SampleCloud(pts, np.zeros(len(pts)))
    assert fields.ring_holder_seminorm(zero, alpha) == 0.0


@settings(max_examples=30, deadline=None)
@given(
    scale=st.one_of(
        st.just(0.0), st.floats(1e-6, 4.0), st.floats(-4.0, -1e-6)
    ),
    alpha=st.floats(0.1, 0.9),
)
def test_holder_scaling_law(scale, alpha):
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(15, 3))
    vals = rng.normal(size=15)
    base = fields.holder_seminorm(fields.SampleCloud(pts, vals), alpha)
    scaled = fields.holder_seminorm(fields.SampleCloud(pts, scale * vals), alpha)
    assert scaled == pytest.approx(abs(scale) * base, rel=1e-12, abs=1e-300)


@settings(max_examples=25, deadline=None)
@given(n_extra=st.integers(1, 10))
def test_holder_monotone_under_refinement(n_extra):
    rng = np.random.default_rng(n_extra)
    pts = rng.normal(size=(12, 3))
    vals = np.sin(pts[:, 0]) + pts[:, 1] ** 2
    extra = rng.normal(size=(n_extra, 3))
    evals = np.sin(extra[:, 0]) + extra[:, 1] ** 2
    small = fields.holder_seminorm(fields.SampleCloud(pts, vals), 0.5)
    big = fields.holder_seminorm(
        fields.SampleCloud(np.vstack([pts, extra]), np.concatenate([vals, evals])),
        0.5,
    )
    assert big >= small - 1e-15


def test_refinement_convergence_dyadic_power():
    alpha = 0.6
    ests = []
    for k in (3, 4, 5, 6):
        xs = np.linspace(0.0, 1.0, 2 ** k + 1)
        pts = np.stack([xs, 0 * xs, 0 * xs], axis=1)
        cloud = fields.SampleCloud(pts, xs ** alpha)
        ests.append(fields.holder_seminorm(cloud, alpha))
    assert all(b >= a - 1e-15 for a, b in zip(ests, ests[1:]))
    assert ests[-1] <= 1.0 + 1e-12  # analytic seminorm


def test_divergence_residual_examples(rng):
    # identity field: div = 3 exactly
    ident = fields.VectorField3(evaluator=lambda p: p.copy())
    probes = rng.uniform(-1, 1, size=(10, 3))
    assert fields.divergence_residual(ident, probes, h=1e-3) == pytest.approx(
        3.0, abs=1e-8
    )
    const = constant_vorticity_field(1.0, 2.0)
    assert fields.divergence_residual(const, probes, h=1e-3) < 1e-12


def test_divergence_residual_localized_data(rng):
    field = localized_initial_data(LocalizedData(1.0, 0.0))
    # interior probes with an h-ball margin
    probes = np.sort(rng.uniform(0.05, 0.8, size=(20, 3)))[:, ::-1]
    probes = probes[(probes[:, 0] - probes[:, 1] > 5e-3)
                    & (probes[:, 1] - probes[:, 2] > 5e-3)]
    assert fields.divergence_residual(field, probes, h=1e-3) <= 1e-6


def test_vanishing_condition_examples():
    z = np.linspace(0.1, 2.0, 17)
    const = constant_vorticity_field(0.8, -1.1)
    assert fields.vanishing_condition_residual(const, z) == 0.0
    local = localized_initial_data(LocalizedData(1.2, 0.4))
    assert fields.vanishing_condition_residual(local, z) == 0.0
    witness = fields.VectorField3(
        evaluator=lambda p: np.broadcast_to([1.0, 0.0, 0.0], (len(p), 3)).copy()
    )
    assert fields.vanishing_condition_residual(witness, z) == 1.0
    with pytest.raises(ValueError):
        fields.vanishing_condition_residual(const, [-1.0])


def test_support_validation():
    bump = fields.smooth_bump_field()
    assert fields.validate_support(bump) == 0.0
    liar = fields.VectorField3(
        evaluator=lambda p: np.ones((len(p), 3)), support_radius=1.0
    )
    assert fields.validate_support(liar) > 0.0


def test_bump_field_divergence_free(rng):
    # analytically divergence-free; the residual is pure O(h^2) truncation,
    # which the halved-step combination knocks down further
    bump = fields.smooth_bump_field()
    probes = rng.uniform(-0.5, 0.5, size=(25, 3))
    plain = fields.divergence_residual(bump, probes, h=1e-3)
    combined = fields.divergence_residual(bump, probes, h=1e-3, richardson=True)
    assert plain < 1e-4
    assert combined < plain / 10.0


def test_sample_cloud_csv_roundtrip(rng):
    pts = rng.normal(size=(7, 3))
    vals = rng.normal(size=(7, 3))
    cloud = fields.SampleCloud(pts, vals)
    back = fields.SampleCloud.from_csv(cloud.to_csv())
    assert np.array_equal(back.points, cloud.points)
    assert np.array_equal(back.values, cloud.values)


def test_sample_cloud_2d_csv(rng):
    pts = rng.normal(size=(5, 2))
    cloud = fields.SampleCloud(pts, rng.normal(size=5))
    text = cloud.to_csv()
    assert text.splitlines()[0] == "x1,x2,f1"
    back = fields.SampleCloud.from_csv(text)
    assert np.array_equal(back.points, cloud.points)


def test_sample_cloud_length_mismatch():
    with pytest.raises(ValueError):
        fields.SampleCloud(np.zeros((3, 3)), np.zeros(2))


def test_halfline_probe_points():
    pts = fields.halfline_probe_points(np.array([1.0, 1.0, 0.0]), n_scales=5,
                                       n_angular=8)
    assert pts.shape == (40, 3)
    radii = np.linalg.norm(pts, axis=1)
    assert radii.max() <= 1.0 + 1e-12 and radii.min() >= 2.0 ** -5

    probe_cloud = fields.SampleCloud.from_field(
        constant_vorticity_field(1.0, 1.0), pts
    )
    ring = fields.ring_holder_seminorm(probe_cloud, 0.5)
    assert math.isfinite(ring)
