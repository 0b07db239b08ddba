import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigeo.errors import (
    DegenerateRegionError,
    DomainError,
    InsufficientScaleError,
    SparseCloudError,
)
from sigeo.hausdorff import (
    MetricCloud,
    alpha_k,
    cloud_from_params,
    covering_number,
    covering_profile,
    flat_region_dimension_estimate,
    greedy_cover,
    hausdorff_dimension_estimate,
    hausdorff_measure_estimate,
    hausdorff_monotonicity_check,
    jeffrey_density,
    jeffrey_measure,
    jeffrey_vs_hausdorff_check,
)
from sigeo.markov import binning_kernel, permutation_kernel
from sigeo.models import (
    bernoulli_family,
    categorical_family,
    gaussian_location2d_family,
    gaussian_location_family,
    gaussian_mixture,
)

BERN = bernoulli_family()
ARC = 2 * (math.asin(math.sqrt(0.75)) - math.asin(math.sqrt(0.25)))


# -- volume normalizer ---------------------------------------------------------

def test_alpha_k_unit_ball_volumes():
    assert alpha_k(0) == pytest.approx(1.0, abs=1e-12)
    assert alpha_k(1) == pytest.approx(2.0, abs=1e-12)
    assert alpha_k(2) == pytest.approx(math.pi, abs=1e-12)
    assert alpha_k(3) == pytest.approx(4 * math.pi / 3, abs=1e-12)


def test_alpha_k_rejects_negative():
    with pytest.raises(DomainError):
        alpha_k(-0.5)


# -- covering ---------------------------------------------------------------------

def euclid_cloud(pts):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    d = np.sqrt(np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2))
    return MetricCloud(pts, d)


def test_single_point_covering():
    cloud = MetricCloud([[0.0]], [[0.0]])
    for delta in (0.1, 1.0, 10.0):
        assert covering_number(cloud, delta) == 1


def test_two_points_one_ball():
    cloud = euclid_cloud([[0.0], [1.0]])
    assert covering_number(cloud, 2.0) == 1  # radius 1 >= distance
    assert covering_number(cloud, 0.5) == 2


def test_uniform_line_count_within_factor_two():
    pts = np.linspace(0, 1, 401)[:, None]
    cloud = euclid_cloud(pts)
    for delta in (0.25, 0.1, 0.05):
        n = covering_number(cloud, delta)
        assert math.ceil(1.0 / delta) <= n <= 2 * math.ceil(1.0 / delta) + 1


def test_greedy_sets_have_bounded_diameter():
    rng = np.random.default_rng(0)
    cloud = euclid_cloud(rng.uniform(0, 1, size=(60, 2)))
    for members, diam in greedy_cover(cloud, 0.3):
        assert diam <= 0.3 + 1e-12


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_covering_profile_monotone_in_delta(seed):
    # raw greedy nets can lose monotonicity by a set or two; the profile
    # reuses finer covers at coarser scales, which restores it exactly
    rng = np.random.default_rng(seed)
    cloud = euclid_cloud(rng.uniform(0, 1, size=(40, 2)))
    deltas = np.sort(rng.uniform(0.05, 1.5, size=6))[::-1]
    _, counts, _ = covering_profile(cloud, deltas)
    assert all(a <= b for a, b in zip(counts, counts[1:]))
    raw = [covering_number(cloud, d) for d in deltas]
    assert all(c <= r for c, r in zip(counts, raw))


# -- measure estimates --------------------------------------------------------------

def bern_cloud(n=1201):
    params = np.linspace(0.25, 0.75, n)[:, None]
    return cloud_from_params(BERN, params)


def test_h1_estimate_matches_fisher_length():
    cloud = bern_cloud()
    deltas = [cloud.diameter() / 4 / 2**j for j in range(3)]
    report = hausdorff_measure_estimate(cloud, 1.0, deltas=np.asarray(deltas))
    assert report.estimate == pytest.approx(ARC, rel=0.05)
    assert report.stable


def test_high_k_estimate_decays():
    cloud = bern_cloud(401)
    deltas = np.asarray([cloud.diameter() / 4 / 2**j for j in range(4)])
    report = hausdorff_measure_estimate(cloud, 2.0, deltas=deltas, enforce_density=False)
    assert report.premeasures[-1] < report.premeasures[0] / 4
    assert report.estimate < 0.2


def test_low_k_estimate_diverges_and_flags():
    cloud = bern_cloud(401)
    deltas = np.asarray([cloud.diameter() / 4 / 2**j for j in range(4)])
    report = hausdorff_measure_estimate(cloud, 0.5, deltas=deltas, enforce_density=False)
    assert report.premeasures[-1] > 1.5 * report.premeasures[0]
    assert not report.stable


def test_sparse_cloud_raises():
    cloud = bern_cloud(21)
    with pytest.raises(SparseCloudError):
        hausdorff_measure_estimate(cloud, 1.0, deltas=np.asarray([cloud.mesh()]))


def test_counting_measure_at_k_zero():
    cloud = bern_cloud(101)
    report = hausdorff_measure_estimate(
        cloud, 0.0, deltas=np.asarray([cloud.mesh() * 0.5]), enforce_density=False
    )
    assert report.estimate == pytest.approx(101)


# -- dimension ------------------------------------------------------------------------

def test_dimension_of_segment_cloud():
    dim = hausdorff_dimension_estimate(bern_cloud())
    assert abs(dim - 1.0) <= 0.15


def test_dimension_single_point():
    assert hausdorff_dimension_estimate(MetricCloud([[0.3]], [[0.0]])) == 0.0


def test_dimension_needs_scales():
    cloud = euclid_cloud([[0.0], [1.0], [2.0]])
    with pytest.raises(InsufficientScaleError):
        hausdorff_dimension_estimate(cloud)


def test_flat_region_dimension_2d():
    loc2 = gaussian_location2d_family()
    dim = flat_region_dimension_estimate(loc2, ([-1.0, -1.0], [1.0, 1.0]), n_points=40000, seed=1)
    assert abs(dim - 2.0) <= 0.2


# -- Jeffrey density and measure --------------------------------------------------------

def test_jeffrey_density_bernoulli():
    for p in (0.2, 0.5, 0.7):
        assert jeffrey_density(BERN, [p]) == pytest.approx(
            1.0 / math.sqrt(p * (1 - p)), rel=1e-8
        )


def test_jeffrey_density_vanishes_on_degenerate_lines():
    mix = gaussian_mixture()
    assert jeffrey_density(mix, [0.4, 0.0]) <= 1e-6
    assert jeffrey_density(mix, [0.0, 2.0]) <= 1e-6
    assert jeffrey_density(mix, [0.0, 0.0]) == 0.0


def test_jeffrey_measure_bernoulli_segment():
    assert jeffrey_measure(BERN, ([0.25], [0.75])) == pytest.approx(ARC, rel=1e-9)


def test_jeffrey_measure_empty_region():
    assert jeffrey_measure(BERN, ([0.4], [0.4])) == 0.0


def test_jeffrey_measure_additive_in_region():
    whole = jeffrey_measure(BERN, ([0.25], [0.75]))
    left = jeffrey_measure(BERN, ([0.25], [0.5]))
    right = jeffrey_measure(BERN, ([0.5], [0.75]))
    assert whole == pytest.approx(left + right, abs=1e-9)


def test_jeffrey_vs_hausdorff_bernoulli():
    res = jeffrey_vs_hausdorff_check(BERN, ([0.25], [0.75]))
    assert res["rel_err"] <= 0.05


def test_jeffrey_vs_hausdorff_gauss_location():
    loc = gaussian_location_family()
    res = jeffrey_vs_hausdorff_check(loc, ([-1.0], [1.0]))
    assert res["jeffrey"] == pytest.approx(2.0, abs=1e-6)
    assert res["rel_err"] <= 0.05


def test_degenerate_region_rejected():
    mix = gaussian_mixture()
    with pytest.raises(DegenerateRegionError):
        jeffrey_vs_hausdorff_check(mix, ([0.2, -0.5], [0.6, 0.5]), cloud_size=49)


# -- monotonicity -------------------------------------------------------------------------

CAT3 = categorical_family(3)


def _simplex_cloud_points(rng, n=40):
    pts = np.clip(rng.dirichlet([2.0] * 3, size=n)[:, :2], 0.05, 0.9)
    return pts[np.sum(pts, axis=1) < 0.93]


def test_monotonicity_identity_kernel():
    rng = np.random.default_rng(4)
    pts = _simplex_cloud_points(rng)
    k = permutation_kernel(CAT3.space, [0, 1, 2])
    res = hausdorff_monotonicity_check(k, CAT3, pts)
    assert res["holds"]
    assert res["after"] == pytest.approx(res["before"], rel=1e-9)


def test_monotonicity_lossy_binning():
    rng = np.random.default_rng(5)
    pts = _simplex_cloud_points(rng)
    k = binning_kernel(CAT3.space, [0, 1, 1])
    res = hausdorff_monotonicity_check(k, CAT3, pts)
    assert res["holds"]
    assert res["after"] <= res["before"] * 1.1


def test_monotonicity_permutation_equality():
    rng = np.random.default_rng(6)
    pts = _simplex_cloud_points(rng)
    k = permutation_kernel(CAT3.space, [2, 0, 1])
    res = hausdorff_monotonicity_check(k, CAT3, pts)
    assert res["after"] == pytest.approx(res["before"], rel=1e-9)
