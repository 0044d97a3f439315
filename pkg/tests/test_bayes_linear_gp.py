import math

import numpy as np
import pytest

from voicache.bayes_linear_gp import adf_update
from voicache.bayes_linear_gp import decision_value
from voicache.bayes_linear_gp import downdate_site
from voicache.bayes_linear_gp import EPOptions
from voicache.bayes_linear_gp import fit_ep
from voicache.bayes_linear_gp import LabeledPoint
from voicache.bayes_linear_gp import multiply_site
from voicache.bayes_linear_gp import point_classify
from voicache.bayes_linear_gp import Posterior
from voicache.bayes_linear_gp import posterior_from_sites
from voicache.bayes_linear_gp import predictive_prob
from voicache.bayes_linear_gp import predictive_probs
from voicache.bayes_linear_gp import prior_posterior
from voicache.bayes_linear_gp import SiteParams
from voicache.common_testing import grid_posterior
from voicache.common_testing import monte_carlo_predictive_prob
from voicache.common_testing import tilted_moments_by_quadrature
from voicache.common_testing import TIGHT_EP_OPTIONS
from voicache.exceptions import DimensionMismatch
from voicache.exceptions import DuplicatePoint
from voicache.exceptions import InvalidDimension
from voicache.exceptions import NearSingularCavity
from voicache.exceptions import UnknownSite


def random_points(rng, count, dim, first_id=0):
    return [
        LabeledPoint(first_id + i, rng.normal(size=dim), int(rng.choice([1, -1])))
        for i in range(count)
    ]


def adf_chain(points, dim):
    post = prior_posterior(dim)
    for point in points:
        post = adf_update(post, point)
    return post


def assert_same_gaussian(obtained, expected, atol) -> None:
    np.testing.assert_allclose(obtained.mean, expected.mean, rtol=0, atol=atol)
    np.testing.assert_allclose(obtained.cov, expected.cov, rtol=0, atol=atol)


def test_prior_posterior() -> None:
    post = prior_posterior(2)
    assert post.dim == 2
    assert post.mean.tolist() == [0.0, 0.0]
    assert post.cov.tolist() == [[1.0, 0.0], [0.0, 1.0]]
    assert post.sites == {}

    assert prior_posterior(1).cov.tolist() == [[1.0]]
    assert predictive_prob(prior_posterior(3), [0.3, -2.0, 1.0]) == 0.5

    for invalid in (0, -1, 1.5, True):
        with pytest.raises(InvalidDimension):
            prior_posterior(invalid)


def test_posterior_is_read_only() -> None:
    post = adf_update(prior_posterior(2), LabeledPoint(0, [1.0, 0.0], 1))
    with pytest.raises(ValueError):
        post.mean[0] = 3.0
    with pytest.raises(ValueError):
        post.cov[0, 0] = 3.0
    with pytest.raises(TypeError):
        post.sites[5] = post.sites[0]
    with pytest.raises(TypeError):
        del post.sites[0]

    sites = dict(post.sites)
    copy = Posterior(mean=post.mean, cov=post.cov, sites=sites)
    sites.clear()
    assert set(copy.sites) == {0}

    with pytest.raises(DimensionMismatch):
        Posterior(mean=np.zeros(2), cov=np.eye(3))


def test_predictive_prob() -> None:
    post = Posterior(mean=[2.0, 0.0], cov=np.eye(2))
    assert predictive_prob(post, [1.0, 0.0]) == pytest.approx(0.9213504, abs=1e-7)
    assert predictive_prob(post, [1.0, 0.0]) + predictive_prob(post, [-1.0, 0.0]) == (
        pytest.approx(1.0, abs=1e-15)
    )

    mc = monte_carlo_predictive_prob(post, [1.0, 0.0], 1_000_000, np.random.default_rng(5))
    assert mc == pytest.approx(0.9213504, abs=0.002)

    xs = np.array([[1.0, 0.0], [-1.0, 0.5], [0.0, 0.0]])
    np.testing.assert_allclose(
        predictive_probs(post, xs), [predictive_prob(post, x) for x in xs], rtol=1e-14
    )
    assert predictive_probs(post, np.empty((0, 2))).shape == (0,)

    with pytest.raises(DimensionMismatch):
        predictive_prob(post, [1.0, 0.0, 1.0])
    with pytest.raises(DimensionMismatch):
        predictive_probs(post, np.ones((3, 3)))


def test_predictive_prob_against_monte_carlo(rng) -> None:
    for _ in range(20):
        post = adf_chain(random_points(rng, 4, 3), 3)
        x = rng.normal(size=3)
        mc = monte_carlo_predictive_prob(post, x, 100_000, rng)
        assert predictive_prob(post, x) == pytest.approx(mc, abs=0.01)


def test_point_classify() -> None:
    post = Posterior(mean=[1.0, 1.0], cov=np.eye(2))
    assert point_classify(post, [1.0, 0.0]) == 1
    assert point_classify(post, [-1.0, 0.0]) == -1
    assert decision_value(post, [-1.0, 0.0]) == -1.0

    assert point_classify(prior_posterior(2), [3.0, -4.0]) == 1
    assert point_classify(post, [1.0, -1.0]) == 1

    with pytest.raises(DimensionMismatch):
        point_classify(post, [1.0])


def test_adf_update_single_point() -> None:
    prior = prior_posterior(2)
    post = adf_update(prior, LabeledPoint(0, [1.0, 0.0], 1))

    assert post.mean[0] == pytest.approx(1.0 / math.sqrt(math.pi), abs=1e-6)
    assert post.mean[1] == 0.0
    assert set(post.sites) == {0}
    assert post.sites[0].point.t == 1
    # The input snapshot is untouched.
    assert prior.mean.tolist() == [0.0, 0.0]
    assert prior.sites == {}

    _, mean, variance = tilted_moments_by_quadrature(0.0, 1.0, 1)
    assert post.mean[0] == pytest.approx(mean, abs=1e-9)
    assert post.cov[0, 0] == pytest.approx(variance, abs=1e-9)
    assert post.cov[1, 1] == 1.0


def test_adf_update_with_tiny_projection_variance() -> None:
    post = Posterior(mean=[3.0, 0.0], cov=np.diag([1e-6, 1.0]))
    updated = adf_update(post, LabeledPoint(0, [1.0, 0.0], 1))
    assert np.linalg.norm(updated.mean - post.mean) < 1e-3


def test_adf_update_errors() -> None:
    post = adf_update(prior_posterior(2), LabeledPoint(0, [1.0, 0.0], 1))
    with pytest.raises(DuplicatePoint):
        adf_update(post, LabeledPoint(0, [0.0, 1.0], -1))
    with pytest.raises(DimensionMismatch):
        adf_update(post, LabeledPoint(1, [0.0, 1.0, 1.0], -1))
    with pytest.raises(ValueError):
        LabeledPoint(2, [0.0, 1.0], 0)


def test_adf_then_downdate_is_identity(rng) -> None:
    for case in range(1000):
        dim = 1 + case % 4
        post = adf_chain(random_points(rng, case % 5, dim), dim)
        point = LabeledPoint(100, rng.normal(size=dim), int(rng.choice([1, -1])))

        restored, site = downdate_site(adf_update(post, point), point.id)
        assert site.point is point
        assert set(restored.sites) == set(post.sites)
        assert_same_gaussian(restored, post, atol=1e-8)


def test_downdate_then_multiply_is_identity(rng) -> None:
    for case in range(200):
        dim = 2 + case % 3
        points = random_points(rng, 4, dim)
        if case % 2:
            post = fit_ep(points, dim)
        else:
            post = adf_chain(points, dim)

        removed = points[case % 4].id
        cavity, site = downdate_site(post, removed)
        assert removed not in cavity.sites
        assert_same_gaussian(multiply_site(cavity, site), post, atol=1e-8)


def test_downdate_matches_remaining_sites(rng) -> None:
    for _ in range(10):
        points = random_points(rng, 3, 2)
        post = fit_ep(points, 2, TIGHT_EP_OPTIONS)
        cavity, _ = downdate_site(post, 1)

        remaining = [post.sites[0], post.sites[2]]
        assert_same_gaussian(cavity, posterior_from_sites(remaining, 2), atol=1e-4)

        retrained = fit_ep([points[0], points[2]], 2, TIGHT_EP_OPTIONS)
        assert_same_gaussian(cavity, retrained, atol=0.05)


def test_downdate_errors() -> None:
    post = adf_update(prior_posterior(1), LabeledPoint(0, [1.0], 1))
    with pytest.raises(UnknownSite):
        downdate_site(post, 7)

    point = LabeledPoint(0, [1.0], 1)
    singular = Posterior(
        mean=[0.0],
        cov=[[1.0]],
        sites={0: SiteParams(point=point, log_s=0.0, m=0.0, v=1.0)},
    )
    with pytest.raises(NearSingularCavity):
        downdate_site(singular, 0)
    with pytest.raises(DuplicatePoint):
        multiply_site(post, post.sites[0])


def test_uninformative_site() -> None:
    point = LabeledPoint(0, [1.0, 2.0], -1)
    site = SiteParams.from_natural(point, 0.0, 0.0, 0.0)
    assert math.isinf(site.v)
    assert site.precision == 0.0
    assert site.natural_mean == 0.0
    assert site.s == 1.0

    post = Posterior(mean=[0.5, 0.5], cov=np.eye(2), sites={0: site})
    cavity, _ = downdate_site(post, 0)
    assert_same_gaussian(cavity, post, atol=0.0)

    with pytest.raises(ValueError):
        SiteParams(point=point, log_s=0.0, m=0.0, v=0.0)


def test_random_updates_keep_covariance_positive_definite(rng) -> None:
    dim = 3
    post = prior_posterior(dim)
    next_id = 0
    for _ in range(1000):
        if post.sites and (len(post.sites) > 15 or rng.random() < 0.4):
            post, _ = downdate_site(post, int(rng.choice(sorted(post.sites))))
        else:
            post = adf_update(
                post, LabeledPoint(next_id, 2.0 * rng.normal(size=dim), int(rng.choice([1, -1])))
            )
            next_id += 1
        assert np.max(np.abs(post.cov - post.cov.T)) <= 1e-10
        assert np.min(np.linalg.eigvalsh(post.cov)) > 0.0


def test_sites_reproduce_posterior(rng) -> None:
    points = random_points(rng, 6, 3)
    post = adf_chain(points, 3)
    assert_same_gaussian(posterior_from_sites(post.sites.values(), 3), post, atol=1e-8)

    post = fit_ep(points, 3)
    assert post.ep_converged
    assert_same_gaussian(posterior_from_sites(post.sites.values(), 3), post, atol=1e-6)


def test_fit_ep_empty_and_single_point() -> None:
    post = fit_ep([], 2)
    assert_same_gaussian(post, prior_posterior(2), atol=0.0)
    assert post.ep_converged

    post = fit_ep([LabeledPoint(0, [1.0], 1)], 1)
    _, mean, variance = tilted_moments_by_quadrature(0.0, 1.0, 1)
    assert post.mean[0] == pytest.approx(mean, abs=1e-6)
    assert post.cov[0, 0] == pytest.approx(variance, abs=1e-6)


def test_fit_ep_against_grid_posterior(rng) -> None:
    for _ in range(20):
        labels = [1, -1, int(rng.choice([1, -1]))]
        points = [LabeledPoint(i, rng.normal(size=2), t) for i, t in enumerate(labels)]

        post = fit_ep(points, 2)
        mean, cov = grid_posterior(points)
        np.testing.assert_allclose(post.mean, mean, rtol=0, atol=0.05)
        np.testing.assert_allclose(post.cov, cov, rtol=0, atol=0.05)


def test_fit_ep_is_order_invariant(rng) -> None:
    points = random_points(rng, 7, 3)
    post = fit_ep(points, 3)
    shuffled = fit_ep([points[i] for i in rng.permutation(len(points))], 3)
    assert np.array_equal(post.mean, shuffled.mean)
    assert np.array_equal(post.cov, shuffled.cov)

    damped = fit_ep(points, 3, EPOptions(damping=0.5, max_sweeps=200))
    assert damped.ep_converged
    assert_same_gaussian(damped, post, atol=1e-5)


def test_fit_ep_sweep_cap(rng, caplog) -> None:
    points = random_points(rng, 5, 2)
    post = fit_ep(points, 2, EPOptions(max_sweeps=1))
    assert not post.ep_converged
    assert post.ep_sweeps == 1
    assert "EP stopped after 1 sweeps" in caplog.text

    post = fit_ep(points, 2)
    assert post.ep_converged
    assert 1 < post.ep_sweeps <= 50


def test_fit_ep_errors() -> None:
    with pytest.raises(DuplicatePoint):
        fit_ep([LabeledPoint(0, [1.0], 1), LabeledPoint(0, [2.0], -1)], 1)
    with pytest.raises(DimensionMismatch):
        fit_ep([LabeledPoint(0, [1.0, 2.0], 1)], 1)
    with pytest.raises(ValueError):
        EPOptions(damping=1.0)
    with pytest.raises(ValueError):
        EPOptions(max_sweeps=0)


def test_csv_stream_round_trips(csv_points) -> None:
    post = prior_posterior(3)
    for point in csv_points:
        updated = adf_update(post, point)
        restored, _ = downdate_site(updated, point.id)
        assert_same_gaussian(restored, post, atol=1e-8)
        post = updated

    fitted = fit_ep(csv_points, 3)
    for point in csv_points:
        cavity, site = downdate_site(fitted, point.id)
        assert_same_gaussian(multiply_site(cavity, site), fitted, atol=1e-8)


def test_fit_ep_against_grid_posterior_on_csv_stream(csv_stream) -> None:
    for start in range(len(csv_stream) - 2):
        points = [
            LabeledPoint(p.index, p.features, p.true_label) for p in csv_stream[start : start + 3]
        ]
        post = fit_ep(points, 2)
        mean, cov = grid_posterior(points)
        np.testing.assert_allclose(post.mean, mean, rtol=0, atol=0.05)
        np.testing.assert_allclose(post.cov, cov, rtol=0, atol=0.05)


def test_predictive_prob_against_monte_carlo_on_csv_stream(rng, csv_points) -> None:
    post = fit_ep(csv_points[:8], 3)
    for point in csv_points[8:]:
        mc = monte_carlo_predictive_prob(post, point.x, 100_000, rng)
        assert predictive_prob(post, point.x) == pytest.approx(mc, abs=0.01)
