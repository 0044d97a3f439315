"""
Bayesian linear classifier with a spherical Gaussian prior `w ~ N(0, I)` and
the probit likelihood `p(t|w, x) = Ψ(t·wᵀx)`.

The posterior is kept as a Gaussian `N(w̄, Σ)` together with one Gaussian
site per incorporated labeled point, such that the posterior is the product of
the prior and all sites. Sites make three cheap operations possible:

- :func:`adf_update`: incorporate one more likelihood term by moment matching
  (one matrix-vector product and one rank-one update);
- :func:`downdate_site`: exactly remove a site, giving the leave-one-out
  (cavity) posterior;
- :func:`multiply_site`: put a removed site back.

:func:`fit_ep` refines all sites with Expectation Propagation sweeps.

Every function returns new values; posteriors and points are immutable.
"""

import logging
import math
import types
from typing import Dict
from typing import Iterable
from typing import Mapping
from typing import Optional
from typing import Tuple

import attr
import numpy as np
from scipy import linalg
from scipy import special

from voicache import constants
from voicache.debug import is_voicache_debug_enabled
from voicache.exceptions import DimensionMismatch
from voicache.exceptions import DuplicatePoint
from voicache.exceptions import InvalidDimension
from voicache.exceptions import InvariantViolation
from voicache.exceptions import NearSingularCavity
from voicache.exceptions import UnknownSite
from voicache.extra_attr_validators import binary_label
from voicache.extra_attr_validators import non_negative
from voicache.extra_attr_validators import positive
from voicache.gaussian_math import probit_moments


logger = logging.getLogger(__name__)

PointId = int


def _readonly_array(value, ndim):
    array = np.array(value, dtype=np.float64)
    if array.ndim != ndim:
        raise ValueError("Expected an array with {} dimension(s) but got {!r}".format(ndim, value))
    array.setflags(write=False)
    return array


def _readonly_vector(value):
    return _readonly_array(value, 1)


def _readonly_matrix(value):
    return _readonly_array(value, 2)


def _readonly_sites(value):
    return types.MappingProxyType(dict(value))


@attr.s(frozen=True, slots=True, eq=False)
class LabeledPoint:
    """
    A point whose label is known.

    :ivar int id: Unique identifier, the arrival index in a stream.
    :ivar numpy.ndarray x: Features, already augmented with the bias
        coordinate.
    :ivar int t: Label, `+1` or `-1`.
    """

    id: PointId = attr.ib(converter=int)
    x: np.ndarray = attr.ib(converter=_readonly_vector)
    t: int = attr.ib(converter=int, validator=binary_label)


@attr.s(frozen=True, slots=True, eq=False)
class SiteParams:
    """
    Gaussian approximation `q = s·exp(-(t·wᵀx - m)² / (2v))` of the
    likelihood term of one labeled point.

    A site whose variance is infinite carries no information; it is what a
    point agreeing overwhelmingly with the posterior produces.

    :ivar LabeledPoint point: The point this site approximates.
    :ivar float log_s: Log of the site scale `s`.
    :ivar float m: Site mean of `t·wᵀx`.
    :ivar float v: Site variance, positive (possibly infinite).
    """

    point: LabeledPoint = attr.ib(validator=attr.validators.instance_of(LabeledPoint))
    log_s: float = attr.ib(converter=float)
    m: float = attr.ib(converter=float)
    v: float = attr.ib(converter=float, validator=positive)

    @property
    def s(self):
        return math.exp(self.log_s)

    @property
    def precision(self):
        """
        :rtype: float
        :return: `1/v`, zero for an uninformative site.
        """
        return 0.0 if math.isinf(self.v) else 1.0 / self.v

    @property
    def natural_mean(self):
        """
        :rtype: float
        :return: Precision-weighted site mean of `wᵀx` (`t·m/v`).
        """
        return self.precision * self.point.t * self.m

    @classmethod
    def from_natural(cls, point, precision, natural_mean, log_s):
        if precision > 0.0:
            return cls(
                point=point,
                log_s=log_s,
                m=point.t * natural_mean / precision,
                v=1.0 / precision,
            )
        return cls(point=point, log_s=log_s, m=0.0, v=math.inf)


@attr.s(frozen=True, slots=True, eq=False)
class Posterior:
    """
    Gaussian belief `N(mean, cov)` over the classifier weights.

    :ivar numpy.ndarray mean: `w̄`, also the Bayes point classifier.
    :ivar numpy.ndarray cov: `Σ`, symmetric positive definite.
    :ivar Mapping[int,SiteParams] sites: One site per incorporated point, keyed
        by point id. Read-only.
    :ivar bool ep_converged: False when :func:`fit_ep` stopped at its sweep
        cap before reaching its tolerance.
    :ivar int ep_sweeps: Number of EP sweeps that produced this posterior
        (zero when it was built incrementally).
    """

    mean: np.ndarray = attr.ib(converter=_readonly_vector)
    cov: np.ndarray = attr.ib(converter=_readonly_matrix)
    sites: Mapping[PointId, SiteParams] = attr.ib(factory=dict, converter=_readonly_sites)
    ep_converged: bool = attr.ib(default=True)
    ep_sweeps: int = attr.ib(default=0)

    @cov.validator
    def _check_cov_shape(self, attribute, value):
        d = self.mean.shape[0]
        if value.shape != (d, d):
            raise DimensionMismatch(
                "Covariance shape {} doesn't match mean dimension {}".format(value.shape, d)
            )

    @property
    def dim(self):
        return self.mean.shape[0]


@attr.s(frozen=True, slots=True)
class EPOptions:
    """
    :ivar float tolerance: Sweeps stop once no site precision or
        precision-weighted mean changed by more than this in a full sweep.
    :ivar int max_sweeps: Cap on the number of sweeps; reaching it is not an
        error (see :attr:`Posterior.ep_converged`).
    :ivar float damping: Fraction of the previous site kept on each update,
        in `[0, 1)`. Zero means no damping.
    """

    tolerance: float = attr.ib(default=constants.EP_TOLERANCE, validator=positive)
    max_sweeps: int = attr.ib(default=constants.EP_MAX_SWEEPS)
    damping: float = attr.ib(default=0.0, validator=non_negative)

    @max_sweeps.validator
    def _check_max_sweeps(self, attribute, value):
        if value < 1:
            raise ValueError("'max_sweeps' must be at least 1 but got {!r}".format(value))

    @damping.validator
    def _check_damping(self, attribute, value):
        if value >= 1.0:
            raise ValueError("'damping' must be smaller than 1 but got {!r}".format(value))


def _check_dimension(dim):
    if isinstance(dim, bool) or not isinstance(dim, (int, np.integer)) or dim < 1:
        raise InvalidDimension("Dimension must be a positive integer but got {!r}".format(dim))


def _as_vector(post, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (post.dim,):
        raise DimensionMismatch(
            "Expected a vector of dimension {} but got shape {}".format(post.dim, x.shape)
        )
    return x


def _as_matrix(post, xs):
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim == 1 and xs.shape[0] == 0:
        return xs.reshape(0, post.dim)
    if xs.ndim != 2 or xs.shape[1] != post.dim:
        raise DimensionMismatch(
            "Expected rows of dimension {} but got shape {}".format(post.dim, xs.shape)
        )
    return xs


def _stabilize(cov):
    """
    Symmetrizes a covariance after an update and adds jitter when floating
    point drift left a non-positive diagonal entry.
    """
    cov = 0.5 * (cov + cov.T)
    if np.min(np.diag(cov)) <= 0.0:
        cov = cov + constants.COVARIANCE_JITTER * np.eye(cov.shape[0])
    return cov


def _check_posterior(post):
    if not is_voicache_debug_enabled():
        return
    asymmetry = np.max(np.abs(post.cov - post.cov.T))
    if asymmetry > constants.SYMMETRY_TOLERANCE:
        raise InvariantViolation("Posterior covariance is not symmetric ({})".format(asymmetry))
    try:
        np.linalg.cholesky(post.cov)
    except np.linalg.LinAlgError:
        raise InvariantViolation("Posterior covariance is not positive definite")


def _new_posterior(mean, cov, sites, **kwargs):
    post = Posterior(mean=mean, cov=cov, sites=sites, **kwargs)
    _check_posterior(post)
    return post


def _multiply(mean, cov, x, precision, natural_mean):
    """
    Multiplies `N(mean, cov)` by the site `exp(natural_mean·u - precision·u²/2)`
    over `u = wᵀx`.
    """
    cov_x = cov @ x
    q = float(x @ cov_x)
    mu = float(mean @ x)
    denominator = 1.0 + precision * q
    new_mean = mean + cov_x * ((natural_mean - precision * mu) / denominator)
    new_cov = cov - (precision / denominator) * np.outer(cov_x, cov_x)
    return new_mean, _stabilize(new_cov)


def _divide(mean, cov, x, site):
    """
    Divides `N(mean, cov)` by a site, the inverse of `_multiply`.

    Implements `Σ' = Σ + (Σx)(v - xᵀΣx)⁻¹(Σx)ᵀ` and
    `w̄' = w̄ + (Σ'x)·v⁻¹·(w̄ᵀx - t·m)`. The label multiplies the site mean
    because the site is a Gaussian in `t·wᵀx`; this is the form for which
    dividing and multiplying back is an exact identity.
    """
    precision = site.precision
    if precision == 0.0:
        return mean, cov

    cov_x = cov @ x
    q = float(x @ cov_x)
    if abs(site.v - q) < constants.CAVITY_SINGULARITY_TOLERANCE:
        raise NearSingularCavity(
            "Removing site of point {} leaves a singular cavity".format(site.point.id)
        )
    mu = float(mean @ x)
    denominator = 1.0 - precision * q
    new_mean = mean + cov_x * ((precision * mu - site.natural_mean) / denominator)
    new_cov = cov + (precision / denominator) * np.outer(cov_x, cov_x)
    return new_mean, _stabilize(new_cov)


def _project(mean, cov, point):
    """
    Gaussian projection of `N(mean, cov)·Ψ(t·wᵀx)`.

    :rtype: tuple[numpy.ndarray,numpy.ndarray,SiteParams]
    :return: Matched mean, matched covariance and the site that turns the
        given Gaussian into the matched one.
    """
    x = point.x
    cov_x = cov @ x
    q = float(x @ cov_x)
    mu = float(mean @ x)
    moments = probit_moments(mu, q, point.t)
    alpha, beta = moments.alpha, moments.beta

    new_mean = mean + alpha * cov_x
    new_cov = _stabilize(cov - beta * np.outer(cov_x, cov_x))

    # beta·q < q/(q+1) < 1, so the site precision is finite and non-negative.
    shrink = 1.0 - beta * q
    precision = beta / shrink
    natural_mean = (beta * mu + alpha) / shrink
    log_s = moments.log_partition + 0.5 * math.log1p(q * precision)
    if precision > 0.0:
        log_s += (precision * mu - natural_mean) ** 2 / (2.0 * precision * (1.0 + q * precision))
    site = SiteParams.from_natural(point, precision, natural_mean, log_s)
    return new_mean, new_cov, site


def prior_posterior(dim: int) -> Posterior:
    """
    :param int dim: Dimension of the (bias augmented) feature space.
    :rtype: Posterior
    :return: The spherical prior `N(0, I)` with no sites.
    """
    _check_dimension(dim)
    return Posterior(mean=np.zeros(dim), cov=np.eye(dim))


def decision_value(post: Posterior, x) -> float:
    """
    :rtype: float
    :return: `w̄ᵀx`, the Bayes point's signed margin for `x`.
    """
    return float(post.mean @ _as_vector(post, x))


def predictive_prob(post: Posterior, x) -> float:
    """
    Predictive probability of class `+1`:
    `Ψ(w̄ᵀx / √(xᵀΣx + 1))`. The probability of `-1` is its complement.

    :rtype: float
    """
    x = _as_vector(post, x)
    variance = float(x @ post.cov @ x)
    return float(special.ndtr(float(post.mean @ x) / math.sqrt(variance + 1.0)))


def predictive_probs(post: Posterior, xs) -> np.ndarray:
    """
    Vectorized :func:`predictive_prob` over the rows of `xs`.
    """
    xs = _as_matrix(post, xs)
    variances = np.einsum("ij,jk,ik->i", xs, post.cov, xs)
    return special.ndtr((xs @ post.mean) / np.sqrt(variances + 1.0))


def point_classify(post: Posterior, x) -> int:
    """
    Classifies `x` with the Bayes point: `sign(w̄ᵀx)`, where an exact zero is
    classified as `+1`.

    :rtype: int
    """
    if decision_value(post, x) >= 0.0:
        return constants.POSITIVE_LABEL
    return constants.NEGATIVE_LABEL


def adf_update(post: Posterior, point: LabeledPoint) -> Posterior:
    """
    Incorporates the likelihood of one labeled point by assumed density
    filtering: the result is the Gaussian projection of
    `post × Ψ(t·wᵀx)` and gains the site of `point`.

    :param Posterior post: Current posterior, not containing `point`.
    :param LabeledPoint point: The point to incorporate.
    :rtype: Posterior
    """
    if point.id in post.sites:
        raise DuplicatePoint("Point {} is already part of the posterior".format(point.id))
    _as_vector(post, point.x)

    new_mean, new_cov, site = _project(post.mean, post.cov, point)
    sites = dict(post.sites)
    sites[point.id] = site
    return _new_posterior(new_mean, new_cov, sites)


def downdate_site(post: Posterior, id: PointId) -> Tuple[Posterior, SiteParams]:
    """
    Removes the site of one point, giving the leave-one-out posterior.

    :param Posterior post: Current posterior.
    :param int id: Point whose site is removed.
    :rtype: tuple[Posterior,SiteParams]
    :return: The posterior without the site and the removed site, which can
        be put back with :func:`multiply_site`.
    :raise NearSingularCavity: If the cavity can't be computed reliably.
    """
    site = post.sites.get(id)
    if site is None:
        raise UnknownSite("Point {} has no site in the posterior".format(id))

    new_mean, new_cov = _divide(post.mean, post.cov, site.point.x, site)
    sites = {k: v for k, v in post.sites.items() if k != id}
    return _new_posterior(new_mean, new_cov, sites), site


def multiply_site(post: Posterior, site: SiteParams) -> Posterior:
    """
    Puts back a site previously removed by :func:`downdate_site`.

    :rtype: Posterior
    """
    point = site.point
    if point.id in post.sites:
        raise DuplicatePoint("Point {} is already part of the posterior".format(point.id))
    x = _as_vector(post, point.x)

    new_mean, new_cov = _multiply(post.mean, post.cov, x, site.precision, site.natural_mean)
    sites = dict(post.sites)
    sites[point.id] = site
    return _new_posterior(new_mean, new_cov, sites)


def posterior_from_sites(sites: Iterable[SiteParams], dim: int, **kwargs) -> Posterior:
    """
    Builds the Gaussian `p(w)·∏ q_i` of the prior and a collection of sites
    from scratch, through a Cholesky factorization of the posterior precision.

    :param iterable[SiteParams] sites:
    :param int dim:
    :rtype: Posterior
    """
    _check_dimension(dim)
    sites = list(sites)
    precision = np.eye(dim)
    shift = np.zeros(dim)
    for site in sites:
        x = site.point.x
        if x.shape != (dim,):
            raise DimensionMismatch(
                "Point {} has shape {} but dimension is {}".format(site.point.id, x.shape, dim)
            )
        precision += site.precision * np.outer(x, x)
        shift += site.natural_mean * x

    factor = linalg.cho_factor(precision)
    cov = _stabilize(linalg.cho_solve(factor, np.eye(dim)))
    mean = linalg.cho_solve(factor, shift)
    return _new_posterior(mean, cov, {site.point.id: site for site in sites}, **kwargs)


def fit_ep(
    points: Iterable[LabeledPoint], dim: int, options: Optional[EPOptions] = None
) -> Posterior:
    """
    Fits the posterior of a set of labeled points with Expectation
    Propagation.

    Points are swept in ascending id order, so the result doesn't depend on
    the input order. The first sweep is plain ADF; later sweeps remove each
    site, match moments against the cavity and put back the refined site. At
    the end of every sweep the posterior is rebuilt from the prior and the
    sites, so the result is exactly their product.

    :param iterable[LabeledPoint] points:
    :param int dim:
    :param EPOptions|None options: Defaults to `EPOptions()`.
    :rtype: Posterior
    """
    _check_dimension(dim)
    if options is None:
        options = EPOptions()

    ordered = sorted(points, key=lambda p: p.id)
    seen = set()
    for point in ordered:
        if point.id in seen:
            raise DuplicatePoint("Point {} appears more than once".format(point.id))
        seen.add(point.id)
        if point.x.shape != (dim,):
            raise DimensionMismatch(
                "Point {} has shape {} but dimension is {}".format(point.id, point.x.shape, dim)
            )

    if not ordered:
        return prior_posterior(dim)

    mean = np.zeros(dim)
    cov = np.eye(dim)
    sites: Dict[PointId, SiteParams] = {}
    converged = False
    sweep = 0
    for sweep in range(1, options.max_sweeps + 1):
        largest_change = 0.0
        for point in ordered:
            old = sites.get(point.id)
            if old is None:
                cavity_mean, cavity_cov = mean, cov
            else:
                try:
                    cavity_mean, cavity_cov = _divide(mean, cov, point.x, old)
                except NearSingularCavity:
                    logger.debug("Skipping site %s in EP sweep %s", point.id, sweep)
                    continue

            _, _, site = _project(cavity_mean, cavity_cov, point)
            if old is None:
                largest_change = math.inf
            else:
                if options.damping > 0.0:
                    keep = options.damping
                    site = SiteParams.from_natural(
                        point,
                        (1.0 - keep) * site.precision + keep * old.precision,
                        (1.0 - keep) * site.natural_mean + keep * old.natural_mean,
                        site.log_s,
                    )
                largest_change = max(
                    largest_change,
                    abs(site.precision - old.precision),
                    abs(site.natural_mean - old.natural_mean),
                )

            sites[point.id] = site
            mean, cov = _multiply(
                cavity_mean, cavity_cov, point.x, site.precision, site.natural_mean
            )

        refreshed = posterior_from_sites(sites.values(), dim)
        mean, cov = refreshed.mean, refreshed.cov
        if largest_change < options.tolerance:
            converged = True
            break

    if not converged:
        logger.warning(
            "EP stopped after %s sweeps without reaching tolerance %s on %s points",
            sweep,
            options.tolerance,
            len(ordered),
        )
    return _new_posterior(mean, cov, sites, ep_converged=converged, ep_sweeps=sweep)
