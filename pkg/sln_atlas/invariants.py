"""
Conjugacy invariants of analytic circle and interval vector fields.

A circle field f d/dtheta is classified by the number k of its zeros, the cyclic
list of (order, residue) pairs read in increasing theta, an orientation sign and
the regularized integral mu of dtheta/f. The residue at a zero is the coefficient
c_{-1} of the Laurent expansion of 1/f there.

Dihedral action on the listing: rotations shift the list and keep sigma,
reflections reverse it and flip sigma; mu is fixed. Invariants computed here
always list zeros in increasing theta with sigma = +1 (k >= 1), so a listing
whose sigma is -1 is a reflected relabeling. The push-forward by theta -> -theta
has the same orders and residues in reversed cyclic order and mu negated.
"""
import logging
import warnings
from dataclasses import dataclass
from enum import Enum, auto
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import IntegrationWarning, quad
from scipy.special import roots_legendre

from . import series
from .circlefield import (
    TWO_PI,
    CircleField,
    DerivDepthExceeded,
    DerivativeFn,
    EndpointConstraintViolated,
    ExactField,
    IntervalField,
    ZeroDatum,
    classify_point,
    eval_field,
    find_interval_zeros,
    find_zeros,
)

logger = logging.getLogger("sln_atlas")

DEFAULT_TOL_MATCH = 1e-6
NEAR_FACTOR = 10.0
WINDOW = 0.1
RICHARDSON_CUTOFFS = (1e-2, 1e-3, 1e-4)
RICHARDSON_TOL = 1e-6
_REGULAR_TERMS = 5
SAMPLED_NOISE = 1e-12
# the regular Laurent polynomial is used out to this fraction of the distance to the next singularity of 1/f
REACH_FRACTION = 1 / 32
QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10
MAX_PANEL = 0.5
GAUSS_RULES = tuple(roots_legendre(n) for n in (16, 32))


class InsufficientDerivativeDepth(ValueError):
    pass


class NonconvergentRegularization(ValueError):
    pass


class NotAZero(ValueError):
    pass


class AmbiguousMatch(Exception):
    """ Two values straddle the matching tolerance: tighten tolerances and retry """


ZeroRecord = Tuple[int, float]


@dataclass(frozen=True)
class LaurentData:
    center: float
    pole_order: int
    coeffs: Tuple[float, ...]  # c_{-m}, ..., c_{-1}, c_0, ...

    def c(self, index: int) -> float:
        """ The coefficient of h^index """
        return self.coeffs[index + self.pole_order]

    @property
    def singular(self) -> Tuple[float, ...]:
        return self.coeffs[: self.pole_order]

    @property
    def regular(self) -> Tuple[float, ...]:
        return self.coeffs[self.pole_order :]


@dataclass(frozen=True)
class HitchinInvariants:
    k: int
    sigma: int
    zero_data: Tuple[ZeroRecord, ...]
    mu: float
    tol: float


@dataclass(frozen=True)
class CanonicalKey:
    k: int
    mu: float
    canonical_sequence: Tuple[ZeroRecord, ...]
    canonical_sigma: int


@dataclass(frozen=True)
class IntervalInvariants:
    records: Tuple[ZeroRecord, ...]
    gaps: Tuple[float, ...]

    def flipped(self) -> "IntervalInvariants":
        """ Invariants of the push-forward by t -> -t """
        return IntervalInvariants(self.records[::-1], tuple(-g for g in self.gaps[::-1]))


@dataclass(frozen=True)
class GermInvariants:
    order: int
    residue: float


class Closeness(Enum):
    Match = auto()
    Near = auto()
    Apart = auto()


def compare_values(a: float, b: float, tol_match: float) -> Closeness:
    bound = tol_match * max(1.0, abs(a), abs(b))
    if abs(a - b) <= bound:
        return Closeness.Match
    if abs(a - b) <= NEAR_FACTOR * bound:
        return Closeness.Near
    return Closeness.Apart


def _worst(*results: Closeness) -> Closeness:
    if Closeness.Apart in results:
        return Closeness.Apart
    if Closeness.Near in results:
        return Closeness.Near
    return Closeness.Match


def compare_records(a: Sequence[ZeroRecord], b: Sequence[ZeroRecord], tol_match: float) -> Closeness:
    if len(a) != len(b) or any(ma != mb for (ma, _), (mb, _) in zip(a, b)):
        return Closeness.Apart
    return _worst(Closeness.Match, *(compare_values(ra, rb, tol_match) for (_, ra), (_, rb) in zip(a, b)))


def _derivatives_at(deriv_fn: DerivativeFn, x: float, depth: int) -> np.ndarray:
    try:
        return deriv_fn(x, depth)
    except DerivDepthExceeded as exc:
        raise InsufficientDerivativeDepth(str(exc)) from exc


def _laurent(deriv_fn: DerivativeFn, center: float, order: int, last: int) -> LaurentData:
    """ c_{-order}, ..., c_{last} of 1/f, from 2 * order + last + 1 Taylor coefficients """
    taylor = series.taylor_from_derivatives(_derivatives_at(deriv_fn, center, 2 * order + last))
    coeffs = series.laurent_of_reciprocal(taylor, order, order + last + 1)
    return LaurentData(float(center), order, tuple(float(c) for c in coeffs))


def _available_regular_terms(depth: Optional[int], order: int) -> int:
    """ Highest regular Laurent index computable at a zero of this order, at most c_5 """
    if depth is None:
        return _REGULAR_TERMS
    if (last := depth - 2 * order) < -1:
        raise InsufficientDerivativeDepth(f"an order-{order} zero needs derivative depth {2 * order - 1}, got {depth}")
    return min(_REGULAR_TERMS, last)


def _circle_fn(field: CircleField) -> DerivativeFn:
    return lambda x, depth: field.derivatives(x, depth)[:, 0]


def laurent_at_zero(field: CircleField, zero: ZeroDatum, depth: int = 0) -> LaurentData:
    if field.depth is not None and 2 * zero.order + depth > field.depth:
        raise InsufficientDerivativeDepth(
            f"c_{depth} at an order-{zero.order} zero needs derivative depth {2 * zero.order + depth}, "
            f"field provides {field.depth}"
        )
    return _laurent(_circle_fn(field), zero.theta, zero.order, depth)


def residue(field: CircleField, zero: ZeroDatum) -> float:
    if field.depth is not None and 2 * zero.order - 1 > field.depth:
        raise InsufficientDerivativeDepth(f"an order-{zero.order} zero needs derivative depth {2 * zero.order - 1}")
    return _laurent(_circle_fn(field), zero.theta, zero.order, -1).c(-1)


def _quad(func: Callable[[float], float], a: float, b: float) -> float:
    if b <= a:
        return 0.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IntegrationWarning)
        value, error = quad(func, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
    for warning in caught:
        logger.warning(f"quadrature on [{a}, {b}]: {warning.message}")
    logger.debug(f"{a=} {b=} {value=} {error=}")
    return float(value)


def _graded_breaks(a: float, b: float, left: float, right: float) -> np.ndarray:
    """ Breakpoints of [a, b]; each panel is no longer than its distance to left <= a and right >= b """
    breaks = [a]
    while breaks[-1] < b:
        x = breaks[-1]
        breaks.append(min(b, x + min(x - left, (right - x) / 2, MAX_PANEL)))
    return np.asarray(breaks)


def _panel_quad(func: Callable[[np.ndarray], np.ndarray], a: float, b: float, left: float, right: float) -> float:
    """
    Integral of a vectorized integrand over [a, b], analytic away from the singularities at
    left and right. Composite Gauss-Legendre on graded panels with 16 and then 32 nodes; when
    the two disagree the integrand has a singularity nobody told us about and adaptive
    quadrature takes over.
    """
    if b <= a:
        return 0.0
    if not left < a <= b < right:
        left, right = -np.inf, np.inf
    breaks = _graded_breaks(a, b, left, right)
    mid, half = (breaks[1:] + breaks[:-1]) / 2, np.diff(breaks) / 2
    estimates = []
    for nodes, weights in GAUSS_RULES:
        values = np.asarray(func((mid[:, None] + half[:, None] * nodes).ravel()), dtype=float).reshape(mid.size, -1)
        estimates.append((float(half @ (values @ weights)), float(half @ (np.abs(values) @ weights))))
    (coarse, _), (fine, magnitude) = estimates
    logger.debug(f"{a=} {b=} panels={mid.size} {coarse=} {fine=}")
    if abs(fine - coarse) <= max(QUAD_EPSABS, QUAD_EPSREL * magnitude):
        return fine
    return _quad(lambda x: float(func(x)), a, b)


@dataclass(frozen=True)
class _Pole:
    """ 1/f near a zero, split into the singular Laurent part and a regular remainder """

    value: Callable[[np.ndarray], np.ndarray]
    laurent: LaurentData
    inner: float
    reach: float

    @classmethod
    def build(
        cls,
        value: Callable[[np.ndarray], np.ndarray],
        laurent: LaurentData,
        delta: float,
        reach: float,
        noise: Optional[float] = None,
    ) -> "_Pole":
        """
        Inside |h| < inner the remainder is replaced by its regular Laurent polynomial. reach is
        the distance to the nearest other singularity of 1/f. Sampled fields also bound inner by
        where their evaluation noise, of order noise / h^(2m), meets the truncated terms.
        """
        if not laurent.regular:
            return cls(value, laurent, 0.0, reach)
        inner = min(delta, reach * REACH_FRACTION)
        if noise is not None:
            exponent = 2 * laurent.pole_order + len(laurent.regular)
            inner = min(inner, delta / 4, noise ** (1.0 / exponent))
        return cls(value, laurent, float(inner), reach)

    def remainder(self, h):
        singular = sum(c * h ** (j - self.laurent.pole_order) for j, c in enumerate(self.laurent.singular))
        return 1.0 / self.value(self.laurent.center + h) - singular

    def _inner_integral(self, a: float, b: float) -> float:
        return sum(c * (b ** (j + 1) - a ** (j + 1)) / (j + 1) for j, c in enumerate(self.laurent.regular))

    def integrate(self, a: float, b: float) -> float:
        """ Integral of the remainder over [a, b], an interval on one side of the zero """
        lo, hi = max(a, -self.inner), min(b, self.inner)
        total = self._inner_integral(lo, hi) if hi > lo else 0.0
        if a < -self.inner:
            total += _panel_quad(self.remainder, a, min(b, -self.inner), -self.reach, self.reach)
        if b > self.inner:
            total += _panel_quad(self.remainder, max(a, self.inner), b, -self.reach, self.reach)
        return total

    def symmetric_finite_part(self, delta: float) -> float:
        """ Finite part of the singular model over [-delta, delta]; odd powers cancel """
        total = 0.0
        for j in range(2, self.laurent.pole_order + 1, 2):
            total += 2 * self.laurent.c(-j) * delta ** (1 - j) / (1 - j)
        return total

    def one_sided_finite_part(self, delta: float, length: float, side: int) -> float:
        """
        Finite part of the singular model over (0, delta] (side = +1) or [-delta, 0)
        (side = -1), dropping the divergent powers of the cutoff and log(cutoff / length).
        """
        total = side * self.laurent.c(-1) * np.log(delta / length)
        for j in range(2, self.laurent.pole_order + 1):
            total += side ** j * self.laurent.c(-j) * delta ** (1 - j) / (1 - j)
        return float(total)


def _windows(zeros: Sequence[ZeroDatum]) -> List[float]:
    """ Half-widths min(0.1, half the gap to the nearest other zero) """
    return [min(WINDOW, gap / 2) for gap in _neighbor_distances([z.theta for z in zeros], TWO_PI)]


def _neighbor_distances(positions: Sequence[float], period: Optional[float] = None) -> List[float]:
    """ Distance from each sorted position to the nearest other one, inf when alone """
    k = len(positions)
    if k == 1:
        return [np.inf]
    if period is not None:
        gaps = [(positions[(i + 1) % k] - positions[i]) % period for i in range(k)]
        return [min(gaps[i], gaps[i - 1]) for i in range(k)]
    gaps = list(np.diff(positions))
    return [min([np.inf, *gaps[max(i - 1, 0) : i + 1]]) for i in range(k)]


def _reaches(singularities: np.ndarray, zeros: Sequence[ZeroDatum], distance: Callable) -> List[float]:
    """ Distance from each zero to the nearest singularity of 1/f that is not the zero itself """
    reaches = []
    for zero in zeros:
        # an order-m zero accounts for its m nearest roots
        nearest = np.sort(distance(singularities, zero.theta))
        reaches.append(float(nearest[zero.order]) if nearest.size > zero.order else np.inf)
    return reaches


def _circle_reaches(field: CircleField, zeros: Sequence[ZeroDatum]) -> List[float]:
    if not isinstance(field, ExactField):
        return _neighbor_distances([z.theta for z in zeros], TWO_PI)
    # z = exp(i theta) is a root of z^N f, so theta = arg z - i log|z|
    roots = P.polyroots(field.poly.unit_circle_coefficients())

    def distance(roots: np.ndarray, theta: float) -> np.ndarray:
        offset = np.mod(np.angle(roots) - theta + np.pi, TWO_PI) - np.pi
        return np.hypot(offset, np.log(np.abs(roots)))

    return _reaches(roots, zeros, distance)


def _interval_reaches(field: IntervalField, zeros: Sequence[ZeroDatum]) -> List[float]:
    if not field.is_polynomial:
        return _neighbor_distances([z.theta for z in zeros])
    return _reaches(field.as_polynomial.roots(), zeros, lambda roots, t: np.abs(roots - t))


def global_invariant(field: CircleField, zeros: Sequence[ZeroDatum]) -> float:
    """ mu: the integral of dtheta/f, regularized as a finite part when f has zeros """
    reciprocal = lambda theta: 1.0 / field(theta)  # noqa: E731
    if not zeros:
        return _panel_quad(reciprocal, 0.0, TWO_PI, -np.inf, np.inf)

    deltas = _windows(zeros)
    reaches = _circle_reaches(field, zeros)
    logger.debug(f"{deltas=} {reaches=}")
    noise = None if field.is_exact else SAMPLED_NOISE
    poles = [
        _Pole.build(
            field,
            _laurent(_circle_fn(field), z.theta, z.order, _available_regular_terms(field.depth, z.order)),
            delta,
            reach,
            noise,
        )
        for z, delta, reach in zip(zeros, deltas, reaches)
    ]
    k = len(zeros)
    mu = 0.0
    for i, (zero, pole, delta) in enumerate(zip(zeros, poles, deltas)):
        mu += pole.integrate(-delta, 0.0) + pole.integrate(0.0, delta) + pole.symmetric_finite_part(delta)
        following = zeros[(i + 1) % k].theta + (TWO_PI if i == k - 1 else 0.0)
        mu += _panel_quad(reciprocal, zero.theta + delta, following - deltas[(i + 1) % k], zero.theta, following)

    _check_regularization(mu, poles, deltas)
    return mu


def _check_regularization(mu: float, poles: Sequence[_Pole], deltas: Sequence[float]) -> None:
    """ Recompute the cutoff integrals at shrinking cutoffs and extrapolate back to zero """
    cutoff_values = []
    for cutoff in RICHARDSON_CUTOFFS:
        removed = 0.0
        for pole, delta in zip(poles, deltas):
            radius = cutoff * min(1.0, delta / 0.02, pole.reach)
            removed += pole.integrate(-radius, 0.0) + pole.integrate(0.0, radius)
        cutoff_values.append(mu - removed)
    coarse = (10 * cutoff_values[1] - cutoff_values[0]) / 9
    fine = (10 * cutoff_values[2] - cutoff_values[1]) / 9
    logger.debug(f"{cutoff_values=} {coarse=} {fine=}")
    if abs(fine - mu) > RICHARDSON_TOL * max(1.0, abs(mu)):
        raise NonconvergentRegularization(f"cutoff extrapolation gives {fine}, windowed value is {mu}")


def invariants(field: CircleField, tol_zero: Optional[float] = None) -> HitchinInvariants:
    tol_zero = field.default_tol_zero if tol_zero is None else tol_zero
    zeros = find_zeros(field, tol_zero)
    logger.debug(f"zeros={[(z.theta, z.order) for z in zeros]}")
    mu = global_invariant(field, zeros)
    if not zeros:
        return HitchinInvariants(0, 1 if eval_field(field, 0.0) > 0 else -1, (), mu, tol_zero)
    zero_data = tuple((z.order, residue(field, z)) for z in zeros)
    return HitchinInvariants(len(zeros), 1, zero_data, mu, tol_zero)


def dihedral_images(inv: HitchinInvariants) -> List[Tuple[int, Tuple[ZeroRecord, ...]]]:
    """ The 2k relabelings (sigma, zero_data) of a listing; rotations first """
    data = inv.zero_data
    if not data:
        return [(inv.sigma, ())]
    rotations = [data[s:] + data[:s] for s in range(len(data))]
    reversed_data = data[::-1]
    reflections = [reversed_data[s:] + reversed_data[:s] for s in range(len(data))]
    return [(inv.sigma, r) for r in rotations] + [(-inv.sigma, r) for r in reflections]


def _exact_order(image: Tuple[int, Tuple[ZeroRecord, ...]]) -> tuple:
    sigma, data = image
    return (data, -sigma)


def canonical_key(inv: HitchinInvariants, tol_match: float = DEFAULT_TOL_MATCH) -> CanonicalKey:
    """
    The lexicographically least relabeling, orders compared first, then residues.
    Among relabelings that agree with the least one within tol_match, sigma = +1 wins.
    """
    if inv.k == 0:
        return CanonicalKey(0, inv.mu, (), inv.sigma)
    images = sorted(dihedral_images(inv), key=_exact_order)
    best = images[0]
    for sigma, data in images:
        if sigma == 1 and compare_records(data, best[1], tol_match) == Closeness.Match:
            best = (sigma, data)
            break
    return CanonicalKey(inv.k, inv.mu, best[1], best[0])


def equivalent_invariants(a: HitchinInvariants, b: HitchinInvariants, tol_match: float = DEFAULT_TOL_MATCH) -> bool:
    if a.k != b.k:
        return False
    mu = compare_values(a.mu, b.mu, tol_match)
    near = False
    for sigma, data in dihedral_images(b):
        if sigma != a.sigma:
            continue
        verdict = _worst(mu, compare_records(a.zero_data, data, tol_match))
        logger.debug(f"{sigma=} {verdict=}")
        if verdict == Closeness.Match:
            return True
        near |= verdict == Closeness.Near
    if near:
        raise AmbiguousMatch(f"invariants agree only within {NEAR_FACTOR:g} x tol_match={tol_match}")
    return False


def _interval_fn(field: IntervalField) -> DerivativeFn:
    return lambda x, depth: field.derivatives(x, depth)[:, 0]


def interval_invariants(field: IntervalField, tol_zero: Optional[float] = None) -> IntervalInvariants:
    zeros = find_interval_zeros(field, tol_zero)
    a, b = field.domain
    if not zeros or zeros[0].theta != a or zeros[-1].theta != b:
        raise EndpointConstraintViolated(f"the field must vanish at both endpoints of [{a:g}, {b:g}]")
    deriv_fn = _interval_fn(field)
    positions = [z.theta for z in zeros]
    lengths = np.diff(positions)
    deltas = np.minimum(WINDOW, lengths / 2)
    noise = None if field.is_polynomial else SAMPLED_NOISE
    poles = []
    for i, (z, reach) in enumerate(zip(zeros, _interval_reaches(field, zeros))):
        nearest = min(deltas[max(i - 1, 0) : i + 1])
        laurent = _laurent(deriv_fn, z.theta, z.order, _available_regular_terms(field.depth, z.order))
        poles.append(_Pole.build(field, laurent, float(nearest), reach, noise))
    records = tuple((z.order, p.laurent.c(-1)) for z, p in zip(zeros, poles))
    gaps = []
    for left, right, length, delta in zip(poles, poles[1:], lengths, deltas):
        length, delta = float(length), float(delta)
        gap = left.integrate(0.0, delta) + left.one_sided_finite_part(delta, length, 1)
        gap += right.integrate(-delta, 0.0) + right.one_sided_finite_part(delta, length, -1)
        center_a, center_b = left.laurent.center, right.laurent.center
        gap += _panel_quad(lambda t: 1.0 / field(t), center_a + delta, center_b - delta, center_a, center_b)
        gaps.append(gap)
    logger.debug(f"{records=} {gaps=}")
    return IntervalInvariants(records, tuple(gaps))


def compare_interval_invariants(a: IntervalInvariants, b: IntervalInvariants, tol_match: float) -> Closeness:
    if len(a.gaps) != len(b.gaps):
        return Closeness.Apart
    gaps = (compare_values(x, y, tol_match) for x, y in zip(a.gaps, b.gaps))
    return _worst(compare_records(a.records, b.records, tol_match), *gaps)


def equivalent_interval(
    a: IntervalField, b: IntervalField, allow_flip: bool = False, tol_match: float = DEFAULT_TOL_MATCH
) -> bool:
    ia, ib = interval_invariants(a), interval_invariants(b)
    candidates = [ib, ib.flipped()] if allow_flip else [ib]
    verdicts = [compare_interval_invariants(ia, candidate, tol_match) for candidate in candidates]
    logger.debug(f"{verdicts=}")
    if Closeness.Match in verdicts:
        return True
    if Closeness.Near in verdicts:
        raise AmbiguousMatch(f"interval invariants agree only within {NEAR_FACTOR:g} x tol_match={tol_match}")
    return False


def germ_invariants(field: IntervalField, at: float = 0.0, tol_zero: Optional[float] = None) -> GermInvariants:
    """ Order and residue of the germ of an interval field at a zero """
    tol_zero = 1e-9 if tol_zero is None else tol_zero
    deriv_fn = _interval_fn(field)
    max_order = field.depth if field.depth is not None else 12
    order, _ = classify_point(deriv_fn, at, tol_zero * max(1.0, field.sup_norm()), max_order)
    if order == 0:
        raise NotAZero(f"the field does not vanish at {at}")
    return GermInvariants(order, _laurent(deriv_fn, at, order, -1).c(-1))


def equivalent_germs(a: GermInvariants, b: GermInvariants, tol_match: float = DEFAULT_TOL_MATCH) -> bool:
    if a.order != b.order:
        return False
    if (verdict := compare_values(a.residue, b.residue, tol_match)) == Closeness.Near:
        raise AmbiguousMatch(f"germ residues {a.residue} and {b.residue} agree only within {NEAR_FACTOR:g} x tol")
    return verdict == Closeness.Match
