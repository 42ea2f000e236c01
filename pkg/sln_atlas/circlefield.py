import abc
import logging
from dataclasses import dataclass
from enum import Enum, auto
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial, chebyshev
from numpy.polynomial import polynomial as P
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import series

logger = logging.getLogger("sln_atlas")

TWO_PI = 2 * np.pi

CHECK_GRID = 1024
DIFFEO_GRID = 4096
SAMPLED_GRID = 4096

DEFAULT_SAMPLED_DEPTH = 6
MIN_SAMPLED_DEPTH = 4
PUSHFORWARD_DEPTH = 8

EXACT_TOL_ZERO = 1e-9
SAMPLED_TOL_ZERO = 1e-6

RESOLUTION_LIMIT = 1e-7
_IDENTICAL = 1e-9
_CIRCLE_BAND = 1e-2
_CLUSTER_RADIUS = 1e-3
_MAX_EXACT_ORDER = 12
_NEWTON_ITERATIONS = 60
_NEAR_GLUE = 1e-3

# (points, depth) -> array of shape (depth + 1, len(points)) holding f, f', ..., f^(depth)
Sampler = Callable[[np.ndarray, int], np.ndarray]
# (point, depth) -> f, f', ..., f^(depth) at a single point
DerivativeFn = Callable[[float, int], np.ndarray]


class DerivDepthExceeded(ValueError):
    pass


class ZeroIsolationFailure(ValueError):
    pass


class IdenticallyZero(ValueError):
    pass


class NotDiffeomorphism(ValueError):
    pass


class EndpointConstraintViolated(ValueError):
    pass


@dataclass(frozen=True)
class TrigPoly:
    """ a0 + sum_j (a_j cos(j theta) + b_j sin(j theta)) """

    a0: float = 0.0
    cos_coeffs: Tuple[float, ...] = ()
    sin_coeffs: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if len(self.cos_coeffs) != len(self.sin_coeffs):
            raise ValueError(
                f"cos and sin coefficient lists differ in length ({len(self.cos_coeffs)} != {len(self.sin_coeffs)})"
            )
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "cos_coeffs", tuple(float(c) for c in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(c) for c in self.sin_coeffs))
        if not all(np.isfinite([self.a0, *self.cos_coeffs, *self.sin_coeffs])):
            raise ValueError("trigonometric coefficients must be finite")

    @classmethod
    def constant(cls, value: float) -> "TrigPoly":
        return cls(value)

    @classmethod
    def from_terms(cls, a0: float = 0.0, cos: Sequence[float] = (), sin: Sequence[float] = ()) -> "TrigPoly":
        """ Pads the shorter coefficient list with zeros """
        size = max(len(cos), len(sin))
        return cls(a0, tuple(cos) + (0.0,) * (size - len(cos)), tuple(sin) + (0.0,) * (size - len(sin)))

    @property
    def degree(self) -> int:
        for j in range(len(self.cos_coeffs), 0, -1):
            if self.cos_coeffs[j - 1] != 0.0 or self.sin_coeffs[j - 1] != 0.0:
                return j
        return 0

    def is_zero(self) -> bool:
        return self.a0 == 0.0 and self.degree == 0

    def derivatives(self, theta: np.ndarray, depth: int) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        size = self.degree
        out = np.zeros((depth + 1, theta.size))
        out[0] = self.a0
        if size == 0:
            return out
        k = np.arange(1, size + 1, dtype=float)
        a = np.asarray(self.cos_coeffs[:size])
        b = np.asarray(self.sin_coeffs[:size])
        phase = np.outer(theta, k)
        for j in range(depth + 1):
            shifted = phase + j * np.pi / 2
            weight = k ** j
            out[j] += np.cos(shifted) @ (a * weight) + np.sin(shifted) @ (b * weight)
        return out

    def reflected(self) -> "TrigPoly":
        """ Coefficients of phi -> -f(-phi) """
        return TrigPoly(-self.a0, tuple(-c for c in self.cos_coeffs), self.sin_coeffs)

    def unit_circle_coefficients(self) -> np.ndarray:
        """ z^N f(theta) with z = exp(i theta), as ascending coefficients of a degree-2N polynomial """
        size = self.degree
        coeffs = np.zeros(2 * size + 1, dtype=complex)
        coeffs[size] = self.a0
        for j in range(1, size + 1):
            a, b = self.cos_coeffs[j - 1], self.sin_coeffs[j - 1]
            coeffs[size + j] = (a - 1j * b) / 2
            coeffs[size - j] = (a + 1j * b) / 2
        return coeffs


class CircleField(abc.ABC):
    """ An analytic vector field f(theta) d/dtheta on the circle """

    depth: Optional[int] = None

    @abc.abstractmethod
    def _derivatives(self, theta: np.ndarray, depth: int) -> np.ndarray:
        ...

    @property
    @abc.abstractmethod
    def is_exact(self) -> bool:
        ...

    @property
    def default_tol_zero(self) -> float:
        return EXACT_TOL_ZERO if self.is_exact else SAMPLED_TOL_ZERO

    def derivatives(self, theta: np.ndarray, depth: int = 0) -> np.ndarray:
        if self.depth is not None and depth > self.depth:
            raise DerivDepthExceeded(f"derivative {depth} requested, field only provides {self.depth}")
        return self._derivatives(np.atleast_1d(np.asarray(theta, dtype=float)), depth)

    def __call__(self, theta):
        values = self.derivatives(theta, 0)[0]
        return float(values[0]) if np.ndim(theta) == 0 else values

    def sup_norm(self) -> float:
        grid = np.linspace(0.0, TWO_PI, CHECK_GRID, endpoint=False)
        return float(np.max(np.abs(self(grid))))

    def is_identically_zero(self, tol_zero: Optional[float] = None) -> bool:
        return self.sup_norm() <= (self.default_tol_zero if tol_zero is None else tol_zero)


@dataclass(frozen=True)
class ExactField(CircleField):
    poly: TrigPoly

    @property
    def is_exact(self) -> bool:
        return True

    def _derivatives(self, theta: np.ndarray, depth: int) -> np.ndarray:
        return self.poly.derivatives(theta, depth)

    def is_identically_zero(self, tol_zero: Optional[float] = None) -> bool:
        return self.poly.is_zero()


@dataclass(frozen=True)
class SampledField(CircleField):
    sampler: Sampler
    depth: int = DEFAULT_SAMPLED_DEPTH
    label: str = "sampled"

    def __post_init__(self) -> None:
        if self.depth < MIN_SAMPLED_DEPTH:
            raise ValueError(f"sampled fields need derivative depth >= {MIN_SAMPLED_DEPTH}, got {self.depth}")

    @property
    def is_exact(self) -> bool:
        return False

    def _derivatives(self, theta: np.ndarray, depth: int) -> np.ndarray:
        return np.asarray(self.sampler(theta, depth), dtype=float)


def trig_field(a0: float = 0.0, cos: Sequence[float] = (), sin: Sequence[float] = ()) -> ExactField:
    return ExactField(TrigPoly.from_terms(a0, cos, sin))


@dataclass(frozen=True)
class ZeroDatum:
    theta: float
    order: int
    taylor: Tuple[float, ...]


class InvolutionKind(Enum):
    Identity = auto()
    ComponentSwap = auto()
    FreeRotation = auto()
    Reflection = auto()


@dataclass(frozen=True)
class Involution:
    kind: InvolutionKind
    axis: float = 0.0

    @classmethod
    def identity(cls) -> "Involution":
        return cls(InvolutionKind.Identity)

    @classmethod
    def component_swap(cls) -> "Involution":
        return cls(InvolutionKind.ComponentSwap)

    @classmethod
    def free_rotation(cls) -> "Involution":
        return cls(InvolutionKind.FreeRotation)

    @classmethod
    def reflection(cls, axis: float = 0.0) -> "Involution":
        return cls(InvolutionKind.Reflection, float(axis))

    def fixed_points(self) -> Optional[Tuple[float, ...]]:
        """ None when every point is fixed """
        if self.kind == InvolutionKind.Identity:
            return None
        if self.kind == InvolutionKind.Reflection:
            first = float(np.mod(self.axis, TWO_PI))
            return tuple(sorted((first, float(np.mod(first + np.pi, TWO_PI)))))
        return ()


@dataclass(frozen=True)
class CircleDiffeo:
    """ Lift h(theta) = theta + shift + p(theta) of an orientation-preserving circle map """

    displacement: TrigPoly = TrigPoly()
    shift: float = 0.0
    inverse_map: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @classmethod
    def identity(cls) -> "CircleDiffeo":
        return cls()

    @classmethod
    def rotation(cls, angle: float) -> "CircleDiffeo":
        return cls(shift=angle)

    def derivatives(self, theta: np.ndarray, depth: int) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        out = self.displacement.derivatives(theta, depth)
        out[0] += theta + self.shift
        if depth >= 1:
            out[1] += 1.0
        return out

    def __call__(self, theta):
        values = self.derivatives(theta, 0)[0]
        return float(values[0]) if np.ndim(theta) == 0 else values

    def min_derivative(self) -> float:
        grid = np.linspace(0.0, TWO_PI, DIFFEO_GRID, endpoint=False)
        return float(np.min(self.derivatives(grid, 1)[1]))

    @cached_property
    def _inverse_table(self) -> Tuple[np.ndarray, np.ndarray]:
        """ h on a closed grid of [0, 2 pi], increasing from h(0) to h(0) + 2 pi """
        grid = np.linspace(0.0, TWO_PI, DIFFEO_GRID + 1)
        return self(grid), grid

    def inverse(self, phi: np.ndarray) -> np.ndarray:
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        if self.inverse_map is not None:
            return np.asarray(self.inverse_map(phi), dtype=float)
        bound = abs(self.displacement.a0) + sum(map(abs, self.displacement.cos_coeffs))
        bound += sum(map(abs, self.displacement.sin_coeffs))
        lo = phi - self.shift - bound
        hi = phi - self.shift + bound
        images, grid = self._inverse_table
        turns = np.floor((phi - images[0]) / TWO_PI)
        u = np.interp(phi - TWO_PI * turns, images, grid) + TWO_PI * turns
        # safeguarded Newton: bisect whenever the Newton step leaves the bracket
        for _ in range(200):
            values = self.derivatives(u, 1)
            residual = values[0] - phi
            hi = np.where(residual > 0, u, hi)
            lo = np.where(residual <= 0, u, lo)
            newton = u - residual / values[1]
            inside = (newton > lo) & (newton < hi)
            step = np.where(inside, newton, (lo + hi) / 2) - u
            u = u + step
            if np.max(np.abs(step)) < 1e-14 or np.max(hi - lo) < 1e-12:
                break
        return u


def eval_field(field: CircleField, theta: float, deriv: int = 0) -> float:
    return float(field.derivatives(theta, deriv)[deriv, 0])


def _circle_derivative_fn(field: CircleField) -> DerivativeFn:
    return lambda x, depth: field.derivatives(x, depth)[:, 0]


def classify_point(deriv_fn: DerivativeFn, x: float, threshold: float, max_order: int) -> Tuple[int, np.ndarray]:
    """ Order of vanishing at x (0 when x is not a zero) and the Taylor coefficients used """
    taylor = series.taylor_from_derivatives(deriv_fn(x, max_order))
    for j, coeff in enumerate(taylor):
        if abs(coeff) >= threshold:
            return j, taylor
    raise ZeroIsolationFailure(f"all {max_order + 1} Taylor coefficients vanish at {x}: zero is not isolated")


def _newton(deriv_fn: DerivativeFn, x0: float, order: int, max_step: float) -> Optional[float]:
    """ Newton on the (order - 1)-th derivative, which has a simple zero at an order-m zero """
    x = x0
    for _ in range(_NEWTON_ITERATIONS):
        values = deriv_fn(x, order)
        if values[order] == 0.0:
            return None
        step = values[order - 1] / values[order]
        x -= step
        if not np.isfinite(x) or abs(x - x0) > max_step:
            return None
        if abs(step) <= 1e-15 * max(1.0, abs(x)):
            break
    return x


def _resolve_zero(
    deriv_fn: DerivativeFn, x0: float, threshold: float, max_order: int, max_step: float, orders: Sequence[int]
) -> Optional[Tuple[float, int, np.ndarray]]:
    for order in orders:
        x = _newton(deriv_fn, x0, order, max_step)
        if x is None:
            continue
        found, taylor = classify_point(deriv_fn, x, threshold, max_order)
        if found == order:
            return x, order, taylor
    return None


def _cluster(points: np.ndarray, radius: float, period: Optional[float] = None) -> List[np.ndarray]:
    """ Groups sorted points whose consecutive gaps are below radius; wraps around when periodic """
    if points.size == 0:
        return []
    groups = [[points[0]]]
    for previous, current in zip(points[:-1], points[1:]):
        if current - previous < radius:
            groups[-1].append(current)
        else:
            groups.append([current])
    if period is not None and len(groups) > 1 and points[0] + period - points[-1] < radius:
        groups[0] = [p - period for p in groups.pop()] + groups[0]
    return [np.asarray(g) for g in groups]


def _resolve_cluster(
    deriv_fn: DerivativeFn, cluster: np.ndarray, threshold: float, max_order: int, max_step: float
) -> List[Tuple[float, int, np.ndarray]]:
    distinct: List[Tuple[float, int, np.ndarray]] = []
    if cluster.size > 1:
        # distinct simple zeros that merely sit close together
        singles = [_resolve_zero(deriv_fn, x, threshold, max_order, max_step, (1,)) for x in cluster]
        for single in sorted((s for s in singles if s is not None), key=lambda s: s[0]):
            if not distinct or single[0] - distinct[-1][0] > _IDENTICAL:
                distinct.append(single)
        if len(distinct) >= 2 and min(b[0] - a[0] for a, b in zip(distinct, distinct[1:])) >= RESOLUTION_LIMIT:
            return distinct
    # s companion roots in one cluster usually come from a single zero of order s
    guess = min(cluster.size, max_order)
    orders = [*range(guess, max_order + 1), *range(1, guess)]
    resolved = _resolve_zero(deriv_fn, float(np.mean(cluster)), threshold, max_order, max_step, orders)
    if resolved is not None:
        return [resolved]
    return distinct


def _finalize(
    found: List[Tuple[float, int, np.ndarray]], period: Optional[float], depth: Optional[int]
) -> List[ZeroDatum]:
    if period is not None:
        found = [(float(np.mod(x, period)), m, taylor) for x, m, taylor in found]
        found = [(0.0 if period - x < 1e-12 else x, m, taylor) for x, m, taylor in found]
    found.sort(key=lambda z: z[0])
    kept: List[Tuple[float, int, np.ndarray]] = []
    for zero in found:
        if kept and zero[0] - kept[-1][0] < RESOLUTION_LIMIT:
            if zero[0] - kept[-1][0] <= _IDENTICAL and zero[1] == kept[-1][1]:
                continue
            raise ZeroIsolationFailure(f"zeros at {kept[-1][0]} and {zero[0]} are closer than the resolution limit")
        kept.append(zero)
    if period is not None and len(kept) > 1 and kept[0][0] + period - kept[-1][0] < RESOLUTION_LIMIT:
        if kept[0][0] + period - kept[-1][0] <= _IDENTICAL and kept[0][1] == kept[-1][1]:
            kept.pop()
        else:
            raise ZeroIsolationFailure(f"zeros at {kept[-1][0]} and {kept[0][0]} are closer than the resolution limit")
    zeros = []
    for x, m, taylor in kept:
        size = m + 4 if depth is None else min(m + 4, depth + 1)
        zeros.append(ZeroDatum(x, m, tuple(float(c) for c in taylor[:size])))
    return zeros


def _zeros_exact(field: ExactField, tol_zero: float) -> List[ZeroDatum]:
    poly = field.poly
    if poly.degree == 0:
        return []
    roots = P.polyroots(poly.unit_circle_coefficients())
    near = roots[np.abs(np.abs(roots) - 1.0) < _CIRCLE_BAND]
    angles = np.sort(np.mod(np.angle(near), TWO_PI))
    logger.debug(f"{poly.degree=} candidates={angles.size}")
    deriv_fn = _circle_derivative_fn(field)
    threshold = tol_zero * max(1.0, field.sup_norm())
    found: List[Tuple[float, int, np.ndarray]] = []
    for cluster in _cluster(angles, _CLUSTER_RADIUS, TWO_PI):
        found.extend(_resolve_cluster(deriv_fn, cluster, threshold, _MAX_EXACT_ORDER, 10 * _CLUSTER_RADIUS))
    return _finalize(found, TWO_PI, None)


def _grid_candidates(values: np.ndarray, grid: np.ndarray, scale: float, periodic: bool) -> List[Tuple[float, float]]:
    """ Brackets of sign changes, and grid points at small local minima of |f| (even-order zeros) """
    brackets: List[Tuple[float, float]] = []
    nxt = np.roll(values, -1) if periodic else values[1:]
    following = np.roll(grid, -1) if periodic else grid[1:]
    if periodic:
        following = following.copy()
        following[-1] += TWO_PI
    head = values if periodic else values[:-1]
    for i in np.nonzero(head * nxt < 0)[0]:
        brackets.append((grid[i], following[i]))
    magnitude = np.abs(values)
    before = np.roll(magnitude, 1) if periodic else np.concatenate(([np.inf], magnitude[:-1]))
    after = np.roll(magnitude, -1) if periodic else np.concatenate((magnitude[1:], [np.inf]))
    for i in np.nonzero((magnitude <= before) & (magnitude <= after) & (magnitude < 1e-2 * scale))[0]:
        brackets.append((grid[i], grid[i]))
    return brackets


def _refine_candidates(
    deriv_fn: DerivativeFn, brackets: List[Tuple[float, float]], threshold: float, max_order: int, max_step: float
) -> List[Tuple[float, int, np.ndarray]]:
    value = lambda x: float(deriv_fn(x, 0)[0])  # noqa: E731
    found = []
    for a, b in brackets:
        x0 = a if a == b else brentq(value, a, b, xtol=1e-15)
        resolved = _resolve_zero(deriv_fn, x0, threshold, max_order, max_step, range(1, max_order + 1))
        if resolved is not None:
            found.append(resolved)
    return found


def _zeros_sampled(field: CircleField, tol_zero: float) -> List[ZeroDatum]:
    grid = np.linspace(0.0, TWO_PI, SAMPLED_GRID, endpoint=False)
    values = field(grid)
    scale = max(1.0, float(np.max(np.abs(values))))
    brackets = _grid_candidates(values, grid, scale, periodic=True)
    logger.debug(f"sampled zero candidates={len(brackets)}")
    max_order = field.depth if field.depth is not None else _MAX_EXACT_ORDER
    found = _refine_candidates(
        _circle_derivative_fn(field), brackets, tol_zero * scale, max_order, 4 * TWO_PI / SAMPLED_GRID
    )
    return _finalize(found, TWO_PI, field.depth)


def find_zeros(field: CircleField, tol_zero: Optional[float] = None) -> List[ZeroDatum]:
    """ Zeros in [0, 2 pi) in increasing order, each with its exact order of vanishing """
    tol_zero = field.default_tol_zero if tol_zero is None else tol_zero
    if field.is_identically_zero(tol_zero):
        raise IdenticallyZero("the field vanishes identically")
    if isinstance(field, ExactField):
        return _zeros_exact(field, tol_zero)
    return _zeros_sampled(field, tol_zero)


def flow(field: CircleField, theta0: float, t: float) -> float:
    if t == 0:
        return float(np.mod(theta0, TWO_PI))
    solution = solve_ivp(
        lambda _, y: field.derivatives(y[0], 0)[0], (0.0, t), [theta0], method="DOP853", rtol=1e-10, atol=1e-12
    )
    if not solution.success:
        logger.warning(f"flow integration stopped early: {solution.message}")
    return float(np.mod(solution.y[0, -1], TWO_PI))


def pushforward(field: CircleField, diffeo: CircleDiffeo) -> SampledField:
    """ h_* X, evaluated as phi -> h'(h^-1(phi)) f(h^-1(phi)) """
    if (lowest := diffeo.min_derivative()) <= 0:
        raise NotDiffeomorphism(f"h' reaches {lowest} <= 0")
    depth = field.depth if field.depth is not None else PUSHFORWARD_DEPTH

    def sampler(phi: np.ndarray, d: int) -> np.ndarray:
        u = diffeo.inverse(phi)
        if d == 0:
            return (diffeo.derivatives(u, 1)[1] * field.derivatives(u, 0)[0])[None, :]
        h_taylor = series.taylor_from_derivatives(diffeo.derivatives(u, d + 1))
        h_taylor[0] = 0.0
        inverse_series = series.reversion(h_taylor[: d + 1], d)
        # Taylor coefficients of h' about u: h^(j+1)(u) / j!
        h_prime = series.taylor_from_derivatives(diffeo.derivatives(u, d + 1)[1:])
        product = series.mul(h_prime, series.taylor_from_derivatives(field.derivatives(u, d)), d)
        return series.derivatives_from_taylor(series.compose(product, inverse_series, d))

    return SampledField(sampler, depth, label="pushforward")


def reflect(field: CircleField) -> CircleField:
    """ The push-forward by theta -> -theta, i.e. phi -> -f(-phi) """
    if isinstance(field, ExactField):
        return ExactField(field.poly.reflected())

    def sampler(phi: np.ndarray, d: int) -> np.ndarray:
        signs = np.array([-((-1.0) ** j) for j in range(d + 1)])[:, None]
        return signs * field.derivatives(-phi, d)

    return SampledField(sampler, field.depth or PUSHFORWARD_DEPTH, label="reflected")


def validate_involution(field: CircleField, tau: Involution, tol: float = EXACT_TOL_ZERO) -> bool:
    """ True iff tau_* X = X on the check grid """
    if tau.kind in (InvolutionKind.Identity, InvolutionKind.ComponentSwap):
        return True
    grid = np.linspace(0.0, TWO_PI, CHECK_GRID, endpoint=False)
    values = field(grid)
    threshold = tol * max(1.0, float(np.max(np.abs(values))))
    if tau.kind == InvolutionKind.FreeRotation:
        defect = field(grid + np.pi) - values
    else:
        defect = field(2 * tau.axis - grid) + values
    logger.debug(f"{tau=} defect={float(np.max(np.abs(defect)))}")
    return bool(np.max(np.abs(defect)) <= threshold)


ALLOWED_DOMAINS = ((-1.0, 1.0), (-1.0, 0.0))


@dataclass(frozen=True)
class IntervalField:
    """ A vector field X(t) d/dt on [-1, 1] or [-1, 0], polynomial or sampled """

    domain: Tuple[float, float] = (-1.0, 1.0)
    coeffs: Optional[Tuple[float, ...]] = None
    sampler: Optional[Sampler] = None
    depth: Optional[int] = None

    def __post_init__(self) -> None:
        domain = (float(self.domain[0]), float(self.domain[1]))
        if domain not in ALLOWED_DOMAINS:
            raise ValueError(f"interval fields live on [-1,1] or [-1,0], not {list(domain)}")
        object.__setattr__(self, "domain", domain)
        if (self.coeffs is None) == (self.sampler is None):
            raise ValueError("an interval field is either polynomial or sampled")
        if self.coeffs is not None:
            coeffs = tuple(float(c) for c in self.coeffs)
            if not coeffs or not all(np.isfinite(coeffs)):
                raise ValueError("polynomial coefficients must be a nonempty list of finite reals")
            object.__setattr__(self, "coeffs", coeffs)
        elif self.depth is not None and self.depth < MIN_SAMPLED_DEPTH:
            raise ValueError(f"sampled fields need derivative depth >= {MIN_SAMPLED_DEPTH}, got {self.depth}")

    @classmethod
    def polynomial(cls, coeffs: Sequence[float], domain: Tuple[float, float] = (-1.0, 1.0)) -> "IntervalField":
        return cls(domain, tuple(coeffs))

    @property
    def is_polynomial(self) -> bool:
        return self.coeffs is not None

    @property
    def as_polynomial(self) -> Polynomial:
        if self.coeffs is None:
            raise ValueError("sampled interval field has no polynomial form")
        return Polynomial(self.coeffs)

    def derivatives(self, t: np.ndarray, depth: int = 0) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.coeffs is None:
            if self.depth is not None and depth > self.depth:
                raise DerivDepthExceeded(f"derivative {depth} requested, field only provides {self.depth}")
            return np.asarray(self.sampler(t, depth), dtype=float)  # type: ignore
        poly = self.as_polynomial
        return np.stack([poly.deriv(j)(t) if j else poly(t) for j in range(depth + 1)])

    def __call__(self, t):
        values = self.derivatives(t, 0)[0]
        return float(values[0]) if np.ndim(t) == 0 else values

    @property
    def endpoint_data(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        """ (value, first derivative) at the left and right endpoints """
        data = self.derivatives(np.asarray(self.domain), 1)
        return (float(data[0, 0]), float(data[1, 0])), (float(data[0, 1]), float(data[1, 1]))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self(np.linspace(*self.domain, CHECK_GRID)))))

    def reflected(self) -> "IntervalField":
        """ The push-forward by t -> -t: s -> -X(-s) """
        if self.domain != (-1.0, 1.0):
            raise ValueError("only fields on [-1,1] can be reflected in place")
        if self.coeffs is not None:
            return IntervalField.polynomial([-c * (-1.0) ** k for k, c in enumerate(self.coeffs)])
        source = self

        def sampler(s: np.ndarray, d: int) -> np.ndarray:
            signs = np.array([-((-1.0) ** j) for j in range(d + 1)])[:, None]
            return signs * source.derivatives(-s, d)

        return IntervalField(sampler=sampler, depth=self.depth)

    def odd_extension(self) -> "IntervalField":
        """ Extends a field on [-1,0] to [-1,1] by X(t) = -X(-t) for t > 0 """
        if self.domain != (-1.0, 0.0):
            raise ValueError("odd extension starts from a field on [-1,0]")
        if self.coeffs is not None:
            scale = max(map(abs, self.coeffs)) or 1.0
            even = [k for k, c in enumerate(self.coeffs) if k % 2 == 0 and abs(c) > 1e-14 * scale]
            if not even:
                return IntervalField.polynomial(self.coeffs)
            logger.warning(f"odd extension is only C^{even[0] - 1} at 0 (even coefficient of degree {even[0]})")
        source = self

        def sampler(t: np.ndarray, d: int) -> np.ndarray:
            left = t <= 0
            out = np.empty((d + 1, t.size))
            if left.any():
                out[:, left] = source.derivatives(t[left], d)
            if (~left).any():
                signs = np.array([(-1.0) ** (j + 1) for j in range(d + 1)])[:, None]
                out[:, ~left] = signs * source.derivatives(-t[~left], d)
            return out

        return IntervalField(sampler=sampler, depth=self.depth)


def _interval_derivative_fn(field: IntervalField) -> DerivativeFn:
    return lambda x, depth: field.derivatives(x, depth)[:, 0]


def find_interval_zeros(field: IntervalField, tol_zero: Optional[float] = None) -> List[ZeroDatum]:
    """ Zeros of an interval field in its closed domain, in increasing order """
    tol_zero = (EXACT_TOL_ZERO if field.is_polynomial else SAMPLED_TOL_ZERO) if tol_zero is None else tol_zero
    a, b = field.domain
    scale = max(1.0, field.sup_norm())
    if scale <= tol_zero or (field.is_polynomial and not any(field.coeffs)):  # type: ignore
        raise IdenticallyZero("the interval field vanishes identically")
    threshold = tol_zero * scale
    deriv_fn = _interval_derivative_fn(field)
    max_order = field.depth if field.depth is not None else _MAX_EXACT_ORDER
    found: List[Tuple[float, int, np.ndarray]] = []
    if field.is_polynomial:
        roots = field.as_polynomial.roots() if len(field.coeffs) > 1 else np.array([])  # type: ignore
        real = np.sort(np.real(roots[np.abs(np.imag(roots)) < _CIRCLE_BAND]))
        real = real[(real > a - _CLUSTER_RADIUS) & (real < b + _CLUSTER_RADIUS)]
        for cluster in _cluster(real, _CLUSTER_RADIUS):
            found.extend(_resolve_cluster(deriv_fn, cluster, threshold, max_order, 10 * _CLUSTER_RADIUS))
    else:
        grid = np.linspace(a, b, SAMPLED_GRID + 1)
        brackets = _grid_candidates(field(grid), grid, scale, periodic=False)
        found.extend(_refine_candidates(deriv_fn, brackets, threshold, max_order, 4 * (b - a) / SAMPLED_GRID))
    # endpoints are classified in place, interior candidates that polish onto them are dropped
    interior = [z for z in found if a + _IDENTICAL < z[0] < b - _IDENTICAL]
    for endpoint in (a, b):
        order, taylor = classify_point(deriv_fn, endpoint, threshold, max_order)
        if order:
            interior.append((endpoint, order, taylor))
    return _finalize(interior, None, field.depth)


def interior_zero_span(field: IntervalField, tol_zero: Optional[float] = None) -> Optional[Tuple[float, float]]:
    """ (z_-, z_+): the least and greatest zeros in the open domain """
    a, b = field.domain
    inside = [z.theta for z in find_interval_zeros(field, tol_zero) if a < z.theta < b]
    if not inside:
        return None
    return min(inside), max(inside)


def _check_doubling_endpoints(field: IntervalField, require_unit_derivatives: bool, tol: float) -> None:
    if field.domain != (-1.0, 1.0):
        raise EndpointConstraintViolated("doubling needs a field on [-1,1]")
    scale = max(1.0, field.sup_norm())
    (left_value, left_slope), (right_value, right_slope) = field.endpoint_data
    if abs(left_value) > tol * scale or abs(right_value) > tol * scale:
        raise EndpointConstraintViolated(f"X(-1) = {left_value}, X(1) = {right_value}; both must vanish")
    if require_unit_derivatives and (abs(left_slope - 1.0) > tol * scale or abs(right_slope - 1.0) > tol * scale):
        raise EndpointConstraintViolated(f"D_-1 X = {left_slope}, D_1 X = {right_slope}; both must equal 1")


def _double_polynomial(field: IntervalField) -> ExactField:
    # X = (1 - t^2) P, so X(-cos theta) / sin theta = sin theta P(-cos theta)
    quotient, _ = divmod(field.as_polynomial, Polynomial([1.0, 0.0, -1.0]))
    mirrored = [c * (-1.0) ** k for k, c in enumerate(quotient.coef)]
    cheb = chebyshev.poly2cheb(mirrored)
    sines = np.zeros(len(cheb) + 1)
    for j, c in enumerate(cheb):
        if j == 0:
            sines[1] += c
            continue
        sines[j + 1] += c / 2
        if j >= 2:
            sines[j - 1] -= c / 2
    return ExactField(TrigPoly(0.0, (0.0,) * (len(sines) - 1), tuple(sines[1:])))


def _double_sampled(field: IntervalField) -> SampledField:
    depth = PUSHFORWARD_DEPTH if field.depth is None else field.depth - 1
    glue_order = depth + 6 if field.depth is None else field.depth - 1

    def regular(theta: np.ndarray, d: int) -> np.ndarray:
        t0 = -np.cos(theta)
        inner = -series.cos_series(theta, d)
        numerator = series.compose(series.taylor_from_derivatives(field.derivatives(t0, d)), inner, d)
        return series.mul(numerator, series.reciprocal(series.sin_series(theta, d), d), d)

    def near_glue(theta: np.ndarray, d: int) -> np.ndarray:
        # expand about the glued point (0 or pi) where both series vanish, then re-centre
        anchor = np.round(theta / np.pi) * np.pi
        order = max(glue_order, d)
        inner = -series.cos_series(anchor, order + 1)
        x_taylor = series.taylor_from_derivatives(field.derivatives(-np.cos(anchor), order + 1))
        x_taylor[0] = 0.0
        numerator = series.compose(x_taylor, inner, order + 1)
        numerator[1] = 0.0
        sine = series.sin_series(anchor, order + 1)
        sine[0] = 0.0
        at_anchor = series.divide(numerator, sine, valuation=1, order=order)
        return series.shift(at_anchor, theta - anchor, d)

    def sampler(theta: np.ndarray, d: int) -> np.ndarray:
        out = np.empty((d + 1, theta.size))
        near = np.abs(np.sin(theta)) < _NEAR_GLUE
        if (~near).any():
            out[:, ~near] = regular(theta[~near], d)
        if near.any():
            out[:, near] = near_glue(theta[near], d)
        return series.derivatives_from_taylor(out)

    return SampledField(sampler, depth, label="doubled")


def double_interval(
    field: IntervalField, require_unit_derivatives: bool = True, tol: float = EXACT_TOL_ZERO
) -> CircleField:
    """
    The circle field obtained by doubling [-1,1] along t = -cos(theta):
    f(theta) = X(-cos theta) / sin theta, odd about theta = 0 and analytic
    across the glued endpoints 0 and pi.
    """
    _check_doubling_endpoints(field, require_unit_derivatives, tol if field.is_polynomial else SAMPLED_TOL_ZERO)
    if field.is_polynomial:
        return _double_polynomial(field)
    return _double_sampled(field)
