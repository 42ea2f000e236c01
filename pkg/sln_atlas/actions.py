"""
SL(n,R)-actions on closed n-manifolds.

An action is transitive on a homogeneous space, induced from a circle
(type I: a field on the circle together with an involution) or glued from
linear patches along an interval field (type II: S^n or RP^n with fixed points).
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum, auto
from typing import List, Optional, Tuple, Union

from .circlefield import (
    CircleField,
    EndpointConstraintViolated,
    IdenticallyZero,
    IntervalField,
    Involution,
    InvolutionKind,
    double_interval,
    find_interval_zeros,
    find_zeros,
    trig_field,
    validate_involution,
)
from .invariants import (
    DEFAULT_TOL_MATCH,
    Closeness,
    compare_values,
    equivalent_invariants,
    invariants,
)

logger = logging.getLogger("sln_atlas")

MIN_DIMENSION = 3
ENDPOINT_TOL = 1e-9

# X(t) = -t + 1.5 t^3 - 0.5 t^5: zeros -1, 0, 1 with D_0 X = -1 and D_{+-1} X = 1
STANDARD_SPHERE_COEFFS = (0.0, -1.0, 0.0, 1.5, 0.0, -0.5)


class DimensionTooSmall(ValueError):
    pass


class InvalidActionData(ValueError):
    pass


class OrbitTag(Enum):
    Point = auto()
    Sphere = auto()
    ProjSpace = auto()
    PuncturedRn = auto()
    Flag3 = auto()
    Gr24 = auto()
    FiniteCoverOf = auto()


@dataclass(frozen=True)
class OrbitType:
    tag: OrbitTag
    lattice: Optional[float] = None  # generator of the scalar lattice acting on R^n - 0, None when trivial
    with_sign: bool = False  # the lattice also contains -1
    base: Optional["OrbitType"] = None

    @classmethod
    def punctured(cls, lattice: Optional[float] = None, with_sign: bool = False) -> "OrbitType":
        if lattice is None:
            return cls(OrbitTag.PuncturedRn, with_sign=with_sign)
        if not math.isfinite(lattice) or lattice <= 0 or lattice == 1:
            raise InvalidActionData(f"lattice generator must be a positive real other than 1, got {lattice}")
        return cls(OrbitTag.PuncturedRn, max(lattice, 1 / lattice), with_sign)

    @classmethod
    def cover_of(cls, base: "OrbitType") -> "OrbitType":
        return cls(OrbitTag.FiniteCoverOf, base=base)

    @property
    def label(self) -> str:
        if self.tag == OrbitTag.PuncturedRn:
            if self.lattice is None:
                return "R^n - 0"
            return f"(R^n - 0)/<{self.lattice:g}{', -1' if self.with_sign else ''}>"
        if self.tag == OrbitTag.FiniteCoverOf:
            return f"finite cover of {self.base.label}"  # type: ignore
        return {
            OrbitTag.Point: "point",
            OrbitTag.Sphere: "S^{n-1}",
            OrbitTag.ProjSpace: "RP^{n-1}",
            OrbitTag.Flag3: "Fl(R^3)",
            OrbitTag.Gr24: "Gr_2(R^4)",
        }[self.tag]

    @property
    def is_closed(self) -> bool:
        """ Orbits that are closed n-manifolds, i.e. can carry a transitive action on M """
        if self.tag == OrbitTag.FiniteCoverOf:
            return self.base is not None and self.base.is_closed
        if self.tag == OrbitTag.PuncturedRn:
            return self.lattice is not None
        return self.tag in (OrbitTag.Flag3, OrbitTag.Gr24)


@dataclass(frozen=True)
class TransitiveAction:
    n: int
    orbit: OrbitType


@dataclass(frozen=True)
class TypeIAction:
    n: int
    components: int
    field: CircleField
    tau: Involution


@dataclass(frozen=True)
class TypeIIAction:
    n: int
    field: IntervalField
    quotient: bool


Action = Union[TransitiveAction, TypeIAction, TypeIIAction]


@dataclass(frozen=True)
class ActionSummary:
    type: str
    case: Optional[int]
    manifold: str
    fixed_points: int
    is_hopf: bool
    admits_projective: bool


TYPE_I_LABELS = {
    1: "S^{n-1} x S^1",
    2: "RP^{n-1} x S^1",
    3: "flat circle bundle with Z_2 monodromy over RP^{n-1}",
    4: "blow-up of RP^n at a point",
}


def _check_dimension(n: int) -> None:
    if n < MIN_DIMENSION:
        raise DimensionTooSmall(f"actions of SL(n,R) are classified for n >= {MIN_DIMENSION}, got {n}")


def orbit_catalog(n: int) -> List[OrbitType]:
    _check_dimension(n)
    catalog = [
        OrbitType(OrbitTag.Point),
        OrbitType(OrbitTag.Sphere),
        OrbitType(OrbitTag.ProjSpace),
        OrbitType.punctured(),
    ]
    if n == 3:
        catalog += [OrbitType(OrbitTag.Flag3), OrbitType.cover_of(OrbitType(OrbitTag.Flag3))]
    if n == 4:
        catalog += [OrbitType(OrbitTag.Gr24), OrbitType.cover_of(OrbitType(OrbitTag.Gr24))]
    return catalog


def _exceptional_dimension(orbit: OrbitType) -> Optional[int]:
    if orbit.tag == OrbitTag.FiniteCoverOf and orbit.base is not None:
        return _exceptional_dimension(orbit.base)
    return {OrbitTag.Flag3: 3, OrbitTag.Gr24: 4}.get(orbit.tag)


def validate_transitive(a: TransitiveAction) -> None:
    _check_dimension(a.n)
    if not a.orbit.is_closed:
        raise InvalidActionData(f"{a.orbit.label} is not a closed manifold")
    if (needed := _exceptional_dimension(a.orbit)) is not None and needed != a.n:
        raise InvalidActionData(f"{a.orbit.label} only occurs for n = {needed}, got n = {a.n}")


def classify_type_I(a: TypeIAction) -> Tuple[int, str]:
    _check_dimension(a.n)
    if a.components not in (1, 2):
        raise InvalidActionData(f"the circle has 1 or 2 components, got {a.components}")
    if (a.components == 2) != (a.tau.kind == InvolutionKind.ComponentSwap):
        raise InvalidActionData("two components go together with the component swap involution")
    if not validate_involution(a.field, a.tau):
        raise InvalidActionData(f"the field is not invariant under {a.tau.kind.name}")
    case = {
        InvolutionKind.ComponentSwap: 1,
        InvolutionKind.Identity: 2,
        InvolutionKind.FreeRotation: 3,
        InvolutionKind.Reflection: 4,
    }[a.tau.kind]
    return case, TYPE_I_LABELS[case]


def _has_unit_slope(slope: float, scale: float) -> bool:
    return abs(slope - 1.0) <= ENDPOINT_TOL * scale


def _interior_zeros(field: IntervalField):
    a, b = field.domain
    return [z for z in find_interval_zeros(field) if a < z.theta < b]


def classify_type_II(a: TypeIIAction) -> Tuple[int, str]:
    """ (number of fixed points, manifold) """
    _check_dimension(a.n)
    field = a.field
    expected = (-1.0, 0.0) if a.quotient else (-1.0, 1.0)
    if field.domain != expected:
        raise InvalidActionData(f"{'projective' if a.quotient else 'sphere'} actions need a field on {list(expected)}")
    scale = max(1.0, field.sup_norm())
    (left, left_slope), (right, right_slope) = field.endpoint_data
    logger.debug(f"{left=} {left_slope=} {right=} {right_slope=}")
    if abs(left) > ENDPOINT_TOL * scale or abs(right) > ENDPOINT_TOL * scale:
        raise InvalidActionData(f"the field must vanish at both ends of {list(expected)}")
    if not _has_unit_slope(left_slope, scale):
        raise InvalidActionData(f"D_-1 X = {left_slope}, must be 1")
    if a.quotient:
        return 1, "RP^n"
    if not _has_unit_slope(right_slope, scale):
        raise InvalidActionData(f"D_1 X = {right_slope}, must be 1")
    if not _interior_zeros(field):
        raise InvalidActionData("the field needs at least one zero in (-1, 1)")
    return 2, "S^n"


def classify(a: Action) -> Tuple[Optional[int], str]:
    """ (case, manifold) for type I, (None, manifold) otherwise """
    if isinstance(a, TransitiveAction):
        validate_transitive(a)
        return None, a.orbit.label
    if isinstance(a, TypeIAction):
        return classify_type_I(a)
    return None, classify_type_II(a)[1]


def fixed_point_count(a: Action) -> int:
    return classify_type_II(a)[0] if isinstance(a, TypeIIAction) else 0


def manifold_label(a: Action) -> str:
    return classify(a)[1]


def _nonvanishing(field: CircleField) -> bool:
    try:
        return not find_zeros(field)
    except IdenticallyZero:
        return False


def is_hopf(a: Action) -> bool:
    if not isinstance(a, TypeIAction):
        return False
    if a.tau.kind not in (InvolutionKind.Identity, InvolutionKind.ComponentSwap):
        return False
    return _nonvanishing(a.field)


def _is_standard_sphere(field: IntervalField) -> bool:
    interior = _interior_zeros(field)
    if len(interior) != 1 or interior[0].order != 1:
        return False
    return abs(interior[0].taylor[1] + 1.0) <= ENDPOINT_TOL * max(1.0, field.sup_norm())


def _is_standard_quotient(field: IntervalField) -> bool:
    zeros = find_interval_zeros(field)
    if any(-1.0 < z.theta < 0.0 for z in zeros) or zeros[-1].theta != 0.0 or zeros[-1].order != 1:
        return False
    return abs(zeros[-1].taylor[1] + 1.0) <= ENDPOINT_TOL * max(1.0, field.sup_norm())


def admits_projective(a: Action) -> bool:
    """
    Whether the action preserves a projective structure: Hopf manifolds (type I with a
    nonvanishing field, and the transitive quotients of R^n - 0 by a lattice), the
    standard action on S^n and its quotient on RP^n.
    """
    if isinstance(a, TransitiveAction):
        return a.orbit.tag == OrbitTag.PuncturedRn and a.orbit.lattice is not None
    if isinstance(a, TypeIAction):
        return is_hopf(a)
    classify_type_II(a)
    return _is_standard_quotient(a.field) if a.quotient else _is_standard_sphere(a.field)


def summarize_action(a: Action) -> ActionSummary:
    case, manifold = classify(a)
    kind = {TransitiveAction: "transitive", TypeIAction: "I", TypeIIAction: "II"}[type(a)]
    return ActionSummary(kind, case, manifold, fixed_point_count(a), is_hopf(a), admits_projective(a))


def doubled_field(a: TypeIIAction) -> CircleField:
    """ The circle field of a type II action, doubled through the odd extension in the projective case """
    field = a.field.odd_extension() if a.quotient else a.field
    return double_interval(field)


def check_doubled_field(field: CircleField, projective: bool = False, tol: float = 1e-8) -> List[str]:
    """
    Side conditions on the circle field of a type II action: order-1 zeros at 0 and pi
    with identical positive residues, symmetry under theta -> -theta and, for RP^n,
    invariance under theta -> theta + pi. Returns the violated conditions.
    """
    problems = []
    inv = invariants(field)
    glued = [
        (order, r)
        for z, (order, r) in zip(find_zeros(field), inv.zero_data)
        if min(abs(z.theta), abs(z.theta - math.pi), abs(z.theta - 2 * math.pi)) < 1e-8
    ]
    if len(glued) != 2 or any(order != 1 for order, _ in glued):
        problems.append("zeros at 0 and pi must both have order 1")
    elif compare_values(glued[0][1], glued[1][1], tol) != Closeness.Match or glued[0][1] <= 0:
        problems.append(f"residues at 0 and pi must be equal and positive, got {glued[0][1]} and {glued[1][1]}")
    if not validate_involution(field, Involution.reflection(0.0)):
        problems.append("the field is not odd under theta -> -theta")
    if projective and not validate_involution(field, Involution.free_rotation()):
        problems.append("the field is not invariant under the antipodal map")
    return problems


def _both_zero(a: CircleField, b: CircleField) -> Optional[bool]:
    za, zb = a.is_identically_zero(), b.is_identically_zero()
    if za or zb:
        return za and zb
    return None


def equivalent_actions(a: Action, b: Action, tol_match: float = DEFAULT_TOL_MATCH) -> bool:
    if type(a) is not type(b) or a.n != b.n:
        return False
    if isinstance(a, TransitiveAction):
        validate_transitive(a)
        validate_transitive(b)  # type: ignore
        return _same_orbit(a.orbit, b.orbit, tol_match)  # type: ignore
    if isinstance(a, TypeIAction):
        if classify_type_I(a)[0] != classify_type_I(b)[0]:  # type: ignore
            return False
        if (zero := _both_zero(a.field, b.field)) is not None:  # type: ignore
            return zero
        return equivalent_invariants(invariants(a.field), invariants(b.field), tol_match)  # type: ignore
    if a.quotient != b.quotient:  # type: ignore
        return False
    classify_type_II(a)
    classify_type_II(b)  # type: ignore
    try:
        fa, fb = doubled_field(a), doubled_field(b)  # type: ignore
    except EndpointConstraintViolated as exc:
        raise InvalidActionData(str(exc)) from exc
    return equivalent_invariants(invariants(fa), invariants(fb), tol_match)


def _same_orbit(a: OrbitType, b: OrbitType, tol_match: float) -> bool:
    if a.tag != b.tag or a.with_sign != b.with_sign:
        return False
    if a.tag == OrbitTag.FiniteCoverOf:
        return _same_orbit(a.base, b.base, tol_match)  # type: ignore
    if a.lattice is None or b.lattice is None:
        return a.lattice is None and b.lattice is None
    return compare_values(a.lattice, b.lattice, tol_match) == Closeness.Match


def standard_sphere_action(n: int) -> TypeIIAction:
    return TypeIIAction(n, IntervalField.polynomial(STANDARD_SPHERE_COEFFS), quotient=False)


def standard_projective_action(n: int) -> TypeIIAction:
    return TypeIIAction(n, IntervalField.polynomial(STANDARD_SPHERE_COEFFS, (-1.0, 0.0)), quotient=True)


def hopf_action(n: int, mu: float = 2 * math.pi) -> TypeIAction:
    """ The constant field with global invariant mu on a single circle """
    return TypeIAction(n, 1, trig_field(2 * math.pi / mu), Involution.identity())


def transitive_hopf_action(n: int, generator: float = 2.0) -> TransitiveAction:
    return TransitiveAction(n, OrbitType.punctured(generator))
