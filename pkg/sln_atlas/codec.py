"""
JSON artifacts: field/v1, action/v1 and graph/v1 files, and the canonical serializer.

Canonical JSON has sorted keys, a 2-space indent, floats written with 17
significant digits and a trailing newline, so parsing and dumping a canonical
file reproduces it byte for byte.
"""
import json
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Union

from .actions import Action, OrbitTag, OrbitType, TransitiveAction, TypeIAction, TypeIIAction, classify
from .circlefield import ExactField, Involution, InvolutionKind, IntervalField, TrigPoly
from .invariants import CanonicalKey, HitchinInvariants, IntervalInvariants
from .lattice import Attachment, AttachmentKind, GluingGraph, MarkedTorus, Site

logger = logging.getLogger("sln_atlas")

FIELD_SCHEMA = "field/v1"
ACTION_SCHEMA = "action/v1"
GRAPH_SCHEMA = "graph/v1"

AnyField = Union[ExactField, IntervalField]

_INVOLUTIONS = {
    "identity": InvolutionKind.Identity,
    "component_swap": InvolutionKind.ComponentSwap,
    "free_rotation": InvolutionKind.FreeRotation,
    "reflection": InvolutionKind.Reflection,
}
_ORBITS = {
    "point": OrbitTag.Point,
    "sphere": OrbitTag.Sphere,
    "proj_space": OrbitTag.ProjSpace,
    "punctured_rn": OrbitTag.PuncturedRn,
    "flag3": OrbitTag.Flag3,
    "gr24": OrbitTag.Gr24,
    "finite_cover": OrbitTag.FiniteCoverOf,
}


class CodecError(ValueError):
    pass


def _encode(value: Any, depth: int) -> str:
    pad, inner = "  " * depth, "  " * (depth + 1)
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise CodecError(f"cannot write non-finite number {value}")
        return format(value, ".17g")
    if isinstance(value, (int, str)):
        return json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = (f"{inner}{json.dumps(str(k))}: {_encode(value[k], depth + 1)}" for k in sorted(value))
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        return "[\n" + ",\n".join(inner + _encode(v, depth + 1) for v in value) + "\n" + pad + "]"
    raise CodecError(f"cannot write {type(value).__name__}")


def dumps_canonical(obj: Any) -> str:
    return _encode(obj, 0) + "\n"


def loads(text: str) -> Dict[str, Any]:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CodecError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise CodecError("expected a JSON object at the top level")
    return obj


def load_file(path: Path) -> Dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CodecError(f"cannot read {path}: {exc}") from exc
    return loads(text)


def artifact_kind(obj: Dict[str, Any]) -> str:
    if (schema := obj.get("schema")) not in (FIELD_SCHEMA, ACTION_SCHEMA, GRAPH_SCHEMA):
        raise CodecError(f"unknown or missing schema {schema!r}")
    return schema


def _get(obj: Dict[str, Any], key: str) -> Any:
    try:
        return obj[key]
    except (KeyError, TypeError) as exc:
        raise CodecError(f"missing key {key!r}") from exc


def _reals(values: Any, what: str) -> List[float]:
    if not isinstance(values, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values):
        raise CodecError(f"{what} must be a list of numbers")
    if not all(math.isfinite(v) for v in values):
        raise CodecError(f"{what} must be finite")
    return [float(v) for v in values]


def _integer(value: Any, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise CodecError(f"{what} must be an integer")
    return value


def _list(value: Any, what: str) -> List[Any]:
    if not isinstance(value, list):
        raise CodecError(f"{what} must be a list")
    return value


def _lookup(table: Dict[str, Any], key: Any, what: str) -> Any:
    if not isinstance(key, str) or key not in table:
        raise CodecError(f"unknown {what} {key!r}")
    return table[key]


def parse_field(obj: Dict[str, Any]) -> AnyField:
    kind = _get(obj, "kind")
    try:
        if kind == "trig":
            a0 = _reals([_get(obj, "a0")], "a0")[0]
            return ExactField(TrigPoly.from_terms(a0, _reals(_get(obj, "cos"), "cos"), _reals(_get(obj, "sin"), "sin")))
        if kind == "poly":
            domain = tuple(_reals(_get(obj, "domain"), "domain"))
            if len(domain) != 2:
                raise CodecError("domain must have two entries")
            return IntervalField.polynomial(_reals(_get(obj, "coeffs"), "coeffs"), domain)  # type: ignore
    except CodecError:
        raise
    except ValueError as exc:
        raise CodecError(str(exc)) from exc
    raise CodecError(f"unknown field kind {kind!r}")


def dump_field(field: AnyField) -> Dict[str, Any]:
    if isinstance(field, ExactField):
        poly = field.poly
        return {"kind": "trig", "a0": poly.a0, "cos": list(poly.cos_coeffs), "sin": list(poly.sin_coeffs)}
    if isinstance(field, IntervalField) and field.is_polynomial:
        return {"kind": "poly", "domain": list(field.domain), "coeffs": list(field.coeffs)}  # type: ignore
    raise CodecError("only trigonometric and polynomial fields can be written")


def _parse_orbit(obj: Dict[str, Any]) -> OrbitType:
    tag = _lookup(_ORBITS, _get(obj, "tag"), "orbit tag")
    if tag == OrbitTag.FiniteCoverOf:
        return OrbitType.cover_of(_parse_orbit(_get(obj, "base")))
    if tag == OrbitTag.PuncturedRn:
        lattice = obj.get("lattice")
        if lattice is not None:
            lattice = _reals([lattice], "lattice")[0]
        return OrbitType.punctured(lattice, bool(obj.get("sign", False)))
    return OrbitType(tag)


def _dump_orbit(orbit: OrbitType) -> Dict[str, Any]:
    tag = next(name for name, value in _ORBITS.items() if value == orbit.tag)
    out: Dict[str, Any] = {"tag": tag}
    if orbit.tag == OrbitTag.FiniteCoverOf:
        out["base"] = _dump_orbit(orbit.base)  # type: ignore
    if orbit.tag == OrbitTag.PuncturedRn:
        out["lattice"] = orbit.lattice
        out["sign"] = orbit.with_sign
    return out


def parse_action(obj: Dict[str, Any]) -> Action:
    """ Parses and validates an action/v1 object; the classification is recomputed """
    n = _integer(_get(obj, "n"), "n")
    kind = _get(obj, "type")
    if kind == "transitive":
        action: Action = TransitiveAction(n, _parse_orbit(_get(obj, "orbit")))
    elif kind == "I":
        field = parse_field(_get(obj, "field"))
        if not isinstance(field, ExactField):
            raise CodecError("type I actions need a trig field")
        involution = _get(obj, "involution")
        tau_kind = _lookup(_INVOLUTIONS, _get(involution, "kind"), "involution")
        axis = _reals([involution.get("axis", 0.0)], "axis")[0]
        action = TypeIAction(n, _integer(_get(obj, "components"), "components"), field, Involution(tau_kind, axis))
    elif kind == "II":
        field = parse_field(_get(obj, "field"))
        if not isinstance(field, IntervalField):
            raise CodecError("type II actions need a poly field")
        action = TypeIIAction(n, field, bool(_get(obj, "quotient")))
    else:
        raise CodecError(f"unknown action type {kind!r}")
    classify(action)
    return action


def dump_action(action: Action) -> Dict[str, Any]:
    out: Dict[str, Any] = {"schema": ACTION_SCHEMA, "n": action.n}
    if isinstance(action, TransitiveAction):
        out.update(type="transitive", orbit=_dump_orbit(action.orbit))
    elif isinstance(action, TypeIAction):
        tau = next(name for name, value in _INVOLUTIONS.items() if value == action.tau.kind)
        out.update(
            type="I",
            components=action.components,
            field=dump_field(action.field),  # type: ignore
            involution={"kind": tau, "axis": action.tau.axis},
        )
    else:
        out.update(type="II", quotient=action.quotient, field=dump_field(action.field))
    return out


def _parse_fraction(text: Any) -> Fraction:
    if not isinstance(text, str):
        raise CodecError(f"coordinates are fraction strings, got {text!r}")
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise CodecError(f"bad fraction {text!r}") from exc
    if text not in (str(value), f"{value.numerator}/{value.denominator}"):
        raise CodecError(f"fraction {text!r} is not reduced")
    return value


def parse_graph(obj: Dict[str, Any]) -> GluingGraph:
    """ Parses a graph/v1 object; constraint checks are left to validate_graph """
    n = _integer(_get(obj, "n"), "n")
    nodes = []
    for node in _list(_get(obj, "nodes"), "nodes"):
        marked = _list(_get(node, "marked_points"), "marked_points")
        points = tuple(tuple(_parse_fraction(c) for c in _list(point, "a marked point")) for point in marked)
        nodes.append(MarkedTorus(str(_get(node, "id")), n, points))
    attachments = []
    for attachment in _list(_get(obj, "attachments"), "attachments"):
        kind = _lookup({k.value: k for k in AttachmentKind}, _get(attachment, "kind"), "attachment kind")
        sites = tuple(
            Site(str(_get(s, "node")), _integer(_get(s, "point"), "point"))
            for s in _list(_get(attachment, "sites"), "sites")
        )
        field = parse_field(_get(attachment, "field"))
        if not isinstance(field, IntervalField):
            raise CodecError("attachments need a poly field")
        attachments.append(Attachment(kind, sites, field))
    return GluingGraph(n, tuple(nodes), tuple(attachments))


def dump_graph(g: GluingGraph) -> Dict[str, Any]:
    return {
        "schema": GRAPH_SCHEMA,
        "n": g.n,
        "nodes": [
            {"id": node.id, "marked_points": [[str(c) for c in point] for point in node.marked_points]}
            for node in g.nodes
        ],
        "attachments": [
            {
                "kind": a.kind.value,
                "sites": [{"node": s.node, "point": s.point} for s in a.sites],
                "field": dump_field(a.field),
            }
            for a in g.attachments
        ],
    }


def parse_artifact(obj: Dict[str, Any]) -> Union[AnyField, Action, GluingGraph]:
    kind = artifact_kind(obj)
    if kind == FIELD_SCHEMA:
        return parse_field(obj)
    if kind == ACTION_SCHEMA:
        return parse_action(obj)
    return parse_graph(obj)


def dump_artifact(artifact: Union[AnyField, Action, GluingGraph]) -> Dict[str, Any]:
    if isinstance(artifact, GluingGraph):
        return dump_graph(artifact)
    if isinstance(artifact, (ExactField, IntervalField)):
        return {"schema": FIELD_SCHEMA, **dump_field(artifact)}
    return dump_action(artifact)


def invariants_to_json(inv: HitchinInvariants, thetas: List[float]) -> Dict[str, Any]:
    return {
        "k": inv.k,
        "sigma": inv.sigma,
        "zeros": [{"theta": theta, "m": m, "r": r} for theta, (m, r) in zip(thetas, inv.zero_data)],
        "mu": inv.mu,
    }


def key_to_json(key: CanonicalKey) -> Dict[str, Any]:
    return {
        "k": key.k,
        "mu": key.mu,
        "sigma": key.canonical_sigma,
        "sequence": [{"m": m, "r": r} for m, r in key.canonical_sequence],
    }


def interval_invariants_to_json(inv: IntervalInvariants, positions: List[float]) -> Dict[str, Any]:
    return {
        "records": [{"t": t, "m": m, "r": r} for t, (m, r) in zip(positions, inv.records)],
        "gaps": list(inv.gaps),
    }
