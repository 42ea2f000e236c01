"""
Gluing graphs for actions of finite-index subgroups of SL(n,Z).

Tori carry marked rational points; attachments glue a G-disk or a blow-up at one
point, or a G-tube or two-sided blow-up between two points.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from networkx.algorithms.isomorphism import GraphMatcher

from .circlefield import IntervalField, find_interval_zeros
from .invariants import (
    DEFAULT_TOL_MATCH,
    NEAR_FACTOR,
    AmbiguousMatch,
    Closeness,
    GermInvariants,
    compare_interval_invariants,
    compare_values,
    germ_invariants,
    interval_invariants,
)

logger = logging.getLogger("sln_atlas")

DEFAULT_TOL_ZERO = 1e-9

Point = Tuple[Fraction, ...]


class InadmissibleParameter(ValueError):
    pass


class AttachmentKind(Enum):
    Disk = "disk"
    BlowUp = "blow_up"
    Tube = "tube"
    TwoSidedBlowUp = "two_sided_blow_up"

    @property
    def arity(self) -> int:
        return 2 if self in (AttachmentKind.Tube, AttachmentKind.TwoSidedBlowUp) else 1

    @property
    def is_germ(self) -> bool:
        return self in (AttachmentKind.BlowUp, AttachmentKind.TwoSidedBlowUp)


@dataclass(frozen=True)
class MarkedTorus:
    id: str
    n: int
    marked_points: Tuple[Point, ...] = ()


@dataclass(frozen=True)
class Site:
    node: str
    point: int

    def __str__(self) -> str:
        return f"{self.node}:{self.point}"


@dataclass(frozen=True)
class Attachment:
    kind: AttachmentKind
    sites: Tuple[Site, ...]
    field: IntervalField


@dataclass(frozen=True)
class GluingGraph:
    n: int
    nodes: Tuple[MarkedTorus, ...] = ()
    attachments: Tuple[Attachment, ...] = ()

    def node(self, node_id: str) -> Optional[MarkedTorus]:
        return next((node for node in self.nodes if node.id == node_id), None)


@dataclass(frozen=True)
class Diagnostic:
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.where}: {self.message}"


@dataclass(frozen=True)
class ComponentSummary:
    nodes: Tuple[str, ...]
    tori: int
    edges: int
    disks: int
    blow_ups: int
    label: str
    extension: bool = False


@dataclass(frozen=True)
class TopologySummary:
    components: Tuple[ComponentSummary, ...] = ()


def _check_points(g: GluingGraph, node: MarkedTorus) -> Iterator[Diagnostic]:
    where = f"node {node.id}"
    if node.n != g.n:
        yield Diagnostic(where, f"dimension {node.n} differs from the graph dimension {g.n}")
    for i, point in enumerate(node.marked_points):
        if len(point) != g.n:
            yield Diagnostic(f"{where} point {i}", f"expected {g.n} coordinates, got {len(point)}")
        if any(not 0 <= c < 1 for c in point):
            yield Diagnostic(f"{where} point {i}", "coordinates must lie in [0, 1)")
    if len(set(node.marked_points)) != len(node.marked_points):
        yield Diagnostic(where, "marked points must be pairwise distinct")


def _check_sites(g: GluingGraph, index: int, attachment: Attachment) -> Iterator[Diagnostic]:
    where = f"attachment {index} ({attachment.kind.value})"
    if len(attachment.sites) != attachment.kind.arity:
        yield Diagnostic(where, f"expected {attachment.kind.arity} site(s), got {len(attachment.sites)}")
    for site in attachment.sites:
        if (node := g.node(site.node)) is None:
            yield Diagnostic(where, f"site {site} references an unknown node")
        elif not 0 <= site.point < len(node.marked_points):
            yield Diagnostic(where, f"site {site} references an unknown marked point")
    if attachment.kind.arity == 2 and len(set(attachment.sites)) < len(attachment.sites):
        noun = "tube" if attachment.kind == AttachmentKind.Tube else "two-sided blow-up"
        yield Diagnostic(where, f"{noun} endpoints must be distinct marked points")


def _is_odd(field: IntervalField, tol: float) -> bool:
    if field.is_polynomial:
        return all(abs(c) <= tol for c in field.coeffs[::2])  # type: ignore
    grid = np.linspace(0.0, 1.0, 257)
    return bool(np.max(np.abs(field(grid) + field(-grid))) <= tol)


def _check_field(index: int, attachment: Attachment, tol_zero: float) -> Iterator[Diagnostic]:
    where = f"attachment {index} ({attachment.kind.value})"
    field = attachment.field
    if field.domain != (-1.0, 1.0):
        yield Diagnostic(where, "the field must live on [-1,1]")
        return
    tol = tol_zero * max(1.0, field.sup_norm())
    try:
        if attachment.kind.is_germ:
            zeros = find_interval_zeros(field, tol_zero)
            if len(zeros) != 1 or abs(zeros[0].theta) > 1e-9:
                yield Diagnostic(where, "the germ must vanish at 0 and nowhere else on [-1,1]")
            if attachment.kind == AttachmentKind.BlowUp and not _is_odd(field, tol):
                yield Diagnostic(where, "the blow-up germ must be odd")
            return
        (left, _), (right, _) = field.endpoint_data
        if abs(left) > tol or abs(right) > tol:
            yield Diagnostic(where, "the field must vanish at -1 and 1")
        if attachment.kind == AttachmentKind.Disk:
            if not _is_odd(field, tol):
                yield Diagnostic(where, "the disk field must be odd")
            if abs((slope := field.derivatives(0.0, 1)[1, 0]) - 1.0) > tol:
                yield Diagnostic(where, f"the disk field needs D_0 X = 1, got {slope:g}")
    except ValueError as exc:
        yield Diagnostic(where, str(exc))


def validate_graph(g: GluingGraph, tol_zero: float = DEFAULT_TOL_ZERO) -> List[Diagnostic]:
    """ All violated constraints, empty when the graph is valid """
    diagnostics: List[Diagnostic] = []
    if g.n < 3:
        diagnostics.append(Diagnostic("graph", f"dimension must be at least 3, got {g.n}"))
    ids = [node.id for node in g.nodes]
    if len(set(ids)) != len(ids):
        diagnostics.append(Diagnostic("graph", "node ids must be unique"))
    for node in g.nodes:
        diagnostics.extend(_check_points(g, node))
    used: Dict[Site, int] = {}
    for index, attachment in enumerate(g.attachments):
        diagnostics.extend(_check_sites(g, index, attachment))
        for site in set(attachment.sites):
            if site in used:
                diagnostics.append(Diagnostic(f"site {site}", f"used by attachments {used[site]} and {index}"))
            used.setdefault(site, index)
        diagnostics.extend(_check_field(index, attachment, tol_zero))
    for diagnostic in diagnostics:
        logger.debug(f"{diagnostic}")
    return diagnostics


def level(g: GluingGraph) -> int:
    """ The least N such that the principal congruence subgroup of level N fixes every marked point """
    return math.lcm(1, *(c.denominator for node in g.nodes for point in node.marked_points for c in point))


def blow_up_weight(field: IntervalField) -> float:
    return float(field.derivatives(0.0, 1)[1, 0])


def is_volume_preserving(g: GluingGraph, tol_zero: float = DEFAULT_TOL_ZERO) -> bool:
    for attachment in g.attachments:
        if not attachment.kind.is_germ:
            return False
        if abs((weight := blow_up_weight(attachment.field)) - g.n) >= tol_zero:
            logger.debug(f"{weight=} differs from n={g.n}")
            return False
    return True


def _torus_graph(g: GluingGraph) -> nx.MultiGraph:
    tori = nx.MultiGraph()
    tori.add_nodes_from(node.id for node in g.nodes)
    for attachment in g.attachments:
        if attachment.kind.arity == 2:
            tori.add_edge(*(site.node for site in attachment.sites), kind=attachment.kind.value)
    return tori


def summarize_topology(g: GluingGraph) -> TopologySummary:
    tori = _torus_graph(g)
    components = []
    for members in sorted(nx.connected_components(tori), key=lambda c: sorted(c)):
        sub = tori.subgraph(members)
        count, edges = sub.number_of_nodes(), sub.number_of_edges()
        singles = [a for a in g.attachments if a.kind.arity == 1 and a.sites[0].node in members]
        disks = sum(a.kind == AttachmentKind.Disk for a in singles)
        if (cycle_rank := edges - count + 1) > 0:
            label, extension = f"connected sum with handles (cycle rank {cycle_rank})", True
        elif count == 1:
            label, extension = "torus", False
        else:
            label, extension = f"connected sum of {count} tori", False
        components.append(
            ComponentSummary(tuple(sorted(members)), count, edges, disks, len(singles) - disks, label, extension)
        )
    return TopologySummary(tuple(components))


def _attachment_class(attachment: Attachment):
    if attachment.kind.is_germ:
        return germ_invariants(attachment.field)
    return interval_invariants(attachment.field)


def _compare_class(a, b, flipped: bool, tol_match: float) -> Closeness:
    if isinstance(a, GermInvariants):
        if a.order != b.order:
            return Closeness.Apart
        return compare_values(a.residue, b.residue, tol_match)
    return compare_interval_invariants(a, b.flipped() if flipped else b, tol_match)


def _point_label(point: Point) -> str:
    return ",".join(str(c) for c in point)


def incidence_graph(g: GluingGraph) -> nx.Graph:
    """ Tori, marked points and attachments as vertices; attachment-point edges carry the end index """
    graph = nx.Graph()
    for node in g.nodes:
        graph.add_node(("torus", node.id), label="torus")
        for i, point in enumerate(node.marked_points):
            graph.add_node(("point", node.id, i), label=f"point {_point_label(point)}")
            graph.add_edge(("torus", node.id), ("point", node.id, i), end=-1)
    for index, attachment in enumerate(g.attachments):
        graph.add_node(("attachment", index), label=attachment.kind.value)
        for end, site in enumerate(attachment.sites):
            graph.add_edge(("attachment", index), ("point", site.node, site.point), end=end)
    return graph


class _FieldMatcher:
    """ Cached comparison of attachment fields between two graphs """

    def __init__(self, g1: GluingGraph, g2: GluingGraph, tol_match: float) -> None:
        self.g1, self.g2, self.tol_match = g1, g2, tol_match
        self.classes1 = [_attachment_class(a) for a in g1.attachments]
        self.classes2 = [_attachment_class(a) for a in g2.attachments]
        self.cache: Dict[Tuple[int, int, bool], Closeness] = {}
        self.near = False

    def compare(self, i: int, j: int, flipped: bool) -> Closeness:
        if (key := (i, j, flipped)) not in self.cache:
            verdict = _compare_class(self.classes1[i], self.classes2[j], flipped, self.tol_match)
            self.cache[key] = verdict
            self.near |= verdict == Closeness.Near
        return self.cache[key]

    def compatible(self, i: int, j: int) -> bool:
        if self.g1.attachments[i].kind == AttachmentKind.Tube:
            return Closeness.Match in (self.compare(i, j, False), self.compare(i, j, True))
        return self.compare(i, j, False) == Closeness.Match

    def oriented(self, i: int, j: int, swapped: bool) -> bool:
        """ Tubes whose ends are exchanged must match after reflecting the field """
        if self.g1.attachments[i].kind != AttachmentKind.Tube:
            return True
        return self.compare(i, j, swapped) == Closeness.Match


def _node_match(matcher: _FieldMatcher):
    def match(a: dict, b: dict) -> bool:
        if a["label"] != b["label"]:
            return False
        if "index" not in a:
            return True
        return matcher.compatible(a["index"], b["index"])

    return match


def equivalent_graphs(g1: GluingGraph, g2: GluingGraph, tol_match: float = DEFAULT_TOL_MATCH) -> bool:
    if g1.n != g2.n or len(g1.nodes) != len(g2.nodes) or len(g1.attachments) != len(g2.attachments):
        return False
    i1, i2 = incidence_graph(g1), incidence_graph(g2)
    hash1 = nx.weisfeiler_lehman_graph_hash(i1, node_attr="label")
    hash2 = nx.weisfeiler_lehman_graph_hash(i2, node_attr="label")
    logger.debug(f"{hash1=} {hash2=}")
    if hash1 != hash2:
        return False
    for graph in (i1, i2):
        for vertex in graph.nodes:
            if vertex[0] == "attachment":
                graph.nodes[vertex]["index"] = vertex[1]
    matcher = _FieldMatcher(g1, g2, tol_match)
    for mapping in GraphMatcher(i1, i2, node_match=_node_match(matcher)).isomorphisms_iter():
        if all(_tube_orientation_holds(g1, g2, matcher, mapping, i) for i in range(len(g1.attachments))):
            return True
    if matcher.near:
        raise AmbiguousMatch(f"attachment fields agree only within {NEAR_FACTOR:g} x tol_match={tol_match}")
    return False


def _tube_orientation_holds(g1: GluingGraph, g2: GluingGraph, matcher: _FieldMatcher, mapping: dict, i: int) -> bool:
    attachment = g1.attachments[i]
    j = mapping[("attachment", i)][1]
    if attachment.kind != AttachmentKind.Tube:
        return True
    first = attachment.sites[0]
    image = mapping[("point", first.node, first.point)]
    target = g2.attachments[j].sites[0]
    swapped = image != ("point", target.node, target.point)
    return matcher.oriented(i, j, swapped)


def disk_field(r: float) -> IntervalField:
    """ X_r(t) = t (1 - t^2) (1 + (1/r - 1) t^2): odd, D_0 X = 1, endpoint residues -r/2 """
    if not math.isfinite(r) or r == 0:
        raise InadmissibleParameter(f"residue parameter must be finite and nonzero, got {r}")
    a = 1 / r - 1
    return IntervalField.polynomial((0.0, 1.0, 0.0, a - 1.0, 0.0, -a))


def gen_disk_family(residues: Sequence[float], n: int = 3) -> List[GluingGraph]:
    """ One torus with a single G-disk glued at the origin, one graph per residue parameter """
    origin = (Fraction(0),) * n
    graphs = []
    for r in residues:
        attachment = Attachment(AttachmentKind.Disk, (Site("t0", 0),), disk_field(r))
        graphs.append(GluingGraph(n, (MarkedTorus("t0", n, (origin,)),), (attachment,)))
    return graphs
