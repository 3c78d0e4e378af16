"""Metric graphs: vertices, oriented lattice edges and their incidence.

Each edge carries a uniform 1D lattice with ``n_points`` nodes.  Node 0 sits
on the ``from`` vertex, node ``n_points - 1`` on the ``to`` vertex and nodes
``1 .. n_points - 2`` are interior.  Vertex positions are used only to embed
the graph in the plane for output; the dynamics never reads them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Literal

import numpy as np

End = Literal["start", "terminal"]


class GraphValidationError(ValueError):
    """Raised when a graph violates one of the structural invariants."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid graph: " + "; ".join(self.violations))


class GraphFormatError(ValueError):
    """Raised when a graph file cannot be parsed; the message names the field."""


@dataclass(frozen=True)
class Vertex:
    id: int
    position: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class Edge:
    id: int
    start: int
    end: int
    n_points: int
    dx: float

    @property
    def length(self) -> float:
        return (self.n_points - 1) * self.dx

    @property
    def n_interior(self) -> int:
        return self.n_points - 2


@dataclass(frozen=True)
class VertexStar:
    """Edge ends incident to one vertex, ordered by ascending edge id."""

    vertex: int
    slots: tuple[tuple[int, End], ...]

    @property
    def degree(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    _vertex_index: dict[int, Vertex] = field(init=False, repr=False, compare=False)
    _edge_index: dict[int, Edge] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "_vertex_index", {v.id: v for v in self.vertices})
        object.__setattr__(self, "_edge_index", {e.id: e for e in self.edges})

    def vertex(self, vertex_id: int) -> Vertex:
        try:
            return self._vertex_index[vertex_id]
        except KeyError:
            raise KeyError(f"unknown vertex id {vertex_id}") from None

    def edge(self, edge_id: int) -> Edge:
        try:
            return self._edge_index[edge_id]
        except KeyError:
            raise KeyError(f"unknown edge id {edge_id}") from None

    @property
    def vertex_ids(self) -> list[int]:
        return sorted(self._vertex_index)

    @property
    def edge_ids(self) -> list[int]:
        return sorted(self._edge_index)

    @property
    def min_dx(self) -> float:
        return min(e.dx for e in self.edges)

    def stars(self) -> dict[int, VertexStar]:
        """All vertex stars keyed by vertex id (graph must be valid)."""
        slots: dict[int, list[tuple[int, End]]] = {v: [] for v in self.vertex_ids}
        for eid in self.edge_ids:
            e = self._edge_index[eid]
            slots[e.start].append((eid, "start"))
            slots[e.end].append((eid, "terminal"))
        return {v: VertexStar(v, tuple(s)) for v, s in slots.items()}

    @cached_property
    def junction_slots(self) -> tuple[tuple[int, tuple[tuple[int, int, float], ...]], ...]:
        """Per vertex: ``(edge id, nearest interior node index, 1/dx)`` for each slot."""
        require_valid(self)
        plan = []
        for vid, star in self.stars().items():
            slots = []
            for eid, end in star.slots:
                e = self._edge_index[eid]
                slots.append((eid, 1 if end == "start" else e.n_points - 2, 1.0 / e.dx))
            plan.append((vid, tuple(slots)))
        return tuple(plan)

    def reversed_edge(self, edge_id: int) -> MetricGraph:
        """Copy of the graph with one edge's orientation flipped."""
        edges = []
        for e in self.edges:
            if e.id == edge_id:
                e = Edge(e.id, e.end, e.start, e.n_points, e.dx)
            edges.append(e)
        return MetricGraph(self.vertices, tuple(edges))


def validate_graph(g: MetricGraph) -> list[str]:
    """Return every invariant violation of ``g``; an empty list means valid."""
    problems = []
    if not g.vertices:
        problems.append("graph has no vertices")
    if not g.edges:
        problems.append("graph has no edges")

    seen: set[int] = set()
    for v in g.vertices:
        if not isinstance(v.id, int) or v.id < 0:
            problems.append(f"vertex {v.id!r}: id must be a non-negative integer")
        if v.id in seen:
            problems.append(f"vertex {v.id}: duplicate vertex id")
        seen.add(v.id)

    seen_edges: set[int] = set()
    pairs: dict[frozenset, int] = {}
    for e in g.edges:
        tag = f"edge {e.id}"
        if not isinstance(e.id, int) or e.id < 0:
            problems.append(f"{tag}: id must be a non-negative integer")
        if e.id in seen_edges:
            problems.append(f"{tag}: duplicate edge id")
        seen_edges.add(e.id)
        for end_name, vid in (("from", e.start), ("to", e.end)):
            if vid not in seen:
                problems.append(f"{tag}: unknown vertex {vid!r} in '{end_name}'")
        if e.start == e.end:
            problems.append(f"{tag}: self-loop at vertex {e.start}")
        else:
            key = frozenset((e.start, e.end))
            if key in pairs:
                problems.append(
                    f"{tag}: parallel edge, vertices {e.start} and {e.end} "
                    f"are already joined by edge {pairs[key]}"
                )
            else:
                pairs[key] = e.id
        if not isinstance(e.n_points, int) or e.n_points < 3:
            problems.append(f"{tag}: n_points must be an integer >= 3, got {e.n_points!r}")
        if not (isinstance(e.dx, (int, float)) and np.isfinite(e.dx) and e.dx > 0):
            problems.append(f"{tag}: dx must be a positive finite number, got {e.dx!r}")

    if not problems:
        degree = {v.id: 0 for v in g.vertices}
        for e in g.edges:
            degree[e.start] += 1
            degree[e.end] += 1
        for vid, d in sorted(degree.items()):
            if d == 0:
                problems.append(f"vertex {vid}: isolated (degree 0)")
    return problems


def require_valid(g: MetricGraph) -> None:
    problems = validate_graph(g)
    if problems:
        raise GraphValidationError(problems)


def incidence_matrix(g: MetricGraph) -> np.ndarray:
    """|V| x |E| matrix: +1 where an edge terminates, -1 where it starts.

    Rows follow ascending vertex id and columns ascending edge id.
    """
    require_valid(g)
    rows = {vid: i for i, vid in enumerate(g.vertex_ids)}
    mat = np.zeros((len(rows), len(g.edges)), dtype=int)
    for j, eid in enumerate(g.edge_ids):
        e = g.edge(eid)
        mat[rows[e.start], j] = -1
        mat[rows[e.end], j] = 1
    return mat


def vertex_star(g: MetricGraph, vertex_id: int) -> VertexStar:
    g.vertex(vertex_id)
    slots = []
    for eid in g.edge_ids:
        e = g.edge(eid)
        if e.start == vertex_id:
            slots.append((eid, "start"))
        if e.end == vertex_id:
            slots.append((eid, "terminal"))
    return VertexStar(vertex_id, tuple(slots))


def node_embedding(g: MetricGraph, edge_id: int, node_index: int) -> tuple[float, float]:
    """Planar position of a lattice node on the straight segment of its edge."""
    e = g.edge(edge_id)
    if not 0 <= node_index < e.n_points:
        raise IndexError(f"node index {node_index} out of range for edge {edge_id} "
                         f"with {e.n_points} points")
    (x0, y0), (x1, y1) = g.vertex(e.start).position, g.vertex(e.end).position
    s = node_index / (e.n_points - 1)
    return (x0 + s * (x1 - x0), y0 + s * (y1 - y0))


def edge_embedding(g: MetricGraph, edge_id: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``node_embedding`` over all nodes of one edge."""
    e = g.edge(edge_id)
    (x0, y0), (x1, y1) = g.vertex(e.start).position, g.vertex(e.end).position
    s = np.arange(e.n_points) / (e.n_points - 1)
    return x0 + s * (x1 - x0), y0 + s * (y1 - y0)


# --- file format -----------------------------------------------------------

def _field(obj, key, where, kind):
    if not isinstance(obj, dict):
        raise GraphFormatError(f"{where}: expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise GraphFormatError(f"{where}.{key}: missing required field")
    value = obj[key]
    if kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if not ok:
        raise GraphFormatError(
            f"{where}.{key}: expected {kind.__name__}, got {value!r}")
    return kind(value)


def graph_from_dict(doc: dict) -> MetricGraph:
    if not isinstance(doc, dict):
        raise GraphFormatError("top level: expected an object with 'vertices' and 'edges'")
    for key in ("vertices", "edges"):
        if not isinstance(doc.get(key), list):
            raise GraphFormatError(f"{key}: missing or not a list")
    vertices = []
    for i, item in enumerate(doc["vertices"]):
        where = f"vertices[{i}]"
        vertices.append(Vertex(
            id=_field(item, "id", where, int),
            position=(_field(item, "x", where, float), _field(item, "y", where, float)),
        ))
    edges = []
    for i, item in enumerate(doc["edges"]):
        where = f"edges[{i}]"
        edges.append(Edge(
            id=_field(item, "id", where, int),
            start=_field(item, "from", where, int),
            end=_field(item, "to", where, int),
            n_points=_field(item, "n_points", where, int),
            dx=_field(item, "dx", where, float),
        ))
    return MetricGraph(tuple(vertices), tuple(edges))


def graph_to_dict(g: MetricGraph) -> dict:
    return {
        "vertices": [{"id": v.id, "x": v.position[0], "y": v.position[1]}
                     for v in g.vertices],
        "edges": [{"id": e.id, "from": e.start, "to": e.end,
                   "n_points": e.n_points, "dx": e.dx} for e in g.edges],
    }


def read_json(path: str | Path, error=GraphFormatError) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise error(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def load_graph(path: str | Path) -> MetricGraph:
    """Parse a graph file.  Structural validity is checked separately."""
    doc = read_json(path)
    try:
        return graph_from_dict(doc)
    except GraphFormatError as exc:
        raise GraphFormatError(f"{path}: {exc}") from None


def path_graph(n_edges: int = 1, n_points: int = 101, dx: float = 0.1) -> MetricGraph:
    """Straight chain of ``n_edges`` edges along the x axis, ids from 0."""
    step = (n_points - 1) * dx
    vertices = tuple(Vertex(i, (i * step, 0.0)) for i in range(n_edges + 1))
    edges = tuple(Edge(i, i, i + 1, n_points, dx) for i in range(n_edges))
    return MetricGraph(vertices, edges)


def star_graph(n_arms: int = 3, n_points: int = 101, dx: float | list[float] = 0.1,
               outward: bool = True) -> MetricGraph:
    """Hub vertex 0 joined to ``n_arms`` leaves; arms point away from the hub
    when ``outward``.  ``dx`` may be given per arm."""
    dxs = list(dx) if isinstance(dx, (list, tuple)) else [dx] * n_arms
    vertices = [Vertex(0, (0.0, 0.0))]
    edges = []
    for k in range(n_arms):
        ang = 2 * np.pi * k / n_arms
        r = (n_points - 1) * dxs[k]
        vertices.append(Vertex(k + 1, (r * np.cos(ang), r * np.sin(ang))))
        a, b = (0, k + 1) if outward else (k + 1, 0)
        edges.append(Edge(k, a, b, n_points, dxs[k]))
    return MetricGraph(tuple(vertices), tuple(edges))
