"""Metric graphs and the ordering of boundary degrees of freedom.

A metric graph consists of vertices, oriented internal edges ``[0, a_i]``
and external half-lines ``[0, inf)``.  Boundary values of a function on the
graph live in the space ``K = K_E + K_I^- + K_I^+`` of dimension
``m = |E| + 2|I|``, ordered as

* external edges, in input order,
* initial endpoints (``x = 0``) of internal edges, in input order,
* terminal endpoints (``x = a``) of internal edges, in input order.

Edge-indexed objects (Green's matrices, sampled functions) use the order
external edges first, then internal edges.
"""
from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .exceptions import (
    DanglingVertexReference,
    DisconnectedGraph,
    EmptyGraph,
    MissingEndpointDatum,
    NonpositiveLength,
    TadpolePresent,
    ZeroDegreeVertex,
)


@dataclass(frozen=True)
class InternalEdge:
    id: str
    tail: str
    head: str
    length: float

    @property
    def is_tadpole(self):
        return self.tail == self.head


@dataclass(frozen=True)
class ExternalEdge:
    id: str
    vertex: str


@dataclass(frozen=True)
class KLayout:
    """Index map of ``K`` and its splitting into the vertex blocks ``L_v``.

    Attributes
    ----------
    m : int
        Dimension of ``K``.
    labels : tuple of (str, str)
        ``labels[p] == (edge_id, side)`` with side ``"e"`` for an external
        edge, ``"-"``/``"+"`` for the initial/terminal end of an internal one.
    vertex_indices : mapping
        Sorted K-indices of ``L_v`` for every vertex.
    """

    m: int
    labels: tuple
    vertex_indices: MappingProxyType
    index_of: MappingProxyType
    vertex_of_index: tuple

    def h(self, vertex=None):
        """All-ones vector of ``L_v`` (or of ``K`` when ``vertex`` is None)."""
        if vertex is None:
            return np.ones(self.m)
        return np.ones(len(self.vertex_indices[vertex]))

    def block(self, vertex):
        return list(self.vertex_indices[vertex])

    def doubled_block(self, vertex):
        """Indices of ``dL_v`` inside the doubled space ``dK = K + K``."""
        idx = self.block(vertex)
        return idx + [p + self.m for p in idx]


@dataclass(frozen=True)
class MetricGraph:
    """Validated, immutable metric graph.

    Use :func:`build_graph` to construct instances.
    """

    vertices: tuple
    internal_edges: tuple
    external_edges: tuple
    layout: KLayout = field(repr=False)
    degree: MappingProxyType = field(repr=False)

    @property
    def n_external(self):
        return len(self.external_edges)

    @property
    def n_internal(self):
        return len(self.internal_edges)

    @property
    def m(self):
        return self.layout.m

    @property
    def n_edges(self):
        return self.n_external + self.n_internal

    @property
    def edge_ids(self):
        """Edge ids in kernel order: external edges, then internal ones."""
        return tuple(e.id for e in self.external_edges) + tuple(
            i.id for i in self.internal_edges
        )

    @property
    def lengths(self):
        return np.array([i.length for i in self.internal_edges], dtype=float)

    @property
    def tadpoles(self):
        return tuple(i.id for i in self.internal_edges if i.is_tadpole)

    @property
    def has_tadpoles(self):
        return bool(self.tadpoles)

    @property
    def is_compact(self):
        return self.n_external == 0

    def edge(self, edge_id):
        for e in self.external_edges:
            if e.id == edge_id:
                return e
        for i in self.internal_edges:
            if i.id == edge_id:
                return i
        raise KeyError(edge_id)

    def edge_position(self, edge_id):
        """Row of ``edge_id`` in edge-indexed matrices."""
        return self.edge_ids.index(edge_id)

    def is_external(self, edge_id):
        return any(e.id == edge_id for e in self.external_edges)

    def edge_length(self, edge_id):
        e = self.edge(edge_id)
        return np.inf if isinstance(e, ExternalEdge) else e.length

    def endpoint(self, edge_id, side):
        """Vertex at the ``side`` ("-" or "+") end of an edge."""
        e = self.edge(edge_id)
        if isinstance(e, ExternalEdge):
            if side != "-":
                raise ValueError(f"external edge {edge_id!r} has no '+' end")
            return e.vertex
        return e.tail if side == "-" else e.head

    def sides(self, edge_id):
        return ("-",) if self.is_external(edge_id) else ("-", "+")

    def k_index(self, edge_id, side):
        """K-index of the ``side`` end of ``edge_id``."""
        key = "e" if self.is_external(edge_id) else side
        return self.layout.index_of[(edge_id, key)]

    def require_no_tadpoles(self):
        if self.has_tadpoles:
            raise TadpolePresent(f"graph has tadpoles: {', '.join(self.tadpoles)}")

    def to_dict(self):
        return {
            "vertices": list(self.vertices),
            "internal_edges": [
                {"id": i.id, "from": i.tail, "to": i.head, "length": i.length}
                for i in self.internal_edges
            ],
            "external_edges": [
                {"id": e.id, "vertex": e.vertex} for e in self.external_edges
            ],
        }


def _edge_field(obj, *names):
    for n in names:
        if n in obj:
            return obj[n]
    raise KeyError(names[0])


def build_graph(spec):
    """Validate a graph description and return a :class:`MetricGraph`.

    Parameters
    ----------
    spec : mapping
        Keys ``vertices`` (list of ids), ``internal_edges`` (objects with
        ``id``, ``from``, ``to``, ``length``) and ``external_edges``
        (objects with ``id``, ``vertex``).  Edge entries may also be given
        as tuples ``(id, from, to, length)`` and ``(id, vertex)``.

    Raises
    ------
    EmptyGraph, DanglingVertexReference, NonpositiveLength,
    ZeroDegreeVertex, DisconnectedGraph
    """
    vertices = tuple(str(v) for v in spec.get("vertices", ()))
    if len(set(vertices)) != len(vertices):
        raise DanglingVertexReference("duplicate vertex ids")

    internal = []
    for raw in spec.get("internal_edges", ()):
        if isinstance(raw, dict):
            eid, tail, head, length = (
                raw["id"], _edge_field(raw, "from", "tail"),
                _edge_field(raw, "to", "head"), raw["length"],
            )
        else:
            eid, tail, head, length = raw
        internal.append(InternalEdge(str(eid), str(tail), str(head), float(length)))
    external = []
    for raw in spec.get("external_edges", ()):
        if isinstance(raw, dict):
            eid, vertex = raw["id"], raw["vertex"]
        else:
            eid, vertex = raw
        external.append(ExternalEdge(str(eid), str(vertex)))

    if not internal and not external:
        raise EmptyGraph("a graph needs at least one edge")
    ids = [e.id for e in external] + [i.id for i in internal]
    if len(set(ids)) != len(ids):
        raise DanglingVertexReference("duplicate edge ids")

    vset = set(vertices)
    for e in external:
        if e.vertex not in vset:
            raise DanglingVertexReference(f"edge {e.id!r} references unknown vertex {e.vertex!r}")
    for i in internal:
        for v in (i.tail, i.head):
            if v not in vset:
                raise DanglingVertexReference(f"edge {i.id!r} references unknown vertex {v!r}")
        if not np.isfinite(i.length) or i.length <= 0:
            raise NonpositiveLength(f"edge {i.id!r} has length {i.length}")

    n_e, n_i = len(external), len(internal)
    labels = [(e.id, "e") for e in external]
    labels += [(i.id, "-") for i in internal]
    labels += [(i.id, "+") for i in internal]
    vertex_of = [e.vertex for e in external]
    vertex_of += [i.tail for i in internal]
    vertex_of += [i.head for i in internal]

    blocks = {v: [] for v in vertices}
    for p, v in enumerate(vertex_of):
        blocks[v].append(p)
    for v, idx in blocks.items():
        if not idx:
            raise ZeroDegreeVertex(f"vertex {v!r} has no incident edge")

    adjacency = {v: set() for v in vertices}
    for i in internal:
        adjacency[i.tail].add(i.head)
        adjacency[i.head].add(i.tail)
    seen = {vertices[0]}
    queue = deque([vertices[0]])
    while queue:
        v = queue.popleft()
        for w in adjacency[v] - seen:
            seen.add(w)
            queue.append(w)
    if len(seen) != len(vertices):
        missing = sorted(set(vertices) - seen)
        raise DisconnectedGraph(f"vertices not reachable from {vertices[0]!r}: {missing}")

    layout = KLayout(
        m=n_e + 2 * n_i,
        labels=tuple(labels),
        vertex_indices=MappingProxyType({v: tuple(ix) for v, ix in blocks.items()}),
        index_of=MappingProxyType({lab: p for p, lab in enumerate(labels)}),
        vertex_of_index=tuple(vertex_of),
    )
    degree = MappingProxyType({v: len(ix) for v, ix in blocks.items()})
    return MetricGraph(vertices, tuple(internal), tuple(external), layout, degree)


def boundary_space_layout(graph):
    return graph.layout


@dataclass(frozen=True)
class TraceVector:
    """Boundary trace ``[psi] = psi_ + psi_'`` in ``dK``.

    ``values`` holds ``(psi_E(0), psi_I(0), psi_I(a))`` and ``derivatives``
    holds ``(psi_E'(0), psi_I'(0), -psi_I'(a))``; both derivatives point
    from the vertex into the edge.
    """

    values: np.ndarray
    derivatives: np.ndarray

    @property
    def doubled(self):
        return np.concatenate([self.values, self.derivatives])

    def __add__(self, other):
        return TraceVector(self.values + other.values, self.derivatives + other.derivatives)


def trace_vector(graph, data):
    """Collect endpoint data into a :class:`TraceVector`.

    ``data[edge_id]`` is ``(psi(0), psi'(0))`` for an external edge and
    ``(psi(0), psi'(0), psi(a), psi'(a))`` for an internal edge.
    """
    m = graph.m
    values = np.zeros(m, dtype=complex)
    derivs = np.zeros(m, dtype=complex)
    for e in graph.external_edges:
        if e.id not in data or len(data[e.id]) < 2:
            raise MissingEndpointDatum(f"no endpoint data for edge {e.id!r}")
        p = graph.k_index(e.id, "-")
        values[p], derivs[p] = data[e.id][0], data[e.id][1]
    for i in graph.internal_edges:
        if i.id not in data or len(data[i.id]) < 4:
            raise MissingEndpointDatum(f"incomplete endpoint data for edge {i.id!r}")
        v0, d0, va, da = data[i.id][:4]
        pm, pp = graph.k_index(i.id, "-"), graph.k_index(i.id, "+")
        values[pm], derivs[pm] = v0, d0
        values[pp], derivs[pp] = va, -da
    return TraceVector(values, derivs)
