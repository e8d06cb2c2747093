"""Walks on metric graphs and the walk expansion of the Green's matrix.

For local conditions and ``kappa`` large enough the Neumann series of
``(I - S T)^{-1}`` turns the boundary part of the kernel into a sum over
walks, each weighted by the product of vertex scattering amplitudes along it
and damped by ``exp(-kappa |w|)``:

    r_{jj'}(x, y) = r0 + (1 / 2 kappa) sum_{sigma, sigma'} psi_sigma(x) psi_sigma'(y)
                    sum_{w in W^(sigma, sigma')_{j j'}} W(w) exp(-kappa |w|),

with ``psi_-(x) = exp(-kappa x)`` and ``psi_+(x) = exp(-kappa (a - x))``.
"""
import heapq
import math
from dataclasses import dataclass

import numpy as np

from .classification import vertex_conditions_of
from .conditions import assemble_global, smatrix
from .exceptions import (
    CutoffTooLarge,
    MissingVertexMatrix,
    NotContinuousInput,
    SeriesDiverges,
    SingularAtK,
)
from .resolvent import GreenKernelParts

MAX_WALKS = 200_000
CLASS_TOL = 1e-9


def _other(side):
    return "+" if side == "-" else "-"


@dataclass(frozen=True)
class Walk:
    """Walk from edge ``start`` to edge ``end``.

    Attributes
    ----------
    start, start_side : str
        Edge ``j'`` and the end ``sigma'`` through which the walk leaves it.
    end, end_side : str
        Edge ``j`` and the end ``sigma`` through which the walk enters it.
    steps : tuple of (str, str)
        Traversed internal edges ``j_1, ..., j_n`` with the end through
        which each is entered.
    vertices : tuple of str
        ``v_0, ..., v_n`` in traversal order.
    metric_len : float
    """

    start: str
    start_side: str
    end: str
    end_side: str
    steps: tuple
    vertices: tuple
    metric_len: float

    @property
    def comb_len(self):
        return len(self.steps)

    @property
    def is_trivial(self):
        return not self.steps

    @property
    def edges(self):
        """``(j, j_n, ..., j_1, j')`` as in the usual right-to-left notation."""
        return (self.end,) + tuple(e for e, _ in reversed(self.steps)) + (self.start,)

    @property
    def sequence(self):
        """Interleaved ``(j, v_n, j_n, ..., j_1, v_0, j')``."""
        seq = [self.end]
        inner = [e for e, _ in self.steps]
        for k in range(len(self.vertices) - 1, -1, -1):
            seq.append(self.vertices[k])
            seq.append(inner[k - 1] if k >= 1 else self.start)
        return tuple(seq)

    def transitions(self, graph):
        """``(vertex, K-index out, K-index in)`` for every scattering event."""
        incoming = graph.k_index(self.start, self.start_side)
        out = []
        for (edge, side), v in zip(self.steps, self.vertices):
            nxt = graph.k_index(edge, side)
            out.append((v, nxt, incoming))
            incoming = graph.k_index(edge, _other(side))
        out.append((self.vertices[-1], graph.k_index(self.end, self.end_side), incoming))
        return out

    def reflected(self):
        """Per visited vertex ``v_0..v_n``: True where the walk reflects.

        Reflection is defined through the traversed edges, so a trivial walk
        has no entries and counts as reflectionless.
        """
        if self.is_trivial:
            return ()
        seq = [self.start] + [e for e, _ in self.steps] + [self.end]
        return tuple(seq[k] == seq[k + 1] for k in range(len(seq) - 1))

    @property
    def reflectionless(self):
        return not any(self.reflected())

    def to_dict(self, weight=None):
        out = {
            "edges": list(self.edges),
            "vertices": list(reversed(self.vertices)),
            "comb_len": self.comb_len,
            "metric_len": self.metric_len,
            "reflectionless": self.reflectionless,
        }
        if weight is not None:
            out["weight_re"] = float(np.real(weight))
            out["weight_im"] = float(np.imag(weight))
        return out


def enumerate_walks(graph, j_prime, sigma_prime, j, sigma, L_max, max_walks=MAX_WALKS):
    """All walks from ``(j', sigma')`` to ``(j, sigma)`` with ``|w| <= L_max``.

    The walks leave ``j'`` through its ``sigma'`` end and enter ``j``
    through its ``sigma`` end.  External edges only have the end ``"-"``.
    Results are ordered by metric length, ties broken lexicographically on
    the edge sequence.

    Raises
    ------
    TadpolePresent
    CutoffTooLarge
        If more than ``max_walks`` walks (or search states) are produced.
    """
    graph.require_no_tadpoles()
    if graph.is_external(j_prime):
        sigma_prime = "-"
    if graph.is_external(j):
        sigma = "-"
    target = graph.k_index(j, sigma)
    v0 = graph.endpoint(j_prime, sigma_prime)
    internal = [(i.id, s) for i in graph.internal_edges for s in ("-", "+")]
    at_vertex = {}
    for eid, side in internal:
        at_vertex.setdefault(graph.endpoint(eid, side), []).append((eid, side))
    for lst in at_vertex.values():
        lst.sort()

    heap = [(0.0, (), v0, ())]
    walks = []
    pushed = 1
    eps = 1e-12 * max(1.0, L_max)
    while heap:
        length, key, v, steps = heapq.heappop(heap)
        if length > L_max + eps:
            break
        if target in graph.layout.vertex_indices[v]:
            vertices = (v0,) + tuple(graph.endpoint(e, _other(s)) for e, s in steps)
            walks.append(Walk(j_prime, sigma_prime, j, sigma, steps, vertices, length))
            if len(walks) > max_walks:
                raise CutoffTooLarge(f"more than {max_walks} walks below L = {L_max}")
        for eid, side in at_vertex.get(v, ()):
            new_len = length + graph.edge_length(eid)
            if new_len > L_max + eps:
                continue
            heapq.heappush(
                heap,
                (new_len, key + (eid,), graph.endpoint(eid, _other(side)),
                 steps + ((eid, side),)),
            )
            pushed += 1
            if pushed > 20 * max_walks:
                raise CutoffTooLarge(f"search exceeded {20 * max_walks} states")
    return walks


def vertex_smatrices(graph, conditions, kappa):
    """Vertex id to ``S(i kappa; M_v)`` for local conditions."""
    vcs = vertex_conditions_of(graph, conditions)
    return {v: smatrix(1j * kappa, vc) for v, vc in vcs.items()}


def walk_weight(kappa, w, vertex_S, graph):
    """Product of vertex scattering amplitudes along ``w``.

    ``vertex_S`` maps vertex ids to ``S(i kappa; M_v)`` in the local order of
    ``L_v``.  ``kappa`` is only used to document the evaluation point.

    Raises
    ------
    MissingVertexMatrix
    """
    weight = 1.0 + 0j
    for v, out_idx, in_idx in w.transitions(graph):
        if v not in vertex_S:
            raise MissingVertexMatrix(f"no scattering matrix for vertex {v!r}")
        block = graph.layout.vertex_indices[v]
        weight *= vertex_S[v][block.index(out_idx), block.index(in_idx)]
    return complex(weight)


def _global_smatrix(graph, vertex_S):
    m = graph.m
    S = np.zeros((m, m), dtype=complex)
    for v, Sv in vertex_S.items():
        idx = list(graph.layout.vertex_indices[v])
        S[np.ix_(idx, idx)] = Sv
    return S


def series_ratio(graph, vertex_S, kappa):
    """``q = || |S| ||_2 exp(-kappa min a)`` and ``|| |S| ||_2``."""
    S = _global_smatrix(graph, vertex_S)
    s_abs = float(np.linalg.norm(np.abs(S), 2))
    if graph.n_internal == 0:
        return 0.0, s_abs
    return s_abs * math.exp(-kappa * graph.lengths.min()), s_abs


def _edge_factor(graph, eid, side, x, kappa):
    if side == "-":
        return math.exp(-kappa * x)
    return math.exp(-kappa * (graph.edge_length(eid) - x))


def green_via_walks(graph, conditions, kappa, x, y, L_cut):
    """Walk-series approximation of ``r_{jj'}(x, y; i kappa)``.

    Parameters
    ----------
    x, y : (edge_id, position)
    L_cut : float
        Walks with ``|w| <= L_cut`` are summed.

    Returns
    -------
    value : float or complex
    bound : float
        Rigorous bound on the omitted walks, ``(1/2kappa) sum |prefactors|
        || |S| || q^n0 / (1 - q)`` with ``n0 = floor(L_cut / max a) + 1``.

    Raises
    ------
    SeriesDiverges
        If ``q >= 1``.
    """
    graph.require_no_tadpoles()
    (j, xj), (jp, yp) = x, y
    vertex_S = vertex_smatrices(graph, conditions, kappa)
    q, s_abs = series_ratio(graph, vertex_S, kappa)
    if q >= 1:
        raise SeriesDiverges(f"q = {q:.4f} >= 1 at kappa = {kappa}")
    total = 0j
    pref_sum = 0.0
    for sig in graph.sides(j):
        for sigp in graph.sides(jp):
            pref = _edge_factor(graph, j, sig, xj, kappa) * _edge_factor(graph, jp, sigp, yp, kappa)
            pref_sum += abs(pref)
            for w in enumerate_walks(graph, jp, sigp, j, sig, L_cut):
                total += pref * walk_weight(kappa, w, vertex_S, graph) * math.exp(-kappa * w.metric_len)
    free = math.exp(-kappa * abs(xj - yp)) / (2 * kappa) if j == jp else 0.0
    value = free + total / (2 * kappa)
    if graph.n_internal == 0:
        bound = 0.0
    else:
        n0 = math.floor(L_cut / graph.lengths.max()) + 1
        bound = pref_sum * s_abs * q ** n0 / (1 - q) / (2 * kappa)
    return value, bound


def vertex_dichotomy(vertex_S, atol=CLASS_TOL):
    """Classify vertices by ``S h_v - h_v``: ``"V0"`` (strictly below) or ``"V1"`` (equal).

    Raises
    ------
    NotContinuousInput
        If the difference is neither entrywise negative nor zero.
    """
    out = {}
    for v, S in vertex_S.items():
        d = S @ np.ones(S.shape[0]) - 1.0
        if np.all(np.abs(d) < atol):
            out[v] = "V1"
        elif np.all(d.real < -atol) and np.all(np.abs(d.imag) < atol):
            out[v] = "V0"
        else:
            raise NotContinuousInput(f"vertex {v!r}: S h - h = {d} is mixed")
    return out


def wj_positivity_term(graph, conditions, kappa, j, x):
    """``w_j(x; kappa) = [Psi(x) (I - S T)^{-1} (I - S) h]_j``.

    Returns
    -------
    dict
        ``value`` and the vertex partition ``V0`` / ``V1``.
    """
    graph.require_no_tadpoles()
    vcs = vertex_conditions_of(graph, conditions)
    vertex_S = {v: smatrix(1j * kappa, vc) for v, vc in vcs.items()}
    q, _ = series_ratio(graph, vertex_S, kappa)
    if q >= 1:
        raise SeriesDiverges(f"q = {q:.4f} >= 1 at kappa = {kappa}")
    bc = assemble_global(graph, list(vcs.values()))
    parts = GreenKernelParts.build(graph, bc, 1j * kappa)
    h = np.ones(graph.m)
    vec = np.linalg.solve(np.eye(graph.m) - parts.S @ parts.T, (np.eye(graph.m) - parts.S) @ h)
    value = complex((parts.psi(j, [x]) @ vec)[0])
    part = vertex_dichotomy(vertex_S)
    return {
        "value": value,
        "V0": sorted(v for v, c in part.items() if c == "V0"),
        "V1": sorted(v for v, c in part.items() if c == "V1"),
    }


def large_kappa_threshold(graph, conditions, grid=None):
    """Smallest grid ``kappa`` with ``q < 1/2``.

    Grid points where some ``A_v - kappa B_v`` is singular are skipped.
    """
    grid = grid if grid is not None else [0.25 * 2 ** (j / 2) for j in range(40)]
    for kappa in grid:
        try:
            vertex_S = vertex_smatrices(graph, conditions, kappa)
        except SingularAtK:
            continue
        q, _ = series_ratio(graph, vertex_S, kappa)
        if q < 0.5:
            return float(kappa)
    raise SeriesDiverges("no grid point with q < 1/2")


def shortest_walks(graph, j_prime, sigma_prime, j, sigma, L_max):
    """Walks of smallest metric length in ``W^(sigma, sigma')_{j j'}``."""
    ws = enumerate_walks(graph, j_prime, sigma_prime, j, sigma, L_max)
    if not ws:
        return []
    best = ws[0].metric_len
    return [w for w in ws if abs(w.metric_len - best) <= 1e-12 * max(1.0, best)]


def reflectionless_companion(graph, w):
    """Reflectionless ``w'`` related to a shortest walk ``w``.

    Tries the three relations: ``w`` is ``w'`` extended by a traversal of
    ``j`` at the end (i), of ``j'`` at the start (ii), or both (iii).

    Returns
    -------
    (relation, Walk) or None
    """
    steps = list(w.steps)
    cands = []
    if steps and steps[-1][0] == w.end and not graph.is_external(w.end):
        cands.append(("i", steps[:-1], w.start_side, _other(w.end_side),
                      graph.edge_length(w.end)))
    if steps and steps[0][0] == w.start and not graph.is_external(w.start):
        cands.append(("ii", steps[1:], _other(w.start_side), w.end_side,
                      graph.edge_length(w.start)))
    if (len(steps) >= 2 and steps[-1][0] == w.end and steps[0][0] == w.start
            and not graph.is_external(w.end) and not graph.is_external(w.start)):
        cands.append(("iii", steps[1:-1], _other(w.start_side), _other(w.end_side),
                      graph.edge_length(w.end) + graph.edge_length(w.start)))
    for rel, inner, sp_, s_, added in cands:
        start_v = graph.endpoint(w.start, sp_)
        verts = [start_v]
        ok = True
        for eid, side in inner:
            if graph.endpoint(eid, side) != verts[-1]:
                ok = False
                break
            verts.append(graph.endpoint(eid, _other(side)))
        if not ok or graph.endpoint(w.end, s_) != verts[-1]:
            continue
        length = sum(graph.edge_length(e) for e, _ in inner)
        cand = Walk(w.start, sp_, w.end, s_, tuple(inner), tuple(verts), length)
        if cand.reflectionless and abs(w.metric_len - (length + added)) <= 1e-9:
            return rel, cand
    return None
