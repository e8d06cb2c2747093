import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgsg import build_graph, green_kernel
from mgsg.conditions import assemble_global, make_vertex_conditions, smatrix
from mgsg.exceptions import (
    CutoffTooLarge,
    MissingVertexMatrix,
    NotContinuousInput,
    SeriesDiverges,
    TadpolePresent,
)
from mgsg.walks import (
    enumerate_walks,
    green_via_walks,
    large_kappa_threshold,
    reflectionless_companion,
    series_ratio,
    shortest_walks,
    vertex_dichotomy,
    vertex_smatrices,
    walk_weight,
    wj_positivity_term,
)

from conftest import compact_star, edge_graph, fig1_graph, per_vertex, random_tree, star_graph


def tadpole_graph():
    return build_graph({"vertices": ["v"],
                        "internal_edges": [{"id": "t", "from": "v", "to": "v", "length": 1.0}],
                        "external_edges": [{"id": "e", "vertex": "v"}]})


# enumeration ----------------------------------------------------------------

def test_fig1_shortest_walk():
    g = fig1_graph(1.7)
    ws = shortest_walks(g, "e1", "-", "e2", "-", 10.0)
    assert len(ws) == 1
    w = ws[0]
    assert w.sequence == ("e2", "v1", "i", "v0", "e1")
    assert w.comb_len == 1 and abs(w.metric_len - 1.7) < 1e-15
    assert w.reflectionless


def test_trivial_walk_present():
    g = fig1_graph()
    ws = enumerate_walks(g, "e1", "-", "i", "-", 0.0)
    assert len(ws) == 1 and ws[0].is_trivial
    assert ws[0].reflectionless
    assert ws[0].metric_len == 0 and ws[0].comb_len == 0


def test_opposite_ends_example():
    a = 1.3
    ws = enumerate_walks(edge_graph(a), "i", "-", "i", "+", 3 * a)
    assert [w.comb_len for w in ws] == [1, 3]


@pytest.mark.parametrize("N", range(0, 7))
@pytest.mark.parametrize("sp, s", [("-", "+"), ("+", "-"), ("-", "-"), ("+", "+")])
def test_single_edge_counts(N, sp, s):
    # entering and leaving through the same end needs an even number of traversals
    a = 0.9
    ws = enumerate_walks(edge_graph(a), "i", sp, "i", s, N * a)
    expected = 1 + N // 2 if sp == s else (N + 1) // 2
    assert len(ws) == expected
    assert all(w.comb_len % 2 == (sp != s) for w in ws)


def test_ordering_by_length():
    g = compact_star([1.0, 0.4, 0.7])
    ws = enumerate_walks(g, "i0", "-", "i1", "-", 4.0)
    lens = [w.metric_len for w in ws]
    assert lens == sorted(lens)
    for w in ws:
        assert abs(w.metric_len - sum(g.edge_length(e) for e, _ in w.steps)) < 1e-12


def test_walk_incidence():
    g = compact_star([1.0, 0.4, 0.7])
    for w in enumerate_walks(g, "i0", "+", "i2", "-", 3.5):
        assert w.vertices[0] == g.endpoint("i0", "+")
        for (e, side), v, v_next in zip(w.steps, w.vertices, w.vertices[1:]):
            assert g.endpoint(e, side) == v
            assert g.endpoint(e, "+" if side == "-" else "-") == v_next
        assert g.endpoint("i2", "-") == w.vertices[-1]


def test_tadpole_refused():
    with pytest.raises(TadpolePresent):
        enumerate_walks(tadpole_graph(), "e", "-", "e", "-", 1.0)
    with pytest.raises(TadpolePresent):
        green_via_walks(tadpole_graph(), per_vertex(tadpole_graph(), "standard"), 2.0,
                        ("e", 0.1), ("e", 0.2), 1.0)


def test_cutoff_too_large():
    g = compact_star([0.1, 0.1, 0.1])
    with pytest.raises(CutoffTooLarge):
        enumerate_walks(g, "i0", "-", "i1", "-", 10.0, max_walks=1000)


# weights --------------------------------------------------------------------

def test_trivial_weight_is_matrix_entry():
    g = star_graph(3)
    conds = per_vertex(g, "delta", {"gamma": 0.6})
    kappa = 1.4
    S = vertex_smatrices(g, conds, kappa)
    Sv = smatrix(1j * kappa, make_vertex_conditions("delta", {"gamma": 0.6}, n=3))
    for a in range(3):
        for b in range(3):
            (w,) = enumerate_walks(g, f"e{b}", "-", f"e{a}", "-", 0.0)
            assert abs(walk_weight(kappa, w, S, g) - Sv[a, b]) < 1e-15


def test_standard_deg2_weight_one():
    g = fig1_graph()
    S = vertex_smatrices(g, per_vertex(g, "standard"), 1.0)
    (w,) = shortest_walks(g, "e1", "-", "e2", "-", 5.0)
    assert abs(walk_weight(1.0, w, S, g) - 1.0) < 1e-15


def test_dirichlet_reflection_factor():
    g = edge_graph(1.0)
    S = vertex_smatrices(g, per_vertex(g, "dirichlet"), 2.0)
    ws = enumerate_walks(g, "i", "-", "i", "-", 4.0)
    # every walk reflects once per traversal
    for w in ws:
        assert abs(walk_weight(2.0, w, S, g) - (-1.0) ** (w.comb_len + 1)) < 1e-15


def test_missing_vertex_matrix():
    g = fig1_graph()
    S = vertex_smatrices(g, per_vertex(g, "standard"), 1.0)
    del S["v1"]
    (w,) = shortest_walks(g, "e1", "-", "e2", "-", 5.0)
    with pytest.raises(MissingVertexMatrix):
        walk_weight(1.0, w, S, g)


# series ---------------------------------------------------------------------

def test_fig1_standard_single_walk():
    a, kappa, x, y = 1.2, 0.8, 0.3, 0.5
    g = fig1_graph(a)
    conds = per_vertex(g, "standard")
    val, bound = green_via_walks(g, conds, 3.0, ("e2", x), ("e1", y), 0.0)
    # at L_cut = 0 the one transmitting walk is not included yet
    val, bound = green_via_walks(g, conds, kappa, ("e2", x), ("e1", y), 5 * a)
    assert abs(val - math.exp(-kappa * (x + a + y)) / (2 * kappa)) < 1e-15
    kern = green_kernel(g, assemble_global(g, conds), 1j * kappa, ("e2", x), ("e1", y))
    assert abs(val - kern) < 1e-14


def _dirichlet_closed(kappa, a, x, y):
    lo, hi = min(x, y), max(x, y)
    return math.sinh(kappa * lo) * math.sinh(kappa * (a - hi)) / (kappa * math.sinh(kappa * a))


def test_dirichlet_sinh_series():
    a, kappa = 2.0, 2.0
    g = edge_graph(a)
    conds = per_vertex(g, "dirichlet")
    for x, y in [(0.3, 0.3), (0.5, 1.7), (1.9, 0.1)]:
        val, bound = green_via_walks(g, conds, kappa, ("i", x), ("i", y), 6 * a)
        assert abs(val - _dirichlet_closed(kappa, a, x, y)) <= 1e-10


def test_dirichlet_geometric_convergence():
    a, kappa, x = 1.0, 1.5, 0.4
    g = edge_graph(a)
    conds = per_vertex(g, "dirichlet")
    exact = _dirichlet_closed(kappa, a, x, x)
    errs = [abs(green_via_walks(g, conds, kappa, ("i", x), ("i", x), 2 * n * a)[0] - exact)
            for n in range(1, 5)]
    ratios = [errs[n + 1] / errs[n] for n in range(3)]
    np.testing.assert_allclose(ratios, math.exp(-2 * kappa * a), rtol=1e-6)


def test_trivial_walks_only_on_external_star():
    g = star_graph(3)
    conds = per_vertex(g, "delta", {"gamma": -0.7})
    bc = assemble_global(g, conds)
    kappa = 1.1
    for x, y in [(("e0", 0.2), ("e1", 0.9)), (("e2", 0.5), ("e2", 0.1))]:
        val, bound = green_via_walks(g, conds, kappa, x, y, 0.0)
        assert bound == 0.0
        assert abs(val - green_kernel(g, bc, 1j * kappa, x, y)) < 1e-14


def _series_cases():
    g1 = fig1_graph(0.8)
    yield g1, per_vertex(g1, None, overrides={"v0": ("delta", {"gamma": 1.0}),
                                              "v1": ("delta", {"gamma": -0.5})})
    g2 = compact_star([0.6, 1.0, 0.8])
    yield g2, per_vertex(g2, "standard", overrides={"u0": ("dirichlet", None)})
    g3 = edge_graph(0.7)
    yield g3, per_vertex(g3, "generic", {"alpha": 0, "g": [-1.0]})
    rng = np.random.default_rng(7)
    for _ in range(3):
        g = random_tree(rng, 4, 2)
        yield g, per_vertex(g, "delta", {"gamma": float(rng.uniform(0.2, 2.0))})


@pytest.mark.parametrize("case", range(6))
def test_series_within_bound(case):
    g, conds = list(_series_cases())[case]
    bc = assemble_global(g, conds)
    kappa = large_kappa_threshold(g, conds)
    assert series_ratio(g, vertex_smatrices(g, conds, kappa), kappa)[0] < 0.5
    rng = np.random.default_rng(case)
    for _ in range(4):
        pts = []
        for _ in range(2):
            e = g.edge_ids[rng.integers(len(g.edge_ids))]
            length = 2.0 if g.is_external(e) else g.edge_length(e)
            pts.append((e, float(rng.uniform(0, length))))
        for L in (0.0, 2 * g.lengths.max(), 5 * g.lengths.max()):
            val, bound = green_via_walks(g, conds, kappa, pts[0], pts[1], L)
            exact = green_kernel(g, bc, 1j * kappa, pts[0], pts[1])
            # floor for floating-point roundoff in the partial sum
            assert abs(val - exact) <= bound + 1e-15 * max(1.0, abs(exact))


def test_series_diverges():
    # alpha = 0, g = 2 on a degree-1 vertex: S(0.4i) = -9
    g = edge_graph(0.1)
    conds = per_vertex(g, "generic", {"alpha": 0, "g": [2.0]})
    with pytest.raises(SeriesDiverges):
        green_via_walks(g, conds, 0.4, ("i", 0.05), ("i", 0.05), 1.0)


# positivity term and dichotomy ----------------------------------------------

def test_wj_standard_star_zero():
    g = star_graph(3)
    res = wj_positivity_term(g, per_vertex(g, "standard"), 1.0, "e1", 0.4)
    assert abs(res["value"]) < 1e-15
    assert res["V1"] == ["v"] and res["V0"] == []


@pytest.mark.parametrize("s, factor", [(-1.0, 1.0), (-2.0, 2.0 / 3.0)])
def test_wj_generic_star(s, factor):
    # (I - S) h = 2 h / (1 - kappa s) for alpha = 0 at kappa = 1
    g = star_graph(3)
    gv = np.full(3, s / 3)
    res = wj_positivity_term(g, per_vertex(g, "generic", {"alpha": 0, "g": gv}), 1.0, "e0", 0.7)
    assert abs(res["value"] - factor * math.exp(-0.7)) < 1e-14
    assert res["V0"] == ["v"]


def test_wj_fig1_mixed_case():
    g = fig1_graph()
    conds = per_vertex(g, None, overrides={"v0": ("generic", {"alpha": 0, "g": [-1.0, -0.5]}),
                                           "v1": ("standard", None)})
    for e in g.edge_ids:
        length = 3.0 if g.is_external(e) else g.edge_length(e)
        for x in np.linspace(0, length, 7):
            res = wj_positivity_term(g, conds, 20.0, e, float(x))
            assert res["V0"] == ["v0"] and res["V1"] == ["v1"]
            assert res["value"].real > 0 and abs(res["value"].imag) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.sampled_from([0, -1]), st.sampled_from([1.0, -1.0]),
       st.integers(0, 10 ** 6))
def test_dichotomy_never_mixed(n, alpha, sign, seed):
    r = np.random.default_rng(seed)
    gv = sign * r.uniform(0.1, 2.0, n)
    vc = make_vertex_conditions("generic", {"alpha": alpha, "g": gv}, n=n)
    for kappa in (0.1, 0.5, 1.0, 2.0, 5.0, 20.0):
        d = smatrix(1j * kappa, vc) @ np.ones(n) - 1.0
        assert np.abs(d.imag).max() < 1e-9
        neg, zero, pos = d.real < -1e-9, np.abs(d.real) < 1e-9, d.real > 1e-9
        assert neg.all() or zero.all() or pos.all()
        if alpha == -1:
            assert zero.all()
        elif sign < 0:
            assert neg.all()
            assert vertex_dichotomy({"v": smatrix(1j * kappa, vc)}) == {"v": "V0"}


def test_dichotomy_rejects_mixed():
    S = np.diag([0.5, 1.0])
    with pytest.raises(NotContinuousInput):
        vertex_dichotomy({"v": S})


# shortest-walk decomposition ------------------------------------------------

def _non_reflectionless_shortest(rng, want):
    found = []
    while len(found) < want:
        g = random_tree(rng, int(rng.integers(2, 6)), int(rng.integers(0, 3)))
        ends = [(e, s) for e in g.edge_ids for s in g.sides(e)]
        L = 2 * g.lengths.sum() + 2 * g.lengths.max()
        for jp, sp in ends:
            for j, s in ends:
                for w in shortest_walks(g, jp, sp, j, s, L):
                    if not w.reflectionless:
                        found.append((g, w))
    return found[:want]


def test_reflectionless_companion():
    rng = np.random.default_rng(2024)
    cases = _non_reflectionless_shortest(rng, 50)
    assert len(cases) == 50
    for g, w in cases:
        res = reflectionless_companion(g, w)
        assert res is not None, w
        rel, wp = res
        assert wp.reflectionless
        added = {"i": g.edge_length(w.end), "ii": g.edge_length(w.start),
                 "iii": g.edge_length(w.end) + g.edge_length(w.start)}[rel]
        assert abs(w.metric_len - (wp.metric_len + added)) < 1e-12


def test_walk_to_dict():
    g = fig1_graph()
    S = vertex_smatrices(g, per_vertex(g, "standard"), 1.0)
    (w,) = shortest_walks(g, "e1", "-", "e2", "-", 5.0)
    d = w.to_dict(walk_weight(1.0, w, S, g))
    assert d == {"edges": ["e2", "i", "e1"], "vertices": ["v1", "v0"], "comb_len": 1,
                 "metric_len": 1.0, "reflectionless": True, "weight_re": 1.0, "weight_im": 0.0}
