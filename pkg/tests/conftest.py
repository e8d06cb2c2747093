import numpy as np
import pytest

from mgsg import assemble_global, build_graph, make_vertex_conditions


def fig1_graph(a=1.0):
    return build_graph({
        "vertices": ["v0", "v1"],
        "internal_edges": [{"id": "i", "from": "v0", "to": "v1", "length": a}],
        "external_edges": [{"id": "e1", "vertex": "v0"}, {"id": "e2", "vertex": "v1"}],
    })


def star_graph(n):
    return build_graph({
        "vertices": ["v"],
        "external_edges": [{"id": f"e{k}", "vertex": "v"} for k in range(n)],
    })


def edge_graph(a=1.0):
    return build_graph({
        "vertices": ["v0", "v1"],
        "internal_edges": [{"id": "i", "from": "v0", "to": "v1", "length": a}],
    })


def compact_star(lengths):
    """Star of internal edges joined at ``c`` with free ends ``u_k``."""
    n = len(lengths)
    return build_graph({
        "vertices": ["c"] + [f"u{k}" for k in range(n)],
        "internal_edges": [{"id": f"i{k}", "from": "c", "to": f"u{k}", "length": a}
                           for k, a in enumerate(lengths)],
    })


def per_vertex(graph, kind, params=None, overrides=None):
    overrides = overrides or {}
    out = []
    for v in graph.vertices:
        k, p = overrides.get(v, (kind, params))
        out.append(make_vertex_conditions(k, p, n=graph.degree[v], vertex=v))
    return out


def global_bc(graph, kind, params=None, overrides=None):
    return assemble_global(graph, per_vertex(graph, kind, params, overrides))


def example_ab():
    """Global matrices of the two-vertex line example (delta pair +1, -1/2)."""
    A = np.array([[1, 0, -1, 0], [0, 1, 0, -1], [-1, 0, 0, 0], [0, 0.5, 0, 0]], dtype=complex)
    B = np.array([[0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 1, 0], [0, 1, 0, 1]], dtype=complex)
    return A, B


def random_tree(rng, n_vertices, n_external, length_range=(0.5, 2.0)):
    """Random connected tadpole-free graph (a tree plus external edges)."""
    vertices = [f"v{k}" for k in range(n_vertices)]
    internal = []
    for k in range(1, n_vertices):
        parent = int(rng.integers(0, k))
        internal.append({"id": f"i{k}", "from": vertices[parent], "to": vertices[k],
                         "length": float(rng.uniform(*length_range))})
    external = [{"id": f"e{k}", "vertex": vertices[int(rng.integers(0, n_vertices))]}
                for k in range(n_external)]
    return build_graph({"vertices": vertices, "internal_edges": internal,
                        "external_edges": external})


def random_unitary(rng, n):
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _random_hermitian(rng, m, sign):
    """Random Hermitian matrix: ``sign`` +1 (PSD), -1 (NSD) or 0 (indefinite)."""
    X = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    if sign == 0:
        H = X + X.conj().T
        # force both signs in the spectrum
        w, V = np.linalg.eigh(H)
        w[0], w[-1] = -abs(w[0]) - 0.5, abs(w[-1]) + 0.5
        return (V * w) @ V.conj().T
    return sign * (X @ X.conj().T)


def random_valid_pair(rng, m):
    """Random rank-valid ``(A, B)`` covering accretive, dissipative and neither.

    Pairs are ``A = C (L + P)``, ``B = C (I - P)`` with ``P`` a random
    orthogonal projector (possibly zero) and ``L = (I - P) W (I - P)``, so
    that ``AB^dagger = C L C^dagger``.  The signs of ``Re W`` and ``Im W``
    are drawn independently.
    """
    C = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    r = int(rng.integers(0, m))  # rank of the Dirichlet part
    Q, _ = np.linalg.qr(rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)))
    P = Q[:, :r] @ Q[:, :r].conj().T
    Pp = np.eye(m) - P
    W = _random_hermitian(rng, m, int(rng.choice([-1, 0, 1]))) \
        + 1j * _random_hermitian(rng, m, int(rng.choice([-1, 0, 1])))
    L = Pp @ W @ Pp
    return C @ (L + P), C @ Pp
