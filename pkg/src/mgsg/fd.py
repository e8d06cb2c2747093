"""Finite-difference Laplacian on a metric graph.

Independent of the closed-form kernel: every edge carries its own nodal
values (vertex values are duplicated once per incident edge end), interior
nodes use the 3-point stencil, and edge-end nodes use a half-cell balance

    (h/2) (s psi_e - f_e) = (psi_nbr - psi_e) / h - d_e,

where ``d_e`` is the derivative pointing into the edge.  Eliminating ``d``
through ``A psi_ + B psi_' = 0`` gives ``m`` boundary rows that are second
order accurate.  External edges are cut at ``x_max`` with a Dirichlet cap.
"""
import math

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .exceptions import LinearSolveFailure


class FDLaplacian:
    """Discrete ``Delta`` with boundary rows for conditions ``bc``.

    Parameters
    ----------
    graph : MetricGraph
    bc : BoundaryConditions
    h : float
        Largest admissible grid step.
    x_max : float, optional
        Truncation of external edges (required when there are any).
    """

    def __init__(self, graph, bc, h, x_max=None):
        if graph.n_external and x_max is None:
            raise ValueError("x_max is required on graphs with external edges")
        self.graph, self.bc, self.x_max = graph, bc, x_max
        self.offsets, self.steps, self.sizes = {}, {}, {}
        pos = 0
        for eid in graph.edge_ids:
            length = x_max if graph.is_external(eid) else graph.edge_length(eid)
            n = max(2, int(math.ceil(length / h - 1e-9)))
            self.offsets[eid] = pos
            self.steps[eid] = length / n
            self.sizes[eid] = n + 1
            pos += n + 1
        self.n = pos
        m = graph.m
        self.end_node = np.zeros(m, dtype=int)
        self.nbr_node = np.zeros(m, dtype=int)
        self.end_step = np.zeros(m)
        for eid in graph.edge_ids:
            off, size, step = self.offsets[eid], self.sizes[eid], self.steps[eid]
            p = graph.k_index(eid, "-")
            self.end_node[p], self.nbr_node[p], self.end_step[p] = off, off + 1, step
            if not graph.is_external(eid):
                q = graph.k_index(eid, "+")
                self.end_node[q] = off + size - 1
                self.nbr_node[q] = off + size - 2
                self.end_step[q] = step
        self._build()

    def nodes(self, eid):
        length = self.x_max if self.graph.is_external(eid) else self.graph.edge_length(eid)
        return np.linspace(0.0, length, self.sizes[eid])

    def _build(self):
        g, n, m = self.graph, self.n, self.graph.m
        rows, cols, vals = [], [], []
        interior = np.zeros(n, dtype=bool)
        caps = []
        for eid in g.edge_ids:
            off, size, step = self.offsets[eid], self.sizes[eid], self.steps[eid]
            idx = np.arange(off + 1, off + size - 1)
            interior[idx] = True
            c = 1.0 / step ** 2
            for d, w in ((-1, c), (0, -2 * c), (1, c)):
                rows.append(idx)
                cols.append(idx + d)
                vals.append(np.full(idx.size, w))
            if g.is_external(eid):
                caps.append(off + size - 1)
        self.interior = interior
        self.caps = np.array(caps, dtype=int)
        self.lap = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )
        ar = np.arange(m)
        self.E = sp.csr_matrix((np.ones(m), (ar, self.end_node)), shape=(m, n))
        inv = 1.0 / self.end_step
        self.D = sp.csr_matrix(
            (np.concatenate([inv, -inv]), (np.concatenate([ar, ar]),
                                          np.concatenate([self.nbr_node, self.end_node]))),
            shape=(m, n),
        )
        self.Hhalf = np.diag(self.end_step / 2)
        # rows that replace the endpoint equations
        self.bnd_nodes = self.end_node.copy()

    # ------------------------------------------------------------------
    def _assemble(self, interior_block, cap_block, bnd_block):
        """Stack row groups into one square sparse matrix.

        Interior rows keep their node index, cap rows their cap node and the
        ``m`` boundary rows go to the endpoint nodes.
        """
        n = self.n
        P_int = sp.diags(self.interior.astype(float))
        capsel = sp.csr_matrix(
            (np.ones(self.caps.size), (self.caps, np.arange(self.caps.size))),
            shape=(n, self.caps.size),
        )
        bsel = sp.csr_matrix(
            (np.ones(self.graph.m), (self.bnd_nodes, np.arange(self.graph.m))),
            shape=(n, self.graph.m),
        )
        out = P_int @ interior_block
        if self.caps.size:
            out = out + capsel @ cap_block
        out = out + bsel @ sp.csr_matrix(bnd_block)
        return sp.csc_matrix(out)

    def _cap_rows(self):
        return sp.csr_matrix(
            (np.ones(self.caps.size), (np.arange(self.caps.size), self.caps)),
            shape=(self.caps.size, self.n),
        )

    def resolvent_system(self, s):
        """Matrix and right-hand-side map of ``(-Delta + s) psi = f``."""
        A, B = self.bc.A, self.bc.B
        n = self.n
        inner = -self.lap + s * sp.identity(n, format="csr")
        bnd = A @ self.E.toarray() + (B @ self.D.toarray()) - s * (B @ self.Hhalf) @ self.E.toarray()
        M = self._assemble(inner, self._cap_rows(), bnd)
        rhs_b = -(B @ self.Hhalf)
        return M, rhs_b

    def _rhs(self, f, rhs_b):
        r = np.where(self.interior, f, 0.0).astype(complex)
        r[self.bnd_nodes] = rhs_b @ f[self.end_node]
        return r

    def factorize(self, s):
        M, rhs_b = self.resolvent_system(s)
        try:
            lu = splu(M.astype(complex))
        except RuntimeError as exc:
            raise LinearSolveFailure(str(exc)) from exc
        return lu, rhs_b

    def solve(self, s, f, factor=None):
        """Solve ``(-Delta + s) psi = f`` for nodal ``f`` (flat array)."""
        lu, rhs_b = factor or self.factorize(s)
        return lu.solve(self._rhs(np.asarray(f, dtype=complex), rhs_b))

    def node_index(self, eid, x):
        """Nearest grid node to ``x`` on edge ``eid`` and its position."""
        step = self.steps[eid]
        i = int(round(x / step))
        i = min(max(i, 0), self.sizes[eid] - 1)
        return self.offsets[eid] + i, i * step

    def weights(self):
        w = np.zeros(self.n)
        for eid in self.graph.edge_ids:
            off, size, step = self.offsets[eid], self.sizes[eid], self.steps[eid]
            w[off:off + size] = step
            w[off] *= 0.5
            w[off + size - 1] *= 0.5
        return w

    def green_column(self, s, eid, y, factor=None):
        """Discrete kernel ``r(., y)`` for a unit source at the node nearest ``y``."""
        j, y_snap = self.node_index(eid, y)
        f = np.zeros(self.n, dtype=complex)
        f[j] = 1.0 / self.weights()[j]
        return self.solve(s, f, factor), y_snap

    def values_at(self, vec, eid):
        off, size = self.offsets[eid], self.sizes[eid]
        return vec[off:off + size]

    # ------------------------------------------------------------------
    def evolution_operators(self):
        """Mass and stiffness rows of ``M psi' = K psi`` plus the differential mask.

        ``B`` is split by an SVD into its range (rows that carry a time
        derivative) and its left kernel (purely algebraic constraints
        ``U0^H A psi_ = 0``).
        """
        A, B = self.bc.A, self.bc.B
        n = self.n
        U, sv, _ = np.linalg.svd(B)
        r = int(np.sum(sv > 100 * np.finfo(float).eps * max(sv[0], 1e-300))) if sv.size else 0
        Uh = U.conj().T
        E = self.E.toarray()
        Kb = Uh @ (A @ E + B @ self.D.toarray())
        Mb = Uh @ (B @ self.Hhalf @ E)
        Mb[r:] = 0.0
        Kb[r:] = (Uh @ A @ E)[r:]
        n_caps = self.caps.size
        mass = self._assemble(sp.identity(n, format="csr"),
                              sp.csr_matrix((n_caps, n)), Mb)
        stiff = self._assemble(self.lap, self._cap_rows(), Kb)
        diff = np.where(self.interior, 1.0, 0.0)
        diff[self.bnd_nodes[:r]] = 1.0
        # rows were permuted by U^H: the first r boundary rows are differential
        self._diff_mask = diff
        return mass, stiff, diff

    def stepper(self, dt, theta):
        mass, stiff, diff = self.evolution_operators()
        Dm = sp.diags(diff)
        Da = sp.diags(1.0 - diff)
        lhs = Dm @ (mass - theta * dt * stiff) + Da @ stiff
        rhs = Dm @ (mass + (1 - theta) * dt * stiff)
        try:
            lu = splu(sp.csc_matrix(lhs).astype(complex))
        except RuntimeError as exc:
            raise LinearSolveFailure(str(exc)) from exc
        rhs = sp.csr_matrix(rhs).astype(complex)
        return lambda psi: lu.solve(rhs @ psi)
