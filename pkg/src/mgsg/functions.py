"""Sampled functions on metric graphs."""
import csv
import io
import math

import numpy as np


class GraphFunction:
    """Per-edge samples on uniform grids.

    Parameters
    ----------
    graph : MetricGraph
    values : dict
        Edge id to a 1-d array of samples at the nodes ``x_0 = 0, ..., x_N``.
    x_max : float, optional
        Truncation point of every external edge.
    t : float
        Time stamp, used by the evolution routines.
    method : str
        Label of the producing method, stored in dumps.
    """

    def __init__(self, graph, values, x_max=None, t=0.0, method="sampled"):
        self.graph = graph
        self.x_max = x_max
        self.t = float(t)
        self.method = method
        self.values = {}
        for eid in graph.edge_ids:
            v = np.asarray(values[eid])
            if v.ndim != 1 or v.size < 2:
                raise ValueError(f"edge {eid!r} needs at least two samples")
            self.values[eid] = v
        if graph.n_external and x_max is None:
            raise ValueError("x_max is required on graphs with external edges")

    # construction -------------------------------------------------------
    @classmethod
    def grid(cls, graph, h, x_max=None):
        """Node arrays with step at most ``h`` on every edge."""
        out = {}
        for eid in graph.edge_ids:
            length = x_max if graph.is_external(eid) else graph.edge_length(eid)
            n = max(2, int(math.ceil(length / h - 1e-9)))
            out[eid] = np.linspace(0.0, length, n + 1)
        return out

    @classmethod
    def from_callable(cls, graph, f, h=1e-2, x_max=None, dtype=float):
        """Sample ``f(edge_id, x)`` (vectorised in ``x``) on a uniform grid."""
        nodes = cls.grid(graph, h, x_max)
        vals = {
            eid: np.asarray(f(eid, x), dtype=dtype) * np.ones_like(x, dtype=dtype)
            for eid, x in nodes.items()
        }
        return cls(graph, vals, x_max=x_max)

    @classmethod
    def constant(cls, graph, c, h=1e-2, x_max=None):
        return cls.from_callable(graph, lambda e, x: c + 0 * x, h=h, x_max=x_max,
                                 dtype=complex if np.iscomplexobj(c) else float)

    def like(self, values, t=None, method=None):
        return GraphFunction(
            self.graph, values, self.x_max,
            self.t if t is None else t, method or self.method,
        )

    # geometry -----------------------------------------------------------
    def nodes(self, eid):
        v = self.values[eid]
        length = self.x_max if self.graph.is_external(eid) else self.graph.edge_length(eid)
        return np.linspace(0.0, length, v.size)

    def step(self, eid):
        n = self.values[eid].size - 1
        length = self.x_max if self.graph.is_external(eid) else self.graph.edge_length(eid)
        return length / n

    @property
    def n_samples(self):
        return sum(v.size for v in self.values.values())

    def flat(self):
        return np.concatenate([self.values[e] for e in self.graph.edge_ids])

    def unflat(self, vec, **kw):
        out, pos = {}, 0
        for eid in self.graph.edge_ids:
            n = self.values[eid].size
            out[eid] = vec[pos:pos + n]
            pos += n
        return self.like(out, **kw)

    def weights(self):
        """Trapezoid weights matching :meth:`flat`."""
        parts = []
        for eid in self.graph.edge_ids:
            w = np.full(self.values[eid].size, self.step(eid))
            w[0] *= 0.5
            w[-1] *= 0.5
            parts.append(w)
        return np.concatenate(parts)

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        return self.like({e: self.values[e] + other.values[e] for e in self.values})

    def __sub__(self, other):
        return self.like({e: self.values[e] - other.values[e] for e in self.values})

    def __mul__(self, c):
        return self.like({e: c * v for e, v in self.values.items()})

    __rmul__ = __mul__

    # norms --------------------------------------------------------------
    def inner(self, other):
        """``<self, other>``, conjugate-linear in ``self``."""
        return complex(np.sum(self.weights() * np.conj(self.flat()) * other.flat()))

    def l2_norm(self):
        return math.sqrt(max(self.inner(self).real, 0.0))

    def sup_norm(self):
        return float(np.max(np.abs(self.flat())))

    def min_real(self):
        return float(np.min(self.flat().real))

    def integral(self):
        return complex(np.sum(self.weights() * self.flat()))

    def endpoint_values(self):
        """Vertex id to the list of boundary samples on incident edge ends."""
        out = {v: [] for v in self.graph.vertices}
        for eid in self.graph.edge_ids:
            vals = self.values[eid]
            out[self.graph.endpoint(eid, "-")].append(vals[0])
            if not self.graph.is_external(eid):
                out[self.graph.endpoint(eid, "+")].append(vals[-1])
        return out

    def vertex_mismatch(self):
        """Largest spread of boundary values over all vertices."""
        worst = 0.0
        for vals in self.endpoint_values().values():
            vals = np.asarray(vals)
            worst = max(worst, float(np.max(np.abs(vals - vals[0]))))
        return worst

    def second_difference_max(self):
        """``max |psi''|`` estimated by centred differences."""
        best = 0.0
        for eid, v in self.values.items():
            if v.size >= 3:
                d2 = np.diff(v, 2) / self.step(eid) ** 2
                best = max(best, float(np.max(np.abs(d2))))
        return best

    def max_step(self):
        return max(self.step(e) for e in self.values)

    def evaluate(self, eid, x):
        """Linear interpolation on edge ``eid``."""
        nodes = self.nodes(eid)
        v = self.values[eid]
        if np.iscomplexobj(v):
            return np.interp(x, nodes, v.real) + 1j * np.interp(x, nodes, v.imag)
        return np.interp(x, nodes, v)

    # dumps --------------------------------------------------------------
    def rows(self):
        for eid in self.graph.edge_ids:
            for x, val in zip(self.nodes(eid), self.values[eid]):
                val = complex(val)
                yield eid, float(x), self.t, val.real, val.imag


def trajectory_csv(functions):
    """CSV text with columns ``edge_id, x, t, re, im`` for a list of samples."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["edge_id", "x", "t", "re", "im"])
    for f in functions:
        for row in f.rows():
            writer.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3]), repr(row[4])])
    return buf.getvalue()
