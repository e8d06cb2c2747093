"""Argument checks shared by the public entry points."""
import numbers

import numpy as np

from .exceptions import DimensionMismatch, InvalidParams
from .functions import GraphFunction
from .graph import MetricGraph, build_graph
from .io import global_conditions, parse_spec


def check_graph(graph):
    """Return a :class:`MetricGraph` built from ``graph`` if needed."""
    if isinstance(graph, MetricGraph):
        return graph
    return build_graph(graph)


def check_conditions(graph, conditions):
    """Global :class:`BoundaryConditions` sized for ``graph``."""
    bc = global_conditions(graph, conditions)
    if bc.A.shape[0] != graph.m:
        raise DimensionMismatch(f"conditions act on {bc.A.shape[0]} ends, graph has {graph.m}")
    return bc


def check_spec(spec):
    """``(graph, bc)`` from a spec path, JSON text, dict or ``(graph, conditions)`` pair."""
    if isinstance(spec, tuple) and len(spec) == 2:
        graph = check_graph(spec[0])
        return graph, check_conditions(graph, spec[1])
    graph, cond = parse_spec(spec)
    return graph, check_conditions(graph, cond)


def check_kappa(kappa, name="kappa"):
    if not isinstance(kappa, numbers.Real) or not np.isfinite(kappa) or kappa <= 0:
        raise InvalidParams(f"{name} must be a positive finite number, got {kappa!r}")
    return float(kappa)


def check_k(k):
    """Spectral parameter in the upper half plane."""
    k = complex(k)
    if not k.imag > 0:
        raise InvalidParams(f"k must have positive imaginary part, got {k!r}")
    return k


def check_graph_function(graph, psi):
    if not isinstance(psi, GraphFunction):
        raise TypeError(f"expected a GraphFunction, got {type(psi).__name__}")
    if psi.graph is not graph and psi.graph.edge_ids != graph.edge_ids:
        raise DimensionMismatch("function lives on a different graph")
    return psi


def check_random_state(seed):
    """``numpy.random.Generator`` from ``None``, an int or a generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
