"""Laplace operators on metric graphs: vertex conditions, resolvents,
heat semigroups and walk expansions."""

__version__ = "0.1.0"

from .classification import (
    ClassificationReport,
    FellerVerdict,
    Positivity,
    classify_operator,
    continuity_form,
    feller_check,
    positivity_class,
    spectrum_interval_check,
    substochastic_check,
)
from .conditions import (
    BoundaryConditions,
    ContinuityForm,
    NotLocal,
    VertexConditions,
    assemble_global,
    assemble_nonlocal_mugnolo,
    decompose_local,
    equivalent,
    make_vertex_conditions,
    projection_complement,
    smatrix,
    smatrix_closed_form,
)
from .estimators import HeatSemigroup, ResolventTransformer
from .functions import GraphFunction
from .graph import MetricGraph, boundary_space_layout, build_graph, trace_vector
from .io import parse_spec
from .resolvent import (
    eigenvalue_scan,
    feller_sup_norm,
    green_kernel,
    green_matrix,
    kernel_positivity,
    resolvent_apply,
    secular_matrix,
)
from .semigroup import (
    evolve_fd_oracle,
    evolve_spectral,
    positivity_witness_search,
    verify_semigroup_properties,
)
from .walks import (
    enumerate_walks,
    green_via_walks,
    reflectionless_companion,
    walk_weight,
)

__all__ = [
    "BoundaryConditions",
    "ClassificationReport",
    "ContinuityForm",
    "FellerVerdict",
    "GraphFunction",
    "HeatSemigroup",
    "MetricGraph",
    "NotLocal",
    "Positivity",
    "ResolventTransformer",
    "VertexConditions",
    "assemble_global",
    "assemble_nonlocal_mugnolo",
    "boundary_space_layout",
    "build_graph",
    "classify_operator",
    "continuity_form",
    "decompose_local",
    "eigenvalue_scan",
    "enumerate_walks",
    "equivalent",
    "evolve_fd_oracle",
    "evolve_spectral",
    "feller_check",
    "feller_sup_norm",
    "green_kernel",
    "green_matrix",
    "green_via_walks",
    "kernel_positivity",
    "make_vertex_conditions",
    "parse_spec",
    "positivity_class",
    "positivity_witness_search",
    "projection_complement",
    "reflectionless_companion",
    "resolvent_apply",
    "secular_matrix",
    "smatrix",
    "smatrix_closed_form",
    "spectrum_interval_check",
    "substochastic_check",
    "trace_vector",
    "verify_semigroup_properties",
    "walk_weight",
]
