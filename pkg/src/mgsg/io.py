"""Reading graph/condition spec files and JSON-friendly serialisation.

Complex numbers are written as two-element arrays ``[re, im]``.  Real
numbers are accepted wherever a complex number is expected.
"""
import hashlib
import json
import math
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .conditions import (
    BoundaryConditions,
    VertexConditions,
    assemble_global,
    make_vertex_conditions,
)
from .exceptions import ParseError, SchemaError
from .graph import build_graph


def parse_complex(value, where="value"):
    if isinstance(value, bool):
        raise SchemaError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise SchemaError(f"{where}: expected a number or [re, im], got {value!r}")


def parse_complex_vector(value, where):
    if not isinstance(value, (list, tuple)):
        raise SchemaError(f"{where}: expected a list")
    return np.array([parse_complex(v, f"{where}[{i}]") for i, v in enumerate(value)])


def parse_complex_matrix(value, where):
    if not isinstance(value, (list, tuple)) or not value:
        raise SchemaError(f"{where}: expected a non-empty list of rows")
    rows = [parse_complex_vector(r, f"{where}[{i}]") for i, r in enumerate(value)]
    if len({r.size for r in rows}) != 1:
        raise SchemaError(f"{where}: rows have different lengths")
    return np.vstack(rows)


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    if key not in obj:
        raise SchemaError(f"{where}: missing '{key}'")
    return obj[key]


def _graph_section(doc):
    if not isinstance(doc.get("vertices"), list):
        raise SchemaError("vertices: expected a list of ids")
    internal = []
    for n, e in enumerate(doc.get("internal_edges", [])):
        where = f"internal_edges[{n}]"
        eid = _require(e, "id", where)
        where = f"internal edge {eid!r}"
        length = _require(e, "length", where)
        if isinstance(length, bool) or not isinstance(length, (int, float)):
            raise SchemaError(f"{where}: 'length' must be a number")
        internal.append({
            "id": str(eid),
            "from": str(_require(e, "from", where)),
            "to": str(_require(e, "to", where)),
            "length": float(length),
        })
    external = []
    for n, e in enumerate(doc.get("external_edges", [])):
        where = f"external_edges[{n}]"
        eid = _require(e, "id", where)
        external.append({"id": str(eid),
                         "vertex": str(_require(e, "vertex", f"external edge {eid!r}"))})
    return {"vertices": [str(v) for v in doc["vertices"]],
            "internal_edges": internal, "external_edges": external}


def _vertex_conditions(graph, v, entry):
    where = f"conditions.{v}"
    kind = _require(entry, "kind", where)
    n = graph.degree[v]
    if kind == "dirichlet":
        return make_vertex_conditions("dirichlet", n=n, vertex=v)
    if kind == "neumann":
        return make_vertex_conditions("neumann", n=n, vertex=v)
    if kind == "standard":
        return make_vertex_conditions("standard", n=n, vertex=v)
    if kind == "delta":
        gamma = parse_complex(entry.get("gamma", 0.0), f"{where}.gamma")
        return make_vertex_conditions("delta", {"gamma": gamma}, n=n, vertex=v)
    if kind == "generic":
        alpha = _require(entry, "alpha", where)
        if alpha not in (0, -1):
            raise SchemaError(f"{where}.alpha: must be 0 or -1")
        g = parse_complex_vector(_require(entry, "g", where), f"{where}.g")
        if g.size != n:
            raise SchemaError(f"{where}.g: expected {n} entries, got {g.size}")
        return make_vertex_conditions("generic", {"alpha": alpha, "g": g}, n=n, vertex=v)
    if kind == "matrices":
        A = parse_complex_matrix(_require(entry, "A", where), f"{where}.A")
        B = parse_complex_matrix(_require(entry, "B", where), f"{where}.B")
        if A.shape != (n, n) or B.shape != (n, n):
            raise SchemaError(f"{where}: matrices must be {n}x{n}")
        return VertexConditions(v, A, B, "matrices")
    raise SchemaError(f"{where}.kind: unknown kind {kind!r}")


def shipped_specs():
    """Names of the spec files bundled with the package."""
    return sorted(p.name for p in resources.files("mgsg").joinpath("data").iterdir()
                  if p.name.endswith(".json"))


def resolve_path(source):
    """A filesystem path, falling back to a bundled spec of the same name."""
    path = Path(source)
    if not path.exists() and path.name == str(source) and path.name in shipped_specs():
        return Path(str(resources.files("mgsg").joinpath("data", path.name)))
    return path


def load_document(source):
    """Read a spec from a path, JSON text or an already parsed dict."""
    if isinstance(source, dict):
        return source
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        try:
            text = resolve_path(source).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read {source}: {exc}") from exc
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    return doc


def parse_spec(source):
    """Parse a spec file into ``(graph, conditions)``.

    ``conditions`` is a :class:`BoundaryConditions` for ``"global"`` specs
    and a list of :class:`VertexConditions` for ``"per_vertex"`` specs.

    Raises
    ------
    ParseError, SchemaError
        Plus every graph or condition construction error.
    """
    doc = load_document(source)
    graph = build_graph(_graph_section(doc))
    cond = _require(doc, "conditions", "spec")
    ctype = _require(cond, "type", "conditions")
    if ctype == "global":
        A = parse_complex_matrix(_require(cond, "A", "conditions"), "conditions.A")
        B = parse_complex_matrix(_require(cond, "B", "conditions"), "conditions.B")
        if A.shape != (graph.m, graph.m) or B.shape != (graph.m, graph.m):
            raise SchemaError(f"conditions: A and B must be {graph.m}x{graph.m}")
        return graph, BoundaryConditions(A, B)
    if ctype == "per_vertex":
        per = []
        for v in graph.vertices:
            if v not in cond:
                raise SchemaError(f"conditions: missing entry for vertex {v!r}")
            per.append(_vertex_conditions(graph, v, cond[v]))
        return graph, per
    raise SchemaError(f"conditions.type: unknown type {ctype!r}")


def global_conditions(graph, conditions):
    if isinstance(conditions, BoundaryConditions):
        return conditions
    return assemble_global(graph, conditions)


def to_jsonable(obj):
    """Recursively convert numpy and complex values for ``json.dumps``."""
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean_float(obj.real), _clean_float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return _clean_float(obj)
    return obj


def _clean_float(x):
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    return x


def digest(source):
    """SHA-256 of the raw spec text (or of its canonical JSON for dicts)."""
    if isinstance(source, dict):
        data = json.dumps(source, sort_keys=True).encode()
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        data = source.encode()
    else:
        data = resolve_path(source).read_bytes()
    return hashlib.sha256(data).hexdigest()
