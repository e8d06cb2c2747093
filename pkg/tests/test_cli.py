import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from mgsg.cli import run
from mgsg.io import parse_spec, shipped_specs


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), out)
    text = out.getvalue()
    return code, text


def call_json(*argv):
    code, text = call(*argv)
    return code, json.loads(text)


@pytest.fixture
def spec_file(tmp_path):
    def write(doc, name="spec.json"):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return str(p)
    return write


def dirichlet_half_line():
    return {"vertices": ["v"], "external_edges": [{"id": "e", "vertex": "v"}],
            "conditions": {"type": "per_vertex", "v": {"kind": "dirichlet"}}}


def test_shipped_specs_present():
    assert {"example_4_1.json", "kirchhoff_star3.json"} <= set(shipped_specs())
    for name in shipped_specs():
        graph, cond = parse_spec(name)
        assert graph.m >= 1


def test_minimal_spec_valid(spec_file):
    code, rep = call_json("validate", spec_file(dirichlet_half_line()))
    assert code == 0
    assert rep["checks"][0] == {"name": "rank", "status": "pass", "value": 1}
    assert rep["payload"]["m"] == 1 and rep["payload"]["local"]


def test_missing_length_names_edge(spec_file):
    doc = {"vertices": ["a", "b"],
           "internal_edges": [{"id": "bridge", "from": "a", "to": "b"}],
           "conditions": {"type": "per_vertex", "a": {"kind": "standard"},
                          "b": {"kind": "standard"}}}
    code, rep = call_json("validate", spec_file(doc))
    assert code == 2
    assert rep["error"]["type"] == "SchemaError"
    assert "bridge" in rep["error"]["message"] and "length" in rep["error"]["message"]


def test_example_spec_validates():
    code, rep = call_json("validate", "example_4_1.json")
    assert code == 0 and rep["checks"][0]["status"] == "pass" and rep["checks"][0]["value"] == 4
    graph, bc = parse_spec("example_4_1.json")
    A = np.array([[1, 0, -1, 0], [0, 1, 0, -1], [-1, 0, 0, 0], [0, 0.5, 0, 0]])
    B = np.array([[0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 1, 0], [0, 1, 0, 1]])
    assert np.array_equal(bc.A, A) and np.array_equal(bc.B, B)


def test_classify_example():
    code, rep = call_json("classify", "example_4_1.json")
    assert code == 0
    p = rep["payload"]
    assert p["self_adjoint"] is True
    assert p["re_ab_neg_semidef"] is False
    assert abs(p["max_eig_re_ab"] - 0.5) < 1e-12


def test_smatrix_kirchhoff():
    code, rep = call_json("smatrix", "--kappa", "1", "kirchhoff_star3.json")
    assert code == 0
    S = np.array([[complex(*z) for z in row] for row in rep["payload"]["matrix"]])
    expected = np.full((3, 3), 2 / 3) - np.eye(3)
    assert np.abs(S - expected).max() < 1e-12


def test_smatrix_k_flag():
    code, rep = call_json("smatrix", "--k", "0,2", "kirchhoff_star3.json")
    assert code == 0 and rep["payload"]["k"] == [0.0, 2.0]


def test_eigs_example():
    code, rep = call_json("eigs", "--range", "0,50", "example_4_1.json")
    assert code == 0 and rep["payload"]["roots"] == []
    code, rep = call_json("eigs", "--range", "0,50", "example_4_1_a10.json")
    assert len(rep["payload"]["roots"]) == 1
    assert abs(rep["payload"]["roots"][0] - 0.24884909377413877) < 1e-8


def test_green_entries():
    code, rep = call_json("green", "--kappa", "1", "--x", "e2:0.3", "--y", "e1:0.3",
                          "--x", "e1:0.5", "--y", "e1:0.5", "line_delta.json")
    assert code == 0
    assert len(rep["payload"]["entries"]) == 2
    code, rep = call_json("green", "--kappa", "1", "--x", "nope:0.3", "--y", "e1:0.3",
                          "example_4_1.json")
    assert code == 2 and "nope" in rep["error"]["message"]


def test_feller_report():
    code, rep = call_json("feller", "--kappa", "2", "kirchhoff_star3.json")
    assert code == 0
    assert abs(rep["payload"]["sup_norm"] - 0.25) < 1e-10


def test_walks_report():
    code, rep = call_json("walks", "--from", "e1:-", "--to", "e2:-", "--cutoff", "3",
                          "example_4_1.json")
    assert code == 0
    first = rep["payload"]["walks"][0]
    assert set(first) == {"edges", "vertices", "comb_len", "metric_len", "reflectionless",
                          "weight_re", "weight_im"}
    assert first["edges"] == ["e2", "i", "e1"]


def test_evolve_csv():
    code, text = call("evolve", "--t", "0.1", "--method", "fd", "--format", "csv",
                      "dirichlet_edge.json")
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["edge_id", "x", "t", "re", "im"]
    assert {r[2] for r in rows[1:]} == {"0.0", "0.1"}


def test_verify_and_determinism():
    a = call("verify", "--seed", "3", "kirchhoff_star3.json")
    b = call("verify", "--seed", "3", "kirchhoff_star3.json")
    assert a == b and a[0] == 0


@pytest.mark.parametrize("argv", [
    ("classify", "example_4_1.json"),
    ("smatrix", "--kappa", "1", "kirchhoff_star3.json"),
    ("eigs", "example_4_1_a10.json"),
    ("walks", "--from", "e1:-", "--to", "e1:-", "--cutoff", "2", "example_4_1.json"),
])
def test_byte_identical(argv):
    assert call(*argv) == call(*argv)


def test_unknown_command():
    code, rep = call_json("frobnicate", "example_4_1.json")
    assert code == 2 and rep["error"]["type"] == "UnknownCommand"


def test_errors_are_structured(spec_file, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, rep = call_json("validate", str(bad))
    assert code == 2 and rep["error"]["type"] == "ParseError"
    code, rep = call_json("validate", str(tmp_path / "missing.json"))
    assert code == 2 and rep["error"]["type"] == "ParseError"
    rank = {"vertices": ["v"], "external_edges": [{"id": "e", "vertex": "v"}],
            "conditions": {"type": "global", "A": [[0]], "B": [[0]]}}
    code, rep = call_json("validate", spec_file(rank))
    assert code == 2 and rep["error"]["type"] == "RankDeficient"


def test_failed_check_exit_one(spec_file):
    # alpha = 0 with <g, h> > 0 breaks the sup-norm bound
    doc = {"vertices": ["v"], "external_edges": [{"id": f"e{k}", "vertex": "v"} for k in range(3)],
           "conditions": {"type": "per_vertex",
                          "v": {"kind": "generic", "alpha": 0, "g": [1, 1, 1]}}}
    code, rep = call_json("feller", "--kappa", "1", spec_file(doc))
    assert code == 1
    assert rep["checks"][0]["status"] == "fail"


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "mgsg.cli", "smatrix", "--kappa", "1",
                           "kirchhoff_star3.json"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "smatrix"
