"""Command-line interface: ``mgsg <command> [options] SPEC``.

Every command prints one JSON report (or CSV with ``--format csv``) and
exits with 0 when all checks pass, 1 when a check fails and 2 on errors.
"""
import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .classification import (
    classify_operator,
    continuity_form,
    feller_check,
    positivity_class,
    quadratic_form_min,
)
from .conditions import BoundaryConditions, NotLocal, decompose_local, smatrix
from .exceptions import MGSGError, SchemaError, UnknownCommand
from .functions import GraphFunction, trajectory_csv
from .io import digest, global_conditions, parse_spec, to_jsonable
from .resolvent import GreenKernelParts, eigenvalue_scan, feller_sup_norm
from .semigroup import evolve_fd_oracle, evolve_spectral, verify_semigroup_properties
from .walks import enumerate_walks, vertex_smatrices, walk_weight

SCHEMA_VERSION = "1.0"
COMMANDS = ("validate", "classify", "smatrix", "green", "eigs", "feller",
            "evolve", "walks", "verify")


class Report:
    def __init__(self, command, source):
        self.command = command
        self.source = source
        self.checks = []
        self.payload = {}
        self.warnings = []
        self.table = None

    def check(self, name, ok, value=None):
        self.checks.append({"name": name, "status": "pass" if ok else "fail",
                            "value": value})

    @property
    def failed(self):
        return any(c["status"] == "fail" for c in self.checks)

    def to_dict(self):
        return to_jsonable({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "input_digest": digest(self.source),
            "checks": self.checks,
            "payload": self.payload,
            "warnings": self.warnings,
        })


# --------------------------------------------------------------------------
# argument helpers

def _complex_arg(text):
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")


def _point_arg(text):
    edge, sep, pos = text.rpartition(":")
    if not sep or not edge:
        raise argparse.ArgumentTypeError(f"expected 'edge:pos', got {text!r}")
    try:
        return edge, float(pos)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad position in {text!r}") from None


def _end_arg(text):
    edge, sep, side = text.rpartition(":")
    if not sep or side not in ("-", "+"):
        raise argparse.ArgumentTypeError(f"expected 'edge:-' or 'edge:+', got {text!r}")
    return edge, side


def _range_arg(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from None
    return lo, hi


def _k_from(args, default_kappa=1.0):
    if getattr(args, "k", None) is not None:
        return args.k
    kappa = args.kappa if getattr(args, "kappa", None) is not None else default_kappa
    return 1j * kappa


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mgsg", description="Laplace operators on metric graphs.")
    parser.add_argument("--version", action="version", version=f"mgsg {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("spec", help="JSON file with graph and conditions")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--seed", type=int, default=0)
        return p

    add("validate", "parse and validate a spec")
    p = add("classify", "accretivity, self-adjointness, continuity, positivity, Feller")
    p.add_argument("--grid", type=str, default=None,
                   help="comma separated kappa values for the contraction tests")
    p = add("smatrix", "vertex scattering matrix S(k)")
    p.add_argument("--k", type=_complex_arg)
    p.add_argument("--kappa", type=float)
    p = add("green", "Green's matrix entries")
    p.add_argument("--k", type=_complex_arg)
    p.add_argument("--kappa", type=float)
    p.add_argument("--x", type=_point_arg, action="append", required=True)
    p.add_argument("--y", type=_point_arg, action="append", required=True)
    p = add("eigs", "negative eigenvalues -kappa^2 of -Delta")
    p.add_argument("--range", type=_range_arg, default=(0.0, 50.0))
    p.add_argument("--grid", type=int, default=400)
    p = add("feller", "sup-norm resolvent bound and Feller verdict")
    p.add_argument("--kappa", type=float, default=1.0)
    p = add("evolve", "heat semigroup applied to a test function")
    p.add_argument("--t", type=float, action="append", required=True)
    p.add_argument("--h", type=float, default=1e-2)
    p.add_argument("--x-max", type=float, default=10.0)
    p.add_argument("--method", choices=("spectral", "fd"), default="spectral")
    p.add_argument("--initial", choices=("bump", "constant"), default="bump")
    p = add("walks", "enumerate walks and their weights")
    p.add_argument("--from", dest="start", type=_end_arg, required=True)
    p.add_argument("--to", dest="end", type=_end_arg, required=True)
    p.add_argument("--cutoff", type=float, required=True)
    p.add_argument("--kappa", type=float, default=1.0)
    p = add("verify", "run the built-in consistency checks on a spec")
    p.add_argument("--kappa", type=float, default=2.0)
    return parser


# --------------------------------------------------------------------------
# commands

def _local_forms(graph, cond, report):
    bc = global_conditions(graph, cond)
    parts = cond if not isinstance(cond, BoundaryConditions) else decompose_local(graph, bc)
    if isinstance(parts, NotLocal):
        report.warnings.append("conditions are not local")
        return bc, None
    return bc, continuity_form(graph, parts)


def cmd_validate(args, graph, cond, report):
    bc = global_conditions(graph, cond)
    report.check("rank", bc.rank_ok, bc.rank)
    parts = decompose_local(graph, bc)
    report.payload = {
        "m": graph.m,
        "degrees": dict(graph.degree),
        "tadpoles": list(graph.tadpoles),
        "local": not isinstance(parts, NotLocal),
        "graph": graph.to_dict(),
    }


def cmd_classify(args, graph, cond, report):
    bc, forms = _local_forms(graph, cond, report)
    kappas = (0.5, 1.0, 3.0, 10.0)
    if args.grid:
        kappas = tuple(float(v) for v in args.grid.split(","))
    rep = classify_operator(bc, kappas=kappas, ks=kappas)
    payload = rep.to_dict()
    payload["quadratic_form_min"] = quadratic_form_min(bc)
    report.check("rank", rep.rank_ok)
    report.check("accretive_criteria_agree",
                 rep.re_ab_neg_semidef == all(rep.s_contraction.values())
                 == rep.quadratic_form_nonneg)
    report.check("dissipative_criteria_agree",
                 rep.im_ab_neg_semidef == all(rep.s_minus_k_contraction.values()))
    if forms is not None:
        payload["continuity_forms"] = {v: f.to_dict() for v, f in forms.items()}
        if all(f.kind != "not_continuous" for f in forms.values()):
            pos = positivity_class(forms)
            payload["positivity"] = {v: r.verdict.value for v, r in pos.items()}
            report.check("positivity_grid_consistent",
                         all(r.verified_on_grid for r in pos.values()))
            if not graph.has_tadpoles or graph.n_internal == 0:
                payload["feller"] = feller_check(graph, forms).value
    report.payload = payload


def cmd_smatrix(args, graph, cond, report):
    bc = global_conditions(graph, cond)
    k = _k_from(args)
    S = smatrix(k, bc)
    report.payload = {"k": k, "matrix": S, "labels": [list(lab) for lab in graph.layout.labels]}
    report.table = (["row", "col", "re", "im"],
                    [[r, c, S[r, c].real, S[r, c].imag]
                     for r in range(S.shape[0]) for c in range(S.shape[1])])


def cmd_green(args, graph, cond, report):
    bc = global_conditions(graph, cond)
    k = _k_from(args)
    if len(args.x) != len(args.y):
        raise SchemaError("--x and --y must be given the same number of times")
    parts = GreenKernelParts.build(graph, bc, k)
    records = []
    for (ex, px), (ey, py) in zip(args.x, args.y):
        for e in (ex, ey):
            if e not in graph.edge_ids:
                raise SchemaError(f"unknown edge {e!r}")
        val = parts.entry(ex, px, ey, py)
        records.append({"edge_i": ex, "x": px, "edge_j": ey, "y": py,
                        "re": val.real, "im": val.imag})
    report.payload = {"k": k, "entries": records}
    report.table = (["edge_i", "x", "edge_j", "y", "re", "im"],
                    [[r["edge_i"], r["x"], r["edge_j"], r["y"], r["re"], r["im"]]
                     for r in records])


def cmd_eigs(args, graph, cond, report):
    bc = global_conditions(graph, cond)
    scan = eigenvalue_scan(graph, bc, args.range, grid=args.grid)
    report.payload = {
        "range": list(args.range),
        "roots": scan.roots,
        "eigenvalues": [-r ** 2 for r in scan.roots],
        "residuals": scan.residuals,
        "rejected_brackets": scan.rejected,
    }
    report.table = (["kappa", "eigenvalue"], [[r, -r ** 2] for r in scan.roots])


def cmd_feller(args, graph, cond, report):
    bc, forms = _local_forms(graph, cond, report)
    kappa = args.kappa
    value = feller_sup_norm(graph, bc, kappa)
    bound = 1.0 / kappa ** 2
    report.check("sup_norm_bound", value <= bound * (1 + 1e-9), value)
    payload = {"kappa": kappa, "sup_norm": value, "bound": bound}
    if forms is not None and all(f.kind != "not_continuous" for f in forms.values()):
        payload["verdict"] = feller_check(graph, forms).value
    report.payload = payload


def _initial(graph, args):
    if args.initial == "constant":
        return GraphFunction.constant(graph, 1.0, h=args.h,
                                      x_max=args.x_max if graph.n_external else None)

    def bump(e, x):
        length = args.x_max if graph.is_external(e) else graph.edge_length(e)
        return np.exp(-((x - 0.5 * length) / (0.2 * length)) ** 2)

    return GraphFunction.from_callable(graph, bump, h=args.h,
                                       x_max=args.x_max if graph.n_external else None)


def cmd_evolve(args, graph, cond, report):
    bc = global_conditions(graph, cond)
    psi0 = _initial(graph, args)
    traj = [psi0]
    norms = {"0": psi0.l2_norm()}
    for t in args.t:
        if args.method == "spectral":
            psi = evolve_spectral(graph, bc, psi0, t)
            report.check(f"contour_error_t={t}", True, psi.error_estimate)
        else:
            psi = evolve_fd_oracle(graph, bc, psi0, t)
        traj.append(psi)
        norms[repr(t)] = psi.l2_norm()
    report.payload = {"method": args.method, "l2_norms": norms,
                      "sup_norms": {repr(f.t): f.sup_norm() for f in traj}}
    report.csv_text = trajectory_csv(traj)


def cmd_walks(args, graph, cond, report):
    (jp, sp_), (j, s_) = args.start, args.end
    for e in (jp, j):
        if e not in graph.edge_ids:
            raise SchemaError(f"unknown edge {e!r}")
    ws = enumerate_walks(graph, jp, sp_, j, s_, args.cutoff)
    vS = vertex_smatrices(graph, cond, args.kappa)
    records = [w.to_dict(walk_weight(args.kappa, w, vS, graph)) for w in ws]
    report.payload = {"kappa": args.kappa, "cutoff": args.cutoff, "walks": records}
    report.table = (["edges", "vertices", "comb_len", "metric_len", "reflectionless",
                     "weight_re", "weight_im"],
                    [[" ".join(r["edges"]), " ".join(r["vertices"]), r["comb_len"],
                      r["metric_len"], r["reflectionless"], r["weight_re"], r["weight_im"]]
                     for r in records])


def cmd_verify(args, graph, cond, report):
    rng = np.random.default_rng(args.seed)
    bc, forms = _local_forms(graph, cond, report)
    rep = classify_operator(bc)
    report.check("rank", bc.rank_ok)
    report.check("accretive_criteria_agree",
                 rep.re_ab_neg_semidef == all(rep.s_contraction.values())
                 == rep.quadratic_form_nonneg)
    P = bc.projector_perp
    report.check("projector_idempotent", np.allclose(P @ P, P, atol=1e-10))
    report.check("projector_trace", abs(np.trace(P).real - graph.m) < 1e-10,
                 float(np.trace(P).real))
    kappa = args.kappa
    parts = GreenKernelParts.build(graph, bc, 1j * kappa)
    worst = 0.0
    for _ in range(5):
        e1, e2 = rng.choice(list(graph.edge_ids), 2)
        L1 = graph.edge_length(e1) if not graph.is_external(e1) else 5.0
        L2 = graph.edge_length(e2) if not graph.is_external(e2) else 5.0
        x, y = rng.uniform(0, L1), rng.uniform(0, L2)
        if rep.self_adjoint:
            worst = max(worst, abs(parts.entry(e1, x, e2, y) - np.conj(parts.entry(e2, y, e1, x))))
    if rep.self_adjoint:
        report.check("green_hermitian", worst < 1e-10, worst)
    if forms is not None and all(f.kind != "not_continuous" for f in forms.values()) \
            and rep.re_ab_neg_semidef:
        x_max = 10.0 if graph.n_external else None
        psi0 = GraphFunction.from_callable(
            graph, lambda e, x: 1.0 + 0.5 * np.cos(x), h=2e-2, x_max=x_max)
        sg = verify_semigroup_properties(graph, bc, psi0, [0.05], method="fd")
        report.check("semigroup_contraction", sg.contraction)
        report.payload["semigroup"] = sg.to_dict()
    report.payload["seed"] = args.seed


HANDLERS = {
    "validate": cmd_validate, "classify": cmd_classify, "smatrix": cmd_smatrix,
    "green": cmd_green, "eigs": cmd_eigs, "feller": cmd_feller,
    "evolve": cmd_evolve, "walks": cmd_walks, "verify": cmd_verify,
}


def _error_report(command, exc):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "error": {"type": type(exc).__name__, "message": str(exc)},
    }


def _emit(obj, out):
    out.write(json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n")


def _emit_csv(report, out):
    text = getattr(report, "csv_text", None)
    if text is not None:
        out.write(text)
        return
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if report.table is not None:
        header, rows = report.table
    else:
        header = ["name", "status", "value"]
        rows = [[c["name"], c["status"], json.dumps(to_jsonable(c["value"]))]
                for c in report.checks]
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    out.write(buf.getvalue())


def run(argv=None, out=None):
    """Run the CLI and return the exit code (0 ok, 1 check failed, 2 error)."""
    out = out or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    first = next((a for a in argv if not a.startswith("-")), None)
    if first is not None and first not in COMMANDS:
        _emit(_error_report(first, UnknownCommand(f"unknown command {first!r}")), out)
        return 2
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.command is None:
        parser.print_help(out)
        return 2
    report = Report(args.command, args.spec)
    try:
        graph, cond = parse_spec(args.spec)
        HANDLERS[args.command](args, graph, cond, report)
        body = report.to_dict()
    except (MGSGError, np.linalg.LinAlgError, ValueError, KeyError, ArithmeticError) as exc:
        _emit(_error_report(args.command, exc), out)
        return 2
    if args.format == "csv":
        _emit_csv(report, out)
    else:
        _emit(body, out)
    return 1 if report.failed else 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
