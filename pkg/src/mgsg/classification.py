"""Classification of boundary conditions.

Covers the operator-level tests on ``AB^dagger`` (accretive, dissipative,
self-adjoint), the canonical continuity form of local conditions, local
positivity, the substochastic property and a Feller verdict.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._config import tol
from .conditions import (
    BoundaryConditions,
    ContinuityForm,
    NotLocal,
    VertexConditions,
    decompose_local,
    equivalent,
    generic_matrices,
    smatrix,
)
from .exceptions import NotContinuousInput, NotLocalInput, RankDeficient, SingularAtK
from .linalg import antihermitian_part, hermitian_part, null_space

DEFAULT_KAPPAS = (0.5, 1.0, 3.0, 10.0)
CONTRACTION_TOL = 1e-9
SIGN_TOL = 1e-12

# Two unrelated irrational-looking points for the k-independence test.
_PROBE_KAPPAS = ((0.7390851332, 1.6180339887), (2.2360679775, 0.5772156649),
                 (3.1415926536, 1.4142135624))


@dataclass
class ClassificationReport:
    """Operator-level properties of a pair ``(A, B)``.

    ``re_ab_neg_semidef`` is a sufficient condition for m-accretivity only;
    ``im_ab_neg_semidef`` characterises m-dissipativity.
    """

    rank_ok: bool
    re_ab_neg_semidef: bool
    im_ab_neg_semidef: bool
    self_adjoint: bool
    s_contraction: dict
    s_minus_k_contraction: dict
    max_eig_re_ab: float
    max_eig_im_ab: float
    quadratic_form_nonneg: bool
    notes: list = field(default_factory=list)

    @property
    def sufficient_accretive(self):
        return self.re_ab_neg_semidef

    def to_dict(self):
        return {
            "rank_ok": self.rank_ok,
            "re_ab_neg_semidef": self.re_ab_neg_semidef,
            "sufficient_accretive": self.sufficient_accretive,
            "im_ab_neg_semidef": self.im_ab_neg_semidef,
            "self_adjoint": self.self_adjoint,
            "s_contraction": {str(k): v for k, v in self.s_contraction.items()},
            "s_minus_k_contraction": {
                str(k): v for k, v in self.s_minus_k_contraction.items()
            },
            "max_eig_re_ab": self.max_eig_re_ab,
            "max_eig_im_ab": self.max_eig_im_ab,
            "quadratic_form_nonneg": self.quadratic_form_nonneg,
            "notes": list(self.notes),
        }


def _is_contraction(S, atol=CONTRACTION_TOL):
    return bool(np.linalg.norm(S, 2) <= 1.0 + tol(atol))


def quadratic_form_min(bc):
    """Smallest eigenvalue of ``P_M (Re Q) P_M`` with ``Q = [[0, I], [0, 0]]``.

    Nonnegativity on ``M`` is equivalent to ``Re(AB^dagger) <= 0``.
    """
    m = bc.m
    Q = np.zeros((2 * m, 2 * m), dtype=complex)
    Q[:m, m:] = np.eye(m)
    P = bc.projector
    return float(np.linalg.eigvalsh(hermitian_part(P @ hermitian_part(Q) @ P))[0])


def classify_operator(bc, kappas=DEFAULT_KAPPAS, ks=DEFAULT_KAPPAS):
    """Classify the Laplace operator defined by ``bc``.

    Parameters
    ----------
    bc : BoundaryConditions
    kappas : sequence of float
        Points ``kappa > 0`` where ``||S(i kappa)|| <= 1`` is tested.
    ks : sequence of float
        Real points ``k > 0`` where ``||S(-k)|| <= 1`` is tested.
    """
    if not bc.rank_ok:
        raise RankDeficient("classification requires rank(A, B) = m")
    AB = bc.ab_dagger
    re_max = float(np.linalg.eigvalsh(hermitian_part(AB))[-1])
    im_max = float(np.linalg.eigvalsh(hermitian_part(antihermitian_part(AB)))[-1])
    s_con, s_mk = {}, {}
    for kappa in kappas:
        try:
            s_con[float(kappa)] = _is_contraction(smatrix(1j * kappa, bc))
        except SingularAtK:
            s_con[float(kappa)] = False
    for k in ks:
        try:
            s_mk[float(k)] = _is_contraction(smatrix(-k, bc))
        except SingularAtK:
            s_mk[float(k)] = False
    scale = max(1.0, np.linalg.norm(bc.A) * np.linalg.norm(bc.B))
    report = ClassificationReport(
        rank_ok=True,
        re_ab_neg_semidef=bool(re_max <= tol(CONTRACTION_TOL) * scale),
        im_ab_neg_semidef=bool(im_max <= tol(CONTRACTION_TOL) * scale),
        self_adjoint=bool(np.allclose(AB, AB.conj().T, rtol=0, atol=tol(1e-12) * scale)),
        s_contraction=s_con,
        s_minus_k_contraction=s_mk,
        max_eig_re_ab=re_max,
        max_eig_im_ab=im_max,
        quadratic_form_nonneg=bool(quadratic_form_min(bc) >= -tol(CONTRACTION_TOL)),
    )
    report.notes.append(
        "Re(AB^dagger) <= 0 is sufficient, not necessary, for m-accretivity"
    )
    return report


def _local_list(graph, conditions):
    if isinstance(conditions, BoundaryConditions):
        parts = decompose_local(graph, conditions)
        if isinstance(parts, NotLocal):
            raise NotLocalInput("conditions do not decompose over vertices")
        return parts
    if isinstance(conditions, dict):
        return [conditions[v] for v in graph.vertices]
    return list(conditions)


def _vertex_form(vc, atol=1e-9):
    n = vc.degree
    N = null_space(np.hstack([vc.A, vc.B]))
    if N.shape[1] != n:
        raise RankDeficient(f"vertex {vc.vertex!r}: rank(A_v, B_v) < deg(v)")
    chi0 = N[:n]
    if np.linalg.norm(chi0) <= atol:
        return ContinuityForm.dirichlet(n, vc.vertex)
    h = np.ones(n)
    off = chi0 - np.outer(h, h @ chi0) / n
    if np.linalg.norm(off) > atol:
        return ContinuityForm.not_continuous(n, vc.vertex)

    for k1, k2 in _PROBE_KAPPAS:
        try:
            S1, S2 = smatrix(1j * k1, vc), smatrix(1j * k2, vc)
        except SingularAtK:
            continue
        break
    else:
        raise SingularAtK(f"vertex {vc.vertex!r}: S(i kappa) singular at all probes")
    scale = max(1.0, np.linalg.norm(S1))
    candidates = [-1, 0] if np.linalg.norm(S1 - S2) <= atol * scale else [0, -1]
    for alpha in candidates:
        form = _form_from_smatrix(alpha, S1, k1, n, vc.vertex)
        if form is None:
            continue
        A, B = generic_matrices(form.alpha, form.g)
        if equivalent(BoundaryConditions(A, B, validate=False), vc.as_bc(validate=False)):
            return form
    return ContinuityForm.not_continuous(n, vc.vertex)


def _form_from_smatrix(alpha, S, kappa, n, vertex):
    r = (np.ones(n) @ (S + np.eye(n))) / n
    t = r.sum()
    if alpha == 0:
        if abs(t - 2.0) < 1e-12:
            return None
        g = np.conj(r / (kappa * (t - 2.0)))
        return ContinuityForm.generic(0, g, vertex)
    if abs(t) < 1e-12:
        return None
    g = np.conj(r) * (-n / np.conj(t))
    return ContinuityForm.generic(-1, g, vertex)


def continuity_form(graph, conditions):
    """Canonical continuity form of every vertex.

    Parameters
    ----------
    graph : MetricGraph
    conditions : BoundaryConditions or list of VertexConditions
        Global conditions are first split with :func:`decompose_local`.

    Returns
    -------
    dict
        Vertex id to :class:`ContinuityForm`.

    Raises
    ------
    NotLocalInput
    """
    parts = _local_list(graph, conditions)
    return {vc.vertex: _vertex_form(vc) for vc in parts}


def vertex_conditions_of(graph, conditions):
    """Vertex id to :class:`VertexConditions` for local input."""
    return {vc.vertex: vc for vc in _local_list(graph, conditions)}


class Positivity(str, Enum):
    STRICTLY_POSITIVE = "StrictlyPositive"
    POSITIVE = "Positive"
    NOT_POSITIVE = "NotPositive"


@dataclass
class PositivityResult:
    vertex: str
    verdict: Positivity
    verified_on_grid: bool
    min_entry: float
    kappa_grid: tuple


def sign_pattern(g, atol=1e-12):
    """Return ``(sign_definite, strict)`` for a real-or-complex vector.

    Components with a nonzero imaginary part make ``g`` not sign-definite.
    """
    g = np.asarray(g, dtype=complex)
    if np.any(np.abs(g.imag) > atol * max(1.0, np.abs(g).max())):
        return False, False
    x = g.real
    scale = max(1.0, np.abs(x).max())
    pos, neg = np.all(x >= -atol * scale), np.all(x <= atol * scale)
    if not (pos or neg):
        return False, False
    return True, bool(np.all(np.abs(x) > atol * scale))


def large_kappa_grid(form, j_max=6):
    """``max(kappa_0, 1) * 2**j`` with ``kappa_0 = 2 / |<g, h>|``."""
    k0 = 1.0
    if form.is_generic and abs(form.gh) > 0:
        k0 = max(1.0, 2.0 / abs(form.gh))
    return tuple(k0 * 2.0 ** j for j in range(j_max + 1))


def positivity_class(forms, kappa_grid=None):
    """Local positivity of each vertex.

    A generic vertex is positive iff ``g`` is sign-definite, strictly
    positive iff it has no zero component; Dirichlet vertices are positive
    with ``I + S = 0``.  The verdict is confirmed by an entrywise check of
    ``I + S(i kappa)`` on a large-kappa grid.
    """
    out = {}
    for v, form in forms.items():
        if form.kind == "not_continuous":
            raise NotContinuousInput(f"vertex {v!r} does not preserve continuity")
        grid = tuple(kappa_grid) if kappa_grid is not None else large_kappa_grid(form)
        vc = form.to_vertex_conditions()
        n = form.degree
        entries = []
        for kappa in grid:
            M = np.eye(n) + smatrix(1j * kappa, vc)
            bad_imag = np.abs(M.imag).max() > 1e-9
            entries.append(-np.inf if bad_imag else M.real.min())
        min_entry = float(min(entries))
        if form.kind == "dirichlet":
            verdict = Positivity.POSITIVE
        else:
            definite, strict = sign_pattern(form.g)
            if form.alpha == 0 and np.allclose(form.g, 0):
                definite, strict = True, False
            if not definite:
                verdict = Positivity.NOT_POSITIVE
            elif strict:
                verdict = Positivity.STRICTLY_POSITIVE
            else:
                verdict = Positivity.POSITIVE
        grid_ok = min_entry >= -tol(SIGN_TOL)
        verified = grid_ok == (verdict != Positivity.NOT_POSITIVE)
        out[v] = PositivityResult(v, verdict, verified, min_entry, grid)
    return out


@dataclass
class SubstochasticResult:
    vertex: str
    substochastic: bool
    factor: complex


def substochastic_check(forms, kappa):
    """Test ``S(i kappa) h_v <= h_v`` vertex by vertex.

    For ``alpha = -1`` the identity ``S h = h`` holds exactly; for
    ``alpha = 0`` one has ``S h = factor * h`` with
    ``factor = (kappa <g,h> + 1) / (kappa <g,h> - 1)``.
    """
    out = {}
    for v, form in forms.items():
        if form.kind == "not_continuous":
            raise NotContinuousInput(f"vertex {v!r} does not preserve continuity")
        if form.kind == "dirichlet":
            out[v] = SubstochasticResult(v, True, -1.0 + 0j)
            continue
        if form.alpha == -1:
            out[v] = SubstochasticResult(v, True, 1.0 + 0j)
            continue
        s = form.gh
        factor = (kappa * s + 1) / (kappa * s - 1)
        ok = abs(s.imag) <= 1e-12 and s.real <= 1e-12
        out[v] = SubstochasticResult(v, bool(ok), complex(factor))
    return out


class FellerVerdict(str, Enum):
    YES_IFF = "yes_iff"
    YES_SUFFICIENT = "yes_sufficient"
    NO = "no"
    UNKNOWN = "unknown"


def _nonpositive(g, strict):
    definite, is_strict = sign_pattern(g)
    if not definite:
        return False
    x = np.asarray(g).real
    if np.any(x > 1e-12 * max(1.0, np.abs(x).max())):
        return False
    return is_strict if strict else True


def feller_check(graph, forms):
    """Feller verdict from the continuity forms.

    Star graphs (no internal edges) get an exact answer; graphs with
    internal edges only get the sufficient test and ``unknown`` otherwise.

    Raises
    ------
    TadpolePresent
        For graphs with internal edges that contain a tadpole.
    """
    if graph.n_internal == 0:
        for form in forms.values():
            if form.kind == "dirichlet":
                continue
            if form.kind != "generic" or not _nonpositive(form.g, strict=False):
                return FellerVerdict.NO
            if form.alpha == -1 and np.allclose(form.g, 0):
                return FellerVerdict.NO
        return FellerVerdict.YES_IFF
    graph.require_no_tadpoles()
    for form in forms.values():
        if form.kind == "dirichlet":
            continue
        if form.kind != "generic" or not _nonpositive(form.g, strict=True):
            return FellerVerdict.UNKNOWN
    return FellerVerdict.YES_SUFFICIENT


def is_self_adjoint_form(form, atol=1e-12):
    """Dirichlet, or generic with ``g`` a real multiple of ``h``."""
    if form.kind == "dirichlet":
        return True
    if form.kind != "generic":
        return False
    g = form.g
    beta = g.mean()
    return bool(abs(beta.imag) <= atol and np.allclose(g, beta, rtol=0, atol=atol))


def spectrum_interval_check(form, kappa, atol=1e-9):
    """Eigenvalues of ``S(i kappa)`` for a continuity form lie in ``[-1, 1]``."""
    vc = form.to_vertex_conditions()
    ev = np.linalg.eigvals(smatrix(1j * kappa, vc))
    ok = np.all(np.abs(ev.imag) <= atol) and np.all(np.abs(ev.real) <= 1 + atol)
    return bool(ok), ev


__all__ = [
    "ClassificationReport", "classify_operator", "continuity_form",
    "vertex_conditions_of", "Positivity", "PositivityResult", "positivity_class",
    "SubstochasticResult", "substochastic_check", "FellerVerdict", "feller_check",
    "is_self_adjoint_form", "spectrum_interval_check", "quadratic_form_min",
    "sign_pattern", "large_kappa_grid", "VertexConditions",
]
