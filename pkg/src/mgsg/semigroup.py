"""Heat semigroup ``exp(t Delta)`` on metric graphs.

Two independent routes: inverse Laplace transform of the resolvent along a
Talbot contour (:func:`evolve_spectral`) and Crank-Nicolson stepping of the
finite-difference Laplacian (:func:`evolve_fd_oracle`).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ._config import tol
from .classification import classify_operator
from .exceptions import ContourFailure, NotAGenerator
from .fd import FDLaplacian
from .functions import GraphFunction, trajectory_csv
from .resolvent import GreenKernelParts, resolvent_apply


def talbot_nodes(t, n_nodes, shift=0.0):
    """Nodes and weights of the fixed Talbot rule on the full contour.

    ``f(t) ~ sum_j w_j F(s_j)`` for ``f`` with Laplace transform ``F``.  Both
    halves of the contour are used so that complex-valued ``F`` is allowed.
    """
    r = 2.0 * n_nodes / (5.0 * t)
    theta = np.arange(1, n_nodes) * math.pi / n_nodes
    cot = 1.0 / np.tan(theta)
    s_up = r * theta * (cot + 1j)
    sigma = theta + (theta * cot - 1.0) * cot
    s = np.concatenate([[r + 0j], s_up, np.conj(s_up)]) + shift
    fac = np.concatenate([[1.0 + 0j], 1 + 1j * sigma, 1 - 1j * sigma])
    w = (r / (2.0 * n_nodes)) * fac * np.exp(t * s)
    return s, w


def _is_real_problem(bc, psi0):
    """Real data and real conditions keep the solution real."""
    data = psi0.flat()
    return (not np.iscomplexobj(data) or np.abs(data.imag).max() == 0) and (
        np.abs(bc.A.imag).max() == 0 and np.abs(bc.B.imag).max() == 0
    )


def _spectral_once(graph, bc, psi0, t, n_nodes, shift):
    s, w = talbot_nodes(t, n_nodes, shift)
    acc = np.zeros(psi0.n_samples, dtype=complex)
    for sj, wj in zip(s, w):
        k = 1j * np.sqrt(sj)
        parts = GreenKernelParts.build(graph, bc, k)
        acc += wj * resolvent_apply(graph, bc, k, psi0, tail="zero", parts=parts).flat()
    return acc


def evolve_spectral(graph, bc, psi0, t, n_nodes=32, shift=0.0, max_error=1e-3,
                    check_generator=True):
    """``psi_t = exp(t Delta) psi0`` by contour inversion of the resolvent.

    The resolvent is ``(lambda - Delta)^{-1} = (-Delta - k^2)^{-1}`` with
    ``k = i sqrt(lambda)``.  The error estimate is the difference to the
    rule with ``n_nodes // 2`` nodes plus ``h^2/8 max|psi0''|`` for the
    piecewise-linear interpolation of ``psi0``.

    Raises
    ------
    NotAGenerator
        If the conditions are neither sufficiently accretive nor dissipative.
    ContourFailure
        If the error estimate exceeds ``max_error``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if check_generator:
        rep = classify_operator(bc)
        if not (rep.re_ab_neg_semidef or rep.im_ab_neg_semidef):
            raise NotAGenerator("conditions are not known to generate a contraction semigroup")
    full = _spectral_once(graph, bc, psi0, t, n_nodes, shift)
    half = _spectral_once(graph, bc, psi0, t, max(4, n_nodes // 2), shift)
    interp = psi0.max_step() ** 2 / 8 * psi0.second_difference_max()
    err = float(np.max(np.abs(full - half))) + interp
    if not np.isfinite(err) or err > tol(max_error):
        raise ContourFailure(f"contour error estimate {err:.3e} exceeds {max_error:.1e}")
    real = _is_real_problem(bc, psi0)
    out = psi0.unflat(full.real if real else full, t=psi0.t + t, method="spectral")
    out.error_estimate = err
    return out


def evolve_fd_oracle(graph, bc, psi0, t, h=None, dt=None, rannacher=4):
    """Crank-Nicolson evolution of the finite-difference Laplacian.

    The first ``rannacher`` steps are implicit Euler with half step size to
    damp data that violate the boundary conditions.  Results are returned on
    the grid of ``psi0`` (linear interpolation when ``h`` differs).  The
    default time step is ``min(h, t / 50)``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    h = psi0.max_step() if h is None else h
    fd = FDLaplacian(graph, bc, h, psi0.x_max)
    vec = np.concatenate([psi0.evaluate(e, fd.nodes(e)) for e in graph.edge_ids]).astype(complex)
    dt = min(h, t / 50) if dt is None else dt
    n_steps = max(1, int(math.ceil(t / dt)))
    dt = t / n_steps
    n_smooth = min(rannacher // 2, n_steps)
    if n_smooth:
        euler = fd.stepper(dt / 2, 1.0)
        for _ in range(2 * n_smooth):
            vec = euler(vec)
    if n_steps > n_smooth:
        cn = fd.stepper(dt, 0.5)
        for _ in range(n_steps - n_smooth):
            vec = cn(vec)
    real = _is_real_problem(bc, psi0)
    vals = {}
    for e in graph.edge_ids:
        v = fd.values_at(vec, e)
        vals[e] = np.interp(psi0.nodes(e), fd.nodes(e), v.real)
        if not real:
            vals[e] = vals[e] + 1j * np.interp(psi0.nodes(e), fd.nodes(e), v.imag)
    return psi0.like(vals, t=psi0.t + t, method="fd")


def mass_drift_per_step(graph, bc, psi0, n_steps=10, dt=1e-3):
    """Largest change of the trapezoid integral over single CN steps."""
    fd = FDLaplacian(graph, bc, psi0.max_step(), psi0.x_max)
    vec = np.concatenate([psi0.evaluate(e, fd.nodes(e)) for e in graph.edge_ids]).astype(complex)
    w = fd.weights()
    cn = fd.stepper(dt, 0.5)
    drift = 0.0
    for _ in range(n_steps):
        new = cn(vec)
        drift = max(drift, abs(np.dot(w, new) - np.dot(w, vec)))
        vec = new
    return float(drift)


@dataclass
class SemigroupReport:
    contraction: bool
    positivity: object
    continuity: object
    violations: list = field(default_factory=list)
    norms: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "contraction": self.contraction,
            "positivity": self.positivity,
            "continuity": self.continuity,
            "violations": list(self.violations),
            "norms": {str(k): v for k, v in self.norms.items()},
        }


def _evolve(method, graph, bc, psi0, t, **kw):
    if method == "spectral":
        return evolve_spectral(graph, bc, psi0, t, **kw)
    if method == "fd":
        return evolve_fd_oracle(graph, bc, psi0, t, **kw)
    raise ValueError(f"unknown method {method!r}")


def verify_semigroup_properties(graph, bc, psi0, t_list, method="fd", atol=1e-6, **kw):
    """Check contraction, positivity and continuity along a trajectory.

    Positivity is only tested for ``psi0 >= 0`` and continuity only for
    continuous ``psi0``; otherwise the field is ``None``.
    """
    n0 = psi0.l2_norm()
    test_pos = psi0.min_real() >= 0 and np.allclose(np.imag(psi0.flat()), 0)
    test_cont = psi0.vertex_mismatch() <= atol
    report = SemigroupReport(True, True if test_pos else None, True if test_cont else None)
    report.trajectory = []
    for t in t_list:
        psi = _evolve(method, graph, bc, psi0, t, **kw)
        report.trajectory.append(psi)
        nt = psi.l2_norm()
        report.norms[float(t)] = nt
        if nt > n0 + tol(atol):
            report.contraction = False
            report.violations.append({"t": t, "check": "contraction", "value": nt - n0})
        if test_pos:
            mn = psi.min_real()
            if mn < -tol(atol):
                report.positivity = False
                report.violations.append({"t": t, "check": "positivity", "value": mn})
        if test_cont:
            mm = psi.vertex_mismatch()
            if mm > tol(atol):
                report.continuity = False
                report.violations.append({"t": t, "check": "continuity", "value": mm})
    return report


def positivity_witness_search(graph, bc, t, n_trials=50, seed=0, h=None, x_max=None,
                              method="fd", n_knots=6):
    """Search random nonnegative piecewise-linear data for a sign change.

    Returns
    -------
    dict
        ``best`` (most negative sample found), ``trial`` and ``found``.
    """
    rng = np.random.default_rng(seed)
    h = h or 1e-2
    best, best_trial = np.inf, None
    for trial in range(n_trials):
        knots = {}
        for e in graph.edge_ids:
            length = x_max if graph.is_external(e) else graph.edge_length(e)
            knots[e] = (np.linspace(0, length, n_knots), rng.random(n_knots))
        psi0 = GraphFunction.from_callable(
            graph, lambda e, x: np.interp(x, *knots[e]), h=h, x_max=x_max)
        psi = _evolve(method, graph, bc, psi0, t)
        mn = psi.min_real()
        if mn < best:
            best, best_trial = mn, trial
    return {"best": float(best), "trial": best_trial, "found": best < -1e-6}


def dump_trajectory(functions):
    """CSV with columns ``edge_id, x, t, re, im``."""
    return trajectory_csv(functions)
