"""Green's matrix, negative-spectrum scans and resolvent application.

For ``Im k > 0`` the kernel of ``(-Delta - k^2)^{-1}`` is

    r(x, y; k) = r0(x, y; k) + (i / 2k) Psi(x) (I - S T)^{-1} S Psi(y)^T,

where ``r0`` is the free kernel ``i delta_{jj'} exp(ik|x-y|) / 2k``, ``S`` the
global scattering matrix, ``T`` swaps the two ends of every internal edge
with the factor ``exp(ika)`` and ``Psi = Phi R_+^{-1}`` carries the
exponentials ``exp(ikx)`` on external edges and on the ``x = 0`` end of
internal edges and ``exp(ik(a - x))`` on the ``x = a`` end.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.signal import lfilter

from ._config import tol
from .conditions import smatrix
from .exceptions import EmptyRange, NonpositiveKernel, NotInResolventSet, SingularAtK
from .functions import GraphFunction

SINGULAR_COND = 1e12


def _check_k(k):
    k = complex(k)
    if not k.imag > 0:
        raise NotInResolventSet(f"Im k must be positive, got k = {k}")
    return k


@dataclass
class GreenKernelParts:
    """Factors of the Green's matrix at one spectral parameter ``k``."""

    graph: object
    k: complex
    S: np.ndarray = field(repr=False)
    T: np.ndarray = field(repr=False)
    factor: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, graph, bc, k):
        """Assemble ``S``, ``T`` and ``F = (I - S T)^{-1} S``.

        Raises
        ------
        NotInResolventSet
            If ``Im k <= 0`` or ``I - S T`` is singular.
        SingularAtK
            If ``A + ikB`` is singular.
        """
        k = _check_k(k)
        S = smatrix(k, bc)
        m, ne, ni = graph.m, graph.n_external, graph.n_internal
        a = graph.lengths
        T = np.zeros((m, m), dtype=complex)
        if ni:
            e = np.exp(1j * k * a)
            lo, hi = ne, ne + ni
            T[lo:hi, hi:] = np.diag(e)
            T[hi:, lo:hi] = np.diag(e)
        M = np.eye(m) - S @ T
        if np.linalg.cond(M) > SINGULAR_COND:
            raise NotInResolventSet(f"I - S T is singular at k = {k}")
        return cls(graph, k, S, T, np.linalg.solve(M, S))

    def psi(self, eid, x):
        """Rows ``Psi_j(x)`` for points ``x`` on edge ``eid``; shape ``(len(x), m)``."""
        g = self.graph
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((x.size, g.m), dtype=complex)
        out[:, g.k_index(eid, "-")] = np.exp(1j * self.k * x)
        if not g.is_external(eid):
            a = g.edge_length(eid)
            out[:, g.k_index(eid, "+")] = np.exp(1j * self.k * (a - x))
        return out

    def free(self, eid, x, eid2, y):
        if eid != eid2:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=complex)
        return 1j * np.exp(1j * self.k * np.abs(np.asarray(x) - np.asarray(y))) / (2 * self.k)

    def entry(self, eid, x, eid2, y):
        """Kernel entry ``r_{j j'}(x, y)`` for scalar positions."""
        p = self.psi(eid, x)[0]
        q = self.psi(eid2, y)[0]
        return complex(self.free(eid, x, eid2, y) + 1j / (2 * self.k) * (p @ self.factor @ q))

    def block(self, eid, xs, eid2, ys):
        """Kernel entries on the grid ``xs x ys``; shape ``(len(xs), len(ys))``."""
        xs = np.atleast_1d(xs)
        ys = np.atleast_1d(ys)
        P = self.psi(eid, xs)
        Q = self.psi(eid2, ys)
        out = 1j / (2 * self.k) * (P @ self.factor @ Q.T)
        if eid == eid2:
            out += 1j * np.exp(1j * self.k * np.abs(xs[:, None] - ys[None, :])) / (2 * self.k)
        return out


def green_kernel(graph, bc, k, x, y):
    """One entry ``r_{j j'}(x, y; k)`` with ``x = (j, pos)`` and ``y = (j', pos)``."""
    parts = GreenKernelParts.build(graph, bc, k)
    return parts.entry(x[0], float(x[1]), y[0], float(y[1]))


def green_matrix(graph, bc, k, x, y):
    """Full ``(|E|+|I|) x (|E|+|I|)`` Green's matrix.

    ``x`` and ``y`` give one position per edge in the edge order of the
    graph (external edges first).
    """
    parts = GreenKernelParts.build(graph, bc, k)
    ids = graph.edge_ids
    out = np.empty((len(ids), len(ids)), dtype=complex)
    for r, ej in enumerate(ids):
        for c, ek in enumerate(ids):
            out[r, c] = parts.entry(ej, float(x[r]), ek, float(y[c]))
    return out


def green_matrix_star(bc, k, x, y):
    """Kernel of a star graph ``r0 + (i/2k) phi(x) S phi(y)``."""
    k = _check_k(k)
    S = smatrix(k, bc)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    free = np.diag(1j * np.exp(1j * k * np.abs(x - y)) / (2 * k))
    return free + 1j / (2 * k) * (np.exp(1j * k * x)[:, None] * S * np.exp(1j * k * y)[None, :])


# --------------------------------------------------------------------------
# negative spectrum

def _xy_blocks(graph, kappa, scaled):
    ne, ni = graph.n_external, graph.n_internal
    m = graph.m
    a = graph.lengths
    X = np.zeros((m, m))
    Y = np.zeros((m, m))
    X[:ne, :ne] = np.eye(ne)
    Y[:ne, :ne] = np.eye(ne)
    if ni:
        lo, hi = ne, ne + ni
        em = np.exp(-kappa * a)
        if scaled:
            # beta column multiplied by exp(-kappa a) to avoid overflow
            X[lo:hi, lo:hi] = np.eye(ni)
            X[lo:hi, hi:] = np.diag(em)
            X[hi:, lo:hi] = np.diag(em)
            X[hi:, hi:] = np.eye(ni)
            Y[lo:hi, lo:hi] = np.eye(ni)
            Y[lo:hi, hi:] = -np.diag(em)
            Y[hi:, lo:hi] = -np.diag(em)
            Y[hi:, hi:] = np.eye(ni)
        else:
            ep = np.exp(kappa * a)
            X[lo:hi, lo:hi] = np.eye(ni)
            X[lo:hi, hi:] = np.eye(ni)
            X[hi:, lo:hi] = np.diag(em)
            X[hi:, hi:] = np.diag(ep)
            Y[lo:hi, lo:hi] = np.eye(ni)
            Y[lo:hi, hi:] = -np.eye(ni)
            Y[hi:, lo:hi] = -np.diag(em)
            Y[hi:, hi:] = np.diag(ep)
    return X, Y


def secular_matrix(graph, bc, kappa, scaled=False):
    """``Z(kappa) = A X(kappa) - kappa B Y(kappa)``.

    A nonzero kernel vector ``(s, alpha, beta)`` gives the solution
    ``s exp(-kappa x)`` on external and ``alpha exp(-kappa x) + beta
    exp(kappa x)`` on internal edges of ``-psi'' = -kappa^2 psi``.  With
    ``scaled=True`` the beta columns are multiplied by ``exp(-kappa a)``;
    the roots are unchanged.
    """
    X, Y = _xy_blocks(graph, float(kappa), scaled)
    return bc.A @ X - kappa * (bc.B @ Y)


@dataclass
class EigenScan:
    roots: list
    grid: np.ndarray = field(repr=False)
    residuals: list = field(default_factory=list)
    rejected: list = field(default_factory=list)


def eigenvalue_scan(graph, bc, kappa_range, grid=400, xtol=1e-12, verify_tol=1e-6):
    """Roots ``kappa*`` of ``det Z(kappa)`` in ``kappa_range``.

    Each root gives the negative eigenvalue ``-kappa*^2`` of ``-Delta``.
    The determinant is evaluated on a log-spaced grid of ``grid`` points,
    rotated by a constant phase making it real at the first grid point;
    sign changes of the real part are refined by Brent's bracketing method
    and kept only if the smallest relative singular value of ``Z`` vanishes.

    Raises
    ------
    EmptyRange
    """
    lo, hi = (float(v) for v in kappa_range)
    if not hi > 0 or hi <= lo:
        raise EmptyRange(f"invalid kappa range ({lo}, {hi}]")
    if lo <= 0:
        lo = min(1e-3, 1e-5 * hi)
    ks = np.geomspace(lo, hi, int(grid))

    def det(kappa):
        return np.linalg.det(secular_matrix(graph, bc, kappa, scaled=True))

    d = np.array([det(k) for k in ks])
    ref = next((v for v in d if abs(v) > 0), 1.0)
    phase = np.conj(ref) / abs(ref)

    def f(kappa):
        return float((phase * det(kappa)).real)

    vals = (phase * d).real
    roots, residuals, rejected = [], [], []
    for i in range(len(ks) - 1):
        if vals[i] == 0.0:
            cand = ks[i]
        elif vals[i] * vals[i + 1] < 0:
            cand = brentq(f, ks[i], ks[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps)
        else:
            continue
        Z = secular_matrix(graph, bc, cand, scaled=True)
        sv = np.linalg.svd(Z, compute_uv=False)
        res = sv[-1] / max(sv[0], 1e-300)
        if res <= tol(verify_tol):
            if not roots or abs(cand - roots[-1]) > 10 * xtol:
                roots.append(float(cand))
                residuals.append(float(res))
        else:
            rejected.append(float(cand))
    return EigenScan(roots, ks, residuals, rejected)


# --------------------------------------------------------------------------
# resolvent applied to sampled functions

def _lin_exp_weights(z):
    """Weights ``(w0, w1)`` with ``int_0^1 exp(z t) (f0 (1-t) + f1 t) dt = w0 f0 + w1 f1``."""
    z = complex(z)
    if abs(z) < 0.5:
        w0 = w1 = 0j
        term = 1.0 + 0j
        for n in range(30):
            w1 += term / (n + 2)
            w0 += term / ((n + 1) * (n + 2))
            term *= z / (n + 1)
        return w0, w1
    ez = np.exp(z)
    return (ez - 1 - z) / z ** 2, (ez * (z - 1) + 1) / z ** 2


def _sweep(phi, k, h, tail=0j):
    """``L_n = int_0^{x_n} e^{ik(x_n - y)} phi`` and ``R_n = int_{x_n}^{end} e^{ik(y - x_n)} phi``.

    ``phi`` is treated as piecewise linear; ``tail`` is added to ``R`` at the
    last node and propagated.
    """
    w0, w1 = _lin_exp_weights(1j * k * h)
    w0, w1 = h * w0, h * w1
    q = np.exp(1j * k * h)
    phi = np.asarray(phi, dtype=complex)
    src = np.zeros_like(phi)
    src[1:] = w0 * phi[1:] + w1 * phi[:-1]
    L = lfilter([1.0], [1.0, -q], src)
    rsrc = np.zeros_like(phi)
    rsrc[:-1] = w0 * phi[:-1] + w1 * phi[1:]
    rsrc[-1] = tail
    R = lfilter([1.0], [1.0, -q], rsrc[::-1])[::-1]
    return L, R


def resolvent_apply(graph, bc, k, phi, tail="constant", parts=None):
    """``psi = (-Delta - k^2)^{-1} phi`` on the grid of ``phi``.

    The kernel is integrated exactly against the piecewise-linear
    interpolant of ``phi`` (product integration); the free part uses
    first-order recurrences, the boundary part is separable.

    Parameters
    ----------
    graph, bc : MetricGraph, BoundaryConditions
    k : complex
        Spectral parameter with ``Im k > 0``.
    phi : GraphFunction
    tail : {"constant", "zero"}
        Extension of ``phi`` beyond the truncation point of external edges.

    Returns
    -------
    GraphFunction
    """
    k = _check_k(k)
    if parts is None:
        parts = GreenKernelParts.build(graph, bc, k)
    c = np.zeros(graph.m, dtype=complex)
    free = {}
    for eid in graph.edge_ids:
        f = phi.values[eid]
        h = phi.step(eid)
        t = 0j
        if graph.is_external(eid) and tail == "constant":
            t = complex(f[-1]) * 1j / k
        L, R = _sweep(f, k, h, t)
        free[eid] = 1j / (2 * k) * (L + R)
        c[graph.k_index(eid, "-")] = R[0]
        if not graph.is_external(eid):
            c[graph.k_index(eid, "+")] = L[-1]
    coef = parts.factor @ c
    out = {}
    for eid in graph.edge_ids:
        x = phi.nodes(eid)
        out[eid] = free[eid] + 1j / (2 * k) * (parts.psi(eid, x) @ coef)
    return phi.like(out, method="resolvent")


# --------------------------------------------------------------------------
# sup-norm bound

def kernel_positivity(graph, bc, kappa, n_points=16, x_ext=None, atol=1e-12):
    """Sample ``r(x, y; i kappa)`` on an ``n x n`` grid per edge pair.

    Returns
    -------
    dict
        ``min`` (smallest real part), ``witness`` ``(edge, x, edge, y)`` of
        the minimum, ``max_imag`` and ``positive`` (``min >= -atol``).  A grid
        check cannot prove positivity.
    """
    parts = GreenKernelParts.build(graph, bc, 1j * kappa)
    x_ext = 10.0 / kappa if x_ext is None else x_ext
    pts = {}
    for eid in graph.edge_ids:
        length = x_ext if graph.is_external(eid) else graph.edge_length(eid)
        pts[eid] = np.linspace(0.0, length, n_points)
    best, witness, max_imag = np.inf, None, 0.0
    for ej in graph.edge_ids:
        for ek in graph.edge_ids:
            blk = parts.block(ej, pts[ej], ek, pts[ek])
            max_imag = max(max_imag, float(np.abs(blk.imag).max()))
            i, j = np.unravel_index(np.argmin(blk.real), blk.shape)
            if blk.real[i, j] < best:
                best = float(blk.real[i, j])
                witness = (ej, float(pts[ej][i]), ek, float(pts[ek][j]))
    return {"min": best, "witness": witness, "max_imag": max_imag,
            "positive": best >= -tol(atol), "kappa": float(kappa)}


def feller_profile(graph, bc, kappa, n_points=2001, x_ext=None):
    """``u_j(x) = int r_{j.}(x, y; i kappa) 1 dy`` in closed form.

    Returns a dict of edge id to ``(x, u)`` arrays.
    """
    parts = GreenKernelParts.build(graph, bc, 1j * kappa)
    kap = float(kappa)
    h = np.ones(graph.m)
    coef = parts.factor @ ((np.eye(graph.m) - parts.T) @ h)
    x_ext = 40.0 / kap if x_ext is None else x_ext
    out = {}
    for eid in graph.edge_ids:
        if graph.is_external(eid):
            x = np.linspace(0.0, x_ext, n_points)
            u0 = 1 / kap ** 2 - np.exp(-kap * x) / (2 * kap ** 2)
        else:
            a = graph.edge_length(eid)
            x = np.linspace(0.0, a, n_points)
            u0 = 1 / kap ** 2 - (np.exp(-kap * x) + np.exp(-kap * (a - x))) / (2 * kap ** 2)
        u1 = (parts.psi(eid, x) @ coef) / (2 * kap ** 2)
        out[eid] = (x, u0 + u1)
    return out


def feller_sup_norm(graph, bc, kappa, n_points=2001, check_kernel=True):
    """``max_j sup_x u_j(x; kappa)``, the sup-norm of ``(-Delta + kappa^2)^{-1} 1``.

    For a positive kernel this is the operator norm on bounded functions;
    the sup-norm contraction property corresponds to a value ``<= 1/kappa^2``.

    Raises
    ------
    NonpositiveKernel
        If the sampled kernel has a negative entry.
    """
    if check_kernel:
        pos = kernel_positivity(graph, bc, kappa)
        if not pos["positive"]:
            raise NonpositiveKernel(
                f"kernel entry {pos['min']:.3e} at {pos['witness']} is negative"
            )
    prof = feller_profile(graph, bc, kappa, n_points)
    vals = [np.max(u.real) for _, u in prof.values()]
    return float(max(vals))


__all__ = [
    "GreenKernelParts", "green_kernel", "green_matrix", "green_matrix_star",
    "secular_matrix", "EigenScan", "eigenvalue_scan", "resolvent_apply",
    "kernel_positivity", "feller_profile", "feller_sup_norm", "SingularAtK",
    "GraphFunction",
]
