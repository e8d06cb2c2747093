"""Small dense linear-algebra helpers built on SVD.

Rank decisions use the threshold ``100 * eps * sigma_max`` so that they are
invariant under rescaling of the input.
"""
import numpy as np

EPS = np.finfo(float).eps


def rank_threshold(s):
    if s.size == 0:
        return 0.0
    return 100.0 * EPS * max(s[0], 1e-300)


def numerical_rank(M):
    M = np.asarray(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > rank_threshold(s)))


def null_space(M, rcond=None):
    """Orthonormal basis (as columns) of ``Ker M``."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n, dtype=complex)
    u, s, vh = np.linalg.svd(M)
    thr = rank_threshold(s) if rcond is None else rcond * (s[0] if s.size else 0.0)
    r = int(np.sum(s > thr))
    return vh[r:].conj().T


def row_space_complement(N):
    """Rows ``W`` (shape ``k x d``) with ``W @ N == 0`` and full row rank.

    ``N`` holds a basis of a subspace as columns; ``W`` spans its
    orthogonal complement, conjugated so that the subspace is ``Ker W``.
    """
    N = np.asarray(N, dtype=complex)
    return null_space(N.conj().T).conj().T


def orthogonal_projector(N):
    """Orthogonal projector onto the column span of ``N``."""
    N = np.asarray(N, dtype=complex)
    if N.shape[1] == 0:
        return np.zeros((N.shape[0], N.shape[0]), dtype=complex)
    q, _ = np.linalg.qr(N)
    return q @ q.conj().T


def hermitian_part(M):
    return 0.5 * (M + M.conj().T)


def antihermitian_part(M):
    """``Im M`` in the operator sense, ``(M - M^dagger) / 2i``."""
    return (M - M.conj().T) / 2j


def max_eig_hermitian(M):
    return float(np.linalg.eigvalsh(hermitian_part(M))[-1])


def min_eig_hermitian(M):
    return float(np.linalg.eigvalsh(hermitian_part(M))[0])
