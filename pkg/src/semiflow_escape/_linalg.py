"""Perron-Frobenius eigendata of nonnegative sparse matrices by power iteration."""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .exceptions import NoConvergence

DEFAULT_TOL = 1e-13
DEFAULT_MAXITER = 100_000


@dataclass(frozen=True)
class PerronData:
    eigenvalue: float
    vector: np.ndarray
    period: int
    iterations: int


def as_csr(M) -> sp.csr_matrix:
    if sp.issparse(M):
        return sp.csr_matrix(M, dtype=float)
    return sp.csr_matrix(np.asarray(M, dtype=float))


def cyclic_classes(M: sp.csr_matrix) -> tuple[int, np.ndarray]:
    """Period and cyclic class labels of an irreducible nonnegative matrix."""
    n = M.shape[0]
    order, pred = breadth_first_order(M, 0, directed=True, return_predecessors=True)
    if len(order) != n:
        raise ValueError("matrix is not irreducible")
    level = np.zeros(n, dtype=np.int64)
    for v in order[1:]:
        level[v] = level[pred[v]] + 1
    coo = M.tocoo()
    diffs = np.abs(level[coo.row] + 1 - level[coo.col])
    d = 0
    for x in np.unique(diffs):
        d = gcd(d, int(x))
    d = max(d, 1)
    return d, level % d


def _power_loop(apply, x, tol, maxiter, support):
    """Iterate ``x <- apply(x)`` until the Collatz-Wielandt bracket closes."""
    for it in range(1, maxiter + 1):
        y = apply(x)
        ratios = y[support] / x[support]
        lo, hi = ratios.min(), ratios.max()
        top = y.max()
        if top <= 0.0:
            return 0.0, x, it
        x = y / top
        if hi - lo <= tol * hi:
            return 0.5 * (lo + hi), x, it
    raise NoConvergence(f"power iteration did not reach relative tolerance {tol} in {maxiter} steps")


def perron_vector(M, tol: float = DEFAULT_TOL, maxiter: int = DEFAULT_MAXITER) -> PerronData:
    """Leading eigenvalue and right eigenvector of an irreducible nonnegative matrix.

    Deterministic start from the all-ones vector (restricted to one cyclic
    class when the matrix is periodic, iterating ``M**d`` there). The returned
    vector is scaled to max-entry 1.
    """
    M = as_csr(M)
    n = M.shape[0]
    if n == 1:
        return PerronData(float(M[0, 0]), np.ones(1), 1, 0)
    d, cls = cyclic_classes(M)
    if d == 1:
        lam, x, it = _power_loop(lambda v: M @ v, np.ones(n), tol, maxiter, slice(None))
        return PerronData(float(lam), x, 1, it)

    def apply(v):
        for _ in range(d):
            v = M @ v
        return v

    start = (cls == 0).astype(float)
    mu, x, it = _power_loop(apply, start, tol, maxiter, cls == 0)
    lam = mu ** (1.0 / d)
    vec = x.copy()
    v = x
    for _ in range(d - 1):
        v = (M @ v) / lam
        vec += v
    return PerronData(float(lam), vec / vec.max(), d, it)


def leading_eigenpair(M, tol: float = DEFAULT_TOL, maxiter: int = DEFAULT_MAXITER):
    """``(lam, right, left, period)`` for an irreducible nonnegative matrix.

    ``right`` has max entry 1 and ``left`` is scaled so that ``left @ right == 1``.
    """
    M = as_csr(M)
    right = perron_vector(M, tol, maxiter)
    left = perron_vector(M.T.tocsr(), tol, maxiter)
    lvec = left.vector / float(left.vector @ right.vector)
    return right.eigenvalue, right.vector, lvec, right.period


def relative_residual(M, lam: float, vec: np.ndarray) -> float:
    M = as_csr(M)
    return float(np.max(np.abs(M @ vec - lam * vec)) / (lam * np.max(np.abs(vec))))


def nontrivial_components(M: sp.csr_matrix) -> list[np.ndarray]:
    """Index sets of strongly connected components that carry a cycle."""
    n = M.shape[0]
    if n == 0:
        return []
    ncomp, labels = connected_components(M, directed=True, connection="strong")
    sizes = np.bincount(labels, minlength=ncomp)
    loops = M.diagonal() > 0
    has_loop = np.zeros(ncomp, dtype=bool)
    np.logical_or.at(has_loop, labels, loops)
    keep = np.flatnonzero((sizes > 1) | has_loop)
    order = np.argsort(labels, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    return [order[bounds[c]:bounds[c + 1]] for c in keep]


def spectral_radius(M, tol: float = DEFAULT_TOL, maxiter: int = DEFAULT_MAXITER) -> float:
    """Spectral radius of a nonnegative, possibly reducible, matrix.

    The maximum of the Perron roots of the irreducible diagonal blocks;
    zero when the matrix is nilpotent.
    """
    M = as_csr(M)
    rho = 0.0
    for idx in nontrivial_components(M):
        block = M[idx][:, idx]
        rho = max(rho, perron_vector(block, tol, maxiter).eigenvalue)
    return rho


def is_irreducible(M) -> bool:
    M = as_csr(M)
    ncomp, _ = connected_components(M, directed=True, connection="strong")
    return ncomp == 1
