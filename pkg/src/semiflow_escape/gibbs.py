"""Transfer matrices, pressure and equilibrium states of locally constant potentials."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import _linalg
from .exceptions import InvalidPeriodicPoint, NoConvergence, NotCyclicallyAdmissible, ValidationError
from .sft import (
    DEFAULT_ENUMERATION_CAP,
    AperiodicPoint,
    BlockShift,
    LocallyConstantFunction,
    PeriodicPoint,
    TransitionMatrix,
    enumerate_words,
    higher_block_recode,
    prime_period,
)

SPECTRAL_TOL = 1e-12


def zero_potential(A: TransitionMatrix) -> LocallyConstantFunction:
    return LocallyConstantFunction.constant(A, 0.0, name="zero")


def bernoulli_potential(A: TransitionMatrix, probs: Sequence[float]) -> LocallyConstantFunction:
    """``phi(x) = log probs[x_0 - 1]``; its equilibrium state on a full shift is Bernoulli."""
    if any(p <= 0 for p in probs):
        raise ValidationError("probabilities must be positive")
    return LocallyConstantFunction.from_symbols(A, [math.log(p) for p in probs], name="bernoulli")


@dataclass(frozen=True, eq=False)
class WeightedTransferMatrix:
    """``M[u, v] = exp(phi(u))`` on edges of the block presentation."""

    blocks: BlockShift
    weights: sp.csr_matrix
    eigenvalue: float
    right: np.ndarray
    left: np.ndarray

    @property
    def base(self) -> BlockShift:
        return self.blocks


def build_transfer(
    A: TransitionMatrix,
    potential: LocallyConstantFunction | None = None,
    tol: float = _linalg.DEFAULT_TOL,
    maxiter: int = _linalg.DEFAULT_MAXITER,
) -> WeightedTransferMatrix:
    phi = zero_potential(A) if potential is None else potential
    phi.check_domain(A)
    blocks = higher_block_recode(A, phi.depth)
    w = np.exp(phi.on_blocks(blocks))
    M = sp.diags(w) @ blocks.adjacency.astype(float)
    M = sp.csr_matrix(M)
    lam, r, l, _ = _linalg.leading_eigenpair(M, tol, maxiter)
    res_r = _linalg.relative_residual(M, lam, r)
    res_l = _linalg.relative_residual(M.T.tocsr(), lam, l)
    if max(res_r, res_l) > SPECTRAL_TOL:
        raise NoConvergence(f"eigen-residuals {res_r:.2e}, {res_l:.2e} exceed {SPECTRAL_TOL}")
    return WeightedTransferMatrix(blocks, M, lam, r, l)


def pressure(A: TransitionMatrix, potential: LocallyConstantFunction | None = None) -> float:
    return math.log(build_transfer(A, potential).eigenvalue)


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Stationary Markov chain on labelled states (``Q`` row-stochastic, ``pi Q = pi``)."""

    labels: list
    pi: np.ndarray
    Q: sp.csr_matrix

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.labels)}

    @property
    def n_states(self) -> int:
        return len(self.labels)

    def path_measure(self, path: Sequence[int]) -> float:
        """Measure of the cylinder given by a sequence of state indices."""
        p = self.pi[path[0]]
        for i, j in zip(path, path[1:]):
            p *= self.Q[i, j]
        return float(p)


@dataclass(frozen=True, eq=False)
class MarkovGibbsMeasure:
    """Equilibrium state of a locally constant potential.

    A Markov measure on the ``depth``-block presentation with
    ``Q(u -> v) = M[u, v] r_v / (lam r_u)`` and ``pi_u = l_u r_u``.
    """

    transfer: WeightedTransferMatrix
    potential: LocallyConstantFunction
    pressure: float
    stationary: np.ndarray
    transition: sp.csr_matrix
    _chains: dict = field(default_factory=dict, repr=False)

    @property
    def shift(self) -> TransitionMatrix:
        return self.transfer.blocks.base

    @property
    def blocks(self) -> BlockShift:
        return self.transfer.blocks

    @property
    def depth(self) -> int:
        return self.transfer.blocks.depth

    @cached_property
    def _prefix_mass(self) -> dict:
        out: dict = {}
        for w, p in zip(self.blocks.words, self.stationary):
            for k in range(1, self.depth):
                out[w[:k]] = out.get(w[:k], 0.0) + p
        return out

    def cylinder(self, word: Sequence[int]) -> float:
        """``mu([word])``; zero for inadmissible words."""
        w = tuple(word)
        m = self.depth
        if len(w) < m:
            return float(self._prefix_mass.get(w, 0.0))
        idx = self.blocks.index
        try:
            states = [idx[w[i:i + m]] for i in range(len(w) - m + 1)]
        except KeyError:
            return 0.0
        p = float(self.stationary[states[0]])
        Q = self.transition
        for i, j in zip(states, states[1:]):
            p *= Q[i, j]
        return float(p)

    def measure_of(self, words) -> float:
        return float(sum(self.cylinder(w) for w in words))

    def integral(self, f: LocallyConstantFunction) -> float:
        return f.integral(self.cylinder)

    def block_chain(self, depth: int, cap: int = DEFAULT_ENUMERATION_CAP) -> MarkovChain:
        """The same measure as a Markov chain on ``depth``-words (``depth >= self.depth``)."""
        if depth < self.depth:
            raise ValidationError(f"chain depth {depth} below potential depth {self.depth}")
        if depth in self._chains:
            return self._chains[depth]
        m = self.depth
        big = higher_block_recode(self.shift, depth, cap)
        tail = np.array([self.blocks.index[w[-m:]] for w in big.words])
        head = np.array([self.blocks.index[w[:m]] for w in big.words])
        coo = big.adjacency.tocoo()
        Qdense = self.transition.toarray() if self.blocks.n_states <= 4096 else None
        if Qdense is not None:
            data = Qdense[tail[coo.row], tail[coo.col]]
        else:
            data = np.asarray(self.transition[tail[coo.row], tail[coo.col]]).ravel()
        Qbig = sp.csr_matrix((data, (coo.row, coo.col)), shape=big.adjacency.shape)
        # pi of a depth-word: pi(head) times the Q-steps along its m-blocks
        pi = self.stationary[head].copy()
        for k in range(1, depth - m + 1):
            a = np.array([self.blocks.index[w[k - 1:k - 1 + m]] for w in big.words])
            b = np.array([self.blocks.index[w[k:k + m]] for w in big.words])
            pi *= Qdense[a, b] if Qdense is not None else np.asarray(self.transition[a, b]).ravel()
        chain = MarkovChain(big.words, pi, Qbig)
        self._chains[depth] = chain
        return chain

    def gamma(self, z) -> float:
        return gamma(z, self.potential, self.pressure, self.shift)


def equilibrium_state(
    A: TransitionMatrix, potential: LocallyConstantFunction | None = None, **kw
) -> MarkovGibbsMeasure:
    T = build_transfer(A, potential, **kw)
    phi = zero_potential(A) if potential is None else potential
    r, l, lam = T.right, T.left, T.eigenvalue
    coo = T.weights.tocoo()
    data = coo.data * r[coo.col] / (lam * r[coo.row])
    Q = sp.csr_matrix((data, (coo.row, coo.col)), shape=T.weights.shape)
    Q = sp.csr_matrix(sp.diags(1.0 / np.asarray(Q.sum(axis=1)).ravel()) @ Q)
    pi = l * r
    pi = pi / pi.sum()
    return MarkovGibbsMeasure(T, phi, math.log(lam), pi, Q)


@dataclass(frozen=True)
class GibbsCertificate:
    n_max: int
    c1_observed: float
    c2_observed: float
    per_length: tuple = ()

    @property
    def spread(self) -> float:
        return self.c2_observed / self.c1_observed


def birkhoff_sums(potential: LocallyConstantFunction, word: Sequence[int], n: int) -> float:
    """``S_n phi`` on a point beginning with ``word`` (needs ``n + depth - 1`` symbols)."""
    m = potential.depth
    return float(sum(potential.values[tuple(word[i:i + m])] for i in range(n)))


def certify_gibbs(mu: MarkovGibbsMeasure, n_max: int, cap: int = DEFAULT_ENUMERATION_CAP) -> GibbsCertificate:
    """Extremes of ``mu([x]_n) exp(P n - S_n phi(x))`` over every admissible ``n``-word.

    For potentials of depth ``m > 1`` the Birkhoff sum depends on
    ``n + m - 1`` symbols, so the scan runs over all such extensions.
    """
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    phi, P, m = mu.potential, mu.pressure, mu.potential.depth
    lo, hi = math.inf, -math.inf
    rows = []
    for n in range(1, n_max + 1):
        nlo, nhi = math.inf, -math.inf
        cyl = {}
        for u in enumerate_words(mu.shift, n + m - 1, cap):
            w = u[:n]
            if w not in cyl:
                cyl[w] = mu.cylinder(w)
            ratio = cyl[w] * math.exp(P * n - birkhoff_sums(phi, u, n))
            nlo, nhi = min(nlo, ratio), max(nhi, ratio)
        rows.append((n, nlo, nhi))
        lo, hi = min(lo, nlo), max(hi, nhi)
    return GibbsCertificate(n_max, lo, hi, tuple(rows))


def gamma(
    z,
    potential: LocallyConstantFunction | None,
    pressure_value: float,
    A: TransitionMatrix | None = None,
    tol: float = 1e-12,
) -> float:
    """1 for aperiodic ``z``; ``1 - exp(S_p phi(z) - p P)`` for prime period ``p``."""
    if isinstance(z, AperiodicPoint):
        return 1.0
    if not isinstance(z, PeriodicPoint):
        raise InvalidPeriodicPoint(f"expected a PeriodicPoint or AperiodicPoint, got {z!r}")
    if A is not None:
        try:
            prime_period(z.repeating_word, A)
        except NotCyclicallyAdmissible as exc:
            raise InvalidPeriodicPoint(str(exc)) from exc
    p = z.prime_period
    if potential is None:
        s = 0.0
    else:
        s = birkhoff_sums(potential, z.symbols(p + potential.depth - 1), p)
    g = 1.0 - math.exp(s - p * pressure_value)
    if not -tol <= g <= 1.0 + tol:
        raise InvalidPeriodicPoint(f"gamma = {g} outside [0, 1]; is the pressure consistent with phi?")
    return min(max(g, 0.0), 1.0)
