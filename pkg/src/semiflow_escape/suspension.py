"""Special semi-flows under a roof and their time-delta discretization.

A roof that is an integer multiple of ``delta`` on ``m``-cylinders turns the
time-``delta`` map of the semi-flow into a subshift of finite type whose
states are ``(word, level)`` pairs. The discretized shift carries the
invariant probability ``delta * mu([w]) / int f* dmu`` on each state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import _linalg
from .exceptions import (
    Inadmissible,
    Infeasible,
    NonPositiveLower,
    NotPrimitive,
    PrefixExhausted,
    ValidationError,
)
from .gibbs import MarkovChain, MarkovGibbsMeasure, certify_gibbs
from .sft import (
    DEFAULT_ENUMERATION_CAP,
    BlockShift,
    LocallyConstantFunction,
    Point,
    TransitionMatrix,
    enumerate_extensions,
    enumerate_words,
    format_word,
    higher_block_recode,
)

SNAP_TOL = 1e-9
EPS_SLACK = 1e-9
MIN_DELTA = 1e-6


def snap_floor(x: float, tol: float = SNAP_TOL) -> int:
    """``floor(x)``, except that values within ``tol`` of an integer snap to it."""
    r = round(x)
    if abs(x - r) <= tol * max(1.0, abs(x)):
        return int(r)
    return math.floor(x)


def exact_levels(value: float, delta: float, tol: float = SNAP_TOL) -> int:
    """``value / delta`` for a value that is an integer multiple of ``delta``."""
    q = value / delta
    r = round(q)
    if abs(q - r) > tol * max(1.0, abs(q)):
        raise ValidationError(f"{value} is not an integer multiple of delta = {delta}")
    return int(r)


# ----------------------------------------------------------------------------
# roofs


@dataclass(frozen=True, eq=False)
class RoofFunction:
    """A locally constant roof bounded below by 1."""

    underlying: LocallyConstantFunction
    shift: TransitionMatrix

    def __post_init__(self):
        self.underlying.check_domain(self.shift)
        if self.min_value <= 1.0:
            raise ValidationError(f"roof minimum {self.min_value} must exceed 1")

    @classmethod
    def constant(cls, A: TransitionMatrix, c: float) -> "RoofFunction":
        return cls(LocallyConstantFunction.constant(A, c, name="roof"), A)

    @classmethod
    def from_symbols(cls, A: TransitionMatrix, values: Sequence[float]) -> "RoofFunction":
        return cls(LocallyConstantFunction.from_symbols(A, values, name="roof"), A)

    @property
    def depth(self) -> int:
        return self.underlying.depth

    @property
    def min_value(self) -> float:
        return self.underlying.min_value

    @property
    def max_value(self) -> float:
        return self.underlying.max_value

    @property
    def epsilon(self) -> float:
        return self.min_value - EPS_SLACK

    def __call__(self, x) -> float:
        return self.underlying(x)

    def integral(self, mu: MarkovGibbsMeasure) -> float:
        return mu.integral(self.underlying)

    def extremes_on(self, m: int) -> dict:
        """``{m-word: (inf, sup)}`` of the roof over each ``m``-cylinder."""
        f = self.underlying
        out = {}
        for w in enumerate_words(self.shift, m):
            if m >= f.depth:
                v = f.values[w[: f.depth]]
                out[w] = (v, v)
            else:
                vals = [f.values[u] for u in enumerate_extensions(self.shift, w, f.depth - m)]
                out[w] = (min(vals), max(vals))
        return out


def _as_function(f) -> LocallyConstantFunction:
    return f.underlying if isinstance(f, RoofFunction) else f


def eta(f, m: int) -> float:
    """Oscillation modulus ``|f|_theta * theta**m`` at depth ``m``."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    g = _as_function(f)
    return g.lipschitz_seminorm * g.theta**m


def oscillation(f, m: int) -> float:
    """Largest ``sup - inf`` over an ``m``-cylinder."""
    return _as_function(f).variation(m)


@dataclass(frozen=True)
class DiscretizationParams:
    m: int
    delta: float
    eta_m: float

    def check(self, roof: RoofFunction, mu: MarkovGibbsMeasure) -> "DiscretizationParams":
        """Raise :class:`Infeasible` unless ``2 delta + eta(m) < 0.5 int f`` and ``delta < eps / 3``."""
        if self.m < 1 or self.delta <= 0:
            raise Infeasible("need m >= 1 and delta > 0")
        if self.delta >= roof.epsilon / 3:
            raise Infeasible(f"delta = {self.delta} must be below eps/3 = {roof.epsilon / 3}")
        half = 0.5 * roof.integral(mu)
        if not 2 * self.delta + self.eta_m < half:
            raise Infeasible(f"2 delta + eta(m) = {2 * self.delta + self.eta_m} is not below {half}")
        return self

    @classmethod
    def for_roof(cls, roof: RoofFunction, m: int, delta: float) -> "DiscretizationParams":
        return cls(m, delta, eta(roof, m))


def choose_discretization(
    roof: RoofFunction, mu: MarkovGibbsMeasure, delta_request: float, m_max: int = 20
) -> DiscretizationParams:
    """Largest admissible ``delta <= delta_request`` and then the smallest ``m``.

    The cap on ``delta`` uses ``eps = min f - 1`` (less a tolerance), which
    keeps the lower step roof above 1 as well.
    """
    if delta_request <= 0:
        raise ValidationError("delta_request must be positive")
    eps = roof.min_value - 1.0 - EPS_SLACK
    if eps <= 0:
        raise Infeasible("roof too close to 1 for an automatic discretization")
    half = 0.5 * roof.integral(mu)
    depth = roof.depth
    ms = range(depth, max(depth, m_max) + 1)
    delta = min(delta_request, eps / 3 - EPS_SLACK, (half - eta(roof, ms[-1])) / 2 - EPS_SLACK)
    if delta < MIN_DELTA:
        raise Infeasible(f"no delta >= {MIN_DELTA} satisfies 2 delta + eta(m) < {half}")
    for m in ms:
        if 2 * delta + eta(roof, m) < half:
            return DiscretizationParams(m, delta, eta(roof, m))
    raise Infeasible("no m satisfies the discretization constraint")  # pragma: no cover


@dataclass(frozen=True, eq=False)
class StepRoof:
    """Roof constant on ``m``-cylinders with values in ``delta * Z``."""

    function: LocallyConstantFunction
    delta: float
    levels: dict  # m-word -> number of levels

    @property
    def depth(self) -> int:
        return self.function.depth

    def __call__(self, x) -> float:
        return self.function(x)

    def integral(self, mu: MarkovGibbsMeasure) -> float:
        return mu.integral(self.function)

    @classmethod
    def from_function(cls, f: LocallyConstantFunction, delta: float) -> "StepRoof":
        levels = {w: exact_levels(v, delta) for w, v in f.values.items()}
        if min(levels.values()) < 1:
            raise ValidationError("step roof values must be at least delta")
        return cls(f, delta, levels)


def _step_roof(roof: RoofFunction, m: int, delta: float, upper: bool) -> StepRoof:
    if m < 1 or delta <= 0:
        raise ValidationError("need m >= 1 and delta > 0")
    levels = {}
    for w, (lo, hi) in roof.extremes_on(m).items():
        levels[w] = snap_floor(hi / delta) + 2 if upper else snap_floor(lo / delta) - 2
    if not upper and min(levels.values()) < 1:
        raise NonPositiveLower(f"delta = {delta} too large: the lower roof is not positive")
    g = roof.underlying
    f = LocallyConstantFunction(
        m, {w: k * delta for w, k in levels.items()}, g.theta, None, "f_upper" if upper else "f_lower"
    )
    return StepRoof(f, delta, levels)


def roof_upper(roof: RoofFunction, m: int, delta: float) -> StepRoof:
    """``(floor(sup_{[w]_m} f / delta) + 2) * delta`` on each ``m``-word."""
    return _step_roof(roof, m, delta, True)


def roof_lower(roof: RoofFunction, m: int, delta: float) -> StepRoof:
    """``(floor(inf_{[w]_m} f / delta) - 2) * delta`` on each ``m``-word."""
    return _step_roof(roof, m, delta, False)


# ----------------------------------------------------------------------------
# the discretized shift


@dataclass(frozen=True, eq=False)
class SuspensionSFT:
    """States ``(w, k)``: a block word and a level ``0 <= k < f*(w)/delta``.

    Level ``k`` moves to ``k + 1`` inside a fiber; the top level moves to
    level 0 of every word that follows ``w`` in the block shift.
    """

    blocks: BlockShift
    roof: StepRoof
    states: list
    index: dict
    adjacency: sp.csr_matrix
    word_levels: np.ndarray  # levels per block word
    offsets: np.ndarray  # index of (w, 0) per block word
    period: int

    @property
    def block_depth(self) -> int:
        return self.blocks.depth

    @property
    def delta(self) -> float:
        return self.roof.delta

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def level_counts(self) -> dict:
        return {w: int(v) for w, v in zip(self.blocks.words, self.word_levels)}

    def successors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    @cached_property
    def _predecessor_matrix(self) -> sp.csr_matrix:
        return self.adjacency.T.tocsr()

    def predecessors(self, i: int) -> np.ndarray:
        a = self._predecessor_matrix
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def is_admissible(self, word: Sequence) -> bool:
        try:
            idx = [self.index[s] for s in word]
        except (KeyError, TypeError):
            return False
        return all(self.adjacency[i, j] for i, j in zip(idx, idx[1:]))

    def words(self, length: int) -> list[tuple]:
        """All admissible suspension words of a given length, as index tuples."""
        out = [(i,) for i in range(self.n_states)]
        for _ in range(length - 1):
            out = [w + (int(j),) for w in out for j in self.successors(w[-1])]
        return out

    def to_json(self, state_measure: Sequence[float] | None = None) -> dict:
        coo = self.adjacency.tocoo()
        edges = sorted(zip(coo.row.tolist(), coo.col.tolist()))
        doc = {
            "states": [[format_word(w), k] for w, k in self.states],
            "edges": [list(e) for e in edges],
        }
        if state_measure is not None:
            doc["state_measure"] = [float(x) for x in state_measure]
        return doc


def build_suspension_sft(
    A: TransitionMatrix, roof: StepRoof, block_depth: int | None = None, cap: int = DEFAULT_ENUMERATION_CAP
) -> SuspensionSFT:
    """Materialize the discretized shift, optionally on longer block words.

    Periodic (irreducible but not aperiodic) results are accepted; constant
    roofs always give a tower whose period is the number of levels.
    """
    D = max(roof.depth, block_depth or 0)
    blocks = higher_block_recode(A, D, cap)
    m = roof.depth
    v = np.array([roof.levels[w[:m]] for w in blocks.words], dtype=np.int64)
    if v.min() < 1:
        raise ValidationError("every fiber needs at least one level")
    offsets = np.concatenate([[0], np.cumsum(v)[:-1]])
    n = int(v.sum())
    if n > cap:
        raise ValidationError(f"{n} suspension states exceed the cap {cap}")
    states = [(w, k) for w, vw in zip(blocks.words, v.tolist()) for k in range(vw)]
    index = {s: i for i, s in enumerate(states)}
    # climbing edges: every state that is not at the top of its fiber
    tops = offsets + v - 1
    climb = np.setdiff1d(np.arange(n), tops)
    bcoo = blocks.adjacency.tocoo()
    rows = np.concatenate([climb, tops[bcoo.row]])
    cols = np.concatenate([climb + 1, offsets[bcoo.col]])
    adj = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    adj.sort_indices()
    if not _linalg.is_irreducible(adj):
        raise NotPrimitive("discretized suspension is reducible")
    period, _ = _linalg.cyclic_classes(adj.astype(float))
    return SuspensionSFT(blocks, roof, states, index, adj, v, offsets, period)


def pi_tilde(word: Sequence, S: SuspensionSFT | None = None) -> tuple[tuple, int]:
    """Base word read off a suspension word, and the count ``#w``.

    ``word`` is a sequence of ``(block word, level)`` states. The base word
    is the first block followed by the last symbol of every later block
    entered at level 0; ``#w`` is one plus the number of interior level-0
    positions.
    """
    states = list(word)
    if not states:
        raise ValidationError("empty suspension word")
    if S is not None and not S.is_admissible(states):
        raise Inadmissible("word is not admissible in the discretized shift")
    base = tuple(states[0][0])
    count = 1
    for w, k in states[1:]:
        if k == 0:
            base = base + (w[-1],)
            count += 1
    return base, count


@dataclass(frozen=True, eq=False)
class SuspensionMeasure:
    """``delta * mu([w]) / int f* dmu`` on each state ``(w, k)``."""

    base: MarkovGibbsMeasure
    sft: SuspensionSFT
    normalizer: float
    state_mass: np.ndarray

    @property
    def delta(self) -> float:
        return self.sft.delta

    @property
    def roof(self) -> StepRoof:
        return self.sft.roof

    def cylinder(self, word: Sequence) -> float:
        """Measure of a suspension cylinder from its projection to the base."""
        states = self._as_states(word)
        if not self.sft.is_admissible(states):
            return 0.0
        base, _ = pi_tilde(states)
        return self.delta * self.base.cylinder(base) / self.normalizer

    def cylinder_markov(self, word: Sequence) -> float:
        """Same measure through the stationary Markov chain on states."""
        idx = self._as_indices(word)
        return self.chain().path_measure(idx)

    def _as_states(self, word):
        return [self.sft.states[s] if isinstance(s, (int, np.integer)) else s for s in word]

    def _as_indices(self, word):
        return [int(s) if isinstance(s, (int, np.integer)) else self.sft.index[s] for s in word]

    @cached_property
    def _chain(self) -> MarkovChain:
        S = self.sft
        Qb = self.base.block_chain(S.block_depth).Q.tocoo()
        n = S.n_states
        tops = S.offsets + S.word_levels - 1
        climb = np.setdiff1d(np.arange(n), tops)
        rows = np.concatenate([climb, tops[Qb.row]])
        cols = np.concatenate([climb + 1, S.offsets[Qb.col]])
        data = np.concatenate([np.ones(len(climb)), Qb.data])
        Q = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        return MarkovChain(S.states, self.state_mass, Q)

    def chain(self) -> MarkovChain:
        return self._chain

    def slab_measure(self, words, levels: int) -> float:
        """Mass of the states ``(w, k)`` with a prefix of ``w`` in ``words`` and ``k < levels``."""
        words = frozenset(tuple(u) for u in words)
        n = len(next(iter(words)))
        if n > self.sft.block_depth:
            raise ValidationError("hole words longer than the suspension block depth")
        total = 0.0
        for i, (w, k) in enumerate(self.sft.states):
            if k < levels and w[:n] in words:
                total += self.state_mass[i]
        return float(total)

    def to_json(self) -> dict:
        return self.sft.to_json(self.state_mass)


def mu_tilde(mu: MarkovGibbsMeasure, roof: StepRoof, S: SuspensionSFT) -> SuspensionMeasure:
    if S.roof is not roof and S.roof.levels != roof.levels:
        raise ValidationError("suspension was built from a different roof")
    norm = roof.integral(mu)
    words_mass = mu.block_chain(S.block_depth).pi
    mass = np.repeat(words_mass * roof.delta / norm, S.word_levels)
    return SuspensionMeasure(mu, S, norm, mass)


def discretize(mu: MarkovGibbsMeasure, roof: StepRoof, block_depth: int | None = None) -> SuspensionMeasure:
    S = build_suspension_sft(mu.shift, roof, max(block_depth or 0, mu.depth))
    return mu_tilde(mu, roof, S)


# ----------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class InvarianceReport:
    max_length: int
    n_cylinders: int
    total_mass_error: float
    right_extension_error: float
    left_extension_error: float
    projection_error: float
    tol: float

    @property
    def total_mass_ok(self) -> bool:
        return self.total_mass_error <= self.tol

    @property
    def right_extension_ok(self) -> bool:
        return self.right_extension_error <= self.tol

    @property
    def left_extension_ok(self) -> bool:
        return self.left_extension_error <= self.tol

    @property
    def passed(self) -> bool:
        return self.total_mass_ok and self.right_extension_ok and self.left_extension_ok


def verify_invariance(nu: SuspensionMeasure, L: int, cylinder=None, tol: float = 1e-12) -> InvarianceReport:
    """Kolmogorov consistency of suspension cylinder measures up to length ``L``.

    Checks that one-state masses sum to 1, that every cylinder is the sum
    of its right extensions and of its left extensions, and (independently
    of ``cylinder``) that the projection formula agrees with the Markov
    chain on every scanned cylinder.
    """
    if L < 1:
        raise ValidationError("L must be >= 1")
    S = nu.sft
    cyl = nu.cylinder if cylinder is None else cylinder
    states = S.states

    def measure(idx_word):
        return cyl([states[i] for i in idx_word])

    cache = {}
    layer = [(i,) for i in range(S.n_states)]
    for w in layer:
        cache[w] = measure(w)
    mass_err = abs(sum(cache.values()) - 1.0)
    right_err = left_err = proj_err = 0.0
    count = len(layer)
    for length in range(1, L + 1):
        nxt = []
        for w in layer:
            if length < L:
                ext = [w + (int(j),) for j in S.successors(w[-1])]
                for e in ext:
                    cache[e] = measure(e)
                right_err = max(right_err, abs(cache[w] - sum(cache[e] for e in ext)))
                nxt.extend(ext)
            proj_err = max(proj_err, abs(nu.cylinder([states[i] for i in w]) - nu.cylinder_markov(w)))
        if length < L:
            for w in layer:
                pre = [(int(s),) + w for s in S.predecessors(w[0])]
                left_err = max(left_err, abs(cache[w] - sum(cache[p] for p in pre)))
            count += len(nxt)
        for w in layer:
            if length > 1:
                cache.pop(w[:-1], None)
        layer = nxt
    return InvarianceReport(L, count, mass_err, right_err, left_err, proj_err, tol)


@dataclass(frozen=True)
class InducedPotentialReport:
    variations: tuple  # V_n of the induced potential, n = 0..L
    c1_observed: float
    c2_observed: float
    c1_predicted: float
    c2_predicted: float
    base_c1: float
    base_c2: float

    @property
    def variations_nonincreasing(self) -> bool:
        v = self.variations
        return all(b <= a + 1e-15 for a, b in zip(v, v[1:]))

    @property
    def within_predicted(self) -> bool:
        rtol = 1e-10
        return (self.c1_observed >= self.c1_predicted * (1 - rtol)
                and self.c2_observed <= self.c2_predicted * (1 + rtol))


@dataclass(frozen=True, eq=False)
class InducedPotential:
    """Base potential read through the projection: ``phi(pi_tilde(state))``."""

    values: np.ndarray  # per suspension state
    pressure: float
    sft: SuspensionSFT

    def gated(self) -> np.ndarray:
        """``(phi - P)`` charged on level-0 states only; its Gibbs state is ``mu_tilde``."""
        levels = np.array([k for _, k in self.sft.states])
        return np.where(levels == 0, self.values - self.pressure, 0.0)


def induced_potential(nu: SuspensionMeasure, L: int = 8) -> tuple[InducedPotential, InducedPotentialReport]:
    """Induced potential on the discretized shift and a Gibbs-bound scan up to length ``L``.

    The observed constants are the extremes of
    ``mu_tilde([w]) / exp(S_k psi(w))`` with ``psi`` the gated potential
    (whose pressure is 0). They are compared with
    ``delta c_i exp(...) / int f* dmu`` built from the base certificate.
    """
    S = nu.sft
    phi = nu.base.potential
    P = nu.base.pressure
    if phi.depth > S.block_depth:
        raise ValidationError("suspension block depth must cover the potential depth")
    vals = np.array([phi.values[w[: phi.depth]] for w, _ in S.states])
    ind = InducedPotential(vals, P, S)
    psi = ind.gated()
    variations = [float(vals.max() - vals.min())] + [0.0] * L
    lo, hi = math.inf, -math.inf
    for length in range(1, L + 1):
        for w in S.words(length):
            r = nu.cylinder(w) / math.exp(psi[list(w)].sum())
            lo, hi = min(lo, r), max(hi, r)
    base = certify_gibbs(nu.base, max(1, L // max(1, int(S.word_levels.min())) + 1))
    scale = nu.delta / nu.normalizer
    span_lo = min(0.0, float((vals - P).min()))
    span_hi = max(0.0, float((vals - P).max()))
    report = InducedPotentialReport(
        tuple(variations), lo, hi,
        scale * base.c1_observed * math.exp(span_lo),
        scale * base.c2_observed * math.exp(span_hi),
        base.c1_observed, base.c2_observed,
    )
    return ind, report


# ----------------------------------------------------------------------------
# the continuous flow


@dataclass(frozen=True)
class FlowPoint:
    base: Point
    height: float


def flow_map(f, p: FlowPoint, t: float) -> tuple[FlowPoint, int]:
    """Move up by ``t``, jumping to the shifted base point at each roof crossing."""
    if t < 0:
        raise ValidationError("flow time must be nonnegative")
    x, s = p.base, p.height + t
    shifts = 0
    while True:
        try:
            r = f(x)
        except PrefixExhausted as exc:
            raise PrefixExhausted(f"base prefix exhausted after {shifts} shifts") from exc
        if s < r:
            return FlowPoint(x, s), shifts
        s -= r
        x = x.shift(1)
        shifts += 1


def _word_codes(symbols: np.ndarray, a: int, start: int, length: int) -> np.ndarray:
    code = np.zeros(symbols.shape[0], dtype=np.int64)
    for j in range(start, start + length):
        code = code * a + (symbols[:, j] - 1)
    return code


def word_code(word: Sequence[int], a: int) -> int:
    c = 0
    for s in word:
        c = c * a + (s - 1)
    return c


def code_table(f: LocallyConstantFunction, a: int) -> np.ndarray:
    """Lookup array indexed by base-``a`` word code (NaN on inadmissible words)."""
    table = np.full(a ** f.depth, np.nan)
    for w, v in f.values.items():
        table[word_code(w, a)] = v
    return table


class FlowSampler:
    """Seeded sampler of points distributed by ``mu x Leb / int f dmu``.

    Owns its generator: one instance must not be driven from two threads.
    """

    def __init__(self, mu: MarkovGibbsMeasure, roof, seed):
        self.mu = mu
        self.roof = _as_function(roof)
        self.rng = np.random.default_rng(seed)
        self._a = mu.shift.size
        self._table = code_table(self.roof, self._a)
        Q = mu.transition.toarray()
        self._cdf = np.cumsum(Q, axis=1)
        self._cdf[:, -1] = 1.0
        self._pi_cdf = np.cumsum(mu.stationary)
        self._pi_cdf[-1] = 1.0
        self._block_symbols = np.array(mu.blocks.words, dtype=np.int64)

    def sample_symbols(self, n: int, length: int) -> np.ndarray:
        """``n`` base prefixes of ``length`` symbols from the stationary chain."""
        m = self.mu.depth
        state = np.searchsorted(self._pi_cdf, self.rng.random(n), side="right")
        state = np.minimum(state, len(self._pi_cdf) - 1)
        steps = max(0, length - m)
        out = np.empty((n, max(length, m)), dtype=np.int64)
        out[:, :m] = self._block_symbols[state]
        for j in range(steps):
            u = self.rng.random(n)
            nxt = (u[:, None] >= self._cdf[state]).sum(axis=1)
            state = np.minimum(nxt, self._cdf.shape[1] - 1)
            out[:, m + j] = self._block_symbols[state, -1]
        return out[:, :length]

    def roof_values(self, symbols: np.ndarray, start: int = 0) -> np.ndarray:
        return self._table[_word_codes(symbols, self._a, start, self.roof.depth)]

    def sample(self, n: int, length: int) -> tuple[np.ndarray, np.ndarray]:
        """``(symbols, heights)``.

        Pairs ``(x, h)`` with ``x`` from ``mu`` and ``h`` uniform on
        ``[0, max f)`` are kept when ``h < f(x)``; rejected pairs are redrawn
        whole, so the base marginal is ``f dmu / int f dmu``.
        """
        length = max(length, self.roof.depth)
        symbols = np.empty((n, length), dtype=np.int64)
        heights = np.empty(n)
        fmax = self.roof.max_value
        filled = 0
        while filled < n:
            need = n - filled
            batch = self.sample_symbols(need, length)
            h = self.rng.random(need) * fmax
            ok = h < self.roof_values(batch)
            k = int(ok.sum())
            symbols[filled:filled + k] = batch[ok]
            heights[filled:filled + k] = h[ok]
            filled += k
        return symbols, heights

    def sample_point(self, length: int) -> FlowPoint:
        symbols, heights = self.sample(1, length)
        return FlowPoint(Point(tuple(int(s) for s in symbols[0])), float(heights[0]))


def sample_flow_point(mu: MarkovGibbsMeasure, roof, seed, horizon: int = 32) -> FlowPoint:
    return FlowSampler(mu, roof, seed).sample_point(horizon)
