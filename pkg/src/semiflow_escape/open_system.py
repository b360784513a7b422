"""Escape through holes made of cylinders, for the discrete-time shift."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import _linalg
from .exceptions import FullEscape, ValidationError
from .gibbs import MarkovChain, MarkovGibbsMeasure
from .sft import (
    AperiodicPoint,
    PeriodicPoint,
    TransitionMatrix,
    enumerate_words,
    format_word,
    is_admissible,
    parse_word,
    word_count,
)

NEG_INF = -math.inf
DEFAULT_DIAGNOSTIC_STEPS = 400


@dataclass(frozen=True)
class Hole:
    """A nonempty finite union of cylinders of one length."""

    depth: int
    words: frozenset

    def __post_init__(self):
        words = frozenset(parse_word(w) for w in self.words)
        if not words:
            raise ValidationError("a hole needs at least one cylinder")
        if any(len(w) != self.depth for w in words):
            raise ValidationError(f"all hole words must have length {self.depth}")
        object.__setattr__(self, "words", words)

    @classmethod
    def of(cls, words: Iterable, A: TransitionMatrix | None = None) -> "Hole":
        """Build from words, checking admissibility and properness against ``A``."""
        ws = [parse_word(w) for w in words]
        if not ws:
            raise ValidationError("a hole needs at least one cylinder")
        hole = cls(len(ws[0]), frozenset(ws))
        if A is not None:
            hole.check(A)
        return hole

    def check(self, A: TransitionMatrix) -> "Hole":
        bad = [format_word(w) for w in self.words if not is_admissible(A, w)]
        if bad:
            raise ValidationError(f"hole words {bad} are not admissible")
        if len(self.words) == word_count(A, self.depth):
            raise ValidationError("a hole may not cover the whole space")
        return self

    def contains_word(self, word: Sequence[int]) -> bool:
        return tuple(word[: self.depth]) in self.words

    def to_json(self) -> dict:
        return {"depth": self.depth, "words": sorted(format_word(w) for w in self.words)}

    @classmethod
    def from_json(cls, doc) -> "Hole":
        return cls(int(doc["depth"]), frozenset(doc["words"]))


def _hole_words(hole) -> tuple[int, frozenset]:
    if isinstance(hole, Hole):
        return hole.depth, hole.words
    words = frozenset(parse_word(w) for w in hole)
    depths = {len(w) for w in words}
    if len(depths) != 1:
        raise ValidationError("hole words must share one length")
    return depths.pop(), words


def hole_mask(chain: MarkovChain, depth: int, words: frozenset) -> np.ndarray:
    """States of a block chain whose ``depth``-prefix lies in the hole."""
    return np.array([tuple(w[:depth]) in words for w in chain.labels], dtype=bool)


def masked_survivor_log(chain: MarkovChain, mask: np.ndarray, k: int) -> float:
    """``log P(X_0..X_{k-1} all outside mask)`` for a stationary chain."""
    return float(masked_survivor_curve(chain, mask, k)[-1])


def masked_survivor_curve(chain: MarkovChain, mask: np.ndarray, k_max: int) -> np.ndarray:
    """Survivor log-measures for ``k = 1..k_max`` (rescaled recursion, no underflow)."""
    if k_max < 1:
        raise ValidationError("k must be >= 1")
    keep = ~mask
    QT = chain.Q.T.tocsr()
    v = np.where(keep, chain.pi, 0.0)
    out = np.empty(k_max)
    log_scale = 0.0
    for k in range(k_max):
        total = v.sum()
        if total <= 0.0:
            out[k:] = NEG_INF
            break
        out[k] = log_scale + math.log(total)
        v = v / total
        log_scale += math.log(total)
        v = QT @ v
        v[mask] = 0.0
    return out


def survivor_log_measure(mu: MarkovGibbsMeasure, hole, k: int) -> float:
    """``log mu{x : sigma^i x not in H, 0 <= i < k}``; ``-inf`` if nothing survives."""
    depth, words = _hole_words(hole)
    chain = mu.block_chain(max(mu.depth, depth))
    return masked_survivor_log(chain, hole_mask(chain, depth, words), k)


def open_spectral_radius(chain: MarkovChain, mask: np.ndarray) -> float:
    """Spectral radius of ``Q`` restricted to the states outside the hole."""
    keep = np.flatnonzero(~mask)
    if keep.size == 0:
        return 0.0
    sub = chain.Q[keep][:, keep]
    return _linalg.spectral_radius(sub)


@dataclass(frozen=True)
class EscapeResult:
    rate: float
    open_eigenvalue: float
    pressure: float
    survivor_log_measures: np.ndarray = field(repr=False)
    hole_measure: float = math.nan

    @property
    def finite_k_slope(self) -> float:
        """``|K(k) - K(2k)| / k`` at the largest available ``k``."""
        K = self.survivor_log_measures
        k = len(K) // 2
        return abs(K[k - 1] - K[2 * k - 1]) / k


def escape_from_chain(chain: MarkovChain, mask: np.ndarray, k_max: int = DEFAULT_DIAGNOSTIC_STEPS):
    """``(rate, open radius, survivor curve)`` for a stationary chain with a hole."""
    rho = open_spectral_radius(chain, mask)
    if rho <= 0.0:
        raise FullEscape("the hole-restricted operator is nilpotent; the escape rate is infinite")
    rate = -math.log(rho)
    curve = masked_survivor_curve(chain, mask, k_max) if k_max else np.empty(0)
    return max(rate, 0.0), rho, curve


def escape_rate_discrete(mu: MarkovGibbsMeasure, hole, k_max: int = DEFAULT_DIAGNOSTIC_STEPS) -> EscapeResult:
    """Escape rate ``P - log lam_open`` through a cylinder hole.

    Computed as ``-log`` of the spectral radius of the stochastic matrix
    restricted to surviving blocks, which equals ``P - log lam_open`` for
    the weighted transfer matrix.
    """
    depth, words = _hole_words(hole)
    chain = mu.block_chain(max(mu.depth, depth))
    mask = hole_mask(chain, depth, words)
    rate, rho, curve = escape_from_chain(chain, mask, k_max)
    lam_open = rho * math.exp(mu.pressure)
    return EscapeResult(rate, lam_open, mu.pressure, curve, mu.measure_of(words))


# ----------------------------------------------------------------------------
# nested hole sequences


def target_word(z, n: int) -> tuple:
    if isinstance(z, (PeriodicPoint, AperiodicPoint)):
        return z.symbols(n)
    raise ValidationError(f"target must be periodic or aperiodic point, got {z!r}")


@dataclass(frozen=True)
class NestedHoleSequence:
    """Holes ``I_n`` shrinking to ``z`` with the constants of the nested condition."""

    target: object
    holes: dict  # n -> Hole
    c: float
    rho: float
    kappa: float
    lengths: dict  # n -> l_n

    @property
    def n_values(self) -> list[int]:
        return sorted(self.holes)


def fit_decay(measures: dict, slack: float = 1e-9) -> tuple[float, float]:
    """``(c, rho)``: ``rho`` the largest successive ratio plus slack, ``c`` the smallest valid constant."""
    ns = sorted(measures)
    ratios = [measures[b] / measures[a] for a, b in zip(ns, ns[1:]) if measures[a] > 0]
    rho = (max(ratios) if ratios else 0.5) + slack
    c = max(measures[n] / rho**n for n in ns) * (1 + 1e-9)
    return c, rho


def make_nested_cylinders(z, n_range: Iterable[int], mu: MarkovGibbsMeasure) -> NestedHoleSequence:
    """``I_n = [z]_n`` with ``l_n = n`` and ``kappa = 1/2``."""
    ns = sorted(set(n_range))
    if not ns or ns[0] < 1:
        raise ValidationError("n_range must contain positive integers")
    holes = {n: Hole(n, frozenset([target_word(z, n)])) for n in ns}
    for h in holes.values():
        h.check(mu.shift)
    c, rho = fit_decay({n: mu.measure_of(h.words) for n, h in holes.items()})
    return NestedHoleSequence(z, holes, c, rho, 0.5, {n: n for n in ns})


@dataclass(frozen=True)
class ConditionResult:
    item: int
    passed: bool | None  # None: not applicable
    witness: int | None = None
    detail: str = ""


@dataclass(frozen=True)
class NestedReport:
    items: tuple

    @property
    def passed(self) -> bool:
        return all(r.passed is not False for r in self.items)

    def item(self, k: int) -> ConditionResult:
        return self.items[k - 1]

    @property
    def failed_items(self) -> list[int]:
        return [r.item for r in self.items if r.passed is False]


def _subset_of_prefix_set(longer: Iterable[tuple], shorter: frozenset, n: int) -> tuple | None:
    """First word of ``longer`` whose ``n``-prefix is not in ``shorter``."""
    for w in sorted(longer):
        if w[:n] not in shorter:
            return w
    return None


def preimage_in_target_cylinder(A: TransitionMatrix, hole: Hole, zp: tuple) -> list[tuple]:
    """``sigma^{-p}(hole) cap [zp]`` as a list of ``(p + n)``-words."""
    return [zp + w for w in sorted(hole.words) if A.allows(zp[-1], w[0])]


def validate_nested(seq: NestedHoleSequence, mu: MarkovGibbsMeasure) -> NestedReport:
    """Check items 1-5 of the nested condition on the stored finite range.

    Item 5 is a tail property; it passes when it holds for every ``n`` from
    some ``n_0`` in the first half of the range onward.
    """
    A = mu.shift
    ns = seq.n_values
    z = seq.target
    results = []

    # 1. each I_n a union of admissible n-cylinders
    bad = None
    for n in ns:
        h = seq.holes[n]
        if h.depth != n or any(len(w) != n or not is_admissible(A, w) for w in h.words):
            bad = n
            break
    results.append(ConditionResult(1, bad is None, bad, "" if bad is None else "wrong depth or inadmissible word"))

    # 2. nested and containing z
    bad, detail = None, ""
    for n in ns:
        if target_word(z, n) not in seq.holes[n].words:
            bad, detail = n, "z not in I_n"
            break
        if n + 1 in seq.holes:
            w = _subset_of_prefix_set(seq.holes[n + 1].words, seq.holes[n].words, n)
            if w is not None:
                bad, detail = n + 1, f"I_{n + 1} word {format_word(w)} not in I_{n}"
                break
    results.append(ConditionResult(2, bad is None, bad, detail))

    # 3. exponential decay of measure
    bad, detail = None, ""
    if not 0.0 < seq.rho < 1.0:
        bad, detail = ns[0], f"rho = {seq.rho} not in (0, 1)"
    elif seq.c <= 0:
        bad, detail = ns[0], "c must be positive"
    else:
        for n in ns:
            if mu.measure_of(seq.holes[n].words) > seq.c * seq.rho**n:
                bad, detail = n, "mu(I_n) > c rho^n"
                break
    results.append(ConditionResult(3, bad is None, bad, detail))

    # 4. I_n inside [z]_{l_n} with kappa < l_n / n <= 1
    bad, detail = None, ""
    for n in ns:
        l = seq.lengths.get(n)
        if l is None or not (seq.kappa < l / n <= 1):
            bad, detail = n, f"l_n = {l} violates kappa < l_n/n <= 1"
            break
        zl = target_word(z, l)
        if any(w[:l] != zl for w in seq.holes[n].words):
            bad, detail = n, f"I_n not inside [z]_{l}"
            break
    results.append(ConditionResult(4, bad is None, bad, detail))

    # 5. sigma^{-p} I_n cap [z]_p inside I_n, eventually
    if not isinstance(z, PeriodicPoint):
        results.append(ConditionResult(5, None, None, "not applicable: z is not periodic"))
    else:
        p = z.prime_period
        zp = z.symbols(p)
        holds = {}
        for n in ns:
            pre = preimage_in_target_cylinder(A, seq.holes[n], zp)
            holds[n] = all(w[:n] in seq.holes[n].words for w in pre)
        n0 = None
        for n in reversed(ns):
            if not holds[n]:
                break
            n0 = n
        half = ns[(len(ns) - 1) // 2]
        ok = n0 is not None and n0 <= half
        witness = None if ok else max(n for n in ns if not holds[n])
        results.append(ConditionResult(5, ok, witness, f"holds from n0 = {n0}"))
    return NestedReport(tuple(results))


@dataclass(frozen=True)
class RatioPoint:
    n: int
    rate: float
    hole_measure: float
    ratio: float
    gamma: float


def discrete_ratio_curve(mu: MarkovGibbsMeasure, seq: NestedHoleSequence, n_range: Iterable[int] | None = None,
                         k_max: int = 0) -> list[RatioPoint]:
    """``R_Discrete(I_n) / mu(I_n)`` next to its limit ``gamma(z)``."""
    g = mu.gamma(seq.target)
    ns = seq.n_values if n_range is None else sorted(n_range)
    out = []
    for n in ns:
        res = escape_rate_discrete(mu, seq.holes[n], k_max=k_max)
        out.append(RatioPoint(n, res.rate, res.hole_measure, res.rate / res.hole_measure, g))
    return out
