"""One-sided subshifts of finite type.

Symbols are the integers ``1..a``; a word is a tuple of symbols. Points of
the shift space are described finitely, as a prefix followed by an
optional periodic tail.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import gcd
from os import PathLike
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .exceptions import (
    EmptyRowOrColumn,
    Inadmissible,
    LengthOverflow,
    NotCyclicallyAdmissible,
    NotPrimitive,
    PrefixExhausted,
    ValidationError,
)

DEFAULT_ENUMERATION_CAP = 10**7
DEFAULT_THETA = 0.5

Word = tuple


def parse_word(text: str | Sequence[int]) -> Word:
    """``"121"`` -> ``(1, 2, 1)``; tuples and lists pass through."""
    if isinstance(text, str):
        if not text.isdigit():
            raise ValidationError(f"word string must be digits, got {text!r}")
        return tuple(int(c) for c in text)
    return tuple(int(s) for s in text)


def format_word(word: Sequence[int]) -> str:
    return "".join(str(s) for s in word)


# ----------------------------------------------------------------------------
# transition matrices


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Validated 0/1 transition matrix of a mixing SFT."""

    entries: np.ndarray
    primitivity_exponent: int | None = None

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def allows(self, s: int, t: int) -> bool:
        return bool(self.entries[s - 1, t - 1])

    def successors(self, s: int) -> list[int]:
        return [int(j) + 1 for j in np.flatnonzero(self.entries[s - 1])]

    def __repr__(self) -> str:
        rows = self.entries.astype(int).tolist()
        return f"TransitionMatrix({rows}, d={self.primitivity_exponent})"


def _check_square_bits(entries) -> np.ndarray:
    arr = np.asarray(entries)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"transition matrix must be square, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValidationError("transition matrix needs at least 2 symbols")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValidationError("transition matrix entries must be 0 or 1")
    return arr.astype(bool)


def validate_transition_matrix(entries) -> TransitionMatrix:
    """Check a 0/1 matrix and attach its minimal primitivity exponent.

    The search stops at Wielandt's bound ``(a-1)**2 + 1``.
    """
    bits = _check_square_bits(entries)
    a = bits.shape[0]
    stranded = [i + 1 for i in range(a) if not bits[i].any() or not bits[:, i].any()]
    if stranded:
        raise EmptyRowOrColumn(f"symbols {stranded} have an empty row or column")
    power = bits.copy()
    as_int = bits.astype(np.int64)
    for d in range(1, (a - 1) ** 2 + 2):
        if power.all():
            out = bits.astype(np.int8)
            out.setflags(write=False)
            return TransitionMatrix(out, d)
        power = (power.astype(np.int64) @ as_int) > 0
    raise NotPrimitive(f"no power A^d with d <= {(a - 1) ** 2 + 1} is positive")


def full_shift(a: int) -> TransitionMatrix:
    return validate_transition_matrix(np.ones((a, a), dtype=int))


def golden_mean_shift() -> TransitionMatrix:
    return validate_transition_matrix([[1, 1], [1, 0]])


def word_count(A: TransitionMatrix, n: int) -> int:
    """Exact number of admissible ``n``-words (sum of entries of A^(n-1))."""
    if n < 1:
        raise ValidationError("word length must be >= 1")
    M = A.entries.astype(object)
    vec = np.ones(A.size, dtype=object)
    for _ in range(n - 1):
        vec = M @ vec
    return int(sum(vec))


def is_admissible(A: TransitionMatrix, word: Sequence[int]) -> bool:
    if not word or any(not 1 <= s <= A.size for s in word):
        return False
    return all(A.allows(s, t) for s, t in zip(word, word[1:]))


def check_word(A: TransitionMatrix, word) -> Word:
    w = parse_word(word)
    if not is_admissible(A, w):
        raise Inadmissible(f"word {format_word(w)} is not admissible")
    return w


def enumerate_words(A: TransitionMatrix, n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> list[Word]:
    """All admissible ``n``-words in lexicographic order."""
    count = word_count(A, n)
    if count > cap:
        raise LengthOverflow(f"{count} words of length {n} exceed the cap {cap}")
    succ = {s: A.successors(s) for s in range(1, A.size + 1)}
    words: list[Word] = [(s,) for s in range(1, A.size + 1)]
    for _ in range(n - 1):
        words = [w + (t,) for w in words for t in succ[w[-1]]]
    return words


def enumerate_extensions(A: TransitionMatrix, word: Word, extra: int) -> list[Word]:
    """Admissible words of length ``len(word) + extra`` starting with ``word``."""
    out = [tuple(word)]
    for _ in range(extra):
        out = [w + (t,) for w in out for t in A.successors(w[-1])]
    return out


# ----------------------------------------------------------------------------
# points


def prime_period(word: Sequence[int], A: TransitionMatrix | None = None) -> int:
    """Smallest rotation period of a cyclic word."""
    w = tuple(word)
    if not w:
        raise ValidationError("empty word has no period")
    if A is not None and not (is_admissible(A, w) and A.allows(w[-1], w[0])):
        raise NotCyclicallyAdmissible(f"{format_word(w)} is not cyclically admissible")
    n = len(w)
    for p in range(1, n + 1):
        if n % p == 0 and w[p:] + w[:p] == w:
            return p
    return n  # unreachable: p = n always works


@dataclass(frozen=True)
class Point:
    """``prefix`` followed by ``tail`` repeated forever.

    With an empty tail the point is known only up to ``len(prefix)``
    symbols; asking for more raises :class:`PrefixExhausted`.
    """

    prefix: Word = ()
    tail: Word = ()

    def __post_init__(self):
        object.__setattr__(self, "prefix", parse_word(self.prefix))
        object.__setattr__(self, "tail", parse_word(self.tail))
        if not self.prefix and not self.tail:
            raise ValidationError("point needs a prefix or a tail")

    @property
    def is_finite(self) -> bool:
        return not self.tail

    def symbol(self, i: int) -> int:
        if i < len(self.prefix):
            return self.prefix[i]
        if not self.tail:
            raise PrefixExhausted(f"point described by {len(self.prefix)} symbols, asked for index {i}")
        return self.tail[(i - len(self.prefix)) % len(self.tail)]

    def symbols(self, n: int) -> Word:
        return tuple(self.symbol(i) for i in range(n))

    def shift(self, k: int = 1) -> "Point":
        if k <= len(self.prefix):
            rest = self.prefix[k:]
            if rest or self.tail:
                return Point(rest, self.tail)
            raise PrefixExhausted("shift consumed the whole prefix")
        if not self.tail:
            raise PrefixExhausted(f"cannot shift a {len(self.prefix)}-symbol prefix by {k}")
        r = (k - len(self.prefix)) % len(self.tail)
        return Point((), self.tail[r:] + self.tail[:r])

    def is_admissible(self, A: TransitionMatrix) -> bool:
        n = len(self.prefix) + 2 * len(self.tail)
        return is_admissible(A, self.symbols(n))


@dataclass(frozen=True)
class PeriodicPoint:
    """The point ``repeating_word`` repeated forever."""

    repeating_word: Word
    prime_period: int = field(init=False)

    def __post_init__(self):
        w = parse_word(self.repeating_word)
        object.__setattr__(self, "repeating_word", w)
        object.__setattr__(self, "prime_period", prime_period(w))

    @classmethod
    def checked(cls, word, A: TransitionMatrix) -> "PeriodicPoint":
        w = parse_word(word)
        prime_period(w, A)
        return cls(w)

    @property
    def orbit_word(self) -> Word:
        """The repeating block of minimal length."""
        return self.repeating_word[: self.prime_period]

    def symbols(self, n: int) -> Word:
        w = self.repeating_word
        return tuple(w[i % len(w)] for i in range(n))

    def as_point(self) -> Point:
        return Point((), self.repeating_word)

    def rotate(self, k: int) -> "PeriodicPoint":
        w = self.repeating_word
        k %= len(w)
        return PeriodicPoint(w[k:] + w[:k])


@dataclass(frozen=True)
class AperiodicPoint:
    """A point declared not periodic, known through a finite prefix."""

    prefix: Word

    def __post_init__(self):
        object.__setattr__(self, "prefix", parse_word(self.prefix))

    def symbols(self, n: int) -> Word:
        if n > len(self.prefix):
            raise PrefixExhausted(f"aperiodic target known to {len(self.prefix)} symbols, need {n}")
        return self.prefix[:n]

    def as_point(self) -> Point:
        return Point(self.prefix)


def _as_point(x) -> Point:
    if isinstance(x, Point):
        return x
    if isinstance(x, (PeriodicPoint, AperiodicPoint)):
        return x.as_point()
    raise TypeError(f"cannot interpret {x!r} as a point")


def d_theta_distance(x, y, theta: float = DEFAULT_THETA) -> float:
    """``theta**m`` where ``m`` is the first index at which ``x`` and ``y`` differ."""
    if not 0.0 < theta < 1.0:
        raise ValidationError("theta must lie in (0, 1)")
    x, y = _as_point(x), _as_point(y)
    if x.tail and y.tail:
        horizon = max(len(x.prefix), len(y.prefix)) + len(x.tail) * len(y.tail) // gcd(len(x.tail), len(y.tail))
    else:
        horizon = min(
            len(x.prefix) if not x.tail else float("inf"),
            len(y.prefix) if not y.tail else float("inf"),
        )
    for i in range(int(horizon)):
        if x.symbol(i) != y.symbol(i):
            return theta**i
    if x.tail and y.tail:
        return 0.0
    raise PrefixExhausted(f"points agree on all {int(horizon)} known symbols")


# ----------------------------------------------------------------------------
# higher block presentation


@dataclass(frozen=True, eq=False)
class BlockShift:
    """The ``depth``-block presentation of a shift.

    States are the admissible ``depth``-words (lexicographic order); the edge
    ``u -> v`` exists when ``u[1:] == v[:-1]`` and ``u + v[-1:]`` is admissible.
    """

    base: TransitionMatrix
    depth: int
    words: list
    index: dict
    adjacency: sp.csr_matrix

    @property
    def n_states(self) -> int:
        return len(self.words)

    def transition_matrix(self) -> TransitionMatrix:
        return validate_transition_matrix(self.adjacency.toarray().astype(int))

    def successor_indices(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]


def higher_block_recode(A: TransitionMatrix, m: int, cap: int = DEFAULT_ENUMERATION_CAP) -> BlockShift:
    if m < 1:
        raise ValidationError("block depth must be >= 1")
    words = enumerate_words(A, m, cap)
    index = {w: i for i, w in enumerate(words)}
    rows, cols = [], []
    for i, w in enumerate(words):
        for t in A.successors(w[-1]):
            rows.append(i)
            cols.append(index[w[1:] + (t,)])
    n = len(words)
    adj = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    adj.sort_indices()
    return BlockShift(A, m, words, index, adj)


# ----------------------------------------------------------------------------
# locally constant functions


def _variation(values: Mapping[Word, float], n: int) -> float:
    groups: dict[Word, list[float]] = {}
    for w, v in values.items():
        groups.setdefault(w[:n], []).append(v)
    return max(max(g) - min(g) for g in groups.values())


@dataclass(frozen=True, eq=False)
class LocallyConstantFunction:
    """Real function on X depending only on the first ``depth`` symbols.

    ``lipschitz_seminorm`` defaults to ``max_{0<=n<depth} V_n / theta**n``,
    where ``V_n`` is the largest oscillation over an ``n``-cylinder (``V_0``
    is the oscillation over the whole space). A caller may declare a larger
    value, never a smaller one.
    """

    depth: int
    values: Mapping[Word, float]
    theta: float = DEFAULT_THETA
    lipschitz_seminorm: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.depth < 1:
            raise ValidationError("depth must be >= 1")
        if not 0.0 < self.theta < 1.0:
            raise ValidationError("theta must lie in (0, 1)")
        vals = {parse_word(k): float(v) for k, v in self.values.items()}
        if any(len(w) != self.depth for w in vals):
            raise ValidationError(f"all keys must be words of length {self.depth}")
        if not all(np.isfinite(v) for v in vals.values()):
            raise ValidationError("function values must be finite")
        object.__setattr__(self, "values", vals)
        computed = self.computed_seminorm()
        if self.lipschitz_seminorm is None:
            object.__setattr__(self, "lipschitz_seminorm", computed)
        elif self.lipschitz_seminorm < computed - 1e-12:
            raise ValidationError(
                f"declared seminorm {self.lipschitz_seminorm} is below the computed {computed}"
            )

    @classmethod
    def constant(cls, A: TransitionMatrix, c: float, depth: int = 1, **kw) -> "LocallyConstantFunction":
        return cls(depth, {w: c for w in enumerate_words(A, depth)}, **kw)

    @classmethod
    def from_symbols(cls, A: TransitionMatrix, per_symbol: Sequence[float], **kw) -> "LocallyConstantFunction":
        """Depth-1 function with value ``per_symbol[s-1]`` on ``[s]``."""
        if len(per_symbol) != A.size:
            raise ValidationError("need one value per symbol")
        return cls(1, {(s,): v for s, v in zip(range(1, A.size + 1), per_symbol)}, **kw)

    def check_domain(self, A: TransitionMatrix) -> "LocallyConstantFunction":
        expected = set(enumerate_words(A, self.depth))
        if set(self.values) != expected:
            missing = sorted(expected - set(self.values))[:3]
            extra = sorted(set(self.values) - expected)[:3]
            raise ValidationError(
                f"function {self.name or ''} must be defined on exactly the admissible "
                f"{self.depth}-words (missing {missing}, unexpected {extra})"
            )
        return self

    def variation(self, n: int) -> float:
        """``V_n``: largest oscillation over an ``n``-cylinder."""
        if n >= self.depth:
            return 0.0
        return _variation(self.values, n)

    def computed_seminorm(self) -> float:
        return max(self.variation(n) / self.theta**n for n in range(self.depth))

    @property
    def sup_norm(self) -> float:
        return max(abs(v) for v in self.values.values())

    @property
    def lipschitz_norm(self) -> float:
        return self.lipschitz_seminorm + self.sup_norm

    @property
    def min_value(self) -> float:
        return min(self.values.values())

    @property
    def max_value(self) -> float:
        return max(self.values.values())

    def __call__(self, x) -> float:
        if isinstance(x, (Point, PeriodicPoint, AperiodicPoint)):
            return self.values[x.symbols(self.depth)]
        return self.values[tuple(x)[: self.depth]]

    def on_blocks(self, blocks: BlockShift) -> np.ndarray:
        """Values at each state of a block presentation of depth >= ``self.depth``."""
        if blocks.depth < self.depth:
            raise ValidationError(f"block depth {blocks.depth} < function depth {self.depth}")
        return np.array([self.values[w[: self.depth]] for w in blocks.words])

    def at_depth(self, A: TransitionMatrix, depth: int) -> "LocallyConstantFunction":
        """The same function re-tabulated on ``depth``-words."""
        if depth < self.depth:
            raise ValidationError("cannot lower the depth of a function")
        vals = {w: self.values[w[: self.depth]] for w in enumerate_words(A, depth)}
        return LocallyConstantFunction(depth, vals, self.theta, self.lipschitz_seminorm, self.name)

    def map(self, fn) -> "LocallyConstantFunction":
        vals = {w: fn(v) for w, v in self.values.items()}
        return LocallyConstantFunction(self.depth, vals, self.theta, None, self.name)

    def integral(self, cylinder_measure) -> float:
        return float(sum(v * cylinder_measure(w) for w, v in self.values.items()))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "depth": self.depth,
            "theta": self.theta,
            "values": {format_word(w): v for w, v in sorted(self.values.items())},
        }


# ----------------------------------------------------------------------------
# JSON


def system_from_dict(doc: Mapping) -> tuple[TransitionMatrix, dict[str, LocallyConstantFunction]]:
    """Read ``{"alphabet_size", "matrix", "functions": [...]}``."""
    for key in ("alphabet_size", "matrix"):
        if key not in doc:
            raise ValidationError(f"missing required field {key!r}")
    a = int(doc["alphabet_size"])
    if a > 9:
        raise ValidationError("word strings use one digit per symbol; alphabet_size must be <= 9")
    A = validate_transition_matrix(doc["matrix"])
    if A.size != a:
        raise ValidationError(f"alphabet_size {a} does not match a {A.size}x{A.size} matrix")
    functions = {}
    for spec in doc.get("functions", []):
        for key in ("name", "depth", "values"):
            if key not in spec:
                raise ValidationError(f"function entry missing field {key!r}")
        fn = LocallyConstantFunction(
            int(spec["depth"]),
            {parse_word(k): v for k, v in spec["values"].items()},
            float(spec.get("theta", DEFAULT_THETA)),
            spec.get("lipschitz_seminorm"),
            spec["name"],
        ).check_domain(A)
        functions[spec["name"]] = fn
    return A, functions


def load_system(path: str | PathLike) -> tuple[TransitionMatrix, dict[str, LocallyConstantFunction]]:
    with open(path) as fh:
        return system_from_dict(json.load(fh))


def system_to_dict(A: TransitionMatrix, functions: Iterable[LocallyConstantFunction] = ()) -> dict:
    return {
        "alphabet_size": A.size,
        "matrix": A.entries.astype(int).tolist(),
        "functions": [f.to_json() for f in functions],
    }
