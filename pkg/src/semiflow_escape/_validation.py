"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

import math
from typing import Iterable, Mapping

from .exceptions import ValidationError
from .sft import LocallyConstantFunction, TransitionMatrix, check_word, parse_word, validate_transition_matrix


def check_shift(A) -> TransitionMatrix:
    """Accept a :class:`TransitionMatrix` or any 0/1 array-like."""
    if isinstance(A, TransitionMatrix):
        return A
    if A is None:
        raise ValidationError("a transition matrix is required")
    return validate_transition_matrix(A)


def check_function(A: TransitionMatrix, values, name: str, theta: float = 0.5) -> LocallyConstantFunction | None:
    """Build a locally constant function from per-symbol values or a ``{word: value}`` map."""
    if values is None:
        return None
    if isinstance(values, LocallyConstantFunction):
        return values.check_domain(A)
    if isinstance(values, Mapping):
        vals = {parse_word(k): float(v) for k, v in values.items()}
        depths = {len(w) for w in vals}
        if len(depths) != 1:
            raise ValidationError(f"{name}: words of mixed lengths")
        return LocallyConstantFunction(depths.pop(), vals, theta, None, name).check_domain(A)
    vals = [float(v) for v in values]
    if len(vals) != A.size:
        raise ValidationError(f"{name}: expected {A.size} per-symbol values, got {len(vals)}")
    return LocallyConstantFunction(1, {(i + 1,): v for i, v in enumerate(vals)}, theta, None, name).check_domain(A)


def check_hole_words(A: TransitionMatrix, words) -> frozenset:
    """A nonempty set of admissible words of one length."""
    if isinstance(words, (str, tuple)):
        words = [words]
    out = frozenset(check_word(A, parse_word(w)) for w in words)
    if not out:
        raise ValidationError("a hole needs at least one word")
    if len({len(w) for w in out}) != 1:
        raise ValidationError("hole words must share one length")
    return out


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be a positive number, got {value}")
    return value


def check_collection(X, name: str = "X") -> list:
    if X is None or isinstance(X, (str, bytes)) or not isinstance(X, Iterable):
        raise ValidationError(f"{name} must be a sequence of holes")
    items = list(X)
    if not items:
        raise ValidationError(f"{name} is empty")
    return items
