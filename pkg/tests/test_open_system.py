import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semiflow_escape.exceptions import FullEscape, ValidationError
from semiflow_escape.gibbs import equilibrium_state
from semiflow_escape.open_system import (
    Hole,
    NestedHoleSequence,
    discrete_ratio_curve,
    escape_rate_discrete,
    fit_decay,
    make_nested_cylinders,
    survivor_log_measure,
    validate_nested,
)
from semiflow_escape.sft import AperiodicPoint, LocallyConstantFunction, PeriodicPoint, enumerate_words, full_shift

from conftest import GOLDEN_RATIO
from oracles import brute_survivor


def hole_families(A, depth):
    words = enumerate_words(A, depth)
    for r in range(1, len(words)):
        for combo in itertools.combinations(words, r):
            yield frozenset(combo)


class TestHole:
    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            Hole(1, frozenset())

    def test_rejects_whole_space(self, full2):
        with pytest.raises(ValidationError):
            Hole.of(["1", "2"], full2)

    def test_rejects_mixed_lengths(self):
        with pytest.raises(ValidationError):
            Hole.of(["1", "12"])

    def test_json(self, golden):
        h = Hole.of(["12", "21"], golden)
        assert Hole.from_json(h.to_json()) == h
        assert h.to_json() == {"depth": 2, "words": ["12", "21"]}


class TestSurvivor:
    def test_single_symbol(self, mu_half):
        assert survivor_log_measure(mu_half, Hole.of(["2"]), 5) == pytest.approx(math.log(2**-5), abs=1e-14)

    def test_golden_word(self, mu_half):
        assert survivor_log_measure(mu_half, Hole.of(["11"]), 4) == pytest.approx(math.log(13 / 32), abs=1e-14)

    def test_everything_escapes(self, mu_half):
        assert survivor_log_measure(mu_half, ["1", "2"], 1) == -math.inf

    @pytest.mark.parametrize("which", ["full2", "golden"])
    def test_oracle_equivalence(self, which, request):
        A = request.getfixturevalue(which)
        mu = equilibrium_state(A)
        for depth in (1, 2, 3):
            for words in hole_families(A, depth):
                for k in (1, 3, 7, 12):
                    got = survivor_log_measure(mu, list(words), k)
                    ref = brute_survivor(mu, words, k)
                    assert got == ref or abs(got - ref) <= 1e-10

    def test_oracle_three_symbols(self):
        A = full_shift(3)
        rng = np.random.default_rng(3)
        phi = LocallyConstantFunction(2, {w: float(rng.normal()) for w in enumerate_words(A, 2)})
        mu = equilibrium_state(A, phi)
        for words in [{(1, 1)}, {(1, 2), (3, 3)}, {(2,)}]:
            for k in (1, 4, 8):
                assert survivor_log_measure(mu, list(words), k) == pytest.approx(brute_survivor(mu, words, k), abs=1e-10)

    @given(st.sets(st.sampled_from([(1, 1), (1, 2), (2, 1), (2, 2)]), min_size=1, max_size=3),
           st.sampled_from([(1, 1), (1, 2), (2, 1), (2, 2)]), st.integers(1, 30))
    def test_hole_monotonicity(self, words, extra, k):
        mu = equilibrium_state(full_shift(2), LocallyConstantFunction.from_symbols(full_shift(2), [0.2, -0.4]))
        bigger = set(words) | {extra}
        small = survivor_log_measure(mu, list(words), k)
        if len(bigger) < 4:
            assert survivor_log_measure(mu, list(bigger), k) <= small + 1e-15

    def test_curve_nonincreasing(self, mu_skew):
        res = escape_rate_discrete(mu_skew, Hole.of(["121"]), k_max=200)
        assert (np.diff(res.survivor_log_measures) <= 1e-15).all()


class TestEscapeRate:
    def test_single_symbol(self, mu_half):
        assert escape_rate_discrete(mu_half, Hole.of(["2"])).rate == pytest.approx(math.log(2), abs=1e-12)

    def test_golden(self, mu_half):
        res = escape_rate_discrete(mu_half, Hole.of(["11"]))
        assert res.rate == pytest.approx(math.log(2) - math.log(GOLDEN_RATIO), abs=1e-12)
        assert res.rate == pytest.approx(res.pressure - math.log(res.open_eigenvalue), abs=1e-10)

    def test_nilpotent(self, golden):
        mu = equilibrium_state(golden)
        with pytest.raises(FullEscape):
            escape_rate_discrete(mu, Hole.of(["1"]))

    @pytest.mark.parametrize("words", [["11"], ["121"], ["12", "21"], ["1111"]])
    def test_spectral_matches_slope(self, mu_skew, words):
        res = escape_rate_discrete(mu_skew, Hole.of(words), k_max=400)
        assert res.rate >= 0
        assert res.finite_k_slope == pytest.approx(res.rate, rel=0.05)


class TestNested:
    def test_cylinders(self, mu_half):
        seq = make_nested_cylinders(PeriodicPoint((1,)), range(1, 13), mu_half)
        assert seq.holes[5].words == {(1,) * 5}
        assert seq.rho == pytest.approx(0.5, abs=1e-8)
        assert validate_nested(seq, mu_half).passed

    def test_aperiodic_not_applicable(self, mu_half):
        seq = make_nested_cylinders(AperiodicPoint("1121211221"), range(2, 9), mu_half)
        rep = validate_nested(seq, mu_half)
        assert rep.passed and rep.item(5).passed is None

    def test_fit_decay(self):
        c, rho = fit_decay({n: 3 * 0.4**n for n in range(1, 8)})
        assert rho == pytest.approx(0.4, abs=1e-8)
        assert all(3 * 0.4**n <= c * rho**n for n in range(1, 8))


def item2_control():
    ns = range(2, 9)
    holes = {n: Hole(n, frozenset([(1,) * n])) for n in ns}
    holes[3] = Hole(3, frozenset([(1, 1, 1), (1, 2, 1)]))
    lengths = {n: n for n in ns}
    lengths[3] = 1
    return NestedHoleSequence(PeriodicPoint((1,)), holes, 2.0, 0.75, 0.2, lengths)


def item3_control(A):
    ns = range(2, 9)
    holes = {n: Hole(n, frozenset(w for w in enumerate_words(A, n) if w[0] == 1)) for n in ns}
    return NestedHoleSequence(PeriodicPoint((1,)), holes, *fit_decay({n: 0.5 for n in ns}), 0.1, {n: 1 for n in ns})


def item5_control(A):
    ns = range(2, 11)
    holes = {}
    for n in ns:
        lo = math.ceil(n / 2)
        ws = {(1,) * n}
        for j in range(lo, n):
            if j % 2 == 0:
                ws |= {w for w in enumerate_words(A, n) if w[: j + 1] == (1,) * j + (2,)}
        holes[n] = Hole(n, frozenset(ws))
    return NestedHoleSequence(PeriodicPoint((1,)), holes, 4.0, 0.75, 1 / 3, {n: math.ceil(n / 2) for n in ns})


@pytest.mark.parametrize("build,item,witness", [
    (lambda A: item2_control(), 2, 3),
    (item3_control, 3, 2),
    (item5_control, 5, None),
])
def test_negative_controls(full2, mu_half, build, item, witness):
    rep = validate_nested(build(full2), mu_half)
    assert rep.failed_items == [item]
    if witness is not None:
        assert rep.item(item).witness == witness


class TestRatioCurve:
    def test_uniform_fixed_point(self, mu_half):
        seq = make_nested_cylinders(PeriodicPoint((1,)), range(4, 13), mu_half)
        curve = discrete_ratio_curve(mu_half, seq)
        gaps = [abs(p.ratio - 0.5) for p in curve]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert curve[-1].gamma == 0.5

    def test_period_two(self, mu_half):
        seq = make_nested_cylinders(PeriodicPoint((1, 2)), range(4, 13), mu_half)
        assert discrete_ratio_curve(mu_half, seq)[-1].ratio == pytest.approx(0.75, abs=0.05)
