import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semiflow_escape.exceptions import Inadmissible, Infeasible, NonPositiveLower, ValidationError
from semiflow_escape.gibbs import bernoulli_potential, equilibrium_state
from semiflow_escape.sft import LocallyConstantFunction, Point, enumerate_words, full_shift, golden_mean_shift
from semiflow_escape.suspension import (
    DiscretizationParams,
    FlowPoint,
    FlowSampler,
    RoofFunction,
    StepRoof,
    build_suspension_sft,
    choose_discretization,
    discretize,
    eta,
    exact_levels,
    flow_map,
    induced_potential,
    mu_tilde,
    oscillation,
    pi_tilde,
    roof_lower,
    roof_upper,
    sample_flow_point,
    snap_floor,
    verify_invariance,
)


def step(A, per_symbol_levels, delta):
    f = LocallyConstantFunction.from_symbols(A, [k * delta for k in per_symbol_levels])
    return StepRoof.from_function(f, delta)


class TestLevels:
    def test_snap(self):
        assert snap_floor(1.5 / 0.05) == 30
        assert snap_floor(2.999) == 2
        assert exact_levels(2.2, 0.1) == 22

    def test_exact_levels_rejects_off_lattice(self):
        with pytest.raises(ValidationError):
            exact_levels(2.25, 0.1)


class TestRoofs:
    def test_roof_needs_min_above_one(self, full2):
        with pytest.raises(ValidationError):
            RoofFunction.from_symbols(full2, [1.0, 2.0])

    def test_eta(self, full2):
        f = LocallyConstantFunction(2, {"11": 1.5, "12": 2.0, "21": 1.5, "22": 2.0})
        assert f.lipschitz_seminorm == pytest.approx(1.0)
        assert eta(f, 4) == pytest.approx(0.0625)
        assert oscillation(f, 1) == pytest.approx(0.5)
        assert oscillation(f, 1) <= eta(f, 1)

    def test_constant_has_no_oscillation(self, full2):
        f = RoofFunction.constant(full2, 2.0)
        assert all(oscillation(f, m) == 0.0 <= eta(f, m) for m in range(1, 6))

    @pytest.mark.parametrize("c,delta,up,lo", [(2.0, 0.1, 2.2, 1.8), (2.05, 0.1, 2.2, 1.8)])
    def test_constant_steps(self, full2, c, delta, up, lo):
        f = RoofFunction.constant(full2, c)
        assert roof_upper(f, 1, delta).function.values[(1,)] == pytest.approx(up)
        assert roof_lower(f, 1, delta).function.values[(1,)] == pytest.approx(lo)

    def test_two_valued_steps(self, full2):
        f = RoofFunction.from_symbols(full2, [1.5, 2.0])
        up, lo = roof_upper(f, 1, 0.25), roof_lower(f, 1, 0.25)
        assert [up.function.values[(s,)] for s in (1, 2)] == pytest.approx([2.0, 2.5])
        assert [lo.function.values[(s,)] for s in (1, 2)] == pytest.approx([1.0, 1.5])

    def test_nonpositive_lower(self, full2):
        with pytest.raises(NonPositiveLower):
            roof_lower(RoofFunction.constant(full2, 1.1), 1, 0.5)

    @given(st.lists(st.floats(1.01, 4.0), min_size=4, max_size=4), st.sampled_from([0.2, 0.1, 0.05, 0.03]),
           st.integers(1, 4))
    def test_sandwich(self, vals, delta, m):
        A = full_shift(2)
        f = RoofFunction(LocallyConstantFunction(2, dict(zip(["11", "12", "21", "22"], vals))), A)
        try:
            lo = roof_lower(f, m, delta)
        except NonPositiveLower:
            return
        up = roof_upper(f, m, delta)
        D = max(m, 2)
        for w in enumerate_words(A, D):
            assert lo.function(w) <= f(w) <= up.function(w)
            assert up.function(w) - lo.function(w) <= eta(f, m) + 5 * delta + 1e-9
            if m >= f.depth:
                assert up.function(w) - lo.function(w) == pytest.approx(4 * delta)
        for g in (up, lo):
            assert all(abs(v / delta - round(v / delta)) < 1e-9 for v in g.function.values.values())


class TestChooseDiscretization:
    def test_constant_small_request(self, full2, mu_half):
        p = choose_discretization(RoofFunction.constant(full2, 2.0), mu_half, 0.25)
        assert (p.delta, p.m) == (0.25, 1)

    def test_constant_large_request(self, full2, mu_half):
        p = choose_discretization(RoofFunction.constant(full2, 2.0), mu_half, 0.6)
        assert p.delta == pytest.approx(1 / 3, abs=1e-8) and p.delta < 1 / 3

    def test_infeasible(self, full2, mu_half):
        f = RoofFunction(LocallyConstantFunction(3, {w: 1.01 if w[0] == 1 else 1.39 for w in enumerate_words(full2, 3)},
                                                 lipschitz_seminorm=50.0), full2)
        with pytest.raises(Infeasible):
            choose_discretization(f, mu_half, 0.1, m_max=3)

    @given(st.floats(1.2, 3.0), st.floats(1.2, 3.0), st.floats(0.01, 0.5))
    def test_result_satisfies_constraints(self, a, b, req):
        A = full_shift(2)
        mu = equilibrium_state(A)
        f = RoofFunction.from_symbols(A, [a, b])
        p = choose_discretization(f, mu, req)
        assert p.delta <= req
        assert 2 * p.delta + p.eta_m < 0.5 * f.integral(mu)
        assert p.check(f, mu) is p
        up, lo = roof_upper(f, p.m, p.delta), roof_lower(f, p.m, p.delta)
        assert up.integral(mu) <= 2 * f.integral(mu)
        assert lo.integral(mu) >= 0.5 * f.integral(mu)
        assert lo.function.min_value > 1 - 1e-9

    def test_explicit_check(self, full2, mu_half):
        f = RoofFunction.from_symbols(full2, [1.5, 2.0])
        DiscretizationParams.for_roof(f, 6, 0.2).check(f, mu_half)
        with pytest.raises(Infeasible):
            DiscretizationParams.for_roof(f, 6, 0.6).check(f, mu_half)


class TestSuspensionSFT:
    def test_constant_tower(self, full2):
        S = build_suspension_sft(full2, step(full2, [3, 3], 0.1))
        assert S.n_states == 6
        for w in ((1,), (2,)):
            i0, i1, i2 = S.index[(w, 0)], S.index[(w, 1)], S.index[(w, 2)]
            assert list(S.successors(i0)) == [i1] and list(S.successors(i1)) == [i2]
            assert sorted(S.successors(i2)) == sorted([S.index[((1,), 0)], S.index[((2,), 0)]])
        assert S.period == 3

    def test_golden_tower(self, golden):
        S = build_suspension_sft(golden, step(golden, [2, 2], 0.1))
        assert S.n_states == 4
        assert list(S.successors(S.index[((2,), 1)])) == [S.index[((1,), 0)]]

    def test_variable_roof(self, full2):
        S = build_suspension_sft(full2, step(full2, [2, 3], 0.1))
        assert S.n_states == 5
        deg = {s: len(S.successors(i)) for i, s in enumerate(S.states)}
        assert deg == {((1,), 0): 1, ((1,), 1): 2, ((2,), 0): 1, ((2,), 1): 1, ((2,), 2): 2}

    @pytest.mark.parametrize("levels", [[2, 3], [4, 7], [5, 5]])
    def test_rules(self, full2, levels):
        st_ = step(full2, levels, 0.05)
        S = build_suspension_sft(full2, st_, 2)
        assert S.n_states == sum(st_.levels[w[:1]] for w in enumerate_words(full2, 2))
        for i, (w, k) in enumerate(S.states):
            succ = [S.states[j] for j in S.successors(i)]
            if k + 1 < S.level_counts[w]:
                assert succ == [(w, k + 1)]
            else:
                assert (k + 1) == S.level_counts[w]
                assert sorted(succ) == sorted((w[1:] + (s,), 0) for s in (1, 2))

    def test_json_shape(self, full2, mu_half):
        st_ = step(full2, [2, 3], 0.1)
        nu = discretize(mu_half, st_)
        doc = nu.to_json()
        assert doc["states"][0] == ["1", 0]
        assert len(doc["edges"]) == 7 and len(doc["state_measure"]) == 5


class TestMeasure:
    def test_uniform_tower(self, full2, mu_half):
        nu = discretize(mu_half, step(full2, [3, 3], 0.1))
        np.testing.assert_allclose(nu.state_mass, 1 / 6, atol=1e-15)

    def test_variable_roof(self, full2, mu_half):
        nu = discretize(mu_half, step(full2, [2, 3], 0.1))
        assert nu.cylinder([((1,), 0)]) == pytest.approx(0.2, abs=1e-15)
        assert nu.state_mass.sum() == pytest.approx(1.0, abs=1e-12)

    def test_hole_identity(self, full2, mu_skew):
        st_ = step(full2, [30, 41], 0.05)
        nu = discretize(mu_skew, st_, 3)
        hole = {(1, 1, 2)}
        level0 = sum(nu.state_mass[i] for i, (w, k) in enumerate(nu.sft.states) if k == 0 and w in hole)
        assert level0 == pytest.approx(0.05 * mu_skew.cylinder((1, 1, 2)) / st_.integral(mu_skew), abs=1e-15)

    def test_pi_tilde(self, full2):
        x0, x1 = (1,), (2,)
        assert pi_tilde([(x0, 0), (x0, 1), (x1, 0)]) == ((1, 2), 2)
        assert pi_tilde([(x0, 2)]) == ((1,), 1)
        assert pi_tilde([(x0, 0), (x0, 1), (x1, 0), (x1, 1)])[1] == 2

    def test_pi_tilde_inadmissible(self, full2):
        S = build_suspension_sft(full2, step(full2, [2, 2], 0.1))
        with pytest.raises(Inadmissible):
            pi_tilde([((1,), 0), ((2,), 0)], S)

    @pytest.mark.parametrize("roof,delta", [((2.0, 2.0), 0.25), ((2.0, 2.0), 0.1), ((1.5, 2.0), 0.25),
                                            ((1.5, 2.0), 0.1)])
    def test_kolmogorov_and_projection(self, full2, mu_skew, roof, delta):
        f = RoofFunction.from_symbols(full2, list(roof))
        for make in (roof_upper, roof_lower):
            nu = discretize(mu_skew, make(f, 1, delta))
            rep = verify_invariance(nu, 6)
            assert rep.passed and rep.projection_error <= 1e-12

    def test_corrupted_measure_fails(self, full2, mu_half):
        nu = discretize(mu_half, step(full2, [2, 3], 0.1))
        target = ((1,), 0)

        def bad(word):
            return nu.cylinder(word) + (1e-3 if list(word) == [target] else 0.0)

        rep = verify_invariance(nu, 3, cylinder=bad)
        assert not rep.total_mass_ok and not rep.passed

    def test_induced_potential_constant(self, full2, mu_half):
        nu = discretize(mu_half, step(full2, [3, 3], 0.1))
        ind, rep = induced_potential(nu, 6)
        assert (ind.values == 0.0).all()
        assert rep.variations[0] == 0.0
        # windows that start on a return carry one extra factor exp(-P)
        assert rep.c2_observed / rep.c1_observed == pytest.approx(math.exp(mu_half.pressure))
        assert rep.c1_observed == pytest.approx(rep.c1_predicted)

    def test_induced_potential_scaling(self, full2, mu_skew):
        st_ = step(full2, [4, 4], 0.25)
        nu = discretize(mu_skew, st_)
        ind, rep = induced_potential(nu, 8)
        scale = 0.25 / st_.integral(mu_skew)
        assert rep.c1_observed == pytest.approx(scale * rep.base_c1 * math.exp(math.log(0.3) - mu_skew.pressure))
        assert rep.c2_observed == pytest.approx(scale * rep.base_c2)
        assert rep.c1_observed == pytest.approx(rep.c1_predicted) and rep.c2_observed == pytest.approx(rep.c2_predicted)
        assert rep.within_predicted and rep.variations_nonincreasing


class TestFlow:
    def test_constant_roof(self, full2):
        f = LocallyConstantFunction.constant(full2, 2.0)
        p, k = flow_map(f, FlowPoint(Point((1, 2, 1, 2, 1)), 1.0), 3.0)
        assert k == 2 and p.height == 0.0 and p.base.symbols(3) == (1, 2, 1)

    def test_identity(self, full2):
        f = LocallyConstantFunction.constant(full2, 2.0)
        p = FlowPoint(Point((), (1, 2)), 0.7)
        assert flow_map(f, p, 0.0) == (p, 0)

    def test_two_valued(self, full2):
        f = LocallyConstantFunction.from_symbols(full2, [1.5, 2.0])
        p, k = flow_map(f, FlowPoint(Point((1, 2, 1)), 1.0), 1.0)
        assert k == 1 and p.height == pytest.approx(0.5) and p.base.symbol(0) == 2

    def test_semigroup(self, full2, mu_skew):
        f = LocallyConstantFunction.from_symbols(full2, [1.5, 2.0])
        rng = np.random.default_rng(5)
        sampler = FlowSampler(mu_skew, f, 11)
        symbols, heights = sampler.sample(1000, 40)
        for row, h in zip(symbols, heights):
            s, t = rng.uniform(0, 15, size=2)
            p = FlowPoint(Point(tuple(int(x) for x in row)), float(h))
            direct, k1 = flow_map(f, p, s + t)
            mid, k2 = flow_map(f, p, t)
            two, k3 = flow_map(f, mid, s)
            assert k1 == k2 + k3
            assert direct.height == pytest.approx(two.height, abs=1e-9)
            assert direct.base.symbols(5) == two.base.symbols(5)


class TestSampler:
    def test_constant_heights_uniform(self, full2, mu_half):
        f = LocallyConstantFunction.constant(full2, 2.0)
        _, h = FlowSampler(mu_half, f, 1).sample(100_000, 4)
        assert abs(h.mean() - 1.0) <= 3 * (2 / math.sqrt(12)) / math.sqrt(len(h))

    def test_first_symbol(self, full2, mu_half):
        f = LocallyConstantFunction.constant(full2, 2.0)
        x, _ = FlowSampler(mu_half, f, 2).sample(100_000, 4)
        freq = (x[:, 0] == 1).mean()
        assert abs(freq - 0.5) <= 3 * 0.5 / math.sqrt(len(x))

    def test_base_weighted_by_roof(self, full2, mu_half):
        f = LocallyConstantFunction.from_symbols(full2, [1.5, 2.5])
        x, h = FlowSampler(mu_half, f, 3).sample(100_000, 4)
        p = 1.5 / 4.0
        assert abs((x[:, 0] == 1).mean() - p) <= 3 * math.sqrt(p * (1 - p) / len(x))
        assert (h < np.where(x[:, 0] == 1, 1.5, 2.5)).all()

    def test_markov_statistics(self, golden, mu_parry):
        f = LocallyConstantFunction.constant(golden, 2.0)
        x, _ = FlowSampler(mu_parry, f, 4).sample(50_000, 3)
        assert not ((x[:, 0] == 2) & (x[:, 1] == 2)).any()

    def test_deterministic(self, full2, mu_skew):
        f = LocallyConstantFunction.from_symbols(full2, [1.5, 2.0])
        a = sample_flow_point(mu_skew, f, 99)
        b = sample_flow_point(mu_skew, f, 99)
        assert a == b
