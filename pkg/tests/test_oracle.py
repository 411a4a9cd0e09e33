"""Exact oracles: DP probability, enumeration, closed forms, dispersion."""

import numpy as np
import pytest

from seqrisk import (
    KINDS,
    MC,
    REACH,
    SCOPE,
    InstanceTooLargeError,
    MarkovModel,
    ValueDistribution,
    counterexample_model,
    dispersion_probability,
    enumerate_sub_distribution,
    exact_bijection_check,
    exact_outcome_probability,
)

from conftest import make_random_model


def branch_coin_chain(p):
    """The branching coin model expanded into a seven-state chain: start,
    terminal branch, coin states by depth, absorbing outcome, absorbing end."""
    start, stop, c0, c1, c2, heads, done = range(7)
    t = np.zeros((7, 7))
    t[start, stop] = p
    t[start, c0] = 1.0 - p
    t[stop, stop] = 1.0
    t[c0, heads] = 0.5
    t[c0, c1] = 0.5
    t[c1, heads] = 0.5
    t[c1, c2] = 0.5
    t[c2, heads] = 0.5
    t[c2, done] = 0.5
    t[heads, heads] = 1.0
    t[done, done] = 1.0
    return MarkovModel.step_mode(t, start, heads, 4)


class TestExactOutcomeProbability:
    def test_unreachable_outcome(self):
        m = MarkovModel.step_mode([[1.0, 0.0], [0.0, 1.0]], 0, 1, 8)
        assert exact_outcome_probability(m) == 0.0

    def test_geometric_closed_form(self):
        h, steps = 0.2, 7
        m = MarkovModel.step_mode([[1.0 - h, h], [0.0, 1.0]], 0, 1, steps)
        assert abs(exact_outcome_probability(m) - (1.0 - (1.0 - h) ** steps)) <= 1e-12

    def test_branching_coin_chain_closed_form(self):
        for p in (0.0, 0.25, 0.5, 0.9):
            m = branch_coin_chain(p)
            assert abs(exact_outcome_probability(m) - 7.0 / 8.0 * (1.0 - p)) <= 1e-12

    def test_monotone_in_horizon(self):
        for seed in range(15):
            base = make_random_model(seed)
            probs = [
                exact_outcome_probability(
                    MarkovModel.step_mode(base.transition, base.initial_state,
                                          base.outcome_state, h)
                )
                for h in range(1, 8)
            ]
            assert all(b >= a - 1e-12 for a, b in zip(probs, probs[1:]))

    def test_invalid_model_rejected(self):
        from seqrisk import HorizonPolicy, ModelValidationError

        bad = MarkovModel(2, np.array([[0.5, 0.4], [0.0, 1.0]]), 0, 1,
                          HorizonPolicy(max_steps=3))
        with pytest.raises(ModelValidationError):
            exact_outcome_probability(bad)


class TestValueDistribution:
    def test_probabilities_validated(self):
        with pytest.raises(ValueError):
            ValueDistribution.from_pairs([(0.0, 0.4), (1.0, 0.4)])

    def test_duplicate_values_merge(self):
        d = ValueDistribution.from_pairs([(0.5, 0.25), (0.5 + 1e-14, 0.25), (1.0, 0.5)])
        assert len(d.atoms) == 2
        assert abs(d.mean() - 0.75) <= 1e-12

    def test_moments(self):
        d = ValueDistribution.from_pairs([(0.0, 0.5), (1.0, 0.5)])
        assert d.mean() == 0.5 and d.variance() == 0.25 and d.second_moment() == 0.5

    def test_csv(self, tmp_path):
        d = ValueDistribution.from_pairs([(0.0, 0.25), (2.0, 0.75)])
        path = tmp_path / "dist.csv"
        d.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "value,probability"
        assert len(lines) == 3


class TestEnumeration:
    def test_counterexample_mc_atoms(self):
        p = 0.25
        d = enumerate_sub_distribution(*_ce(p), MC)
        atoms = dict(d.atoms)
        assert set(atoms) == {0.0, 1.0}
        assert abs(atoms[1.0] - 7.0 / 8.0 * (1.0 - p)) <= 1e-15
        assert abs(atoms[0.0] - (p + (1.0 - p) / 8.0)) <= 1e-15

    def test_counterexample_scope_second_moment(self):
        for p in (0.0, 0.5):
            d = enumerate_sub_distribution(*_ce(p), SCOPE)
            assert abs(d.second_moment() - 15.0 / 16.0 * (1.0 - p)) <= 1e-15

    def test_reach_variance_never_exceeds_mc(self):
        for seed in range(25):
            m = make_random_model(seed)
            dists = {k: enumerate_sub_distribution(m, m.vocabulary, m.horizon, k)
                     for k in KINDS}
            assert dists[REACH].variance() <= dists[MC].variance() + 1e-12
            assert dists[REACH].variance() <= dists[SCOPE].variance() + 1e-12

    def test_matches_dp_oracle(self):
        for seed in range(25):
            m = make_random_model(seed)
            p = exact_outcome_probability(m)
            for kind in KINDS:
                d = enumerate_sub_distribution(m, m.vocabulary, m.horizon, kind)
                assert abs(d.mean() - p) <= 1e-10

    def test_mc_variance_is_bernoulli(self):
        for seed in range(10):
            m = make_random_model(seed)
            p = exact_outcome_probability(m)
            d = enumerate_sub_distribution(m, m.vocabulary, m.horizon, MC)
            assert abs(d.variance() - p * (1.0 - p)) <= 1e-12

    def test_size_guard(self):
        rng = np.random.default_rng(0)
        t = rng.dirichlet(np.ones(10), size=10)
        m = MarkovModel.step_mode(t, 0, 9, 10)
        with pytest.raises(InstanceTooLargeError):
            enumerate_sub_distribution(m, m.vocabulary, m.horizon, MC)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            enumerate_sub_distribution(*_ce(0.5), "other")

    def test_degenerate_branch_enumerates_to_one(self):
        # from state 1 the outcome takes all mass; excluded paths reaching it
        # contribute survival-complement exactly 1
        rows = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]
        m = MarkovModel.step_mode(rows, 0, 2, 4)
        d = enumerate_sub_distribution(m, m.vocabulary, m.horizon, REACH)
        assert d.atoms == ((1.0, 1.0),)
        assert abs(d.mean() - exact_outcome_probability(m)) <= 1e-12


def _ce(p):
    m = counterexample_model(p)
    return m, m.vocabulary, m.horizon


class TestCounterexampleModel:
    def test_p_validated(self):
        with pytest.raises(ValueError):
            counterexample_model(1.5)

    def test_p_one_outcome_impossible(self):
        d = enumerate_sub_distribution(*_ce(1.0), MC)
        assert d.mean() == 0.0

    def test_p_zero_probability(self):
        d = enumerate_sub_distribution(*_ce(0.0), MC)
        assert abs(d.mean() - 7.0 / 8.0) <= 1e-15

    def test_variance_gap_closed_form(self):
        for p in (0.0, 0.3, 0.6, 0.99):
            mc = enumerate_sub_distribution(*_ce(p), MC)
            sc = enumerate_sub_distribution(*_ce(p), SCOPE)
            gap = sc.variance() - mc.variance()
            assert abs(gap - (1.0 - p) / 16.0) <= 1e-12

    def test_gap_positive_at_vanishing_probability(self):
        p = 0.999
        mc = enumerate_sub_distribution(*_ce(p), MC)
        sc = enumerate_sub_distribution(*_ce(p), SCOPE)
        assert mc.mean() < 0.001
        assert sc.variance() > mc.variance()


class TestDispersionProbability:
    def test_reference_value(self):
        assert abs(dispersion_probability(100, 1e-4, 1e-3) - 0.0943) <= 1e-4

    def test_both_zero(self):
        assert dispersion_probability(100, 0.0, 0.0) == 0.0

    def test_certain_elevation(self):
        assert dispersion_probability(1, 0.0, 1.0) == 1.0

    def test_monotone_in_elevated_rate(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            n = int(rng.integers(1, 200))
            base = float(rng.uniform(0, 0.5))
            lo, hi = np.sort(rng.uniform(0, 1, size=2))
            assert (dispersion_probability(n, base, hi)
                    >= dispersion_probability(n, base, lo) - 1e-12)

    def test_argument_errors(self):
        with pytest.raises(ValueError):
            dispersion_probability(0, 0.1, 0.2)
        with pytest.raises(ValueError):
            dispersion_probability(10, -0.1, 0.2)
        with pytest.raises(ValueError):
            dispersion_probability(10, 0.1, 1.2)


class TestBijectionCheck:
    def test_random_models_agree(self):
        for seed in range(25):
            m = make_random_model(seed)
            p_a, p_b = exact_bijection_check(m, m.vocabulary, m.horizon)
            assert abs(p_a - p_b) < 1e-10

    def test_outcome_impossible(self):
        m = MarkovModel.step_mode([[1.0, 0.0], [0.0, 1.0]], 0, 1, 5)
        assert exact_bijection_check(m, m.vocabulary, m.horizon) == (0.0, 0.0)

    def test_counterexample_value(self):
        p = 0.4
        p_a, p_b = exact_bijection_check(*_ce(p))
        truth = 7.0 / 8.0 * (1.0 - p)
        assert abs(p_a - truth) <= 1e-12 and abs(p_b - truth) <= 1e-12
