"""Chain construction, sweeps, metrics, equivalence, and cohort pipeline."""

import numpy as np
import pytest

from seqrisk import (
    CalibrationError,
    ChainSpec,
    CohortSpec,
    ExperimentTable,
    MC,
    OUTCOME_EXCLUDED,
    REACH,
    SCOPE,
    STANDARD,
    UndefinedMetricError,
    auroc,
    brier,
    calibration_curve,
    equivalence_ratio,
    estimate,
    estimate_distribution_experiment,
    exact_outcome_probability,
    random_chain,
    spontaneity,
    synthetic_cohort_eval,
    validate,
    variance_sweep,
)
from seqrisk.experiments import (
    MetricRow,
    _auroc_columns,
    _equivalence,
    _markov_sub_values,
)
from seqrisk.rng import substream


class TestChainSpec:
    def test_zero_hazard_state_count_rejected(self):
        with pytest.raises(ValueError, match="spontaneity"):
            ChainSpec(n_states=4, spontaneity=0.1, horizon_steps=5)

    def test_round_trip(self):
        spec = ChainSpec(6, 0.5, 10, seed=3, target_probability=0.4)
        assert ChainSpec.from_dict(spec.to_dict()) == spec


class TestRandomChain:
    def test_spontaneity_round_trip(self):
        spec = ChainSpec(11, 0.4, 20, seed=1)
        chain = random_chain(spec)
        assert spontaneity(chain) == 0.4

    def test_full_spontaneity(self):
        chain = random_chain(ChainSpec(4, 1.0, 5, seed=2))
        non_outcome = [s for s in range(4) if s != chain.outcome_state]
        assert all(chain.transition[s, chain.outcome_state] > 0 for s in non_outcome)

    def test_rows_stochastic_and_outcome_absorbing(self):
        chain = random_chain(ChainSpec(7, 0.5, 10, seed=3, target_probability=0.3))
        assert validate(chain) == []
        o = chain.outcome_state
        assert chain.transition[o, o] == 1.0

    def test_hazard_mass_confined_to_selected_states(self):
        spec = ChainSpec(9, 0.25, 10, seed=4)  # two of eight non-outcome states
        chain = random_chain(spec)
        hazards = chain.transition[:-1, chain.outcome_state]
        assert int((hazards > 0).sum()) == 2

    def test_target_probability_calibrated(self):
        for target in (0.05, 0.5, 0.9):
            chain = random_chain(ChainSpec(6, 1.0, 12, seed=5, target_probability=target))
            assert abs(exact_outcome_probability(chain) - target) <= 1e-6

    def test_infeasible_target_names_interval(self):
        spec = ChainSpec(4, 0.67, 1, seed=2, target_probability=0.999)
        with pytest.raises(CalibrationError) as err:
            random_chain(spec)
        lo, hi = err.value.achievable
        assert lo == 0.0 and hi < 0.999

    def test_equal_transitions_uniform_rows(self):
        chain = random_chain(ChainSpec(5, 1.0, 6, seed=6, target_probability=0.5,
                                       equal_transitions=True))
        block = chain.transition[:-1, :-1]
        # uniform residual mass over non-outcome states
        assert np.allclose(block, block[0, 0])


class TestSpontaneityMeasure:
    def test_no_hazard(self):
        from seqrisk import MarkovModel

        m = MarkovModel.step_mode([[1.0, 0.0], [0.0, 1.0]], 0, 1, 4)
        assert spontaneity(m) == 0.0

    def test_all_hazardous(self):
        chain = random_chain(ChainSpec(6, 1.0, 8, seed=7))
        assert spontaneity(chain) == 1.0


class TestBatchSampler:
    def test_agrees_with_per_trajectory_estimates(self):
        chain = random_chain(ChainSpec(5, 0.75, 10, seed=8, target_probability=0.35))
        p = exact_outcome_probability(chain)
        mc_v, scope_v = _markov_sub_values(chain, STANDARD, 40_000, substream(1, 20, 0))
        reach_v = _markov_sub_values(chain, OUTCOME_EXCLUDED, 40_000, substream(1, 20, 1))
        for vals in (mc_v, scope_v, reach_v):
            se = vals.std(ddof=1) / np.sqrt(vals.size)
            assert abs(vals.mean() - p) <= 4.5 * max(se, 1e-12)
        rep = estimate(chain, chain.vocabulary, chain.horizon, REACH, 2_000, seed=9)
        pooled = np.hypot(rep.std_error, reach_v.std(ddof=1) / np.sqrt(reach_v.size))
        assert abs(rep.mean - reach_v.mean()) <= 4.5 * max(pooled, 1e-12)

    def test_deterministic_chain_exact(self):
        h, steps = 0.25, 8
        from seqrisk import MarkovModel

        m = MarkovModel.step_mode([[1.0 - h, h], [0.0, 1.0]], 0, 1, steps)
        reach_v = _markov_sub_values(m, OUTCOME_EXCLUDED, 50, substream(2, 20, 2))
        expected = 1.0
        for _ in range(steps):
            expected *= 1.0 - h
        assert np.all(reach_v == 1.0 - expected)

    def test_degenerate_rows_yield_one(self):
        from seqrisk import MarkovModel

        rows = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]
        m = MarkovModel.step_mode(rows, 0, 2, 5)
        reach_v = _markov_sub_values(m, OUTCOME_EXCLUDED, 20, substream(3, 20, 3))
        assert np.all(reach_v == 1.0)


class TestVarianceSweep:
    def test_mc_variance_matches_bernoulli(self):
        p = 0.3
        base = ChainSpec(6, 1.0, 12, seed=10, equal_transitions=True)
        table = variance_sweep("probability", [p], base, 20_000, seed=10)
        var = table.single(task="probability=0.3", kind=MC, statistic="variance").value
        # spread of the variance estimate for a Bernoulli sample of this size
        se = np.sqrt(2.0 / 20_000) * p * (1 - p) + 0.25 / 20_000
        assert abs(var - p * (1 - p)) <= 5 * se + 1e-4

    def test_failed_point_marked_and_sweep_continues(self):
        base = ChainSpec(4, 0.67, 1, seed=2, equal_transitions=False)
        table = variance_sweep("probability", [0.3, 0.999], base, 100, seed=2)
        assert table.rows_where(task="probability=0.3", statistic="variance")
        failed = table.rows_where(task="probability=0.999", statistic="failed")
        assert len(failed) == 1

    def test_exact_variance_rows_present_for_small_chains(self):
        base = ChainSpec(4, 1.0, 5, seed=11, equal_transitions=True)
        table = variance_sweep("probability", [0.4], base, 200, seed=11)
        exact_mc = table.single(task="probability=0.4", kind=MC,
                                statistic="exact_variance").value
        p = table.single(task="probability=0.4", statistic="exact_probability").value
        assert abs(exact_mc - p * (1 - p)) <= 1e-10

    def test_sample_count_axis_reports_scaled_variance(self):
        base = ChainSpec(5, 1.0, 8, seed=12, target_probability=0.5,
                         equal_transitions=True)
        table = variance_sweep("sample_count", [1, 4, 16], base, 800, seed=12)
        for n in (1, 4, 16):
            var = table.single(task=f"sample_count={n}", kind=MC,
                               statistic="variance").value
            scaled = table.single(task=f"sample_count={n}", kind=MC,
                                  statistic="variance_times_n").value
            assert abs(scaled - var * n) <= 1e-12

    def test_bad_axis_and_empty_grid(self):
        base = ChainSpec(4, 1.0, 5, seed=0)
        with pytest.raises(ValueError):
            variance_sweep("other", [0.5], base, 100, seed=0)
        with pytest.raises(ValueError):
            variance_sweep("probability", [], base, 100, seed=0)


class TestDistributionExperiment:
    def test_mc_support_and_reach_mean(self):
        spec = ChainSpec(6, 1.0, 12, seed=13, target_probability=0.3,
                         equal_transitions=True)
        result = estimate_distribution_experiment(spec, 3000, 10, seed=13)
        mc_scaled = result.estimates[MC] * 10
        assert np.allclose(mc_scaled, np.round(mc_scaled), atol=1e-9)
        reach = result.estimates[REACH]
        se = reach.std(ddof=1) / np.sqrt(reach.size)
        assert abs(reach.mean() - result.true_probability) <= 4 * max(se, 1e-12)

    def test_scope_mass_above_one_on_high_probability_chain(self):
        spec = ChainSpec(11, 1.0, 20, seed=5, target_probability=0.9,
                         equal_transitions=True)
        result = estimate_distribution_experiment(spec, 2000, 10, seed=5)
        assert float((result.estimates[SCOPE] > 1.0).mean()) > 0.05

    def test_csv_schema(self, tmp_path):
        spec = ChainSpec(4, 1.0, 5, seed=14, target_probability=0.4)
        result = estimate_distribution_experiment(spec, 200, 5, seed=14)
        path = tmp_path / "hist.csv"
        result.write_csv(path, bins=10)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "kind,bin_low,bin_high,count"
        assert len(lines) == 1 + 3 * 10


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc([0.9, 0.1], [1, 0]) == 1.0

    def test_all_ties(self):
        assert auroc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(UndefinedMetricError):
            auroc([0.1, 0.2], [1, 1])

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            n = int(rng.integers(5, 60))
            scores = np.round(rng.random(n), 1)  # coarse grid forces ties
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            got = auroc(scores, labels)
            pos = scores[labels == 1]
            neg = scores[labels == 0]
            wins = (pos[:, None] > neg[None, :]).sum()
            ties = (pos[:, None] == neg[None, :]).sum()
            want = (wins + 0.5 * ties) / (pos.size * neg.size)
            assert abs(got - want) <= 1e-12

    def test_column_version_matches_scalar(self):
        rng = np.random.default_rng(4)
        scores = rng.random((50, 6))
        labels = rng.integers(0, 2, size=50)
        labels[0], labels[1] = 0, 1
        cols = _auroc_columns(scores, labels)
        for j in range(6):
            assert abs(cols[j] - auroc(scores[:, j], labels)) <= 1e-12


class TestBrierAndCalibration:
    def test_perfect_scores(self):
        assert brier([1.0, 0.0, 1.0], [1, 0, 1]) == 0.0

    def test_constant_half_on_balanced_labels(self):
        assert brier([0.5, 0.5], [1, 0]) == 0.25

    def test_range_validated(self):
        with pytest.raises(ValueError):
            brier([1.2], [1])
        with pytest.raises(ValueError):
            brier([], [])

    def test_calibration_bins(self):
        scores = [0.05, 0.08, 0.95, 0.55]
        labels = [0, 0, 1, 1]
        rows = calibration_curve(scores, labels, n_bins=10)
        assert len(rows) == 3
        mean_score, event_rate, count = rows[0]
        assert count == 2 and event_rate == 0.0 and abs(mean_score - 0.065) < 1e-12

    def test_scores_from_true_probabilities_are_calibrated(self):
        rng = np.random.default_rng(6)
        p = rng.uniform(0.05, 0.95, size=4000)
        labels = (rng.random(4000) < p).astype(int)
        for mean_score, event_rate, count in calibration_curve(p, labels, 10):
            half = 1.96 * np.sqrt(mean_score * (1 - mean_score) / count)
            assert abs(event_rate - mean_score) <= half + 0.02


def make_auc_table(curves, reps=40, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    table = {}
    for kind, values in curves.items():
        for n, v in enumerate(values, start=1):
            table[(kind, n)] = v + noise * rng.standard_normal(reps)
    return table


class TestEquivalenceRatio:
    def test_dominating_alternative_reaches_at_one(self):
        curves = {
            "mc": np.linspace(0.6, 0.7, 10),
            "reach": np.linspace(0.8, 0.85, 10),
        }
        table = make_auc_table(curves)
        row = equivalence_ratio(table, "mc", 10, "reach", 20, rng=1)
        assert row.value == 10.0
        assert row.ci_low == row.ci_high == 10.0

    def test_identical_alternative_strict_ties_do_not_qualify(self):
        # the alternative equals the reference cell exactly: with strict
        # inequality the matching count never qualifies, so the point
        # estimate lands one step later
        curves = {"mc": np.linspace(0.6, 0.7, 10)}
        table = make_auc_table(curves)
        table.update({("alt", n): table[("mc", n)] for n in range(1, 11)})
        res = _equivalence(table, "mc", 5, "alt", 10, substream(0, 30, 0))
        assert res.m_point == 6
        assert res.row.value == pytest.approx(5 / 6)

    def test_flat_identical_curve_never_reached(self):
        table = make_auc_table({"mc": np.full(5, 0.7), "alt": np.full(5, 0.7)})
        res = _equivalence(table, "mc", 5, "alt", 25, substream(0, 30, 1))
        assert res.m_point is None
        assert res.not_reached == 25
        assert np.isnan(res.row.value)

    def test_missing_cells_rejected(self):
        table = make_auc_table({"mc": np.linspace(0.6, 0.7, 5)})
        with pytest.raises(ValueError):
            equivalence_ratio(table, "mc", 5, "reach", 10, rng=0)
        with pytest.raises(ValueError):
            equivalence_ratio(table, "scope", 5, "mc", 10, rng=0)

    def test_bootstrap_ci_matches_independent_reimplementation(self):
        curves = {
            "mc": np.linspace(0.60, 0.75, 8),
            "alt": np.linspace(0.63, 0.78, 8),
        }
        table = make_auc_table(curves, reps=40, noise=0.01, seed=5)
        rounds = 60
        got = _equivalence(table, "mc", 8, "alt", rounds, substream(7, 30, 2))

        # from-scratch percentile bootstrap with a twin stream
        rng = substream(7, 30, 2)
        counts = sorted(n for k, n in table if k == "alt")
        ref = np.asarray(table[("mc", 8)], float)
        m_vals, missed = [], 0
        for _ in range(rounds):
            ref_b = ref[rng.integers(0, ref.size, ref.size)].mean()
            for n in counts:
                alt = np.asarray(table[("alt", n)], float)
                if alt[rng.integers(0, alt.size, alt.size)].mean() > ref_b:
                    m_vals.append(n)
                    break
            else:
                missed += 1
        assert tuple(m_vals) == got.m_samples and missed == got.not_reached
        ratios = 8 / np.asarray(m_vals, float)
        lo, hi = np.percentile(ratios, [2.5, 97.5])
        assert got.row.ci_low == pytest.approx(min(lo, got.row.value))
        assert got.row.ci_high == pytest.approx(max(hi, got.row.value))


class TestExperimentTable:
    def test_csv_round_trip_and_column_order(self, tmp_path):
        rows = (
            MetricRow("t1", MC, 1, "variance", 0.25, seed=3),
            MetricRow("t1", REACH, 1, "variance", 0.1, 0.05, 0.2, seed=3),
        )
        table = ExperimentTable(rows)
        path = tmp_path / "table.csv"
        table.write_csv(path)
        text = path.read_text()
        assert text.splitlines()[0] == "task,kind,n,statistic,value,ci_low,ci_high,seed"
        assert ExperimentTable.read_csv(path) == table

    def test_ci_ordering_enforced(self):
        with pytest.raises(ValueError):
            MetricRow("t", MC, 1, "auroc", 0.9, 0.1, 0.5)

    def test_single_raises_on_ambiguity(self):
        table = ExperimentTable((
            MetricRow("t", MC, 1, "variance", 0.2),
            MetricRow("t", MC, 2, "variance", 0.1),
        ))
        with pytest.raises(ValueError):
            table.single(task="t", kind=MC, statistic="variance")


@pytest.fixture(scope="module")
def small_cohort():
    spec = CohortSpec(
        n_patients=150,
        chain_template=ChainSpec(5, 1.0, 8, seed=0, equal_transitions=True),
        n_timelines=20,
        bootstrap_rounds=8,
        seed=77,
    )
    return spec, synthetic_cohort_eval(spec)


class TestSyntheticCohort:
    def test_auroc_rows_cover_all_counts(self, small_cohort):
        spec, table = small_cohort
        for kind in (MC, SCOPE, REACH):
            rows = table.rows_where(task="cohort", kind=kind, statistic="auroc")
            assert len(rows) == spec.n_timelines
            assert all(0.0 <= r.value <= 1.0 for r in rows)
            assert all(r.ci_low <= r.value <= r.ci_high for r in rows)

    def test_equivalence_and_calibration_rows_present(self, small_cohort):
        _, table = small_cohort
        for kind in (SCOPE, REACH):
            assert table.rows_where(task="equivalence", kind=kind,
                                    statistic="equivalence_ratio")
            assert table.rows_where(task="equivalence", kind=kind,
                                    statistic="equivalence_m")
        for kind in (MC, SCOPE, REACH):
            assert table.rows_where(kind=kind, statistic="brier")
            assert table.rows_where(kind=kind, statistic="cal_event_rate")
        assert table.rows_where(kind=SCOPE, statistic="n_clipped")

    def test_reproducible(self, small_cohort):
        spec, table = small_cohort
        again = synthetic_cohort_eval(spec)
        assert again.to_csv_text() == table.to_csv_text()

    def test_degenerate_labels_drop_rounds(self):
        spec = CohortSpec(
            n_patients=40,
            chain_template=ChainSpec(4, 1.0, 6, seed=0, equal_transitions=True),
            n_timelines=5,
            bootstrap_rounds=4,
            risk_range=(1e-5, 2e-5),
            seed=5,
        )
        table = synthetic_cohort_eval(spec)
        for kind in (MC, SCOPE, REACH):
            dropped = table.single(task="cohort", kind=kind,
                                   statistic="auroc_rounds_dropped")
            assert dropped.value == 4.0
        assert not table.rows_where(statistic="auroc")
