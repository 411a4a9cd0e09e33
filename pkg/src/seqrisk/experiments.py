"""Markov-chain experiment suite and synthetic-cohort evaluation.

The sweeps measure how the three estimators' variances respond to the
outcome probability, to chain spontaneity (the fraction of non-outcome
states with a direct transition to the outcome), and to the number of
sampled timelines.  The cohort pipeline scores a population of patients,
each driven by its own calibrated chain, and evaluates the estimators the
way a prediction study would: AUROC against labels drawn from the exact
per-patient probability, bootstrapped over timeline resamples, plus Brier
scores, calibration curves, and sample-count equivalence ratios.

Sweeps and cohorts sample chains with a vectorized single-stream sampler
(`_markov_sub_values`); results are reproducible bit-for-bit from
``(spec, seed)``.  Default sweep parameters: 11-state chains, 20-step
horizon, 10,000 replications, probability grid 0.05..0.95 (step 0.05),
spontaneity grid 0.1..1.0 (step 0.1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import CalibrationError, InstanceTooLargeError, UndefinedMetricError
from .estimators import KINDS, MC, REACH, SCOPE
from .oracle import enumerate_sub_distribution, exact_outcome_probability
from .rng import as_generator, substream
from .seqmodel import (
    DEGENERATE_HAZARD,
    OUTCOME_EXCLUDED,
    STANDARD,
    MarkovModel,
    effective_steps,
)

DEFAULT_CHAIN_STATES = 11
DEFAULT_HORIZON_STEPS = 20
DEFAULT_REPLICATIONS = 10_000
SAMPLE_COUNT_REPLICATIONS = 2_000
PROBABILITY_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
SPONTANEITY_GRID = tuple(round(0.1 * i, 1) for i in range(1, 11))
SAMPLE_COUNT_GRID = (1, 2, 4, 8, 16, 32, 64, 128)

AXES = ("probability", "spontaneity", "sample_count")
_AXIS_ID = {"probability": 1, "spontaneity": 2, "sample_count": 3}

#: transition mass below this counts as "no transition" for spontaneity
SPONTANEITY_EPS = 1e-12

CSV_COLUMNS = ("task", "kind", "n", "statistic", "value", "ci_low", "ci_high", "seed")


@dataclass(frozen=True)
class ChainSpec:
    """Parameters of one random chain.

    ``spontaneity`` fixes how many non-outcome states get a direct hazard
    (``round(spontaneity * (n_states - 1))``, always the lowest-numbered
    states).  With ``equal_transitions`` every non-outcome state spreads
    its remaining mass uniformly over the non-outcome states, which makes
    the chain fully determined by (states, spontaneity, target); otherwise
    row weights and hazard weights are drawn from the supplied stream.
    When ``target_probability`` is set, the hazard masses are scaled by
    bisection until the exact outcome probability matches it to 1e-6.
    """

    n_states: int
    spontaneity: float
    horizon_steps: int
    seed: int = 0
    target_probability: float | None = None
    equal_transitions: bool = False

    def __post_init__(self):
        if self.n_states < 2:
            raise ValueError("n_states must be >= 2")
        if not 0.0 < self.spontaneity <= 1.0:
            raise ValueError("spontaneity must lie in (0, 1]")
        if round(self.spontaneity * (self.n_states - 1)) < 1:
            raise ValueError(
                "spontaneity too small: no non-outcome state would carry hazard"
            )
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be >= 1")
        if self.target_probability is not None and not 0.0 <= self.target_probability <= 1.0:
            raise ValueError("target_probability must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "spontaneity": self.spontaneity,
            "horizon_steps": self.horizon_steps,
            "seed": self.seed,
            "target_probability": self.target_probability,
            "equal_transitions": self.equal_transitions,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChainSpec":
        return cls(
            n_states=int(d["n_states"]),
            spontaneity=float(d["spontaneity"]),
            horizon_steps=int(d["horizon_steps"]),
            seed=int(d.get("seed", 0)),
            target_probability=d.get("target_probability"),
            equal_transitions=bool(d.get("equal_transitions", False)),
        )


@dataclass(frozen=True)
class CohortSpec:
    """Synthetic cohort: one calibrated chain per patient.

    Per-patient target probabilities are drawn as
    ``lo + (hi - lo) * Beta(a, b)`` with ``(a, b) = risk_beta`` and
    ``(lo, hi) = risk_range``; labels come from the exact outcome
    probability of each patient's chain, so cohort ground truth carries no
    estimation noise.
    """

    n_patients: int
    chain_template: ChainSpec
    n_timelines: int = 100
    bootstrap_rounds: int = 40
    risk_beta: tuple = (1.8, 2.2)
    risk_range: tuple = (0.03, 0.55)
    calibration_bins: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_patients < 2:
            raise ValueError("n_patients must be >= 2")
        if self.n_timelines < 1:
            raise ValueError("n_timelines must be >= 1")
        if self.bootstrap_rounds < 1:
            raise ValueError("bootstrap_rounds must be >= 1")
        lo, hi = self.risk_range
        if not 0.0 < lo < hi < 1.0:
            raise ValueError("risk_range must satisfy 0 < lo < hi < 1")
        if self.calibration_bins < 1:
            raise ValueError("calibration_bins must be >= 1")


@dataclass(frozen=True)
class MetricRow:
    """One tidy result row; ``ci_low <= value <= ci_high`` when CIs present."""

    task: str
    kind: str
    n: int
    statistic: str
    value: float
    ci_low: float | None = None
    ci_high: float | None = None
    seed: int = 0

    def __post_init__(self):
        if (
            self.ci_low is not None
            and self.ci_high is not None
            and math.isfinite(self.value)
            and not self.ci_low <= self.value <= self.ci_high
        ):
            raise ValueError(
                f"value {self.value} outside CI [{self.ci_low}, {self.ci_high}]"
            )

    def as_record(self) -> dict:
        return {
            "task": self.task,
            "kind": self.kind,
            "n": self.n,
            "statistic": self.statistic,
            "value": self.value,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "seed": self.seed,
        }


def _ci_row(task, kind, n, statistic, value, samples, seed) -> MetricRow:
    """Row with a percentile 95% CI, widened if needed to contain the value."""
    lo, hi = (float(x) for x in np.percentile(samples, [2.5, 97.5]))
    if math.isfinite(value):
        lo, hi = min(lo, value), max(hi, value)
    return MetricRow(task, kind, n, statistic, value, lo, hi, seed)


@dataclass(frozen=True)
class ExperimentTable:
    """Ordered collection of :class:`MetricRow` with CSV/JSON serialization."""

    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    def rows_where(self, *, task=None, kind=None, statistic=None, n=None) -> list:
        out = []
        for r in self.rows:
            if task is not None and r.task != task:
                continue
            if kind is not None and r.kind != kind:
                continue
            if statistic is not None and r.statistic != statistic:
                continue
            if n is not None and r.n != n:
                continue
            out.append(r)
        return out

    def single(self, **kw) -> MetricRow:
        rows = self.rows_where(**kw)
        if len(rows) != 1:
            raise ValueError(f"expected exactly one row for {kw}, found {len(rows)}")
        return rows[0]

    def to_csv_text(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for r in self.rows:
            rec = r.as_record()
            lines.append(
                ",".join(
                    "" if rec[c] is None else repr(rec[c]) if isinstance(rec[c], float) else str(rec[c])
                    for c in CSV_COLUMNS
                )
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv_text())

    @classmethod
    def read_csv(cls, path) -> "ExperimentTable":
        rows = []
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != CSV_COLUMNS:
                raise ValueError(f"unexpected CSV header {header}")
            for line in fh:
                if not line.strip():
                    continue
                cells = line.rstrip("\n").split(",")
                d = dict(zip(CSV_COLUMNS, cells))
                rows.append(
                    MetricRow(
                        task=d["task"],
                        kind=d["kind"],
                        n=int(d["n"]),
                        statistic=d["statistic"],
                        value=float(d["value"]),
                        ci_low=float(d["ci_low"]) if d["ci_low"] else None,
                        ci_high=float(d["ci_high"]) if d["ci_high"] else None,
                        seed=int(d["seed"]),
                    )
                )
        return cls(tuple(rows))

    def to_json(self) -> str:
        return json.dumps([r.as_record() for r in self.rows])


# ---------------------------------------------------------------------------
# chain construction
# ---------------------------------------------------------------------------


def _reach_dp(transition, initial_state: int, outcome_state: int, steps: int) -> float:
    """Bare recursion behind :func:`seqrisk.oracle.exact_outcome_probability`."""
    keep = np.arange(transition.shape[0]) != outcome_state
    hazard = transition[:, outcome_state]
    inner = transition[:, keep]
    p = np.zeros(transition.shape[0])
    for _ in range(steps):
        p = hazard + inner @ p[keep]
    return float(min(1.0, p[initial_state]))


def _assemble_chain(m, outcome, W, hazard_weights, theta) -> np.ndarray:
    t = np.zeros((m + 1, m + 1))
    haz = theta * hazard_weights
    t[:m, outcome] = haz
    t[:m, :m] = (1.0 - haz)[:, None] * W
    t[outcome, outcome] = 1.0
    return t


def random_chain(spec: ChainSpec, rng=None) -> MarkovModel:
    """Random chain with the requested spontaneity and outcome probability.

    The outcome state is the highest-numbered state and is absorbing; the
    initial state is state 0.  Exactly ``round(spontaneity * (n-1))``
    non-outcome states carry hazard mass.  Infeasible targets raise
    :class:`CalibrationError` naming the achievable interval.
    """
    gen = as_generator(rng, spec.seed, 0, 0)
    m = spec.n_states - 1
    outcome = m
    k = int(round(spec.spontaneity * m))
    if spec.equal_transitions:
        W = np.full((m, m), 1.0 / m)
        raw = np.ones(k)
    else:
        W = gen.dirichlet(np.ones(m), size=m)
        W /= W.sum(axis=1, keepdims=True)
        raw = gen.uniform(0.2, 1.0, size=k)
    hazard_weights = np.zeros(m)
    hazard_weights[:k] = raw
    theta_max = 1.0 / raw.max()

    if spec.target_probability is None:
        theta = gen.uniform(0.05, 0.9) * theta_max
    else:
        target = spec.target_probability
        p_max = _reach_dp(
            _assemble_chain(m, outcome, W, hazard_weights, theta_max),
            0,
            outcome,
            spec.horizon_steps,
        )
        if not 0.0 < target <= p_max + 1e-9:
            raise CalibrationError(
                f"target probability {target} outside achievable (0, {p_max:.12g}]",
                achievable=(0.0, p_max),
            )
        lo, hi = 0.0, theta_max
        theta = theta_max
        p_mid = p_max
        for _ in range(200):
            theta = 0.5 * (lo + hi)
            p_mid = _reach_dp(
                _assemble_chain(m, outcome, W, hazard_weights, theta),
                0,
                outcome,
                spec.horizon_steps,
            )
            if abs(p_mid - target) <= 1e-6:
                break
            if p_mid < target:
                lo = theta
            else:
                hi = theta
        else:
            if abs(p_mid - target) > 1e-6:
                theta = theta_max
        transition = _assemble_chain(m, outcome, W, hazard_weights, theta)
        model = MarkovModel.step_mode(transition, 0, outcome, spec.horizon_steps)
        achieved = exact_outcome_probability(model)
        if abs(achieved - target) > 1e-6:
            raise CalibrationError(
                f"bisection stalled at {achieved}, target {target}",
                achievable=(0.0, p_max),
            )
        return model

    transition = _assemble_chain(m, outcome, W, hazard_weights, theta)
    return MarkovModel.step_mode(transition, 0, outcome, spec.horizon_steps)


def spontaneity(model: MarkovModel) -> float:
    """Fraction of non-outcome states with a direct transition to the outcome."""
    o = model.outcome_state
    non = np.arange(model.n_states) != o
    return float(np.mean(model.transition[non, o] > SPONTANEITY_EPS))


# ---------------------------------------------------------------------------
# vectorized trajectory batches (Markov chains only)
# ---------------------------------------------------------------------------


def _markov_sub_values(model: MarkovModel, mode: str, n: int, rng):
    """Sub-estimator values for ``n`` chain trajectories from one stream.

    Matches the semantics of per-trajectory sampling for canonical chain
    vocabularies (unit times, no terminal tokens): standard mode returns
    ``(mc, scope)`` arrays, outcome-excluded mode the ``reach`` array.
    Used by the sweep and cohort pipelines, where per-trajectory streams
    would dominate the runtime.
    """
    t = model.transition
    o = model.outcome_state
    steps = effective_steps(model.vocabulary, model.horizon)
    hazard = t[:, o].copy()
    states = np.full(n, model.initial_state, dtype=np.intp)
    alive = np.ones(n, dtype=bool)

    if mode == STANDARD:
        cum = np.cumsum(t, axis=1)
        cum[:, -1] = 1.0
        hit = np.zeros(n, dtype=bool)
        hsum = np.zeros(n)
        for _ in range(steps):
            idx = np.nonzero(alive)[0]
            if idx.size == 0:
                break
            st = states[idx]
            hsum[idx] += hazard[st]
            u = rng.random(idx.size)
            nxt = (cum[st] <= u[:, None]).sum(axis=1)
            got = nxt == o
            hit[idx[got]] = True
            alive[idx[got]] = False
            states[idx[~got]] = nxt[~got]
        return hit.astype(float), hsum

    if mode != OUTCOME_EXCLUDED:
        raise ValueError(f"unknown trajectory mode {mode!r}")
    degenerate = hazard >= DEGENERATE_HAZARD
    denom = np.where(degenerate, 1.0, 1.0 - hazard)
    restricted = t / denom[:, None]
    restricted[:, o] = 0.0
    rcum = np.cumsum(restricted, axis=1)
    rcum[~degenerate, -1] = 1.0
    surv = np.ones(n)
    for _ in range(steps):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        st = states[idx]
        dead = degenerate[st]
        if dead.any():
            surv[idx[dead]] = 0.0
            alive[idx[dead]] = False
            idx = idx[~dead]
            st = states[idx]
        if idx.size == 0:
            continue
        surv[idx] *= 1.0 - hazard[st]
        u = rng.random(idx.size)
        states[idx] = (rcum[st] <= u[:, None]).sum(axis=1)
    return 1.0 - surv


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def variance_sweep(
    axis: str,
    grid: Sequence[float],
    base_spec: ChainSpec,
    replications: int,
    seed: int,
) -> ExperimentTable:
    """Empirical estimator variances along one experimental axis.

    ``probability`` and ``spontaneity`` points rebuild the chain with the
    grid value substituted into ``base_spec`` and record per-trajectory
    (n = 1) statistics; ``sample_count`` keeps one chain and records the
    variance of the ``n``-sample estimator, plus ``variance * n`` to make
    the 1/n scaling inspectable.  Points whose chain construction fails
    are marked with a ``failed`` row and the sweep continues.  Exact
    (enumeration) variances are added wherever the instance is small
    enough.
    """
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r}; expected one of {AXES}")
    grid = list(grid)
    if not grid:
        raise ValueError("grid must be nonempty")
    if replications < 2:
        raise ValueError("replications must be >= 2")
    aid = _AXIS_ID[axis]
    rows: list[MetricRow] = []

    if axis == "sample_count":
        chain = random_chain(base_spec, rng=substream(seed, aid, 0, 0))
        rows.append(
            MetricRow(
                "sample_count", "", 0, "exact_probability",
                exact_outcome_probability(chain), seed=seed,
            )
        )
        for j, g in enumerate(grid):
            n = int(g)
            task = f"sample_count={n}"
            mc_v, scope_v = _markov_sub_values(
                chain, STANDARD, replications * n, substream(seed, aid, j, 1)
            )
            reach_v = _markov_sub_values(
                chain, OUTCOME_EXCLUDED, replications * n, substream(seed, aid, j, 2)
            )
            for kind, vals in ((MC, mc_v), (SCOPE, scope_v), (REACH, reach_v)):
                est = vals.reshape(replications, n).mean(axis=1)
                var = float(est.var(ddof=1))
                rows.append(MetricRow(task, kind, n, "variance", var, seed=seed))
                rows.append(MetricRow(task, kind, n, "variance_times_n", var * n, seed=seed))
        return ExperimentTable(tuple(rows))

    for j, g in enumerate(grid):
        task = f"{axis}={g:g}"
        try:
            if axis == "probability":
                point = replace(base_spec, target_probability=float(g))
            else:
                point = replace(base_spec, spontaneity=float(g))
            chain = random_chain(point, rng=substream(seed, aid, j, 0))
        except (CalibrationError, ValueError):
            rows.append(MetricRow(task, "", 0, "failed", float("nan"), seed=seed))
            continue
        rows.append(
            MetricRow(task, "", 0, "exact_probability",
                      exact_outcome_probability(chain), seed=seed)
        )
        rows.append(MetricRow(task, "", 0, "spontaneity", spontaneity(chain), seed=seed))
        mc_v, scope_v = _markov_sub_values(
            chain, STANDARD, replications, substream(seed, aid, j, 1)
        )
        reach_v = _markov_sub_values(
            chain, OUTCOME_EXCLUDED, replications, substream(seed, aid, j, 2)
        )
        for kind, vals in ((MC, mc_v), (SCOPE, scope_v), (REACH, reach_v)):
            rows.append(MetricRow(task, kind, 1, "mean", float(vals.mean()), seed=seed))
            rows.append(MetricRow(task, kind, 1, "variance", float(vals.var(ddof=1)), seed=seed))
        try:
            for kind in KINDS:
                dist = enumerate_sub_distribution(
                    chain, chain.vocabulary, chain.horizon, kind
                )
                rows.append(
                    MetricRow(task, kind, 1, "exact_variance", dist.variance(), seed=seed)
                )
        except InstanceTooLargeError:
            pass
    return ExperimentTable(tuple(rows))


@dataclass(frozen=True)
class DistributionResult:
    """Estimator values from repeated fixed-size estimates on one chain."""

    estimates: dict
    true_probability: float
    samples_per_estimate: int
    n_estimates: int
    seed: int

    def to_csv_text(self, *, bins: int = 40) -> str:
        hi = max(1.0, max(float(v.max()) for v in self.estimates.values()))
        lines = ["kind,bin_low,bin_high,count"]
        for kind, values in self.estimates.items():
            counts, edges = np.histogram(values, bins=bins, range=(0.0, hi))
            for c, lo_e, hi_e in zip(counts, edges, edges[1:]):
                lines.append(f"{kind},{lo_e!r},{hi_e!r},{int(c)}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path, *, bins: int = 40) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv_text(bins=bins))


def estimate_distribution_experiment(
    spec: ChainSpec,
    n_estimates: int,
    samples_per_estimate: int,
    seed: int | None = None,
) -> DistributionResult:
    """Repeat every estimator ``n_estimates`` times at a fixed sample count.

    Monte Carlo estimates land on multiples of ``1/samples_per_estimate``
    by construction; the other two fill in between.
    """
    if n_estimates < 1 or samples_per_estimate < 1:
        raise ValueError("n_estimates and samples_per_estimate must be >= 1")
    seed = spec.seed if seed is None else int(seed)
    chain = random_chain(spec, rng=substream(seed, 4, 0))
    total = n_estimates * samples_per_estimate
    mc_v, scope_v = _markov_sub_values(chain, STANDARD, total, substream(seed, 4, 1))
    reach_v = _markov_sub_values(chain, OUTCOME_EXCLUDED, total, substream(seed, 4, 2))
    shape = (n_estimates, samples_per_estimate)
    return DistributionResult(
        estimates={
            MC: mc_v.reshape(shape).mean(axis=1),
            SCOPE: scope_v.reshape(shape).mean(axis=1),
            REACH: reach_v.reshape(shape).mean(axis=1),
        },
        true_probability=exact_outcome_probability(chain),
        samples_per_estimate=samples_per_estimate,
        n_estimates=n_estimates,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# ranking and calibration metrics
# ---------------------------------------------------------------------------


def _check_labels(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty input")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return labels.astype(int)


def auroc(scores, labels) -> float:
    """Area under the ROC curve, Mann-Whitney form; ties earn 0.5 credit."""
    scores = np.asarray(scores, dtype=float)
    labels = _check_labels(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have the same length")
    return float(_auroc_columns(scores[:, None], labels)[0])


def _auroc_columns(score_matrix, labels) -> np.ndarray:
    """AUROC of every column of ``score_matrix`` against shared labels."""
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs both a positive and a negative label")
    ranks = stats.rankdata(score_matrix, axis=0, method="average")
    u = ranks[pos].sum(axis=0) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def _check_scores(scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    if scores.size == 0:
        raise ValueError("empty input")
    if np.any(scores < 0) or np.any(scores > 1):
        raise ValueError("scores must lie in [0, 1]")
    return scores


def brier(scores, labels) -> float:
    """Mean squared difference between scores in [0, 1] and binary labels."""
    scores = _check_scores(scores)
    labels = _check_labels(labels)
    return float(np.mean((scores - labels) ** 2))


def _calibration_bins(scores, labels, n_bins):
    scores = _check_scores(scores)
    labels = _check_labels(labels)
    which = np.minimum((scores * n_bins).astype(int), n_bins - 1)
    out = []
    for b in range(n_bins):
        mask = which == b
        count = int(mask.sum())
        if count == 0:
            continue
        out.append(
            (b, float(scores[mask].mean()), float(labels[mask].mean()), count)
        )
    return out


def calibration_curve(scores, labels, n_bins: int = 10) -> list:
    """Per-bin (mean score, event rate, count) over equal-width bins on [0, 1].

    Empty bins are omitted.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    return [(ms, er, c) for _, ms, er, c in _calibration_bins(scores, labels, n_bins)]


# ---------------------------------------------------------------------------
# equivalence ratios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceResult:
    """Equivalence outcome: point estimate row plus bootstrap detail."""

    row: MetricRow
    m_point: int | None
    m_samples: tuple
    not_reached: int


def _resampled_mean(values, rng) -> float:
    return float(values[rng.integers(0, values.size, values.size)].mean())


def _equivalence(
    auc_table: Mapping,
    reference_kind: str,
    reference_n: int,
    alt_kind: str,
    bootstrap_rounds: int,
    rng,
    seed_label: int = 0,
) -> EquivalenceResult:
    ref_key = (reference_kind, int(reference_n))
    if ref_key not in auc_table:
        raise ValueError(f"auc_table missing reference cell {ref_key}")
    counts = sorted(n for k, n in auc_table if k == alt_kind)
    if not counts:
        raise ValueError(f"auc_table has no cells for kind {alt_kind!r}")
    ref = np.asarray(auc_table[ref_key], dtype=float)
    alts = {n: np.asarray(auc_table[(alt_kind, n)], dtype=float) for n in counts}

    ref_mean = float(ref.mean())
    m_point = next((n for n in counts if float(alts[n].mean()) > ref_mean), None)

    m_samples = []
    not_reached = 0
    for _ in range(bootstrap_rounds):
        ref_b = _resampled_mean(ref, rng)
        for n in counts:
            if _resampled_mean(alts[n], rng) > ref_b:
                m_samples.append(n)
                break
        else:
            not_reached += 1

    value = reference_n / m_point if m_point is not None else float("nan")
    if m_samples:
        ratios = reference_n / np.asarray(m_samples, dtype=float)
        row = _ci_row("equivalence", alt_kind, int(reference_n),
                      "equivalence_ratio", value, ratios, seed_label)
    else:
        row = MetricRow("equivalence", alt_kind, int(reference_n),
                        "equivalence_ratio", value, seed=seed_label)
    return EquivalenceResult(row, m_point, tuple(m_samples), not_reached)


def equivalence_ratio(
    auc_table: Mapping,
    reference_kind: str,
    reference_n: int,
    alt_kind: str,
    bootstrap_rounds: int,
    rng,
    *,
    seed_label: int = 0,
) -> MetricRow:
    """Smallest-equivalent-sample-count ratio with a percentile bootstrap CI.

    ``auc_table`` maps ``(kind, sample count)`` to replicate AUROCs.  Each
    bootstrap round resamples the replicates of a cell with replacement,
    takes cell means, and finds the smallest count ``m`` where the
    alternative's mean AUROC *strictly* exceeds the reference mean (ties
    never qualify); the round's ratio is ``reference_n / m``.  Rounds where
    no count qualifies are dropped from the CI and tallied in
    ``not_reached`` (see :func:`synthetic_cohort_eval` rows).
    """
    gen = as_generator(rng, 0, 10, 0)
    return _equivalence(
        auc_table, reference_kind, reference_n, alt_kind, bootstrap_rounds, gen,
        seed_label=seed_label,
    ).row


# ---------------------------------------------------------------------------
# synthetic cohort evaluation
# ---------------------------------------------------------------------------


def synthetic_cohort_eval(spec: CohortSpec, rng: int | None = None) -> ExperimentTable:
    """Score a synthetic cohort with all three estimators and evaluate.

    Per patient: calibrate a chain to a drawn target risk, draw one label
    from the exact outcome probability, and sample ``n_timelines`` standard
    trajectories (shared by MC and SCOPE) plus ``n_timelines``
    outcome-excluded trajectories (REACH).  AUROC is computed at every
    sample count ``1..n_timelines`` by resampling each patient's pool with
    replacement, ``bootstrap_rounds`` times; equivalence ratios compare
    SCOPE/REACH to MC at the full pool size.  Brier scores and calibration
    curves are reported at each estimator's equivalence sample count (SCOPE
    scores are clipped to [0, 1] for those two metrics only, with the clip
    count reported).
    """
    seed = spec.seed if rng is None else int(rng)
    tpl = spec.chain_template
    n_pat, pool_n, rounds = spec.n_patients, spec.n_timelines, spec.bootstrap_rounds
    a, b = spec.risk_beta
    lo, hi = spec.risk_range

    targets = lo + (hi - lo) * substream(seed, 5, 0).beta(a, b, size=n_pat)
    p_exact = np.empty(n_pat)
    pools = {
        MC: np.empty((n_pat, pool_n)),
        SCOPE: np.empty((n_pat, pool_n)),
        REACH: np.empty((n_pat, pool_n)),
    }
    for i in range(n_pat):
        chain = random_chain(
            replace(tpl, target_probability=float(targets[i])),
            rng=substream(seed, 6, i),
        )
        p_exact[i] = exact_outcome_probability(chain)
        pools[MC][i], pools[SCOPE][i] = _markov_sub_values(
            chain, STANDARD, pool_n, substream(seed, 7, i)
        )
        pools[REACH][i] = _markov_sub_values(
            chain, OUTCOME_EXCLUDED, pool_n, substream(seed, 8, i)
        )
    labels = (substream(seed, 5, 1).random(n_pat) < p_exact).astype(int)

    denom = np.arange(1, pool_n + 1, dtype=float)
    auc = {k: np.full((pool_n, rounds), np.nan) for k in KINDS}
    dropped = {k: 0 for k in KINDS}
    for r in range(rounds):
        rr = substream(seed, 9, r)
        idx_std = rr.integers(0, pool_n, size=(n_pat, pool_n))
        idx_rea = rr.integers(0, pool_n, size=(n_pat, pool_n))
        for kind in KINDS:
            idx = idx_rea if kind == REACH else idx_std
            scores = np.take_along_axis(pools[kind], idx, axis=1).cumsum(axis=1) / denom
            try:
                auc[kind][:, r] = _auroc_columns(scores, labels)
            except UndefinedMetricError:
                dropped[kind] += 1

    rows: list[MetricRow] = []
    replicate_table: dict = {}
    for kind in KINDS:
        for j in range(pool_n):
            reps = auc[kind][j]
            reps = reps[~np.isnan(reps)]
            if reps.size == 0:
                continue
            replicate_table[(kind, j + 1)] = reps
            rows.append(
                _ci_row("cohort", kind, j + 1, "auroc", float(reps.mean()), reps, seed)
            )
        if dropped[kind]:
            rows.append(
                MetricRow("cohort", kind, 0, "auroc_rounds_dropped",
                          float(dropped[kind]), seed=seed)
            )

    eq_count = {MC: pool_n}
    for stage, alt in enumerate((SCOPE, REACH)):
        try:
            res = _equivalence(
                replicate_table, MC, pool_n, alt, rounds,
                substream(seed, 10, stage), seed_label=seed,
            )
        except ValueError:
            eq_count[alt] = pool_n
            continue
        rows.append(res.row)
        m_value = float(res.m_point) if res.m_point is not None else float("nan")
        if res.m_samples:
            rows.append(
                _ci_row("equivalence", alt, pool_n, "equivalence_m",
                        m_value, np.asarray(res.m_samples, dtype=float), seed)
            )
        else:
            rows.append(
                MetricRow("equivalence", alt, pool_n, "equivalence_m", m_value, seed=seed)
            )
        rows.append(
            MetricRow("equivalence", alt, pool_n, "equivalence_not_reached",
                      float(res.not_reached), seed=seed)
        )
        eq_count[alt] = res.m_point if res.m_point is not None else pool_n

    for kind in KINDS:
        m = int(eq_count[kind])
        scores = pools[kind][:, :m].mean(axis=1)
        if kind == SCOPE:
            n_clipped = int((scores > 1.0).sum())
            scores = np.minimum(scores, 1.0)
            rows.append(
                MetricRow("cohort", kind, m, "n_clipped", float(n_clipped), seed=seed)
            )
        rows.append(
            MetricRow("cohort", kind, m, "brier", brier(scores, labels), seed=seed)
        )
        for bin_id, mean_score, event_rate, count in _calibration_bins(
            scores, labels, spec.calibration_bins
        ):
            task = f"calibration_bin_{bin_id}"
            rows.append(MetricRow(task, kind, m, "cal_mean_score", mean_score, seed=seed))
            rows.append(MetricRow(task, kind, m, "cal_event_rate", event_rate, seed=seed))
            rows.append(MetricRow(task, kind, m, "cal_count", float(count), seed=seed))

    return ExperimentTable(tuple(rows))
