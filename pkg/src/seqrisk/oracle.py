"""Exact ground truth for the estimators, independent of any sampling.

Three mechanisms live here:

* a dynamic-programming recursion for the probability that a Markov chain
  reaches its outcome state within the horizon;
* exhaustive enumeration of every sequence a small model can generate,
  yielding the exact distribution of each sub-estimator; and
* closed-form references: a branching counterexample model whose
  hazard-sum estimator keeps strictly larger variance than plain Monte
  Carlo at arbitrarily small outcome probability, and the binomial
  dispersion probability that a higher-risk case outranks a baseline case
  when both are scored by finite-sample proportions.

Enumeration is guarded: it refuses instances whose sequence tree could
exceed ``LEAF_GUARD`` leaves.  Path probabilities are kept as plain
doubles (paths whose probability underflows contribute less than 1e-290
to any statistic, far below every tolerance used in the package).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import InstanceTooLargeError
from .estimators import MC, REACH, SCOPE
from .seqmodel import (
    DEGENERATE_HAZARD,
    OUTCOME_EXCLUDED,
    STANDARD,
    HorizonPolicy,
    MarkovModel,
    Vocabulary,
    _stop_reason,
    effective_steps,
    require_valid,
)

LEAF_GUARD = 10_000_000


@dataclass(frozen=True)
class ValueDistribution:
    """Discrete distribution of a sub-estimator: (value, probability) atoms."""

    atoms: tuple

    @classmethod
    def from_pairs(cls, pairs, *, merge_tol: float = 1e-12) -> "ValueDistribution":
        """Build from raw (value, probability) pairs.

        Atoms whose values lie within ``merge_tol`` of each other are merged
        (they are floating-point duplicates of the same analytic value).
        """
        pairs = sorted((float(v), float(p)) for v, p in pairs)
        if not pairs:
            raise ValueError("no atoms")
        if any(p < 0 for _, p in pairs):
            raise ValueError("negative atom probability")
        merged: list[list[float]] = []
        for v, p in pairs:
            if merged and v - merged[-1][0] <= merge_tol:
                v0, p0 = merged[-1]
                total = p0 + p
                if total > 0:
                    merged[-1][0] = (v0 * p0 + v * p) / total
                merged[-1][1] = total
            else:
                merged.append([v, p])
        total = math.fsum(p for _, p in merged)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"atom probabilities sum to {total!r}, expected 1")
        return cls(tuple((v, p) for v, p in merged))

    def mean(self) -> float:
        return math.fsum(v * p for v, p in self.atoms)

    def second_moment(self) -> float:
        return math.fsum(v * v * p for v, p in self.atoms)

    def variance(self) -> float:
        m = self.mean()
        return math.fsum((v - m) ** 2 * p for v, p in self.atoms)

    def expect(self, func) -> float:
        return math.fsum(func(v) * p for v, p in self.atoms)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("value,probability\n")
            for v, p in self.atoms:
                fh.write(f"{v!r},{p!r}\n")


def exact_outcome_probability(model: MarkovModel) -> float:
    """P(chain visits the outcome state within its step horizon), exactly.

    Recursion over remaining steps h:
    ``p_h(s) = T[s, O] + sum_{s' != O} T[s, s'] * p_{h-1}(s')`` with
    ``p_0 = 0``; the answer is ``p_H(initial)``.
    """
    require_valid(model)
    t = model.transition
    o = model.outcome_state
    steps = effective_steps(model.vocabulary, model.horizon)
    keep = np.arange(model.n_states) != o
    hazard = t[:, o]
    inner = t[:, keep]
    p = np.zeros(model.n_states)
    for _ in range(steps):
        p = hazard + inner @ p[keep]
    return float(min(1.0, p[model.initial_state]))


def _static_guard(vocab: Vocabulary, horizon: HorizonPolicy) -> None:
    # worst case: a full |V|-ary tree as deep as the step cap
    if vocab.size ** horizon.max_steps > LEAF_GUARD:
        raise InstanceTooLargeError(
            f"{vocab.size} tokens over {horizon.max_steps} steps may exceed "
            f"{LEAF_GUARD} leaves"
        )


def _walk_standard(model, vocab, horizon):
    """Yield (path probability, outcome hit, hazard sum) for every standard path."""
    _static_guard(vocab, horizon)
    o = vocab.outcome
    times = vocab._time_list
    leaves = 0
    stack = [((), 1.0, 0.0, 0.0)]
    while stack:
        prefix, prob, elapsed, hsum = stack.pop()
        dist = np.asarray(model.next_distribution(list(prefix)), dtype=float)
        hsum2 = hsum + float(dist[o])
        n_tok = len(prefix) + 1
        for tok in range(vocab.size):
            p = float(dist[tok])
            if p <= 0.0:
                continue
            prob2 = prob * p
            elapsed2 = elapsed + times[tok]
            stop = _stop_reason(vocab, horizon, STANDARD, tok, elapsed2, n_tok)
            if stop is None:
                stack.append((prefix + (tok,), prob2, elapsed2, hsum2))
            else:
                leaves += 1
                if leaves > LEAF_GUARD:
                    raise InstanceTooLargeError("enumeration exceeded the leaf guard")
                yield prob2, stop == "outcome", hsum2


def _walk_restricted(model, vocab, horizon):
    """Yield (path probability, survival-complement value) under exclusion.

    Paths reaching a degenerate hazard terminate immediately with value
    exactly 1.
    """
    _static_guard(vocab, horizon)
    o = vocab.outcome
    times = vocab._time_list
    leaves = 0
    stack = [((), 1.0, 0.0, 1.0)]
    while stack:
        prefix, prob, elapsed, surv = stack.pop()
        dist = np.asarray(model.next_distribution(list(prefix)), dtype=float)
        h = float(dist[o])
        if h >= DEGENERATE_HAZARD:
            leaves += 1
            yield prob, 1.0
            continue
        surv2 = surv * (1.0 - h)
        n_tok = len(prefix) + 1
        scale = 1.0 - h
        for tok in range(vocab.size):
            if tok == o:
                continue
            p = float(dist[tok])
            if p <= 0.0:
                continue
            prob2 = prob * (p / scale)
            elapsed2 = elapsed + times[tok]
            stop = _stop_reason(vocab, horizon, OUTCOME_EXCLUDED, tok, elapsed2, n_tok)
            if stop is None:
                stack.append((prefix + (tok,), prob2, elapsed2, surv2))
            else:
                leaves += 1
                if leaves > LEAF_GUARD:
                    raise InstanceTooLargeError("enumeration exceeded the leaf guard")
                yield prob2, 1.0 - surv2


def enumerate_sub_distribution(model, vocab, horizon, kind: str) -> ValueDistribution:
    """Exact distribution of one sub-estimator by full sequence enumeration."""
    if kind == REACH:
        pairs = [(value, prob) for prob, value in _walk_restricted(model, vocab, horizon)]
    elif kind == MC:
        pairs = [
            (1.0 if hit else 0.0, prob)
            for prob, hit, _ in _walk_standard(model, vocab, horizon)
        ]
    elif kind == SCOPE:
        pairs = [(hsum, prob) for prob, _, hsum in _walk_standard(model, vocab, horizon)]
    else:
        raise ValueError(f"unknown estimator kind {kind!r}")
    return ValueDistribution.from_pairs(pairs)


def exact_bijection_check(model, vocab, horizon) -> tuple[float, float]:
    """(P(outcome in a standard timeline), expected survival-complement).

    The first is enumerated over standard sequences, the second over
    outcome-excluded sequences; the two agree for every model because
    outcome-free standard paths and all-failure excluded paths carry the
    same probability.
    """
    p_a = math.fsum(
        prob for prob, hit, _ in _walk_standard(model, vocab, horizon) if hit
    )
    p_b = math.fsum(
        prob * value for prob, value in _walk_restricted(model, vocab, horizon)
    )
    return p_a, p_b


class _BranchCoinModel:
    """First token: immediate-terminal branch (prob p) or a coin phase.

    The coin phase emits fair heads/tails tokens; heads is the outcome, and
    at most three coin tokens are generated.  The outcome probability
    ``(7/8) * (1 - p)`` can be pushed arbitrarily low by raising ``p`` while
    the hazard-sum estimator keeps variance strictly above Monte Carlo's.
    """

    STOP, GO, HEADS, TAILS = 0, 1, 2, 3

    def __init__(self, p: float):
        self.p = float(p)
        self._vocab = Vocabulary(size=4, outcome=self.HEADS, terminal=frozenset({self.STOP}))
        self._first = np.array([self.p, 1.0 - self.p, 0.0, 0.0])
        self._coin = np.array([0.0, 0.0, 0.5, 0.5])
        self._first.flags.writeable = False
        self._coin.flags.writeable = False

    @property
    def vocabulary(self) -> Vocabulary:
        return self._vocab

    @property
    def horizon(self) -> HorizonPolicy:
        # first token plus at most three coin tokens
        return HorizonPolicy(max_steps=4)

    def next_distribution(self, prefix: Sequence[int]) -> np.ndarray:
        if any(not 0 <= t < 4 for t in prefix):
            raise ValueError("invalid token id in prefix")
        return self._first if len(prefix) == 0 else self._coin


def counterexample_model(p: float) -> _BranchCoinModel:
    """Model showing no outcome-probability threshold makes the hazard-sum
    estimator dominate Monte Carlo; see :class:`_BranchCoinModel`."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return _BranchCoinModel(p)


def dispersion_probability(n_samples: int, p_base: float, p_elevated: float) -> float:
    """Probability a higher-risk case outranks a baseline case on MC scores.

    Both cases are scored by proportions out of ``n_samples`` Bernoulli
    draws (rates ``p_base`` and ``p_elevated``); returns the probability
    the elevated case's count is strictly larger:
    ``sum_k Binom(k; n, p_base) * P(Binom(n, p_elevated) > k)``.
    Binomial terms are evaluated in log space.
    """
    if n_samples < 1 or int(n_samples) != n_samples:
        raise ValueError("n_samples must be a positive integer")
    for name, p in (("p_base", p_base), ("p_elevated", p_elevated)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    k = np.arange(n_samples + 1)
    with np.errstate(divide="ignore"):
        base_pmf = np.exp(stats.binom.logpmf(k, n_samples, p_base))
    exceed = stats.binom.sf(k, n_samples, p_elevated)
    return float(math.fsum(base_pmf * exceed))
