"""Per-trajectory sub-estimators and their unbiased sample averages.

Three sub-estimators target the same quantity, the probability that the
outcome token appears before the end of the timeline:

* ``mc``     - indicator that the sampled timeline contained the outcome.
* ``scope``  - sum of the recorded hazards up to and including the stopping
  step.  Values are nonnegative and can exceed 1.
* ``reach``  - one minus the survival product ``prod(1 - h_t)`` over an
  outcome-excluded timeline.  Values always lie in [0, 1].

``mc`` and ``scope`` read standard-mode trajectories and can share one
pool; ``reach`` requires outcome-excluded sampling.  Averaging any of them
over independent trajectories is unbiased; the enumeration oracles in
:mod:`seqrisk.oracle` verify this exactly on small models.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ModeMismatchError
from .rng import trajectory_stream
from .seqmodel import OUTCOME_EXCLUDED, STANDARD, sample_trajectory

MC = "mc"
SCOPE = "scope"
REACH = "reach"
KINDS = (MC, SCOPE, REACH)

CLIP_NONE = "none"
CLIP_TO_UNIT = "clip_to_unit"
CLIP_POLICIES = (CLIP_NONE, CLIP_TO_UNIT)


def required_mode(kind: str) -> str:
    """Sampling mode each estimator kind needs its trajectories drawn in."""
    if kind in (MC, SCOPE):
        return STANDARD
    if kind == REACH:
        return OUTCOME_EXCLUDED
    raise ValueError(f"unknown estimator kind {kind!r}; expected one of {KINDS}")


def _require_mode(traj, mode: str) -> None:
    if traj.mode != mode:
        raise ModeMismatchError(
            f"trajectory was sampled in {traj.mode!r} mode, need {mode!r}"
        )


def mc_sub(traj) -> float:
    """1.0 iff the trajectory contains the outcome token before its end."""
    _require_mode(traj, STANDARD)
    return 1.0 if traj.hit_index is not None else 0.0


def scope_sub(traj) -> float:
    """Sum of hazards over every generated step (the stopping step included)."""
    _require_mode(traj, STANDARD)
    return math.fsum(traj.hazards)


def reach_sub(traj) -> float:
    """One minus the survival product over the outcome-excluded backbone.

    Degeneracy-flagged trajectories return exactly 1: their survival
    product contains a factor of zero.
    """
    _require_mode(traj, OUTCOME_EXCLUDED)
    if traj.degenerate:
        return 1.0
    surv = 1.0
    for h in traj.hazards:
        surv *= 1.0 - h
    return 1.0 - surv


_SUBS = {MC: mc_sub, SCOPE: scope_sub, REACH: reach_sub}


@dataclass(frozen=True)
class EstimateReport:
    """Aggregate of ``n`` sub-estimator values plus variance diagnostics.

    ``sample_variance`` uses divisor ``n - 1`` (defined as 0.0 when
    ``n == 1``); ``std_error = sqrt(sample_variance / n)``.  ``sub_values``
    are retained post-clipping so downstream bootstraps can reuse them.
    """

    kind: str
    n: int
    mean: float
    sample_variance: float
    std_error: float
    sub_values: tuple
    clip_policy: str = CLIP_NONE
    n_clipped: int = 0
    seed: int | None = None

    def to_dict(self, *, include_sub_values: bool = True) -> dict:
        d = {
            "kind": self.kind,
            "n": self.n,
            "mean": self.mean,
            "sample_variance": self.sample_variance,
            "std_error": self.std_error,
            "clip_policy": self.clip_policy,
            "n_clipped": self.n_clipped,
            "seed": self.seed,
        }
        if include_sub_values:
            d["sub_values"] = list(self.sub_values)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def save(self, path, *, sidecar_at: int = 100_000) -> None:
        """Write the report as JSON; large value vectors go to a binary sidecar.

        The sidecar holds the sub-values as little-endian float64, in order.
        """
        path = Path(path)
        if self.n >= sidecar_at:
            side = path.with_suffix(path.suffix + ".f64")
            side.write_bytes(np.asarray(self.sub_values, dtype="<f8").tobytes())
            d = self.to_dict(include_sub_values=False)
            d["sub_values_file"] = side.name
        else:
            d = self.to_dict()
        path.write_text(json.dumps(d))

    @classmethod
    def load(cls, path) -> "EstimateReport":
        path = Path(path)
        d = json.loads(path.read_text())
        if "sub_values_file" in d:
            raw = (path.parent / d.pop("sub_values_file")).read_bytes()
            values = tuple(float(x) for x in np.frombuffer(raw, dtype="<f8"))
        else:
            values = tuple(d.pop("sub_values"))
        return cls(
            kind=d["kind"],
            n=d["n"],
            mean=d["mean"],
            sample_variance=d["sample_variance"],
            std_error=d["std_error"],
            sub_values=values,
            clip_policy=d["clip_policy"],
            n_clipped=d["n_clipped"],
            seed=d.get("seed"),
        )


def apply_clip(values, clip_policy: str):
    """Apply a clip policy; returns (clipped values, number clipped).

    ``clip_to_unit`` caps values at 1 and never changes values <= 1.
    """
    if clip_policy not in CLIP_POLICIES:
        raise ValueError(f"unknown clip policy {clip_policy!r}")
    if clip_policy == CLIP_NONE:
        return list(values), 0
    clipped = [min(v, 1.0) for v in values]
    return clipped, sum(1 for v in values if v > 1.0)


def aggregate(kind: str, values, *, clip_policy: str = CLIP_NONE, seed=None) -> EstimateReport:
    """Build an :class:`EstimateReport` from raw sub-values.

    Summation uses ``math.fsum`` in index order, so the report does not
    depend on how the values were produced or partitioned.
    """
    values, n_clipped = apply_clip(values, clip_policy)
    n = len(values)
    if n == 0:
        raise ValueError("cannot aggregate zero sub-values")
    mean = math.fsum(values) / n
    if n > 1:
        # corrected two-pass: the residual term cancels the rounding of the
        # mean, so constant inputs give exactly zero variance
        ss = math.fsum((v - mean) ** 2 for v in values)
        residual = math.fsum(v - mean for v in values)
        var = max(0.0, (ss - residual * residual / n) / (n - 1))
    else:
        var = 0.0
    return EstimateReport(
        kind=kind,
        n=n,
        mean=mean,
        sample_variance=var,
        std_error=math.sqrt(var / n),
        sub_values=tuple(values),
        clip_policy=clip_policy,
        n_clipped=n_clipped,
        seed=seed,
    )


def _sub_values_range(model, vocab, horizon, kinds, seed, lo, hi):
    mode = required_mode(kinds[0])
    subs = [_SUBS[k] for k in kinds]
    out = []
    for i in range(lo, hi):
        traj = sample_trajectory(
            model, vocab, horizon, mode, trajectory_stream(seed, i), seed=seed
        )
        out.append(tuple(f(traj) for f in subs))
    return out


def _pool_sub_values(model, vocab, horizon, kinds, n, seed, workers):
    modes = {required_mode(k) for k in kinds}
    if len(modes) != 1:
        raise ValueError(f"kinds {kinds} cannot share one trajectory pool")
    if workers <= 1 or n < 2 * workers:
        return _sub_values_range(model, vocab, horizon, kinds, seed, 0, n)
    bounds = [round(j * n / workers) for j in range(workers + 1)]
    chunks = [(lo, hi) for lo, hi in zip(bounds, bounds[1:]) if hi > lo]
    out = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_sub_values_range, model, vocab, horizon, kinds, seed, lo, hi)
            for lo, hi in chunks
        ]
        for fut in futures:
            out.extend(fut.result())
    return out


def estimate(
    model,
    vocab,
    horizon,
    kind: str,
    n: int,
    seed: int,
    *,
    clip_policy: str = CLIP_NONE,
    workers: int = 1,
) -> EstimateReport:
    """Sample ``n`` trajectories in the mode ``kind`` requires and average.

    Trajectory ``i`` always draws from the stream keyed ``(seed, i)``, so
    the report is bit-identical for any worker count.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rows = _pool_sub_values(model, vocab, horizon, (kind,), n, seed, workers)
    return aggregate(kind, [r[0] for r in rows], clip_policy=clip_policy, seed=seed)


def paired_estimates(
    model,
    vocab,
    horizon,
    n: int,
    seed: int,
    *,
    clip_policy: str = CLIP_NONE,
    workers: int = 1,
) -> tuple[EstimateReport, EstimateReport]:
    """MC and SCOPE reports computed from one shared standard-mode pool."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rows = _pool_sub_values(model, vocab, horizon, (MC, SCOPE), n, seed, workers)
    mc_report = aggregate(MC, [r[0] for r in rows], clip_policy=clip_policy, seed=seed)
    scope_report = aggregate(SCOPE, [r[1] for r in rows], clip_policy=clip_policy, seed=seed)
    return mc_report, scope_report
